import importlib.metadata
import logging
from collections.abc import Iterator
from contextlib import contextmanager
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, NoReturn, Optional

import click
import numpy as np
import typer

from phbound.bcspec import (
    KernelW,
    LinearM,
    classify,
    describe,
    m_to_w,
    structural_checks,
    w_to_m,
)
from phbound.config import config
from phbound.discrete import (
    DEFAULT_MUS,
    DiscreteOperator,
    certify_accretive,
    certify_m_accretive,
    discretize,
)
from phbound.exceptions import (
    KSingularError,
    NotConvergedError,
    PhboundError,
    RankDeficientError,
)
from phbound.funcspace import green_identity_check
from phbound.kirszbraun import SampleSet, extend_sequential, validate_samples
from phbound.logging import configure_logger
from phbound.phs import QSplit, split_system
from phbound.report import OutputFormat, ReportFile, Verdict, VerificationReport
from phbound.semigroup import (
    PROFILES,
    contraction_check,
    energy_balance_check,
    energy_monotonicity_check,
    initial_profile,
    simulate,
)
from phbound.sysfile import (
    SystemFile,
    load_document,
    load_queries,
    load_samples,
    load_system,
)
from phbound.typing import Vector

logger = logging.getLogger(__name__)

# Errors that mean "the condition does not hold" rather than "bad input".
FAILURE_ERRORS = (RankDeficientError, KSingularError, NotConvergedError)

CONVERSION_RTOL = 1e-10


class OrderedCommands(typer.core.TyperGroup):
    def list_commands(self, ctx: click.Context) -> list[str]:
        return list(self.commands.keys())


class MutuallyExclusiveOption(click.exceptions.UsageError):
    def __init__(self, opt1: str, opt2: str) -> None:
        super().__init__(f"Option {opt1} cannot be used together with option {opt2}")


class Representation(str, Enum):
    M = "m"
    W = "w"


app = typer.Typer(
    cls=OrderedCommands,
    context_settings={"help_option_names": ["-h", "--help"]},
    no_args_is_help=True,
    pretty_exceptions_enable=False,
)

SystemArg = Annotated[
    Path,
    typer.Argument(
        exists=True,
        dir_okay=False,
        readable=True,
        help="JSON or YAML file describing the system and its boundary condition.",
        show_default=False,
    ),
]

GridOpt = Annotated[
    Optional[int],
    typer.Option(
        "--grid",
        min=2,
        metavar="N",
        help="Number of collocation nodes (overrides the global --grid).",
        show_default=False,
    ),
]

OutputFormatOpt = Annotated[
    OutputFormat,
    typer.Option("--output", "-o", help="Output format."),
]


def abort(message: str, code: int = 2) -> NoReturn:
    logger.critical(message)
    raise typer.Exit(code=code)


@contextmanager
def exit_on_error() -> Iterator[None]:
    try:
        yield
    except FAILURE_ERRORS as ex:
        abort(str(ex), code=1)
    except PhboundError as ex:
        abort(str(ex))


def package_version() -> str:
    try:
        return importlib.metadata.version(__package__)
    except importlib.metadata.PackageNotFoundError:
        return "unknown"


def parse(path: Path) -> tuple[SystemFile, QSplit]:
    logger.info("Parsing system file: %s", path)
    with exit_on_error():
        sf = load_system(path)
        qs = split_system(sf.system)

    logger.info(
        "System of order %s and dimension %s on [%s, %s] with %s",
        sf.system.n,
        sf.system.d,
        *sf.system.interval,
        describe(sf.bc),
    )
    return sf, qs


def emit(
    command: str,
    reports: list[VerificationReport],
    format: OutputFormat,
    payload: dict[str, Any] | None = None,
) -> None:
    timestamp = None
    if not config.reproducible:
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")

    report_file = ReportFile(
        command,
        reports,
        version=package_version(),
        seed=config.seed,
        timestamp=timestamp,
        payload=payload or {},
    )
    print(report_file.to_string(format))

    if report_file.verdict == Verdict.FAIL:
        raise typer.Exit(code=1)


def version_callback(value: bool) -> None:
    if value:
        print(f"{__package__} {package_version()}")
        raise typer.Exit()


@app.callback()
def main_callback(
    seed: Annotated[
        int, typer.Option(min=0, help="Seed for every randomized procedure.")
    ] = config.seed,
    samples: Annotated[
        int, typer.Option(min=1, help="Number of random samples for sampled checks.")
    ] = config.samples,
    grid: Annotated[
        int, typer.Option(min=2, help="Default number of collocation nodes.")
    ] = config.grid,
    reproducible: Annotated[
        bool,
        typer.Option(
            "--reproducible", help="Omit the timestamp so that reports are stable."
        ),
    ] = config.reproducible,
    force: Annotated[
        bool,
        typer.Option(
            "--force", help="Simulate boundary conditions that fail classification."
        ),
    ] = config.force,
    strict: Annotated[
        bool, typer.Option(help="Abort on unknown keys in system files.")
    ] = config.strict,
    verbose: Annotated[
        bool, typer.Option("--verbose", help="Enable additional logging.")
    ] = False,
    quiet: Annotated[
        bool, typer.Option("--quiet", help="Disable all non-critical logging.")
    ] = False,
    colour: Annotated[
        bool, typer.Option(help="Show coloured output.")
    ] = config.use_colour,
    version: Annotated[
        Optional[bool],
        typer.Option(
            "--version",
            callback=version_callback,
            help="Show version information and exit.",
        ),
    ] = None,
) -> None:
    if verbose and quiet:
        raise MutuallyExclusiveOption("--verbose", "--quiet")

    config.seed = seed
    config.samples = samples
    config.grid = grid
    config.reproducible = reproducible
    config.force = force
    config.strict = strict

    if quiet:
        config.log_level = logging.CRITICAL

    if verbose:
        config.log_level = logging.DEBUG

    config.use_colour = colour

    configure_logger()


@app.command("classify")
def classify_command(
    file: SystemArg,
    format: OutputFormatOpt = OutputFormat.JSON,
) -> None:
    """
    Decide whether the boundary condition yields an m-accretive operator.
    """
    sf, qs = parse(file)

    with exit_on_error():
        reports = [classify(qs, sf.bc), structural_checks(qs, sf.bc)]

    emit("classify", reports, format, {"bc": describe(sf.bc)})


@app.command("convert")
def convert_command(
    file: SystemArg,
    to: Annotated[
        Representation,
        typer.Option("--to", help="Target representation of the condition."),
    ],
    format: OutputFormatOpt = OutputFormat.JSON,
) -> None:
    """
    Convert a linear boundary condition between the M and W forms.
    """
    sf, qs = parse(file)
    nd = qs.nd

    with exit_on_error():
        match sf.bc:
            case LinearM(M=m):
                k = np.eye(nd)
                w = m_to_w(qs, m, k)
            case KernelW(W=w):
                m, k = w_to_m(qs, w)
            case _:
                abort("Only linear boundary conditions (M or W) can be converted")

        rebuilt = m_to_w(qs, m, k)

    defect = float(np.linalg.norm(rebuilt - w))
    report = VerificationReport(
        verdict=Verdict.of(defect <= CONVERSION_RTOL * (1.0 + np.linalg.norm(w))),
        criterion="conversion",
        residuals={"round_trip": defect},
        info={"to": to.value},
    )

    payload = {"M": m, "K": k} if to == Representation.M else {"W": w, "K": k}
    emit("convert", [report], format, payload)


@app.command("verify")
def verify_command(
    file: SystemArg,
    grid: GridOpt = None,
    mu: Annotated[
        Optional[list[float]],
        typer.Option(
            "--mu",
            min=0.0,
            help="Resolvent parameter; repeat for several values.",
            show_default=False,
        ),
    ] = None,
    format: OutputFormatOpt = OutputFormat.JSON,
) -> None:
    """
    Numerically certify the discrete operator and the resolvent bound.
    """
    sf, qs = parse(file)
    sys = sf.system
    mu_list = mu or list(DEFAULT_MUS)
    if any(value <= 0.0 for value in mu_list):
        raise click.exceptions.UsageError("Values of --mu must be positive")

    reports = []
    info: dict[str, Any] = {}

    with exit_on_error():
        if sys.ham.is_polynomial_on(sys.interval):
            reports.append(green_identity_check(sys, qs, seed=config.seed))
        else:
            info["note"] = "Green identity skipped: piecewise Hamiltonian density"
            logger.info(info["note"])

        op = discretize(sys, qs, sf.bc, grid)
        reports.append(certify_accretive(op))
        reports.append(certify_m_accretive(op, mu_list))

    info["N"] = op.grid.N
    emit("verify", reports, format, info)


def initial_state(source: str, op: DiscreteOperator) -> Vector:
    if source in PROFILES:
        return initial_profile(source, op.grid, op.sys.d)

    path = Path(source)
    if not path.is_file():
        raise click.exceptions.BadParameter(
            f"'{source}' is neither a profile ({', '.join(PROFILES)}) nor a file",
            param_hint="--u0",
        )

    with exit_on_error():
        data = load_document(path)

    u0 = np.asarray(data, dtype=np.float64).ravel()
    if u0.shape != (op.size,):
        abort(f"{path}: expected {op.size} initial values, got {u0.size}")
    return u0


@app.command("simulate")
def simulate_command(
    file: SystemArg,
    out: Annotated[
        Path,
        typer.Option(
            "--out",
            dir_okay=False,
            writable=True,
            help="CSV file to write the trajectory to.",
            show_default=False,
        ),
    ],
    u0: Annotated[
        str,
        typer.Option(
            "--u0",
            metavar="PROFILE|FILE",
            help=f"Initial data: one of {', '.join(PROFILES)} or a JSON file.",
        ),
    ] = "bump",
    final_time: Annotated[
        float, typer.Option("--T", min=0.0, help="Final time.")
    ] = 1.0,
    dt: Annotated[float, typer.Option("--dt", min=0.0, help="Time step.")] = 1e-3,
    grid: GridOpt = None,
    format: OutputFormatOpt = OutputFormat.JSON,
) -> None:
    """
    Integrate u' = -Au with implicit Euler steps and write the trajectory.
    """
    if final_time <= 0.0 or dt <= 0.0:
        raise click.exceptions.UsageError("Options --T and --dt must be positive")

    sf, qs = parse(file)

    with exit_on_error():
        classification = classify(qs, sf.bc)

    if not classification.passed:
        if not config.force:
            abort(
                "Boundary condition fails classification; use --force to "
                "simulate it anyway",
                code=1,
            )
        logger.warning("Simulating a boundary condition that fails classification")

    with exit_on_error():
        op = discretize(sf.system, qs, sf.bc, grid)
        state = initial_state(u0, op)
        traj = simulate(op, state, final_time, dt)
        zero = simulate(op, np.zeros(op.size), final_time, dt)

    traj.to_csv(out)

    reports = [
        energy_monotonicity_check(traj),
        contraction_check(traj, zero, op.G),
        energy_balance_check(traj, dt, op),
    ]
    if config.force:
        reports.insert(0, classification)

    payload = {
        "out": str(out),
        "steps": len(traj) - 1,
        "N": op.grid.N,
        "final_energy": float(traj.energies[-1]),
    }
    emit("simulate", reports, format, payload)


@app.command("kirszbraun")
def kirszbraun_command(
    samples: Annotated[
        Path,
        typer.Argument(
            exists=True,
            dir_okay=False,
            readable=True,
            help="JSON file with the sample pairs and the Lipschitz constant.",
            show_default=False,
        ),
    ],
    queries: Annotated[
        Path,
        typer.Argument(
            exists=True,
            dir_okay=False,
            readable=True,
            help="JSON file with the query points.",
            show_default=False,
        ),
    ],
    format: OutputFormatOpt = OutputFormat.JSON,
) -> None:
    """
    Extend sampled boundary data to new points with the same Lipschitz bound.
    """
    with exit_on_error():
        xs, ys, lip = load_samples(samples)
        points = load_queries(queries)

    with exit_on_error():
        report = validate_samples(xs, ys, lip)
        if not report.passed:
            emit("kirszbraun", [report], format)

        sample_set = SampleSet.create(xs, ys, lip)
        values = extend_sequential(sample_set, points)
        query_rows = np.asarray(points, dtype=np.float64).reshape(len(points), -1)
        augmented = validate_samples(
            np.vstack([xs, query_rows]),
            np.vstack([ys, *values]),
            lip,
            tol=2e-6,
        )

    emit("kirszbraun", [report, augmented], format, {"values": values})


def main() -> None:
    app()
