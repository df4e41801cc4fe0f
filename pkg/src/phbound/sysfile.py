import json
import logging
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Final

import numpy as np
import yaml

from phbound import matnum
from phbound.bcspec import (
    BoundaryCondition,
    ContractionFactory,
    KernelW,
    LinearM,
    NonlinearG,
)
from phbound.exceptions import (
    DimensionMismatchError,
    InvalidSystemError,
    SystemFileError,
    UnknownContractionError,
)
from phbound.phs import HamiltonianDensity, PhsSystem
from phbound.typing import Matrix
from phbound.utils import raise_or_warn

logger = logging.getLogger(__name__)

YAML_SUFFIXES: Final = (".yaml", ".yml")


def load_document(path: Path) -> Any:
    try:
        with path.open(encoding="utf-8") as file:
            if path.suffix.lower() in YAML_SUFFIXES:
                return yaml.safe_load(file)
            return json.load(file)
    except (json.JSONDecodeError, yaml.YAMLError, UnicodeDecodeError) as ex:
        raise SystemFileError(path, "$", f"malformed document ({ex})") from ex


@dataclass(frozen=True, eq=False)
class SystemFile:
    system: PhsSystem
    bc: BoundaryCondition
    source: Path


class SystemFileParser:
    KEYS: Final = ("n", "d", "interval", "P", "hamiltonian", "bc", "lipschitz_claim")

    def __init__(self, path: Path) -> None:
        self._path = path

    def _error(self, where: str, message: str) -> SystemFileError:
        return SystemFileError(self._path, where, message)

    def _require(self, data: Mapping[str, Any], key: str, where: str) -> Any:
        if key not in data:
            raise self._error(where, f"missing key '{key}'")
        return data[key]

    def _mapping(self, value: Any, where: str) -> Mapping[str, Any]:
        if not isinstance(value, Mapping):
            raise self._error(where, "expected an object")
        return value

    def _list(self, value: Any, where: str) -> list[Any]:
        if not isinstance(value, list):
            raise self._error(where, "expected a list")
        return value

    def _number(self, value: Any, where: str) -> float:
        if isinstance(value, bool) or not isinstance(value, int | float):
            raise self._error(where, "expected a number")
        return float(value)

    def _matrix(self, value: Any, where: str) -> Matrix:
        try:
            return matnum.as_matrix(value, where)
        except (ValueError, TypeError, DimensionMismatchError) as ex:
            raise self._error(where, str(ex)) from ex

    def parse(self) -> SystemFile:
        logger.debug("Parsing system file %s", self._path)
        data = self._mapping(load_document(self._path), "$")

        for key in data:
            if key not in self.KEYS:
                raise_or_warn(self._error(f"$.{key}", "unknown key"))

        P = self._parse_p(data)
        interval = self._parse_interval(self._require(data, "interval", "$"))
        ham = self._parse_hamiltonian(data.get("hamiltonian"))

        try:
            system = PhsSystem.create(P, interval, ham)
        except (InvalidSystemError, DimensionMismatchError, ValueError) as ex:
            raise self._error("$", str(ex)) from ex

        bc = self._parse_bc(data, system)
        logger.info("Loaded %sx%s system from %s", system.n, system.d, self._path)
        return SystemFile(system=system, bc=bc, source=self._path)

    def _parse_p(self, data: Mapping[str, Any]) -> list[Matrix]:
        raw = self._list(self._require(data, "P", "$"), "$.P")
        P = [self._matrix(pk, f"$.P[{k}]") for k, pk in enumerate(raw)]
        if not P:
            raise self._error("$.P", "expected at least two matrices")

        for key, actual in (("n", len(P) - 1), ("d", P[0].shape[0])):
            if key in data and data[key] != actual:
                raise self._error(
                    f"$.{key}", f"declared {data[key]} but P implies {actual}"
                )
        return P

    def _parse_interval(self, value: Any) -> tuple[float, float]:
        items = self._list(value, "$.interval")
        if len(items) != 2:
            raise self._error("$.interval", "expected [a, b]")
        a = self._number(items[0], "$.interval[0]")
        b = self._number(items[1], "$.interval[1]")
        return a, b

    def _parse_hamiltonian(self, value: Any) -> HamiltonianDensity | None:
        if value is None:
            return None

        where = "$.hamiltonian"
        data = self._mapping(value, where)
        lower_bound = data.get("lower_bound")
        if lower_bound is not None:
            lower_bound = self._number(lower_bound, f"{where}.lower_bound")

        try:
            if "constant" in data:
                return HamiltonianDensity.constant(
                    self._matrix(data["constant"], f"{where}.constant"), lower_bound
                )
            if "polynomial" in data:
                coeffs = self._list(data["polynomial"], f"{where}.polynomial")
                return HamiltonianDensity.polynomial(
                    [
                        self._matrix(c, f"{where}.polynomial[{k}]")
                        for k, c in enumerate(coeffs)
                    ],
                    lower_bound,
                )
            if "piecewise" in data:
                return self._parse_piecewise(data["piecewise"], lower_bound)
        except (InvalidSystemError, ValueError) as ex:
            raise self._error(where, str(ex)) from ex

        raise self._error(where, "expected 'constant', 'polynomial' or 'piecewise'")

    def _parse_piecewise(
        self, value: Any, lower_bound: float | None
    ) -> HamiltonianDensity:
        where = "$.hamiltonian.piecewise"
        data = self._mapping(value, where)
        breakpoints = [
            self._number(x, f"{where}.breakpoints[{k}]")
            for k, x in enumerate(
                self._list(self._require(data, "breakpoints", where), where)
            )
        ]
        pieces = [
            [
                self._matrix(c, f"{where}.pieces[{i}][{k}]")
                for k, c in enumerate(self._list(piece, f"{where}.pieces[{i}]"))
            ]
            for i, piece in enumerate(
                self._list(self._require(data, "pieces", where), f"{where}.pieces")
            )
        ]
        return HamiltonianDensity.piecewise(breakpoints, pieces, lower_bound)

    def _parse_bc(
        self, data: Mapping[str, Any], system: PhsSystem
    ) -> BoundaryCondition:
        where = "$.bc"
        bc = self._mapping(self._require(data, "bc", "$"), where)
        kinds = [key for key in ("g", "M", "W") if key in bc]
        if len(kinds) != 1:
            raise self._error(where, "expected exactly one of 'g', 'M' or 'W'")

        nd = system.nd
        match kinds[0]:
            case "M":
                m = self._matrix(bc["M"], f"{where}.M")
                if m.shape != (nd, nd):
                    raise self._error(f"{where}.M", f"expected shape {(nd, nd)}")
                return LinearM(m)
            case "W":
                w = self._matrix(bc["W"], f"{where}.W")
                if w.shape != (nd, 2 * nd):
                    raise self._error(f"{where}.W", f"expected shape {(nd, 2 * nd)}")
                return KernelW(w)

        g = self._mapping(bc["g"], f"{where}.g")
        name = self._require(g, "name", f"{where}.g")
        params = self._mapping(g.get("params", {}), f"{where}.g.params")
        claim = self._number(data.get("lipschitz_claim", 1.0), "$.lipschitz_claim")

        try:
            fn = ContractionFactory.create(name, nd, params)
        except UnknownContractionError as ex:
            raise self._error(f"{where}.g.name", str(ex)) from ex
        except (TypeError, ValueError, DimensionMismatchError) as ex:
            raise self._error(f"{where}.g.params", str(ex)) from ex

        return NonlinearG(g=fn, claimed_lip=claim, label=name)


def load_system(path: Path) -> SystemFile:
    return SystemFileParser(path).parse()


def load_samples(path: Path) -> tuple[Matrix, Matrix, float]:
    """Sample pairs ``{"lip": L, "samples": [{"x": [...], "y": [...]}, ...]}``."""
    data = load_document(path)
    if not isinstance(data, Mapping) or "samples" not in data:
        raise SystemFileError(path, "$", "expected an object with 'samples'")

    lip = data.get("lip", 1.0)
    if isinstance(lip, bool) or not isinstance(lip, int | float) or lip <= 0:
        raise SystemFileError(path, "$.lip", "expected a positive number")

    xs, ys = [], []
    for i, sample in enumerate(data["samples"]):
        if not isinstance(sample, Mapping) or "x" not in sample or "y" not in sample:
            raise SystemFileError(path, f"$.samples[{i}]", "expected 'x' and 'y'")
        xs.append(np.atleast_1d(np.asarray(sample["x"], dtype=np.float64)))
        ys.append(np.atleast_1d(np.asarray(sample["y"], dtype=np.float64)))

    if not xs:
        raise SystemFileError(path, "$.samples", "no samples")
    try:
        return np.vstack(xs), np.vstack(ys), float(lip)
    except ValueError as ex:
        raise SystemFileError(path, "$.samples", "inconsistent dimensions") from ex


def load_queries(path: Path) -> list[Any]:
    """Query points, either a bare list or ``{"queries": [...]}``."""
    data = load_document(path)
    if isinstance(data, Mapping):
        data = data.get("queries")
    if not isinstance(data, list):
        raise SystemFileError(path, "$.queries", "expected a list of points")
    return data
