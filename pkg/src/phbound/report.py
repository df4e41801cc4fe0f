import json
from collections.abc import Callable, Sequence
from dataclasses import KW_ONLY, dataclass, field
from enum import Enum
from typing import Any

import prettytable

from phbound.utils import boldify, tolist


class OutputFormat(str, Enum):
    JSON = "json"
    TEXT = "text"


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"

    @classmethod
    def of(cls, ok: bool) -> "Verdict":
        return cls.PASS if ok else cls.FAIL


@dataclass
class VerificationReport:
    verdict: Verdict
    criterion: str
    residuals: dict[str, float] = field(default_factory=dict)
    witnesses: list[dict[str, Any]] = field(default_factory=list)
    info: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.verdict = Verdict(self.verdict)
        if self.verdict == Verdict.FAIL and not (self.witnesses or self.residuals):
            raise ValueError(
                f"Failed report '{self.criterion}' has neither witness nor residual"
            )

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "criterion": self.criterion,
            "residuals": tolist(self.residuals),
            "witnesses": tolist(self.witnesses),
            "info": tolist(self.info),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "VerificationReport":
        return cls(
            verdict=Verdict(data["verdict"]),
            criterion=data["criterion"],
            residuals=dict(data.get("residuals", {})),
            witnesses=list(data.get("witnesses", [])),
            info=dict(data.get("info", {})),
        )

    def __str__(self) -> str:
        return f"{self.criterion}: {self.verdict.value}"


@dataclass
class ReportFile:
    command: str
    reports: list[VerificationReport]
    _: KW_ONLY
    version: str
    seed: int
    timestamp: str | None = None
    payload: dict[str, Any] = field(default_factory=dict)

    @property
    def verdict(self) -> Verdict:
        return Verdict.of(all(report.passed for report in self.reports))

    def to_dict(self) -> dict[str, Any]:
        data = {
            "tool": "phbound",
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "verdict": self.verdict.value,
            "reports": [report.to_dict() for report in self.reports],
            "payload": tolist(self.payload),
        }
        if self.timestamp is not None:
            data["timestamp"] = self.timestamp
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ReportFile":
        data = json.loads(text)
        return cls(
            command=data["command"],
            reports=[VerificationReport.from_dict(r) for r in data["reports"]],
            version=data["version"],
            seed=data["seed"],
            timestamp=data.get("timestamp"),
            payload=data.get("payload", {}),
        )

    def to_string(self, format: OutputFormat = OutputFormat.JSON) -> str:
        if format == OutputFormat.JSON:
            return self.to_json()

        table = ReportTable(
            [
                Field("Criterion"),
                Field("Verdict", Format.VERDICT),
                Field("Quantity"),
                Field("Value", Format.SCIENTIFIC),
            ]
        )
        for report in self.reports:
            quantities = list(report.residuals.items()) or [("", None)]
            for idx, (name, value) in enumerate(quantities):
                table.add_row(
                    [
                        report.criterion if idx == 0 else "",
                        report.verdict if idx == 0 else "",
                        name,
                        value,
                    ]
                )

        lines = [table.to_string()]
        for key, value in tolist(self.payload).items():
            lines.append(f"{key}: {json.dumps(value)}")
        lines.append(boldify(f"Verdict: {self.verdict.value}"))
        return "\n".join(lines)


class Format(Enum):
    VERDICT = 1
    SCIENTIFIC = 2


def scientific_format(precision: int) -> Callable[[str, Any], str]:
    def _scientific_format(_field, val) -> str:
        if isinstance(val, float | int) and not isinstance(val, bool):
            return f"{val:.{precision}e}"
        return "" if val is None else str(val)

    return _scientific_format


def verdict_format(_field, val) -> str:
    if isinstance(val, Verdict):
        return val.value.upper()
    return str(val)


@dataclass
class Field:
    name: str
    format: Format | None = None


class ReportTable(prettytable.PrettyTable):
    def __init__(self, fields: Sequence[Field], **kwargs) -> None:
        super().__init__([f.name for f in fields], **kwargs)

        self.hrules = prettytable.HEADER
        self.vrules = prettytable.NONE

        self.__fields = fields

    def __bool__(self) -> bool:
        return len(self.rows) > 0

    def to_string(self) -> str:
        for f in self.__fields:
            match f.format:
                case Format.VERDICT:
                    self.custom_format[f.name] = verdict_format
                    self.align[f.name] = "c"
                case Format.SCIENTIFIC:
                    self.custom_format[f.name] = scientific_format(3)
                    self.align[f.name] = "r"
                case _:
                    self.align[f.name] = "l"

        return self.get_string()
