"""Report rows and their CSV and JSON renderings."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

SCHEMA_LINE = "# hjentropy report v1"
COLUMNS = ("experiment", "parameters", "measured", "relation", "bound", "passed")

_RELATIONS = {
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
}


def format_number(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.12g}"


def parse_number(text: str) -> float:
    return float(text)


def recompute(measured: float, relation: str, bound: float) -> bool:
    return bool(_RELATIONS[relation](measured, bound))


@dataclass
class ReportRow:
    """One check: ``measured <relation> bound``.

    Comparisons use the printed values, so the pass flag can always be recomputed from the
    CSV columns. The runtime is kept out of the CSV so that reruns give identical bytes.
    """

    experiment: str
    parameters: dict
    measured: float
    bound: float
    relation: str = "<="
    runtime: float = 0.0

    def __post_init__(self):
        if self.relation not in _RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")

    @property
    def measured_text(self) -> str:
        return format_number(self.measured)

    @property
    def bound_text(self) -> str:
        return format_number(self.bound)

    @property
    def passed(self) -> bool:
        return recompute(parse_number(self.measured_text), self.relation,
                         parse_number(self.bound_text))

    @property
    def parameter_text(self) -> str:
        return ";".join(f"{k}={v if isinstance(v, str) else format_number(v)}"
                        for k, v in self.parameters.items())

    def csv_fields(self) -> list:
        return [self.experiment, self.parameter_text, self.measured_text, self.relation,
                self.bound_text, "1" if self.passed else "0"]

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "parameters": {k: (v if isinstance(v, (str, bool, int)) else float(v))
                           for k, v in self.parameters.items()},
            "measured": self.measured_text,
            "relation": self.relation,
            "bound": self.bound_text,
            "passed": self.passed,
            "runtime_s": round(self.runtime, 6),
        }


def render_csv(rows, subcommand: str) -> str:
    buffer = io.StringIO()
    buffer.write(f"{SCHEMA_LINE} subcommand={subcommand}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buffer.getvalue()


def read_csv(text: str) -> list:
    """Parse a rendered report back into dictionaries (the schema line is checked)."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith(SCHEMA_LINE):
        raise ValueError("not an hjentropy report")
    return list(csv.DictReader(lines[1:]))


def render_json(rows, subcommand: str, config: dict, total_runtime: float) -> str:
    payload = {
        "schema": "hjentropy-summary-v1",
        "subcommand": subcommand,
        "config": config,
        "passed": all(r.passed for r in rows),
        "checks": len(rows),
        "failures": sum(not r.passed for r in rows),
        "runtime_s": round(total_runtime, 6),
        "rows": [r.as_dict() for r in rows],
    }
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"
