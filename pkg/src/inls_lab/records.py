"""Per-step diagnostic records and their CSV serialization.

The column set is fixed; numbers are written with 17 significant digits so
a written series round-trips bit-exactly, which the regression and
determinism tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ValidationError

SERIES_HEADER = (
    "t,mass,energy,grad_norm_sq,K,I,Iprime,Idoubleprime,"
    "R1,R2,R3,delta_instant,R_cutoff"
)


@dataclass(frozen=True)
class TimeSeriesRecord:
    t: float
    mass: float
    energy: float
    grad_norm_sq: float
    K: float
    I: float
    Iprime: float
    Idoubleprime: float
    R1: float
    R2: float
    R3: float
    delta_instant: float
    R_cutoff: float

    def row(self) -> str:
        return ",".join(
            format(getattr(self, f.name), ".17g") for f in fields(self)
        )


_FIELD_NAMES = [f.name for f in fields(TimeSeriesRecord)]
assert ",".join(_FIELD_NAMES) == SERIES_HEADER


def write_series(path, records) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(SERIES_HEADER + "\n")
        for rec in records:
            fh.write(rec.row() + "\n")


def read_series(path) -> list[TimeSeriesRecord]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != SERIES_HEADER:
            raise ValidationError(f"unexpected series header in {path}: {header!r}")
        out = []
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(_FIELD_NAMES):
                raise ValidationError(f"{path}:{line_no}: expected {len(_FIELD_NAMES)} columns")
            out.append(TimeSeriesRecord(*(float(x) for x in parts)))
    return out
