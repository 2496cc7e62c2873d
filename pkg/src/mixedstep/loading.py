"""Discrete forcing values from analytic sines or sampled records.

Each step ``[t_{r-1}, t_r]`` sees exactly one forcing value, taken at its
end point ``t_r``.
"""
from __future__ import annotations

import enum
import io
import math
import re
from dataclasses import dataclass, replace
from typing import TextIO, Union

import numpy as np

from .model import TimeGrid


class RecordError(ValueError):
    pass


class MalformedLine(RecordError):
    def __init__(self, line_no: int, text: str = ""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: expected two numeric columns, got {text!r}")


class NonMonotonicTime(RecordError):
    def __init__(self, line_no: int):
        self.line_no = line_no
        super().__init__(f"line {line_no}: time is not strictly increasing")


class EmptyRecord(RecordError):
    def __init__(self):
        super().__init__("record contains no data rows")


class Interpretation(str, enum.Enum):
    DIRECT_FORCE = "direct_force"
    GROUND_ACCELERATION = "ground_acceleration"


@dataclass(frozen=True)
class AnalyticSine:
    amplitude: float
    angular_frequency: float
    duration: float

    def __post_init__(self):
        if not self.duration >= 0:
            raise RecordError(f"sine duration must be >= 0, got {self.duration}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        val = self.amplitude * np.sin(self.angular_frequency * t)
        return np.where((t >= 0) & (t <= self.duration), val, 0.0)


@dataclass(frozen=True)
class Sampled:
    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise RecordError("times and values differ in length")
        if not self.times:
            raise EmptyRecord()
        if not all(math.isfinite(v) for v in self.times + self.values):
            raise RecordError("record contains non-finite entries")
        for i in range(1, len(self.times)):
            if not self.times[i] > self.times[i - 1]:
                raise NonMonotonicTime(i + 1)

    @classmethod
    def from_arrays(cls, times, values) -> "Sampled":
        return cls(tuple(float(x) for x in times), tuple(float(x) for x in values))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        ts = np.asarray(self.times)
        vs = np.asarray(self.values)
        return np.interp(t, ts, vs, left=0.0, right=0.0)


@dataclass(frozen=True)
class ForcingRecord:
    kind: Union[AnalyticSine, Sampled]
    scale: float = 1.0
    interpretation: Interpretation = Interpretation.DIRECT_FORCE
    pre_impulse: float = 0.0

    def scaled(self, scale: float) -> "ForcingRecord":
        return replace(self, scale=scale)


_SPLIT = re.compile(r"[,\s]+")


def parse_record(text: Union[str, TextIO]) -> ForcingRecord:
    """Parse a two-column ``time value`` table into a sampled record.

    Columns may be separated by whitespace or commas. Blank lines and
    lines starting with ``#`` are skipped. Line numbers in errors are
    1-based and count every physical line.
    """
    if not isinstance(text, str):
        text = text.read()
    times: list[float] = []
    values: list[float] = []
    for line_no, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = [tok for tok in _SPLIT.split(line) if tok]
        if len(tokens) != 2:
            raise MalformedLine(line_no, line)
        try:
            t, v = float(tokens[0]), float(tokens[1])
        except ValueError:
            raise MalformedLine(line_no, line) from None
        if not (math.isfinite(t) and math.isfinite(v)):
            raise MalformedLine(line_no, line)
        if times and not t > times[-1]:
            raise NonMonotonicTime(line_no)
        times.append(t)
        values.append(v)
    if not times:
        raise EmptyRecord()
    return ForcingRecord(Sampled(tuple(times), tuple(values)))


def format_record(rec: ForcingRecord) -> str:
    """Write a sampled record back out in the format ``parse_record`` reads."""
    if not isinstance(rec.kind, Sampled):
        raise RecordError("only sampled records can be exported")
    lines = ["# time value"]
    lines += [f"{t!r} {v!r}" for t, v in zip(rec.kind.times, rec.kind.values)]
    return "\n".join(lines) + "\n"


def truncate(rec: ForcingRecord, duration: float) -> ForcingRecord:
    """Zero the forcing after ``duration``."""
    kind = rec.kind
    if isinstance(kind, AnalyticSine):
        kind = replace(kind, duration=min(kind.duration, duration))
    else:
        keep = [i for i, t in enumerate(kind.times) if t <= duration]
        if not keep:
            raise EmptyRecord()
        kind = Sampled(tuple(kind.times[i] for i in keep), tuple(kind.values[i] for i in keep))
    return replace(rec, kind=kind)


def forcing_at(rec: ForcingRecord, t, m: float):
    """Applied force at time(s) ``t`` after scaling and interpretation."""
    val = rec.scale * rec.kind(t)
    if rec.interpretation is Interpretation.GROUND_ACCELERATION:
        val = -m * val
    return val


def sample_forcing(rec: ForcingRecord, g: TimeGrid, m: float) -> np.ndarray:
    """Per-step forcing ``f_r`` at ``t_r`` for ``r = 1 .. n_steps``."""
    t = np.arange(1, g.n_steps + 1) * g.h
    return np.asarray(forcing_at(rec, t, m), dtype=float)


def pre_initial_impulse(rec: ForcingRecord) -> float:
    """Impulse delivered before ``t = 0``.

    Both record kinds are defined from ``t = 0`` onward, so this is just
    the declared ``pre_impulse`` (zero unless the user set one).
    """
    return float(rec.pre_impulse)

