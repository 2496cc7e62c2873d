"""Physical and discretization data shared by every integrator.

Units are never converted. Pick one consistent system (the bundled
configs use kip, inch and second) and stay in it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence


class InvalidParams(ValueError):
    """Raised when parameters violate a hard invariant."""


class Branch(str, enum.Enum):
    ELASTIC = "Elastic"
    PLASTIC_POSITIVE = "PlasticPositive"
    PLASTIC_NEGATIVE = "PlasticNegative"


class Severity(str, enum.Enum):
    ERROR = "ERROR"
    WARNING = "WARNING"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    message: str

    def __str__(self) -> str:
        return f"{self.severity.value}: {self.message}"


@dataclass(frozen=True)
class OscillatorParams:
    """Mass ``m``, viscous damping ``c`` and flexibility ``a``.

    ``fy`` (yield force) and ``eta`` (regularizing viscosity) are given
    together for the elastic-viscoplastic model and omitted for the plain
    damped oscillator. Stiffness is always derived as ``1 / a``.
    """

    m: float
    c: float
    a: float
    fy: Optional[float] = None
    eta: Optional[float] = None

    @classmethod
    def from_stiffness(cls, m, c, k, fy=None, eta=None) -> "OscillatorParams":
        return cls(m=m, c=c, a=1.0 / k, fy=fy, eta=eta)

    @property
    def k(self) -> float:
        return 1.0 / self.a

    @property
    def viscoplastic(self) -> bool:
        return self.fy is not None and self.eta is not None

    def require_valid(self) -> None:
        errors = [d for d in _param_diagnostics(self) if d.severity is Severity.ERROR]
        if errors:
            raise InvalidParams("; ".join(d.message for d in errors))

    def require_viscoplastic(self) -> None:
        self.require_valid()
        if not self.viscoplastic:
            raise InvalidParams("viscoplastic model requires both fy and eta")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_r = r * h`` for ``r = 0 .. n_steps``."""

    h: float
    n_steps: int

    @classmethod
    def from_duration(cls, h: float, analysis_time: float) -> "TimeGrid":
        n = int(round(analysis_time / h))
        if abs(n * h - analysis_time) > h:
            raise InvalidParams("analysis_time is not a whole number of steps")
        return cls(h=h, n_steps=n)

    @property
    def times(self):
        import numpy as np

        return np.arange(self.n_steps + 1) * self.h

    def time(self, r: int) -> float:
        return r * self.h

    def require_valid(self) -> None:
        if not (math.isfinite(self.h) and self.h > 0):
            raise InvalidParams(f"time step must be positive, got {self.h!r}")
        if self.n_steps < 0:
            raise InvalidParams(f"n_steps must be non-negative, got {self.n_steps!r}")


@dataclass(frozen=True)
class MixedState:
    """Nodal values of displacement, momentum, spring impulse, slider deformation."""

    u: float
    p_hat: float
    j: float
    u1_hat: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.u, self.p_hat, self.j, self.u1_hat)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.as_tuple())


@dataclass(frozen=True)
class InitialConditions:
    u0: float = 0.0
    v0: float = 0.0
    u1_0: float = 0.0
    i0: float = 0.0

    def require_valid(self, p: OscillatorParams) -> None:
        vals = (self.u0, self.v0, self.u1_0, self.i0)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParams("initial conditions must be finite")
        if self.u1_0 != 0.0 and not p.viscoplastic:
            raise InvalidParams("u1_0 must be zero for the elastic model")


@dataclass(frozen=True)
class SimulationResult:
    """Trajectory of one run.

    ``states`` holds ``n_steps + 1`` nodal snapshots; ``branch_labels`` and
    ``forcing_used`` hold one entry per step. ``nonconverged_steps`` is only
    ever populated by the Newton-Raphson reference integrator.
    """

    grid: TimeGrid
    states: tuple[MixedState, ...]
    branch_labels: tuple[Branch, ...]
    forcing_used: tuple[float, ...]
    method: str = "extended-hamilton"
    nonconverged_steps: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        n = self.grid.n_steps
        if len(self.states) != n + 1:
            raise ValueError(f"expected {n + 1} states, got {len(self.states)}")
        if len(self.branch_labels) != n or len(self.forcing_used) != n:
            raise ValueError("branch_labels and forcing_used need one entry per step")

    def column(self, name: str):
        import numpy as np

        idx = {"u": 0, "p_hat": 1, "j": 2, "u1_hat": 3}[name]
        return np.array([s.as_tuple()[idx] for s in self.states])

    @property
    def final(self) -> MixedState:
        return self.states[-1]


def _param_diagnostics(p: OscillatorParams) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    err = lambda msg: out.append(Diagnostic(Severity.ERROR, msg))  # noqa: E731

    for name in ("m", "c", "a"):
        if not math.isfinite(getattr(p, name)):
            err(f"{name} must be finite")
    if not p.m > 0:
        err(f"mass m must be > 0 (got {p.m})")
    if not p.a > 0:
        err(f"flexibility a must be > 0 (got {p.a})")
    if not p.c >= 0:
        err(f"damping c must be >= 0 (got {p.c})")
    if (p.fy is None) != (p.eta is None):
        err("fy and eta must be given together or not at all")
    if p.fy is not None and not (p.fy > 0):
        err(f"yield force fy must be > 0 (got {p.fy})")
    if p.eta is not None and not (p.eta > 0):
        err(f"viscosity eta must be > 0 (got {p.eta})")
    return out


def viscoplastic_damping_bound(p: OscillatorParams) -> float:
    """Upper damping bound ``m/(a*eta) + 2*sqrt(m/a)`` for the plastic branch."""
    return p.m / (p.a * p.eta) + 2.0 * math.sqrt(p.m / p.a)


def validate_params(p: OscillatorParams, g: Optional[TimeGrid] = None) -> list[Diagnostic]:
    """Check parameters and grid, returning diagnostics instead of raising.

    ERROR entries flag violated invariants. WARNING entries flag parameter
    sets outside the region where the one-step schemes are known to be
    non-amplifying (over-damped, or damping above the viscoplastic bound).
    """
    out = _param_diagnostics(p)
    if g is not None:
        if not (math.isfinite(g.h) and g.h > 0):
            out.append(Diagnostic(Severity.ERROR, f"time step h must be > 0 (got {g.h})"))
        if g.n_steps < 1:
            out.append(Diagnostic(Severity.ERROR, f"n_steps must be >= 1 (got {g.n_steps})"))
    if any(d.severity is Severity.ERROR for d in out):
        return out

    if p.a * p.c**2 >= 4.0 * p.m:
        out.append(Diagnostic(
            Severity.WARNING,
            f"not under-damped: a*c^2 = {p.a * p.c**2:.6g} >= 4m = {4 * p.m:.6g}; "
            "elastic eigenvalue bound not guaranteed",
        ))
    if p.viscoplastic:
        bound = viscoplastic_damping_bound(p)
        if p.c >= bound:
            out.append(Diagnostic(
                Severity.WARNING,
                f"c = {p.c:.6g} >= m/(a*eta) + 2*sqrt(m/a) = {bound:.6g}; "
                "plastic-branch eigenvalue bound not guaranteed",
            ))
    return out


def has_errors(diags: Sequence[Diagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diags)
