"""One-step mixed variational updates for the damped and viscoplastic oscillators.

Both schemes march the nodal displacement ``u``, momentum ``p_hat`` and
spring impulse ``J`` (plus the slider deformation ``u1_hat`` for the
viscoplastic model) with piecewise-linear trial fields in time. Every step
is a single linear solve ``lhs @ x_r = rhs @ x_{r-1} + load``; the
viscoplastic step adds at most one corrective solve once the elastic trial
has fixed the direction of plastic flow.

Unknown ordering differs between the two systems and follows the
published matrices:

* elastic: ``(u, p_hat, J)``
* viscoplastic: ``(u, J, p_hat, u1_hat)``
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from .loading import ForcingRecord, pre_initial_impulse, sample_forcing
from .model import (
    Branch,
    InitialConditions,
    InvalidParams,
    MixedState,
    OscillatorParams,
    SimulationResult,
    TimeGrid,
)


class SingularSystem(ArithmeticError):
    pass


@dataclass(frozen=True)
class StepSystem:
    lhs: np.ndarray
    rhs: np.ndarray
    load: np.ndarray
    branch: Branch
    lhs_inv: Optional[np.ndarray] = None

    def with_forcing(self, h: float, rf: float) -> "StepSystem":
        load = self.load.copy()
        load[0] = load[1] = 0.5 * h * rf
        return replace(self, load=load)


@dataclass(frozen=True)
class BranchDecision:
    trial_j: float
    branch: Branch
    thresholds: tuple[float, float]


def x_factor(p: OscillatorParams, h: float) -> float:
    """``X = h^2 + 2ach + 4am``, positive for any physical parameters."""
    return h * h + 2.0 * p.a * p.c * h + 4.0 * p.a * p.m


def y_factor(p: OscillatorParams, h: float) -> float:
    return 4.0 * p.m * p.a - 2.0 * p.a * p.c * h - h * h


def _check_h(h: float) -> None:
    if not (np.isfinite(h) and h > 0):
        raise InvalidParams(f"time step must be positive, got {h!r}")


# -- elastic ---------------------------------------------------------------

@lru_cache(maxsize=64)
def _elastic_matrices(m, c, a, h):
    mh, c2 = m / h, c / 2.0
    lhs = np.array([
        [mh + c2, 0.0, 0.5],
        [-mh + c2, 1.0, 0.5],
        [-0.5, 0.0, a / h],
    ])
    rhs = np.array([
        [mh + c2, 1.0, 0.5],
        [-mh + c2, 0.0, 0.5],
        [0.5, 0.0, a / h],
    ])
    X = h * h + 2.0 * a * c * h + 4.0 * a * m
    inv = np.array([
        [4.0 * a * h, 0.0, -2.0 * h * h],
        [-(h * h + 2.0 * a * c * h - 4.0 * a * m), X, -4.0 * m * h],
        [2.0 * h * h, 0.0, 2.0 * (2.0 * m + c * h) * h],
    ]) / X
    for arr in (lhs, rhs, inv):
        arr.flags.writeable = False
    return lhs, rhs, inv


def assemble_elastic(p: OscillatorParams, h: float, rf: float) -> StepSystem:
    """Step system of the forced damped oscillator for forcing ``rf`` at ``t_r``."""
    p.require_valid()
    _check_h(h)
    lhs, rhs, inv = _elastic_matrices(p.m, p.c, p.a, h)
    alpha = 0.5 * h * rf
    return StepSystem(lhs, rhs, np.array([alpha, alpha, 0.0]), Branch.ELASTIC, inv)


def invert_elastic_lhs(p: OscillatorParams, h: float) -> np.ndarray:
    """Closed-form inverse of the elastic left-hand matrix."""
    p.require_valid()
    _check_h(h)
    return _elastic_matrices(p.m, p.c, p.a, h)[2].copy()


def init_state(p: OscillatorParams, ic: InitialConditions) -> MixedState:
    """Initial mixed state from displacement, velocity and prior impulse.

    The spring impulse closes the momentum balance
    ``p_hat + c*u + J = I0`` at ``t = 0``.
    """
    p.require_valid()
    ic.require_valid(p)
    p_hat = p.m * ic.v0
    j = ic.i0 - p_hat - p.c * ic.u0
    return MixedState(u=ic.u0, p_hat=p_hat, j=j, u1_hat=ic.u1_0)


def _solve(sys: StepSystem, b: np.ndarray) -> np.ndarray:
    if sys.lhs_inv is not None:
        y = sys.lhs_inv @ b
    else:
        try:
            y = np.linalg.solve(sys.lhs, b)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(y)):
        raise SingularSystem("step produced non-finite values")
    return y


def step_elastic(s: MixedState, sys: StepSystem) -> MixedState:
    x = np.array([s.u, s.p_hat, s.j])
    u, p_hat, j = _solve(sys, sys.rhs @ x + sys.load)
    return MixedState(float(u), float(p_hat), float(j), s.u1_hat)


# -- viscoplastic ------------------------------------------------------------

@lru_cache(maxsize=64)
def _viscoplastic_matrices(m, c, a, eta, h, plastic):
    mh, c2, ah = m / h, c / 2.0, a / h
    beta = 1.0 / (2.0 * eta) if plastic else 0.0
    lhs = np.array([
        [mh + c2, 0.5, 0.0, 0.0],
        [-mh + c2, 0.5, 1.0, 0.0],
        [-0.5, ah + beta, 0.0, 0.0],
        [0.5, -ah + beta, 0.0, -1.0],
    ])
    rhs = np.array([
        [mh + c2, 0.5, 1.0, 0.0],
        [-mh + c2, 0.5, 0.0, 0.0],
        [0.5, ah + beta, 0.0, -1.0],
        [-0.5, -ah + beta, 0.0, 0.0],
    ])
    X = h * h + 2.0 * a * c * h + 4.0 * a * m
    Y = 4.0 * m * a - 2.0 * a * c * h - h * h
    if plastic:
        d = eta * X + 2.0 * h * m + c * h * h
        inv = np.array([
            [2.0 * h * (h + 2.0 * a * eta) / d, 0.0, -2.0 * h * h * eta / d, 0.0],
            [2.0 * h * h * eta / d, 0.0, 2.0 * h * eta * (2.0 * m + c * h) / d, 0.0],
            [(eta * Y - c * h * h + 2.0 * h * m) / d, 1.0, -4.0 * h * m * eta / d, 0.0],
            [2.0 * h * h / d, 0.0, (-eta * X + 2.0 * h * m + c * h * h) / d, -1.0],
        ])
    else:
        inv = np.array([
            [4.0 * a * h / X, 0.0, -2.0 * h * h / X, 0.0],
            [2.0 * h * h / X, 0.0, 2.0 * h * (2.0 * m + c * h) / X, 0.0],
            [Y / X, 1.0, -4.0 * m * h / X, 0.0],
            [0.0, 0.0, -1.0, -1.0],
        ])
    for arr in (lhs, rhs, inv):
        arr.flags.writeable = False
    return lhs, rhs, inv


def viscoplastic_coefficients(p: OscillatorParams, h: float, rf: float) -> tuple[float, float, float]:
    """Load coefficients ``(alpha, beta, gamma)`` of the viscoplastic step."""
    return 0.5 * h * rf, 1.0 / (2.0 * p.eta), h * p.fy / (2.0 * p.eta)


def assemble_viscoplastic(p: OscillatorParams, h: float, rf: float, branch: Branch) -> StepSystem:
    p.require_viscoplastic()
    _check_h(h)
    plastic = branch is not Branch.ELASTIC
    lhs, rhs, inv = _viscoplastic_matrices(p.m, p.c, p.a, p.eta, h, plastic)
    alpha, _, gamma = viscoplastic_coefficients(p, h, rf)
    sign = {Branch.ELASTIC: 0.0, Branch.PLASTIC_POSITIVE: 1.0, Branch.PLASTIC_NEGATIVE: -1.0}[branch]
    load = np.array([alpha, alpha, sign * gamma, sign * gamma])
    return StepSystem(lhs, rhs, load, branch, inv)


def invert_viscoplastic_lhs(p: OscillatorParams, h: float, plastic: bool) -> np.ndarray:
    """Closed-form inverse of the elastic (``plastic=False``) or plastic 4x4 matrix."""
    p.require_viscoplastic()
    _check_h(h)
    return _viscoplastic_matrices(p.m, p.c, p.a, p.eta, h, plastic)[2].copy()


def classify_branch(trial_j: float, prev_j: float, h: float, fy: float) -> BranchDecision:
    """Pick the flow direction from the elastic trial impulse.

    The elastic band is closed, so a trial exactly on a threshold stays
    elastic.
    """
    lower, upper = prev_j - h * fy, prev_j + h * fy
    if trial_j > upper:
        branch = Branch.PLASTIC_POSITIVE
    elif trial_j < lower:
        branch = Branch.PLASTIC_NEGATIVE
    else:
        branch = Branch.ELASTIC
    return BranchDecision(trial_j, branch, (lower, upper))


def _vp_vector(s: MixedState) -> np.ndarray:
    return np.array([s.u, s.j, s.p_hat, s.u1_hat])


def _vp_state(y) -> MixedState:
    u, j, p_hat, u1 = (float(v) for v in y)
    return MixedState(u=u, p_hat=p_hat, j=j, u1_hat=u1)


def step_viscoplastic(s: MixedState, p: OscillatorParams, h: float, rf: float) -> tuple[MixedState, Branch]:
    """Advance the viscoplastic model by one step without iteration."""
    x = _vp_vector(s)
    trial_sys = assemble_viscoplastic(p, h, rf, Branch.ELASTIC)
    y = _solve(trial_sys, trial_sys.rhs @ x + trial_sys.load)
    decision = classify_branch(float(y[1]), s.j, h, p.fy)
    if decision.branch is not Branch.ELASTIC:
        sys = assemble_viscoplastic(p, h, rf, decision.branch)
        y = _solve(sys, sys.rhs @ x + sys.load)
    return _vp_state(y), decision.branch


# -- driver ------------------------------------------------------------------

def simulate(
    p: OscillatorParams,
    g: TimeGrid,
    rec: Union[ForcingRecord, Sequence[float], np.ndarray],
    ic: Optional[InitialConditions] = None,
) -> SimulationResult:
    """Run the one-step scheme over the whole grid.

    ``rec`` is either a forcing record, sampled at the step end points, or
    a precomputed sequence of ``n_steps`` forcing values. The viscoplastic
    scheme is used whenever ``p`` carries ``fy`` and ``eta``.
    """
    p.require_valid()
    g.require_valid()
    ic = ic or InitialConditions()
    if isinstance(rec, ForcingRecord):
        forcing = sample_forcing(rec, g, p.m)
        ic = replace(ic, i0=ic.i0 + pre_initial_impulse(rec))
    else:
        forcing = np.asarray(rec, dtype=float)
        if forcing.shape != (g.n_steps,):
            raise ValueError(f"expected {g.n_steps} forcing values, got shape {forcing.shape}")

    state = init_state(p, ic)
    states = [state]
    labels = []
    if p.viscoplastic:
        for rf in forcing:
            state, branch = step_viscoplastic(state, p, g.h, float(rf))
            states.append(state)
            labels.append(branch)
    else:
        base = assemble_elastic(p, g.h, 0.0)
        for rf in forcing:
            state = step_elastic(state, base.with_forcing(g.h, float(rf)))
            states.append(state)
            labels.append(Branch.ELASTIC)
    return SimulationResult(
        grid=g,
        states=tuple(states),
        branch_labels=tuple(labels),
        forcing_used=tuple(float(f) for f in forcing),
        method="extended-hamilton",
    )
