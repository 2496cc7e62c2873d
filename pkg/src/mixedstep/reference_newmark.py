"""Newmark constant-average-acceleration reference integrator.

Standard nodal form: equilibrium ``m*a_r + c*v_r + F_r = f(t_r)`` is
enforced at every node with ``gamma = 1/2`` and ``beta = 1/4``. The
viscoplastic version integrates the slider with backward Euler inside a
Newton-Raphson loop on the nodal displacement.

Results are mapped onto ``MixedState`` so they can be compared with the
mixed schemes directly: ``p_hat = m*v`` and the spring impulse is
accumulated with the trapezoidal rule on the nodal spring force.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .integrators import init_state
from .loading import ForcingRecord, forcing_at, pre_initial_impulse
from .model import (
    Branch,
    InitialConditions,
    InvalidParams,
    MixedState,
    OscillatorParams,
    SimulationResult,
    TimeGrid,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NewmarkSettings:
    gamma: float = 0.5
    beta: float = 0.25
    nr_tolerance: float = 1e-7
    nr_max_iterations: int = 10

    def __post_init__(self):
        if self.gamma != 0.5 or self.beta != 0.25:
            raise InvalidParams("only constant average acceleration (gamma=1/2, beta=1/4) is supported")
        if not self.nr_tolerance > 0:
            raise InvalidParams("nr_tolerance must be positive")
        if self.nr_max_iterations < 1:
            raise InvalidParams("nr_max_iterations must be at least 1")


def _nodal_forcing(rec, g: TimeGrid, m: float) -> np.ndarray:
    if isinstance(rec, ForcingRecord):
        return np.asarray(forcing_at(rec, g.times, m), dtype=float)
    f = np.asarray(rec, dtype=float)
    if f.shape != (g.n_steps + 1,):
        raise ValueError(f"expected {g.n_steps + 1} nodal forcing values, got shape {f.shape}")
    return f


def _prepare(p, g, rec, ic):
    p.require_valid()
    g.require_valid()
    ic = ic or InitialConditions()
    if isinstance(rec, ForcingRecord):
        ic = replace(ic, i0=ic.i0 + pre_initial_impulse(rec))
    return ic, _nodal_forcing(rec, g, p.m)


def newmark_linear(
    p: OscillatorParams,
    g: TimeGrid,
    rec: Union[ForcingRecord, Sequence[float], np.ndarray],
    ic: Optional[InitialConditions] = None,
) -> SimulationResult:
    """Linear damped oscillator ``m*u'' + c*u' + k*u = f``.

    ``rec`` may be a forcing record or ``n_steps + 1`` nodal force values.
    """
    ic, f = _prepare(p, g, rec, ic)
    if p.viscoplastic:
        raise InvalidParams("newmark_linear needs elastic parameters")
    m, c, k, h = p.m, p.c, p.k, g.h

    s0 = init_state(p, ic)
    u, v = ic.u0, ic.v0
    acc = (f[0] - c * v - k * u) / m
    j = s0.j
    k_eff = k + 4.0 * m / h**2 + 2.0 * c / h

    states = [s0]
    for r in range(1, g.n_steps + 1):
        rhs = f[r] + m * (4.0 / h**2 * u + 4.0 / h * v + acc) + c * (2.0 / h * u + v)
        u_new = rhs / k_eff
        v_new = 2.0 / h * (u_new - u) - v
        acc = 4.0 / h**2 * (u_new - u) - 4.0 / h * v - acc
        j += h * k * (u + u_new) / 2.0
        u, v = u_new, v_new
        states.append(MixedState(u=u, p_hat=m * v, j=j))
    return SimulationResult(
        grid=g,
        states=tuple(states),
        branch_labels=(Branch.ELASTIC,) * g.n_steps,
        forcing_used=tuple(float(x) for x in f[1:]),
        method="newmark",
    )


def viscoplastic_return(u: float, u1_prev: float, p: OscillatorParams, h: float):
    """Backward-Euler slider update at fixed total displacement ``u``.

    Returns ``(force, u1, tangent, branch)``. Inside the yield band the
    slider does not move. Outside it the force relaxes toward the yield
    surface as ``F = (F_tr + (h*k/eta)*fy*sgn(F_tr)) / (1 + h*k/eta)``.
    """
    k = p.k
    f_tr = k * (u - u1_prev)
    if abs(f_tr) <= p.fy:
        return f_tr, u1_prev, k, Branch.ELASTIC
    ratio = h * k / p.eta
    sgn = 1.0 if f_tr > 0 else -1.0
    force = (f_tr + ratio * p.fy * sgn) / (1.0 + ratio)
    u1 = u - force / k
    branch = Branch.PLASTIC_POSITIVE if sgn > 0 else Branch.PLASTIC_NEGATIVE
    return force, u1, k / (1.0 + ratio), branch


def newmark_viscoplastic(
    p: OscillatorParams,
    g: TimeGrid,
    rec: Union[ForcingRecord, Sequence[float], np.ndarray],
    ic: Optional[InitialConditions] = None,
    s: NewmarkSettings = NewmarkSettings(),
) -> SimulationResult:
    """Elastic-viscoplastic oscillator with Newton-Raphson on each step.

    Steps that hit ``nr_max_iterations`` without the displacement
    increment dropping below ``nr_tolerance`` keep their last iterate and
    are listed in ``nonconverged_steps``.
    """
    ic, f = _prepare(p, g, rec, ic)
    p.require_viscoplastic()
    m, c, k, h = p.m, p.c, p.k, g.h
    a0, a2 = 4.0 / h**2, 4.0 / h
    c0 = 2.0 / h

    s0 = init_state(p, ic)
    u, v, u1 = ic.u0, ic.v0, ic.u1_0
    force = k * (u - u1)
    acc = (f[0] - c * v - force) / m
    j = s0.j

    states = [s0]
    labels = []
    bad = []
    for r in range(1, g.n_steps + 1):
        x = u
        converged = False
        for _ in range(s.nr_max_iterations):
            f_int, _, kt, _ = viscoplastic_return(x, u1, p, h)
            a_x = a0 * (x - u) - a2 * v - acc
            v_x = c0 * (x - u) - v
            resid = m * a_x + c * v_x + f_int - f[r]
            dx = -resid / (a0 * m + c0 * c + kt)
            x += dx
            if abs(dx) < s.nr_tolerance:
                converged = True
                break
        if not converged:
            bad.append(r)
            log.warning("Newton-Raphson did not converge at step %d (t=%g)", r, r * h)
        f_new, u1_new, _, branch = viscoplastic_return(x, u1, p, h)
        v_new = c0 * (x - u) - v
        acc = a0 * (x - u) - a2 * v - acc
        j += h * (force + f_new) / 2.0
        u, v, u1, force = x, v_new, u1_new, f_new
        states.append(MixedState(u=u, p_hat=m * v, j=j, u1_hat=u1))
        labels.append(branch)
    return SimulationResult(
        grid=g,
        states=tuple(states),
        branch_labels=tuple(labels),
        forcing_used=tuple(float(x) for x in f[1:]),
        method="newmark",
        nonconverged_steps=tuple(bad),
    )


def run_reference(p, g, rec, ic=None, s: NewmarkSettings = NewmarkSettings()) -> SimulationResult:
    """Dispatch to the linear or viscoplastic reference by parameter set."""
    if p.viscoplastic:
        return newmark_viscoplastic(p, g, rec, ic, s)
    return newmark_linear(p, g, rec, ic)
