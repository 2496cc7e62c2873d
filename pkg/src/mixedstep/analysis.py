"""Amplification matrices, spectral radii and per-step identity checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .integrators import (
    _elastic_matrices,
    _viscoplastic_matrices,
    invert_elastic_lhs,
    x_factor,
    y_factor,
)
from .model import OscillatorParams, SimulationResult, viscoplastic_damping_bound


def amplification_elastic(p: OscillatorParams, h: float, check: bool = True) -> np.ndarray:
    """Closed-form one-step map ``B^-1 D`` of the damped oscillator.

    Ordering is ``(u, p_hat, J)``. With ``check`` set the closed form is
    compared against the product of the closed-form inverse and the
    right-hand matrix.
    """
    X = x_factor(p, h)
    Y = y_factor(p, h)
    m, a, c = p.m, p.a, p.c
    amp = np.array([
        [4 * m * a + 2 * a * c * h - h * h, 4 * a * h, 0.0],
        [-4 * m * h, Y, 0.0],
        [2 * (2 * m + c * h) * h, 2 * h * h, X],
    ]) / X
    if check:
        inv, rhs = invert_elastic_lhs(p, h), _elastic_matrices(p.m, p.c, p.a, h)[1]
        # round-off of a matrix product is bounded by |inv| @ |rhs|, not by the result
        scale = float((np.abs(inv) @ np.abs(rhs)).max())
        if np.abs(amp - inv @ rhs).max() > 1e-12 * scale:
            raise ArithmeticError("closed-form amplification disagrees with B^-1 D")
    return amp


def amplification_viscoplastic(p: OscillatorParams, h: float, plastic: bool = True) -> np.ndarray:
    """``B_p^-1 D_p`` (or ``B_e^-1 D_e``) in ``(u, J, p_hat, u1_hat)`` ordering."""
    p.require_viscoplastic()
    _, rhs, inv = _viscoplastic_matrices(p.m, p.c, p.a, p.eta, h, plastic)
    return inv @ rhs


def spectral_radius(mat) -> float:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("spectral_radius needs a square matrix")
    return float(np.abs(np.linalg.eigvals(mat)).max())


@dataclass
class StabilityReport:
    h: float
    rho_elastic: float
    rho_plastic: Optional[float]
    underdamped: bool
    damping_bound_ok: Optional[bool]
    damping_bound: Optional[float] = None
    verdicts: list[str] = field(default_factory=list)

    @property
    def stable(self) -> bool:
        ok = self.rho_elastic <= 1 + 1e-10
        if self.rho_plastic is not None:
            ok = ok and self.rho_plastic <= 1 + 1e-10
        return ok and self.underdamped and self.damping_bound_ok is not False

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "rho_elastic": self.rho_elastic,
            "rho_plastic": self.rho_plastic,
            "underdamped": self.underdamped,
            "damping_bound_ok": self.damping_bound_ok,
            "damping_bound": self.damping_bound,
            "stable": self.stable,
            "verdicts": list(self.verdicts),
        }

    def to_text(self) -> str:
        lines = [
            f"time step h          : {self.h:.6g}",
            f"rho(elastic map)     : {self.rho_elastic:.15g}",
        ]
        if self.rho_plastic is not None:
            lines.append(f"rho(plastic map)     : {self.rho_plastic:.15g}")
            lines.append(f"plastic damping bound: {self.damping_bound:.6g}")
        lines.append(f"under-damped         : {'yes' if self.underdamped else 'no'}")
        lines += [f"- {v}" for v in self.verdicts]
        lines.append(f"verdict: {'STABLE' if self.stable else 'NOT GUARANTEED'}")
        return "\n".join(lines) + "\n"


def stability_report(p: OscillatorParams, h: float) -> StabilityReport:
    p.require_valid()
    rho_e = spectral_radius(amplification_elastic(p, h, check=False))
    underdamped = p.a * p.c**2 < 4 * p.m
    verdicts = []
    if underdamped:
        verdicts.append(f"under-damped (a*c^2 = {p.a * p.c**2:.6g} < 4m = {4 * p.m:.6g})")
    else:
        verdicts.append(f"WARNING: not under-damped (a*c^2 = {p.a * p.c**2:.6g} >= 4m = {4 * p.m:.6g})")
    if rho_e > 1 + 1e-10:
        verdicts.append(f"WARNING: elastic spectral radius {rho_e:.12g} exceeds 1")

    rho_p = bound_ok = bound = None
    if p.viscoplastic:
        rho_p = spectral_radius(amplification_viscoplastic(p, h, plastic=True))
        bound = viscoplastic_damping_bound(p)
        bound_ok = 0 < p.c < bound
        if bound_ok:
            verdicts.append(f"plastic damping bound holds (0 < c = {p.c:.6g} < {bound:.6g})")
        else:
            verdicts.append(f"WARNING: plastic damping bound fails (need 0 < c < {bound:.6g}, c = {p.c:.6g})")
        if rho_p > 1 + 1e-10:
            verdicts.append(f"WARNING: plastic spectral radius {rho_p:.12g} exceeds 1")
    else:
        verdicts.append("elastic model only (no fy/eta)")
    return StabilityReport(h, rho_e, rho_p, underdamped, bound_ok, bound, verdicts)


def complex_pair_modulus(mat) -> float:
    """Modulus of the complex eigenpair, or ``nan`` when all eigenvalues are real."""
    ev = np.linalg.eigvals(np.asarray(mat, dtype=float))
    cplx = ev[np.abs(ev.imag) > 0]
    return float(np.abs(cplx).max()) if cplx.size else math.nan


def equivalence_residuals(
    res: SimulationResult,
    p: OscillatorParams,
    forcing: Optional[Sequence[float]] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-step relative residuals of the discrete motion and velocity relations.

    ``motion[r]``: ``(p_r - p_{r-1})/h + c(u_r - u_{r-1})/h + (J_r - J_{r-1})/h - f_r``
    ``velocity[r]``: ``m(u_r - u_{r-1}) - h/2 (p_r + p_{r-1})``

    Each residual is divided by the summed magnitudes of its operands, so
    a value near machine epsilon means the identity holds to round-off.
    """
    h = res.grid.h
    f = np.asarray(res.forcing_used if forcing is None else forcing, dtype=float)
    u, ph, j = res.column("u"), res.column("p_hat"), res.column("j")
    au, ap, aj = np.abs(u), np.abs(ph), np.abs(j)

    motion = (ph[1:] - ph[:-1]) / h + p.c * (u[1:] - u[:-1]) / h + (j[1:] - j[:-1]) / h - f
    motion_scale = (ap[1:] + ap[:-1]) / h + p.c * (au[1:] + au[:-1]) / h + (aj[1:] + aj[:-1]) / h + np.abs(f)

    velocity = p.m * (u[1:] - u[:-1]) - 0.5 * h * (ph[1:] + ph[:-1])
    velocity_scale = p.m * (au[1:] + au[:-1]) + 0.5 * h * (ap[1:] + ap[:-1])

    tiny = np.finfo(float).tiny
    return (
        np.abs(motion) / np.maximum(motion_scale, tiny),
        np.abs(velocity) / np.maximum(velocity_scale, tiny),
    )
