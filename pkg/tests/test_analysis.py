import dataclasses
import math

import numpy as np
import pytest

import oracles
from mixedstep.analysis import (
    amplification_elastic,
    amplification_viscoplastic,
    complex_pair_modulus,
    equivalence_residuals,
    spectral_radius,
    stability_report,
)
from mixedstep.integrators import simulate
from mixedstep.loading import AnalyticSine, ForcingRecord
from mixedstep.model import MixedState, OscillatorParams, TimeGrid

ELASTIC = OscillatorParams(m=1.0, a=1 / 225, c=1.5)
VISCO = OscillatorParams(m=1.0, a=1 / 225, c=1.5, fy=0.27, eta=1.5)


def _dense_amplification(p, h):
    # columns of the one-step map, from the residual-probing oracle
    return np.column_stack([oracles.elastic_step(e, p.m, p.c, p.a, h, 0.0) for e in np.eye(3)])


def test_reference_matrix():
    amp = amplification_elastic(ELASTIC, 0.02)
    frozen = [
        [0.9566265060240964, 0.019277108433734938, 0],
        [-4.33734939759036, 0.927710843373494, 0],
        [4.402409638554217, 0.04337349397590362, 1.0],
    ]
    np.testing.assert_allclose(amp, frozen, rtol=1e-13, atol=1e-17)
    np.testing.assert_allclose(_dense_amplification(ELASTIC, 0.02), frozen, rtol=1e-12, atol=1e-15)


def test_closed_form_vs_dense_oracle(rng):
    for _ in range(200):
        d = oracles.random_params(rng)
        p = OscillatorParams(m=d["m"], a=d["a"], c=d["c"])
        amp = amplification_elastic(p, d["h"])
        assert amp[2, 2] == 1.0
        dense = _dense_amplification(p, d["h"])
        assert np.abs(amp - dense).max() <= 1e-8 * max(1.0, np.abs(dense).max())


def test_undamped_unit_modulus(rng):
    for _ in range(200):
        d = oracles.random_params(rng)
        p = OscillatorParams(m=d["m"], a=d["a"], c=0.0)
        assert abs(complex_pair_modulus(amplification_elastic(p, d["h"])) - 1) <= 1e-12


def test_complex_pair_absent():
    assert math.isnan(complex_pair_modulus(np.diag([0.5, 0.2])))


@pytest.mark.parametrize("mat,expected", [
    (np.eye(3), 1.0),
    (np.diag([0.5, -2.0]), 2.0),
    ([[math.cos(0.3), -math.sin(0.3)], [math.sin(0.3), math.cos(0.3)]], 1.0),
])
def test_spectral_radius_examples(mat, expected):
    assert spectral_radius(mat) == pytest.approx(expected, abs=1e-12)


def test_spectral_radius_rejects_non_square():
    with pytest.raises(ValueError):
        spectral_radius(np.ones((2, 3)))


def test_plastic_map_contractive_sample(rng):
    for _ in range(200):
        d = oracles.random_params(rng, viscoplastic=True)
        p = OscillatorParams(m=d["m"], a=d["a"], c=d["c"], fy=1.0, eta=d["eta"])
        assert spectral_radius(amplification_viscoplastic(p, d["h"])) <= 1 + 1e-10
        assert spectral_radius(amplification_viscoplastic(p, d["h"], plastic=False)) <= 1 + 1e-10


def test_report_reference_case():
    rep = stability_report(VISCO, 0.02)
    assert rep.underdamped and rep.damping_bound_ok and rep.stable
    assert rep.damping_bound == pytest.approx(180.0)
    assert rep.rho_elastic <= 1 + 1e-10
    d = rep.to_dict()
    assert d["stable"] is True and d["damping_bound"] == pytest.approx(180.0)
    assert "STABLE" in rep.to_text()


def test_report_overdamped_flagged():
    rep = stability_report(OscillatorParams(m=1.0, a=1 / 225, c=40.0), 0.02)
    assert not rep.underdamped and not rep.stable
    assert any("not under-damped" in v for v in rep.verdicts)
    assert rep.rho_plastic is None and rep.damping_bound_ok is None


def test_report_bound_violation():
    rep = stability_report(OscillatorParams(m=1.0, a=1 / 225, c=40.0, fy=0.27, eta=50.0), 0.02)
    assert rep.damping_bound_ok is False
    assert any("plastic damping bound fails" in v for v in rep.verdicts)


def test_residuals_clean_and_corrupted():
    rec = ForcingRecord(AnalyticSine(1.0, 15.0, 5.0), scale=0.2)
    res = simulate(ELASTIC, TimeGrid(0.02, 400), rec)
    motion, velocity = equivalence_residuals(res, ELASTIC)
    assert motion.max() <= 1e-10 and velocity.max() <= 1e-10
    states = list(res.states)
    s = states[200]
    states[200] = MixedState(s.u * 1.001, s.p_hat, s.j)
    bad = dataclasses.replace(res, states=tuple(states))
    motion, velocity = equivalence_residuals(bad, ELASTIC)
    assert velocity[199] > 1e-6 and velocity[200] > 1e-6


def test_residuals_on_elastic_viscoplastic_run():
    rec = ForcingRecord(AnalyticSine(1.0, 15.0, 5.0), scale=0.01)
    res = simulate(VISCO, TimeGrid(0.02, 300), rec)
    assert all(b.value == "Elastic" for b in res.branch_labels)
    motion, velocity = equivalence_residuals(res, VISCO)
    assert motion.max() <= 1e-10 and velocity.max() <= 1e-10
