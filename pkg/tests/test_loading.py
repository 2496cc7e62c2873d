import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixedstep.loading import (
    AnalyticSine,
    EmptyRecord,
    ForcingRecord,
    Interpretation,
    MalformedLine,
    NonMonotonicTime,
    Sampled,
    format_record,
    parse_record,
    pre_initial_impulse,
    sample_forcing,
    truncate,
)
from mixedstep.model import TimeGrid


def test_parse_basic():
    rec = parse_record("0.0 0.0\n0.02 1.5")
    assert rec.kind == Sampled((0.0, 0.02), (0.0, 1.5))
    assert rec.scale == 1.0
    assert rec.interpretation is Interpretation.DIRECT_FORCE


def test_parse_comma_and_comments():
    rec = parse_record("# t, a\n\n0, 1\n0.5,2\n1.0 ,  -3e-1\n")
    assert rec.kind.times == (0.0, 0.5, 1.0)
    assert rec.kind.values == (1.0, 2.0, -0.3)


def test_duplicate_time():
    with pytest.raises(NonMonotonicTime) as err:
        parse_record("# header\n0 1\n0 2")
    assert err.value.line_no == 3


def test_empty():
    with pytest.raises(EmptyRecord):
        parse_record("")
    with pytest.raises(EmptyRecord):
        parse_record("# only a comment\n")


@pytest.mark.parametrize("text,line", [("0 1\nx 2", 2), ("0 1 2", 1), ("0 nan", 1), ("0", 1)])
def test_malformed(text, line):
    with pytest.raises(MalformedLine) as err:
        parse_record(text)
    assert err.value.line_no == line


def test_sine_first_step():
    rec = ForcingRecord(AnalyticSine(1.0, 15.0, 30.0), scale=0.2)
    f = sample_forcing(rec, TimeGrid(0.02, 10), m=1.0)
    assert f[0] == pytest.approx(0.2 * math.sin(0.3), rel=1e-15)


def test_sine_zero_after_duration():
    rec = ForcingRecord(AnalyticSine(1.0, 15.0, 30.0), scale=0.2)
    assert rec.kind(35.0) == 0.0
    f = sample_forcing(rec, TimeGrid(0.02, 2000), m=1.0)
    assert np.all(f[1501:] == 0.0)
    assert np.any(f[:1499] != 0.0)


def test_sampled_midpoint_and_outside():
    rec = ForcingRecord(Sampled((0.0, 1.0), (0.0, 2.0)))
    assert float(rec.kind(0.5)) == 1.0
    assert float(rec.kind(1.5)) == 0.0
    assert float(rec.kind(-0.1)) == 0.0


def test_ground_acceleration_sign_and_mass():
    rec = ForcingRecord(Sampled((0.0, 1.0), (1.0, 1.0)), scale=2.0,
                        interpretation=Interpretation.GROUND_ACCELERATION)
    f = sample_forcing(rec, TimeGrid(0.5, 2), m=3.0)
    assert f.tolist() == [-6.0, -6.0]


def test_pre_initial_impulse():
    assert pre_initial_impulse(parse_record("0 0\n1 1")) == 0.0
    assert pre_initial_impulse(ForcingRecord(AnalyticSine(1, 1, 1))) == 0.0
    assert pre_initial_impulse(ForcingRecord(AnalyticSine(1, 1, 1), pre_impulse=3.5)) == 3.5


def test_truncate():
    rec = truncate(parse_record("0 1\n1 1\n2 1\n3 1"), 1.5)
    assert rec.kind.times == (0.0, 1.0)
    sine = truncate(ForcingRecord(AnalyticSine(1, 1, 30)), 10)
    assert sine.kind.duration == 10


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@st.composite
def records(draw, n=8):
    steps = draw(st.lists(st.floats(min_value=1e-3, max_value=1.0), min_size=n, max_size=n))
    times = np.cumsum(steps) - steps[0]
    a = draw(st.lists(finite, min_size=n, max_size=n))
    b = draw(st.lists(finite, min_size=n, max_size=n))
    return times, np.array(a), np.array(b)


@given(records(), finite, finite)
def test_sampling_is_linear(rec, alpha, beta):
    times, a, b = rec
    g = TimeGrid(0.05, 40)
    fa = sample_forcing(ForcingRecord(Sampled.from_arrays(times, a)), g, 1.0)
    fb = sample_forcing(ForcingRecord(Sampled.from_arrays(times, b)), g, 1.0)
    fc = sample_forcing(ForcingRecord(Sampled.from_arrays(times, alpha * a + beta * b)), g, 1.0)
    scale = abs(alpha) * np.abs(fa).max(initial=0) + abs(beta) * np.abs(fb).max(initial=0)
    assert np.allclose(fc, alpha * fa + beta * fb, rtol=0, atol=1e-12 * max(scale, 1e-300) + 1e-300)


@given(records())
def test_roundtrip_bit_identical(rec):
    times, a, _ = rec
    original = ForcingRecord(Sampled.from_arrays(times, a))
    again = parse_record(format_record(original))
    assert again.kind.times == original.kind.times
    assert again.kind.values == original.kind.values
