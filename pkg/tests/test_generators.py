"""Tests for the synthetic instance families."""

import numpy as np
import pytest

from oracles import brute_force_opt
from subsketch.errors import ConfigurationError
from subsketch.generators import (
    GeneratorSpec,
    geometric,
    log_uniform,
    make_instance,
    one_giant,
    parse_generator_spec,
    two_point,
    two_point_exact_opt,
    uniform,
)


def test_uniform_bounds():
    inst = uniform(500, seed=1, low=0.25, high=4.0)
    assert inst.n == 500
    assert inst.processing_times.min() >= 0.25
    assert inst.processing_times.max() <= 4.0
    with pytest.raises(ConfigurationError):
        uniform(5, low=0.0)
    with pytest.raises(ConfigurationError):
        uniform(5, low=2.0, high=1.0)


def test_two_point_exact_split():
    inst = two_point(10, seed=3, low=1.0, high=7.0, high_fraction=0.3)
    times = inst.processing_times
    assert sorted(set(times.tolist())) == [1.0, 7.0]
    assert int((times == 7.0).sum()) == 3
    # the seed only permutes; the multiset is fixed
    other = two_point(10, seed=99, low=1.0, high=7.0, high_fraction=0.3)
    assert np.array_equal(np.sort(times), np.sort(other.processing_times))

    with pytest.raises(ConfigurationError):
        two_point(10, high_fraction=0.0)
    with pytest.raises(ConfigurationError):
        two_point(10, high_fraction=0.05)  # rounds to zero high jobs
    with pytest.raises(ConfigurationError):
        two_point(10, low=5.0, high=5.0)


def test_two_point_exact_opt_matches_brute_force():
    inst = two_point(8, seed=0)
    closed = two_point_exact_opt(8, 2)
    assert closed == 202.0
    assert brute_force_opt(inst.processing_times, 2) == pytest.approx(closed)

    got = two_point_exact_opt(12, 3, low=2.0, high=11.0, high_fraction=0.5)
    assert got == pytest.approx((6 * 11.0 + 6 * 2.0) / 3)
    inst = two_point(12, seed=5, low=2.0, high=11.0, high_fraction=0.5)
    assert brute_force_opt(inst.processing_times, 3) == pytest.approx(got)

    with pytest.raises(ConfigurationError):
        two_point_exact_opt(10, 4)  # 5 high jobs do not split over 4 machines


def test_log_uniform_bounds():
    inst = log_uniform(400, seed=2, low=2.0, high=32.0)
    assert inst.processing_times.min() >= 2.0
    assert inst.processing_times.max() <= 32.0
    with pytest.raises(ConfigurationError):
        log_uniform(5, low=0.0, high=1.0)


def test_one_giant():
    inst = one_giant(100, seed=4)
    times = inst.processing_times
    assert times.max() == 100.0
    assert int((times == 1.0).sum()) == 99
    assert inst.total == pytest.approx(199.0)

    custom = one_giant(10, seed=0, small=2.0, giant=50.0)
    assert custom.max_time == 50.0
    assert custom.total == pytest.approx(9 * 2.0 + 50.0)

    with pytest.raises(ConfigurationError):
        one_giant(1)
    with pytest.raises(ConfigurationError):
        one_giant(10, small=3.0, giant=3.0)


def test_geometric_ladder():
    inst = geometric(300, seed=7, ratio=0.5, levels=4)
    ladder = {0.5**k for k in range(4)}
    assert set(inst.processing_times.tolist()) <= ladder
    # CLI parameters arrive as floats; the level count must accept that
    coerced = geometric(300, seed=7, ratio=0.5, levels=4.0)
    assert np.array_equal(coerced.processing_times, inst.processing_times)

    with pytest.raises(ConfigurationError):
        geometric(10, ratio=1.0)
    with pytest.raises(ConfigurationError):
        geometric(10, levels=0)


def test_generator_spec_round_trip():
    spec = parse_generator_spec("geometric:50:ratio=0.5,levels=4", seed=11)
    assert spec == GeneratorSpec("geometric", 50, seed=11, params={"ratio": 0.5, "levels": 4.0})
    inst = make_instance(spec)
    assert inst.n == 50
    assert set(inst.processing_times.tolist()) <= {0.5**k for k in range(4)}

    plain = parse_generator_spec("uniform:12")
    assert plain == GeneratorSpec("uniform", 12)
    assert make_instance(plain).n == 12


def test_generator_spec_rejects_garbage():
    for text in ("uniform", "uniform:x", "uniform:5:lowhigh", "uniform:5:low=abc", "nope:5"):
        with pytest.raises(ConfigurationError):
            parse_generator_spec(text)
    with pytest.raises(ConfigurationError):
        GeneratorSpec("uniform", 0)


def test_same_seed_same_instance():
    for family in (uniform, log_uniform, geometric):
        a = family(64, seed=13)
        b = family(64, seed=13)
        c = family(64, seed=14)
        assert np.array_equal(a.processing_times, b.processing_times)
        assert not np.array_equal(a.processing_times, c.processing_times)
