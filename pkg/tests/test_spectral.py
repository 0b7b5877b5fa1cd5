"""Tests for spectral observables and their inequality checks."""

from __future__ import annotations

import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from acstab.const import CheckKey
from acstab.exceptions import ConfigError, DomainError
from acstab.green import free_fixed_point, init_pool, recurse_finite, resolvent_column
from acstab.models import (
    DensityCurve,
    DisorderSpec,
    LadderSettings,
    PoolSettings,
    PotentialSpec,
)
from acstab.spectral import (
    PoolTask,
    ac_density,
    ac_measure,
    alpha_width,
    bound_report,
    current_deficit,
    default_threshold,
    density_curve,
    energy_averaged_lyapunov,
    equilibrated_pool,
    fluctuation_bound_check,
    free_density_curve,
    harmonic_mean_value,
    jensen_boost_check,
    l1_density_distance,
    log_current_check,
    lyapunov,
    pool_sweep,
)
from acstab.tree import build_instance


def test_bound_report_direction():
    upper = bound_report("x", 1.0, 2.0, 0.0)
    assert upper.passed
    assert upper.slack == 1.0
    assert not bound_report("x", 1.0, 2.0, 0.0, lower=False).passed
    assert bound_report("x", 1.0 + 1e-13, 1.0, 0.0).passed
    assert bound_report("x", 1.2, 1.0, 0.1).passed
    assert not bound_report("x", 1.4, 1.0, 0.1).passed


def test_alpha_width_of_two_values():
    width = alpha_width([1, 1, 1, 1, 2, 2, 2, 2], 0.25)
    assert (width.xi_minus, width.xi_plus, width.delta) == (1.0, 2.0, 0.5)


@given(
    scale=st.floats(min_value=1e-3, max_value=1e3),
    alpha=st.floats(min_value=0.01, max_value=0.5),
)
def test_alpha_width_is_scale_invariant(scale, alpha):
    sample = np.random.default_rng(1).uniform(0.5, 3.0, 200)
    base = alpha_width(sample, alpha).delta
    assert alpha_width(scale * sample, alpha).delta == pytest.approx(base, abs=1e-12)
    assert 0 <= base < 1


@pytest.mark.parametrize(
    ("samples", "alpha"), [([1.0, 2.0], 0.0), ([1.0, 2.0], 0.6), ([], 0.2), ([0.0, 1.0], 0.2)]
)
def test_alpha_width_domain(samples, alpha):
    with pytest.raises(DomainError):
        alpha_width(samples, alpha)


def test_jensen_boost_example():
    report = jensen_boost_check([(1, 1), (1, 2), (2, 1), (2, 2)], 0.25, 1.0)
    assert report.check == CheckKey.JENSEN_BOOST
    assert report.slack == pytest.approx(0.0255395, abs=1e-6)
    assert report.passed


@given(
    tuples=st.lists(
        st.tuples(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10)),
        min_size=4,
        max_size=40,
    )
)
def test_jensen_boost_left_side_dominates_mean_log(tuples):
    report = jensen_boost_check(tuples, 0.25, 1.0)
    assert report.lhs >= np.log(np.asarray(tuples)).mean() - 1e-12
    assert report.rhs >= np.log(np.asarray(tuples)).mean() - 1e-12


def test_jensen_boost_rejects_bad_input():
    with pytest.raises(DomainError):
        jensen_boost_check([], 0.25, 1.0)
    with pytest.raises(DomainError):
        jensen_boost_check([(1, 2)], 0.25, 0.0)
    with pytest.raises(DomainError):
        jensen_boost_check([1.0, 2.0], 0.25, 1.0)


def test_free_lyapunov_outside_the_band():
    pool = init_pool(2, complex(3, 1e-9), size=1000)
    estimate = lyapunov(pool, 2)
    assert estimate.gamma == pytest.approx(0.5 * math.log(2), abs=1e-6)
    assert estimate.stderr == pytest.approx(0.0, abs=1e-12)


def test_free_lyapunov_vanishes_inside_the_band():
    pool = init_pool(2, complex(1, 1e-9), size=1000)
    assert lyapunov(pool, 2).gamma == pytest.approx(0.0, abs=1e-6)


def test_free_pool_density():
    pool = init_pool(2, complex(0, 1e-9), size=1000)
    assert ac_density(pool) == pytest.approx(1 / (math.pi * math.sqrt(2)), abs=1e-6)


def test_free_pool_sweep(small_pool):
    summaries = pool_sweep([0.0, 3.0], 2, DisorderSpec(), PotentialSpec(), 1e-9, small_pool, 3)
    assert [summary.energy for summary in summaries] == [0.0, 3.0]
    assert summaries[0].mean_im == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    assert summaries[1].lyapunov.gamma == pytest.approx(0.346574, abs=1e-6)


def test_pool_sweep_is_reproducible(small_pool, uniform_disorder):
    first = pool_sweep([-0.5, 0.5], 2, uniform_disorder, PotentialSpec(), 0.01, small_pool, 8)
    second = pool_sweep([-0.5, 0.5], 2, uniform_disorder, PotentialSpec(), 0.01, small_pool, 8)
    assert first == second
    other = pool_sweep([-0.5, 0.5], 2, uniform_disorder, PotentialSpec(), 0.01, small_pool, 9)
    assert other != first


def test_ladder_reaches_the_floor(small_pool):
    task = PoolTask(
        branching=2,
        disorder=DisorderSpec(strength=0.3),
        potential=PotentialSpec(),
        energy=0.5,
        eta=1e-3,
        pool=small_pool,
        seed=1,
        ladder=LadderSettings(eta0=0.1, eta_min=0.0125, tol=1e-15),
    )
    pool, eta = equilibrated_pool(task)
    assert eta == 0.0125
    assert np.all(pool.samples.imag > 0)


def test_fluctuation_reports(small_pool, uniform_disorder):
    task = PoolTask(2, uniform_disorder, PotentialSpec(), 0.3, 0.01, small_pool, 2)
    pool, _ = equilibrated_pool(task)
    flu1, flu2 = fluctuation_bound_check(pool, 0.25, 1.0, 2)
    assert (flu1.check, flu2.check) == (CheckKey.FLU1, CheckKey.FLU2)
    assert flu1.lhs >= 0
    assert flu2.lhs >= 0


def test_log_current_upper_bound_is_exact(small_pool, uniform_disorder):
    task = PoolTask(2, uniform_disorder, PotentialSpec(), -0.7, 0.01, small_pool, 5)
    pool, _ = equilibrated_pool(task)
    report = log_current_check(pool, 2, uniform_disorder, complex(-0.7, 0.01))
    assert report.check == CheckKey.LOG_CURRENT
    assert report.lhs <= report.rhs


def test_log_current_requires_eta(small_pool):
    pool = init_pool(2, 1j, size=small_pool.size)
    with pytest.raises(DomainError):
        log_current_check(pool, 2, DisorderSpec(), 0.5)


def test_current_deficit_matches_absorption(binary_tree, uniform_disorder):
    instance = build_instance(binary_tree, uniform_disorder, PotentialSpec(), seed=17)
    z = complex(0.3, 0.01)
    report = current_deficit(resolvent_column(instance, z), recurse_finite(instance, z, 0j))
    assert report.passed
    assert report.skipped == ()
    assert np.allclose(report.deficits, report.expected, atol=1e-10 * report.scale)


def test_free_density_curve():
    curve = free_density_curve(2, np.array([0.0, 3.0]))
    assert curve.density[0] == pytest.approx(0.225079, abs=1e-6)
    assert curve.density[1] == 0.0


def test_pooled_free_density_recovers_the_band():
    energies = np.linspace(-3.5, 3.5, 400)
    curve = density_curve(
        energies, 2, DisorderSpec(), PotentialSpec(), 1e-3, PoolSettings(1000, 1, 1), seed=1
    )
    support = energies[curve.density > default_threshold(2)]
    assert support[0] == pytest.approx(-2 * math.sqrt(2), abs=0.05)
    assert support[-1] == pytest.approx(2 * math.sqrt(2), abs=0.05)
    assert np.interp(0.0, energies, curve.density) == pytest.approx(0.225079, abs=2e-2)


def test_free_ac_measure_is_the_band():
    curve = free_density_curve(2, np.linspace(-4, 4, 801))
    assert ac_measure(curve, default_threshold(2)) == pytest.approx(4 * math.sqrt(2), abs=0.05)
    assert ac_measure(curve, default_threshold(2), (0, 4)) == pytest.approx(
        2 * math.sqrt(2), abs=0.05
    )
    with pytest.raises(DomainError):
        ac_measure(curve, 0.0)


def test_l1_distance():
    energies = np.linspace(-1, 1, 21)
    free = free_density_curve(2, energies)
    shifted = DensityCurve(
        energies=energies,
        eta=0.0,
        strength=0.1,
        mean_im=free.mean_im + math.pi,
        stderr=np.zeros(21),
    )
    assert l1_density_distance(free, free, (-1, 1)) == 0.0
    assert l1_density_distance(shifted, free, (-1, 1)) == pytest.approx(2.0)
    with pytest.raises(ConfigError):
        l1_density_distance(free_density_curve(2, energies[:-1]), free, (-1, 1))


def test_harmonic_mean_value():
    def im_gamma(z: complex) -> float:
        return free_fixed_point(2, z).imag

    circle, centre = harmonic_mean_value(im_gamma, complex(0.5, 0.5), 0.2)
    assert abs(circle - centre) < 1e-8
    with pytest.raises(DomainError):
        harmonic_mean_value(im_gamma, complex(0.5, 0.1), 0.2)


def test_energy_averaged_lyapunov():
    energies = np.linspace(-2, 2, 41)
    assert energy_averaged_lyapunov(energies, np.ones(41), (-1, 1)) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        energy_averaged_lyapunov(energies, np.ones(41), (5, 6))
