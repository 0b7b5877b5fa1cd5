"""Tests for the verify checks."""

from __future__ import annotations

import numpy as np
import pytest

from acstab.checks import (
    CHECKS,
    RADIAL_STREAM,
    TUPLE_STREAM,
    VerifyContext,
    _combine,
    _within,
    resolve_checks,
    run_checks,
)
from acstab.config import from_dict
from acstab.const import CheckKey, ExitCode
from acstab.exceptions import ConfigError
from acstab.helpers import side_stream
from acstab.models import CheckReport

CHEAP_CHECKS = [
    CheckKey.FREE_FIXED_POINT,
    CheckKey.RADIAL_IDENTITY,
    CheckKey.QP_RADIAL_IDENTITY,
    CheckKey.CURRENT_DEFICIT,
    CheckKey.HARMONICITY,
]


def test_every_check_is_described_once():
    keys = [description.key for description in CHECKS]
    assert sorted(keys) == sorted(CheckKey)
    assert all(description.summary for description in CHECKS)


def test_resolve_checks_keeps_order():
    names = [CheckKey.HARMONICITY, CheckKey.FLU1]
    assert [description.key for description in resolve_checks(names)] == names


def test_resolve_checks_rejects_unknown_names():
    with pytest.raises(ConfigError) as err:
        resolve_checks(["flu3"])
    assert err.value.translation_key == "unknown_check"
    assert err.value.exit_code == ExitCode.CONFIG_ERROR


def test_combine_reports_the_worst_failure():
    good = _within("x", 0.1, 1.0)
    bad = _within("x", 2.0, 1.0)
    worse = _within("x", 5.0, 1.0)
    combined = _combine("named", [good, bad, worse])
    assert combined.check == "named"
    assert not combined.passed
    assert combined.slack == -4.0
    assert _combine("named", [good, _within("x", 0.5, 1.0)]) == CheckReport(
        check="named", lhs=0.5, rhs=1.0, slack=0.5, stderr=0.0, passed=True
    )


def test_within_is_strict():
    assert not _within("x", 1.0, 1.0).passed
    assert _within("x", 0.0, 1e-300).passed


def test_cheap_checks_pass(raw_config):
    reports = run_checks(from_dict(raw_config), names=CHEAP_CHECKS)
    assert [report.check for report in reports] == CHEAP_CHECKS
    failed = [report for report in reports if not report.passed]
    assert not failed


def test_current_deficit_with_disorder(raw_config):
    config = from_dict(raw_config | {"disorder": {"family": "two-point", "strength": 0.4}})
    (report,) = run_checks(config, names=[CheckKey.CURRENT_DEFICIT])
    assert report.passed
    assert report.lhs < report.rhs


def test_quantum_graph_bands(raw_config):
    (report,) = run_checks(from_dict(raw_config), names=[CheckKey.QGRAPH_BANDS])
    assert report.passed


def test_verify_context_energies(raw_config):
    context = VerifyContext(from_dict(raw_config))
    assert context.centre_energy == 0.0
    assert len(context.joint_energies) == 5
    outside = VerifyContext(from_dict(raw_config | {"grid": {"e_min": 2.0, "e_max": 3.0}}))
    assert len(outside.joint_energies) == 41


@pytest.mark.slow
def test_pool_checks_pass(raw_config):
    config = from_dict(
        raw_config
        | {
            "disorder": {"strength": 0.3},
            "grid": {"e_min": -1.0, "e_max": 1.0, "points": 3, "eta": 0.01, "lambdas": [0.3]},
            "pool": {"size": 20000, "burn_in": 50, "sweeps": 50},
        }
    )
    names = [CheckKey.JENSEN_BOOST, CheckKey.FLU1, CheckKey.FLU2, CheckKey.LOG_CURRENT]
    reports = run_checks(config, names=names)
    assert all(report.passed for report in reports)


@pytest.mark.slow
def test_equivalence_check(raw_config):
    config = from_dict(raw_config | {"pool": {"size": 5000, "burn_in": 30, "sweeps": 30}})
    (report,) = run_checks(config, names=[CheckKey.EQUIVALENCE])
    assert report.passed


@pytest.mark.slow
def test_free_lyapunov_check(raw_config):
    config = from_dict(raw_config | {"grid": {"ladder": {"eta0": 1e-3, "eta_min": 1e-6}}})
    (report,) = run_checks(config, names=[CheckKey.LYAPUNOV_FREE])
    assert report.passed


def test_radial_instability_ignores_configured_family(raw_config):
    reports = [
        run_checks(
            from_dict(raw_config | {"disorder": {"family": family, "strength": 0.2}}),
            names=[CheckKey.RADIAL_INSTABILITY],
        )[0]
        for family in ("uniform", "two-point")
    ]
    assert reports[0] == reports[1]


def test_auxiliary_streams_are_disjoint_from_pool_streams():
    first = side_stream(5, TUPLE_STREAM).random(8)
    assert np.array_equal(first, side_stream(5, TUPLE_STREAM).random(8))
    assert not np.array_equal(first, np.random.default_rng([5, TUPLE_STREAM]).random(8))
    assert not np.array_equal(first, side_stream(5, RADIAL_STREAM).random(8))


@pytest.mark.slow
def test_radial_instability_check(raw_config):
    config = from_dict(
        raw_config
        | {
            "disorder": {"family": "uniform", "strength": 0.1},
            "pool": {"size": 5000, "burn_in": 50, "sweeps": 50},
        }
    )
    (report,) = run_checks(config, names=[CheckKey.RADIAL_INSTABILITY])
    assert report.passed


@pytest.mark.slow
def test_weak_disorder_ladder_checks(raw_config):
    config = from_dict(raw_config | {"pool": {"size": 2000, "burn_in": 20, "sweeps": 20}})
    names = [CheckKey.L1_CONVERGENCE, CheckKey.ENERGY_AVERAGED_LYAPUNOV]
    reports = run_checks(config, names=names)
    assert [report.check for report in reports] == names
    assert all(report.passed for report in reports)


@pytest.mark.slow
def test_ac_measure_stability_check(raw_config):
    config = from_dict(
        raw_config
        | {
            "grid": {"e_min": -3.0, "e_max": 3.0, "points": 25, "eta": 0.01, "lambdas": [0.05]},
            "pool": {"size": 5000, "burn_in": 30, "sweeps": 30},
        }
    )
    (report,) = run_checks(config, names=[CheckKey.AC_MEASURE_STABILITY])
    assert report.passed


@pytest.mark.slow
def test_quantum_graph_stability_check(raw_config):
    config = from_dict(raw_config | {"pool": {"size": 2000, "burn_in": 20, "sweeps": 20}})
    (report,) = run_checks(config, names=[CheckKey.QGRAPH_STABILITY])
    assert report.passed
