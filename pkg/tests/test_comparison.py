"""Chain-pair diagnostics: envelopes, difference tables, hypothesis verdicts."""

import json

import numpy as np
import pytest

from markovband._util import FeasibilityError, ValidationError
from markovband.comparison import (
    HypothesisThresholds,
    avg_upper_bound_b,
    comparison_report,
    l1_linf_differences,
    lclt_residual,
    operator_norm,
)
from markovband.kernels import ProfileSpec, cached_chain, chain_from_dense

from oracles import dense_kernel_power


def _brute_tables(Pa, Pb, n):
    """Reference envelope / difference quantities from dense powers."""
    b, eps, delta = [], [], []
    cum = np.zeros_like(Pa)
    for i in range(1, n + 1):
        Qa = dense_kernel_power(Pa, i)
        Qb = dense_kernel_power(Pb, i)
        cum = cum + np.maximum(Qa, Qb)
        b.append(cum.max())
        diff = np.abs(Qa - Qb)
        eps.append(diff.sum(axis=1).max())
        delta.append(diff.max())
    return np.array(b), np.array(eps), np.array(delta)


def test_envelope_and_differences_match_brute_force():
    a = cached_chain(ProfileSpec.alpha_stable(2.0, 32, 8))
    c = cached_chain(ProfileSpec.truncated_gaussian(1.0, 32, 8))
    n = 6
    b_ref, eps_ref, delta_ref = _brute_tables(a.matrix(), c.matrix(), n)
    b = avg_upper_bound_b(a, c, n)
    tables = l1_linf_differences(a, c, n)
    assert np.max(np.abs(b - b_ref)) <= 1e-13
    assert np.max(np.abs(tables.eps - eps_ref)) <= 1e-13
    assert np.max(np.abs(tables.delta - delta_ref)) <= 1e-13
    assert np.max(np.abs(tables.eps_cum - np.cumsum(eps_ref))) <= 1e-12


def test_translation_invariant_and_dense_routes_agree():
    spec = ProfileSpec.alpha_stable(2.0, 64, 16)
    ti = cached_chain(spec)
    dense = chain_from_dense(ti.matrix())
    assert dense.structure == "dense"
    assert np.max(np.abs(avg_upper_bound_b(ti, ti, 4) - avg_upper_bound_b(dense, dense, 4))) <= 1e-14
    t_ti = l1_linf_differences(ti, ti, 4)
    t_de = l1_linf_differences(dense, dense, 4)
    assert np.max(np.abs(t_ti.eps - t_de.eps)) <= 1e-14


def test_same_chain_differences_vanish():
    a = cached_chain(ProfileSpec.power_law(4.0, 48, 12))
    tables = l1_linf_differences(a, a, 5)
    assert np.max(tables.eps) == 0.0
    assert np.max(tables.delta) == 0.0


def test_mismatched_state_spaces_are_rejected():
    a = cached_chain(ProfileSpec.flat(16))
    b = cached_chain(ProfileSpec.flat(32))
    with pytest.raises(ValidationError):
        avg_upper_bound_b(a, b, 3)


def test_dense_pair_cap_is_enforced():
    big = chain_from_dense(np.ones((8, 8)) / 8.0)
    with pytest.raises(FeasibilityError):
        avg_upper_bound_b(big, big, 2, cap=4)


# ---------------------------------------------------------------- report


def test_report_passes_in_the_comparable_regime():
    a = cached_chain(ProfileSpec.alpha_stable(2.0, 256, 64))
    rep = comparison_report(a, a, 4, theta=1.0)
    assert rep.verdicts == {
        "short_long_ratio": True,
        "delta_ratio": True,
        "n2_b": True,
        "non_gaussian": True,
        "spike": None,
    }


def test_report_failures_are_data_not_exceptions():
    # a narrow band at a long horizon breaks the n^2 b_n hypothesis
    a = cached_chain(ProfileSpec.alpha_stable(2.0, 64, 8))
    b = cached_chain(ProfileSpec.truncated_gaussian(1.0, 64, 8))
    rep = comparison_report(a, b, 8, theta=4.0)
    assert rep.verdicts["n2_b"] is False
    assert rep.n2_b > HypothesisThresholds().n2_b


def test_report_without_theta_leaves_the_hypothesis_open():
    a = cached_chain(ProfileSpec.alpha_stable(2.0, 64, 16))
    rep = comparison_report(a, a, 3)
    assert rep.non_gaussian is None
    assert rep.verdicts["non_gaussian"] is None


def test_report_spike_verdict():
    a = cached_chain(ProfileSpec.alpha_stable(2.0, 64, 16))
    tame = np.diag([1.0, 0.5])
    rep = comparison_report(a, a, 3, spikes=[tame])
    assert rep.spike_norms == (1.0,)
    assert rep.verdicts["spike"] is True
    wild = np.diag([5.0, 0.5])
    rep_wild = comparison_report(a, a, 3, spikes=[wild])
    assert rep_wild.verdicts["spike"] is False


def test_report_serializes_to_json():
    a = cached_chain(ProfileSpec.alpha_stable(2.0, 64, 16))
    rep = comparison_report(a, a, 3, theta=1.0)
    blob = json.loads(rep.to_json())
    assert blob["n"] == 3
    assert len(blob["b"]) == 3
    assert blob["verdicts"]["short_long_ratio"] is True


def test_report_csv_has_one_row_per_step(tmp_path):
    a = cached_chain(ProfileSpec.alpha_stable(2.0, 64, 16))
    rep = comparison_report(a, a, 5)
    path = tmp_path / "report.csv"
    rep.write_csv(str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "i,b,eps,delta"
    assert len(lines) == 6


def test_custom_thresholds_change_verdicts():
    a = cached_chain(ProfileSpec.alpha_stable(2.0, 64, 8))
    strict = HypothesisThresholds(n2_b=1e-9)
    rep = comparison_report(a, a, 2, thresholds=strict)
    assert rep.verdicts["n2_b"] is False


def test_operator_norm_routes():
    sym = np.array([[0.0, 2.0], [2.0, 0.0]])
    assert abs(operator_norm(sym) - 2.0) <= 1e-14
    asym = np.array([[0.0, 3.0], [0.0, 0.0]])
    assert abs(operator_norm(asym) - 3.0) <= 1e-14
    with pytest.raises(ValidationError):
        operator_norm(np.ones((2, 3)))


# ---------------------------------------------------------------- local CLT


def test_lclt_residual_is_tiny_for_a_wide_gaussian_band():
    chain = cached_chain(ProfileSpec.alpha_stable(2.0, 128, 16))
    res = lclt_residual(chain, 2.0, 32)
    assert res.residual <= 1e-12
    assert res.reference_bound == pytest.approx(32 * np.exp(-(16.0**2)), rel=1e-12)


def test_lclt_residual_detects_a_profile_mismatch():
    # comparing a heavy-tailed kernel against the wrong reference index
    chain = cached_chain(ProfileSpec.alpha_stable(1.2, 128, 16))
    res_wrong = lclt_residual(chain, 2.0, 8)
    res_right = lclt_residual(chain, 1.2, 8)
    assert res_right.residual < res_wrong.residual
    assert res_wrong.residual > 1e-6


def test_lclt_residual_needs_translation_invariance():
    chain = cached_chain(ProfileSpec.hankel(ProfileSpec.alpha_stable(2.0, 32, 8), 3))
    with pytest.raises(ValidationError):
        lclt_residual(chain, 2.0, 8)
