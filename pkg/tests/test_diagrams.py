"""Ribbon diagram catalog, finite evaluation, bounds, scaling limits, spikes."""

import json
import math

import numpy as np
import pytest

from markovband._util import ValidationError
from markovband.comparison import avg_upper_bound_b
from markovband.diagrams import (
    Diagram,
    SpikeOperator,
    catalog_names,
    constraint_volume,
    diagram_function,
    diagram_upper_bound,
    lattice_constant_C,
    limiting_diagram_function,
    load_diagram,
    validate_diagram,
)
from markovband.kernels import ProfileSpec, cached_chain, chain_from_dense


# ---------------------------------------------------------------- catalog


def test_catalog_is_complete_and_valid():
    names = catalog_names()
    assert names == ("single_vertex", "self_loop", "theta_graph", "dumbbell", "two_face_bridge")
    for name in names:
        report = validate_diagram(load_diagram(name))
        assert report.valid, name
        assert report.violations == ()
        assert report.connected


def test_load_diagram_from_a_path(tmp_path):
    wire = json.loads(load_diagram("dumbbell").to_json())
    path = tmp_path / "copy.json"
    path.write_text(json.dumps(wire))
    copied = load_diagram(str(path))
    assert copied == load_diagram("dumbbell")


def test_load_diagram_rejects_dangling_edge_reference(tmp_path):
    blob = {
        "vertices": [{"id": "a", "marked": True}],
        "edges": [{"id": "e", "u": "a", "v": "a"}],
        "faces": [{"marked_vertex": "a", "edges": [{"id": "zz", "multiplicity": 2}]}],
    }
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(blob))
    with pytest.raises(ValidationError):
        load_diagram(str(path))


def test_validate_diagram_flags_low_degrees():
    wire = {
        "vertices": [{"id": "a", "marked": True}, {"id": "b"}],
        "edges": [{"id": "e", "u": "a", "v": "b"}],
        "faces": [{"marked_vertex": "a", "edges": [{"id": "e", "multiplicity": 2}]}],
    }
    report = validate_diagram(Diagram.from_jsonable(wire))
    assert not report.valid
    assert any("degree" in v for v in report.violations)


def test_unknown_catalog_name_is_rejected():
    with pytest.raises(ValidationError):
        load_diagram("moebius_strip")


# ---------------------------------------------------------------- finite evaluation


def test_single_vertex_on_any_chain_counts_states():
    d = load_diagram("single_vertex")
    for spec in (ProfileSpec.flat(64), ProfileSpec.alpha_stable(2.0, 48, 8)):
        chain = cached_chain(spec)
        assert diagram_function(d, chain, (8,)) == pytest.approx(chain.n_states)


def test_self_loop_on_the_flat_chain():
    # every multi-step probability is 1/N, leaving the composition count
    # n/2 of the face budget over the doubled edge, times N * (1/N)^2 * N
    d = load_diagram("self_loop")
    chain = cached_chain(ProfileSpec.flat(64))
    assert diagram_function(d, chain, (8,)) == pytest.approx(4.0)
    assert diagram_function(d, chain, (12,)) == pytest.approx(6.0)


def test_diagram_function_routes_agree_on_dense_chain():
    d = load_diagram("self_loop")
    ti = cached_chain(ProfileSpec.alpha_stable(2.0, 32, 8))
    dense = chain_from_dense(ti.matrix())
    for orders in ((6,), (10,)):
        assert diagram_function(d, ti, orders) == pytest.approx(
            diagram_function(d, dense, orders), rel=1e-12
        )


def test_diagram_function_wants_one_budget_per_face():
    d = load_diagram("dumbbell")  # three faces
    chain = cached_chain(ProfileSpec.flat(32))
    with pytest.raises(ValidationError):
        diagram_function(d, chain, (4,))


def test_diagram_function_with_a_spike_stays_finite():
    d = load_diagram("self_loop")
    chain = cached_chain(ProfileSpec.alpha_stable(2.0, 32, 8))
    spike = SpikeOperator(vectors=((1.0,),), eigenvalues=(1.5,), positions=(3,))
    plain = diagram_function(d, chain, (6,))
    spiked = diagram_function(d, chain, (6,), spike=spike)
    assert math.isfinite(spiked)
    assert spiked != plain


# ---------------------------------------------------------------- upper bound


@pytest.mark.parametrize("name", catalog_names())
def test_upper_bound_dominates_on_a_band_chain(name):
    d = load_diagram(name)
    chain = cached_chain(ProfileSpec.alpha_stable(2.0, 64, 8))
    n_faces = len(d.faces)
    for n in (4, 8):
        orders = (n,) * n_faces
        total = sum(orders)
        b_n = float(avg_upper_bound_b(chain, chain, total)[-1])
        value = diagram_function(d, chain, orders)
        bound = diagram_upper_bound(d, total, b_n, chain.n_states)
        assert value <= bound * (1.0 + 1e-12)


def test_upper_bound_closed_form():
    # N b^(|E|-|V|+1) n^(|V|-1) / (|V|-1)! for closed diagrams
    d = load_diagram("theta_graph")  # |V| = 3, |E| = 4
    n, b, N = 12, 0.05, 256
    expected = N * b ** (4 - 3 + 1) * n ** (3 - 1) / math.factorial(3 - 1)
    assert diagram_upper_bound(d, n, b, N) == pytest.approx(expected)


# ---------------------------------------------------------------- volumes, lattice


def test_constraint_volume_exact_and_mc_agree():
    d = load_diagram("self_loop")
    exact = constraint_volume(d, (1.5,))
    assert exact.method == "exact"
    assert exact.stderr == 0.0
    mc = constraint_volume(d, (1.5,), mc_samples=200_000, seed=4, force_mc=True)
    assert mc.method == "mc"
    assert abs(mc.value - exact.value) <= 5.0 * mc.stderr + 1e-3


def test_constraint_volume_budget_count_must_match():
    with pytest.raises(ValidationError):
        constraint_volume(load_diagram("self_loop"), (1.0, 2.0))


def test_lattice_constant_for_the_self_loop_is_one():
    lc = lattice_constant_C(load_diagram("self_loop"))
    assert lc.estimate == pytest.approx(1.0, abs=1e-12)
    assert lc.drift == pytest.approx(0.0, abs=1e-12)


def test_lattice_constant_reports_drift():
    lc = lattice_constant_C(load_diagram("theta_graph"), n_max=60)
    assert 0.9 < lc.estimate < 1.1
    assert lc.drift >= 0.0
    assert len(lc.orders) == len(lc.ratios)


# ---------------------------------------------------------------- scaling limits


def test_super_limit_of_the_self_loop_is_flat_one_half():
    d = load_diagram("self_loop")
    for t in (0.5, 1.0, 2.0, 3.0):
        est = limiting_diagram_function(d, "super", (t,))
        assert est.value == pytest.approx(0.5, rel=1e-12)
        assert est.stderr == 0.0
        assert est.regime == "super"


def test_sub_limit_matches_the_heat_kernel_form():
    d = load_diagram("self_loop")
    for t in (0.5, 1.0, 2.0):
        est = limiting_diagram_function(d, "sub", (t,), alpha=2.0)
        assert est.value == pytest.approx(1.0 / math.sqrt(math.pi * t), rel=1e-9)


def test_critical_limit_interpolates_between_regimes():
    d = load_diagram("self_loop")
    hi = limiting_diagram_function(d, "critical", (20.0 ** (-1.0 / 3.0) * 2.0,),
                                   alpha=2.0, gamma=20.0, mc_samples=200_000, seed=7)
    assert hi.value == pytest.approx(0.5, rel=0.05)
    lo = limiting_diagram_function(d, "critical", (2.0,), alpha=2.0, gamma=0.05,
                                   mc_samples=200_000, seed=8)
    sub = 1.0 / math.sqrt(math.pi * 2.0)
    assert 0.05 * lo.value == pytest.approx(sub, rel=0.1)


def test_critical_regime_requires_gamma():
    with pytest.raises(ValidationError):
        limiting_diagram_function(load_diagram("self_loop"), "critical", (1.0,))


def test_unknown_regime_is_rejected():
    with pytest.raises(ValidationError):
        limiting_diagram_function(load_diagram("self_loop"), "tricritical", (1.0,))


# ---------------------------------------------------------------- spikes


def test_spike_operator_round_trips_through_json():
    spike = SpikeOperator(vectors=((1.0,),), eigenvalues=(1.4,), positions=(3,))
    again = SpikeOperator.from_jsonable(spike.to_jsonable())
    assert again == spike


def test_spike_operator_validation():
    with pytest.raises(ValidationError):
        SpikeOperator(vectors=((1.0, 0.0), (1.0, 0.0)), eigenvalues=(1.0, 2.0),
                      positions=(0, 1))
    with pytest.raises(ValidationError):
        SpikeOperator(vectors=((1.0,),), eigenvalues=(1.0,), positions=(0, 0))
    with pytest.raises(ValidationError):
        SpikeOperator(vectors=((1.0,),), eigenvalues=(1.0,), tau=(0.5,), positions=(0,))
