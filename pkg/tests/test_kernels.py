"""Variance-profile kernels: construction, structure storage, multi-step routes."""

import numpy as np
import pytest

from markovband._util import FeasibilityError, ValidationError
from markovband.kernels import (
    DENSE_CAP,
    ProfileSpec,
    cached_chain,
    export_kernel_csv,
    hankel_step,
    n_step_fft,
    n_step_power,
    wegner_block_kernel,
)

from oracles import dense_kernel_power


# ---------------------------------------------------------------- specs


def test_profile_spec_rejects_bad_parameters():
    with pytest.raises(ValidationError):
        ProfileSpec.alpha_stable(0.0, 64, 8)
    with pytest.raises(ValidationError):
        ProfileSpec.alpha_stable(2.5, 64, 8)
    with pytest.raises(ValidationError):
        ProfileSpec.alpha_stable(2.0, 64, 40)  # W > L/2
    with pytest.raises(ValidationError):
        ProfileSpec.alpha_stable(2.0, 1, 1)
    with pytest.raises(ValidationError):
        ProfileSpec.power_law(1.0, 64, 8)  # needs T > d
    with pytest.raises(ValidationError):
        ProfileSpec.truncated_gaussian(0.0, 64, 8)
    with pytest.raises(ValidationError):
        ProfileSpec.wegner(8, 1, 3, 1.0)  # lam must stay below 1
    with pytest.raises(ValidationError):
        ProfileSpec.interpolated(ProfileSpec.flat(16), 1.5)


def test_profile_spec_json_round_trip():
    specs = [
        ProfileSpec.alpha_stable(1.5, 64, 8),
        ProfileSpec.power_law(4.0, 64, 8, scale=2.0),
        ProfileSpec.truncated_gaussian(1.0, 32, 8),
        ProfileSpec.tabulated([1.0, 0.5, 0.25, 0.5], 4),
        ProfileSpec.wegner(8, 1, 3, 0.1),
        ProfileSpec.hankel(ProfileSpec.alpha_stable(2.0, 16, 4), 3),
        ProfileSpec.interpolated(ProfileSpec.flat(16), 0.25),
    ]
    for spec in specs:
        wire = spec.to_jsonable()
        again = ProfileSpec.from_jsonable(wire)
        assert again == spec
        assert again.to_jsonable() == wire


def test_profile_spec_from_jsonable_is_strict():
    wire = ProfileSpec.alpha_stable(2.0, 64, 8).to_jsonable()
    with pytest.raises(ValidationError):
        ProfileSpec.from_jsonable({**wire, "extra": 1})
    trimmed = dict(wire)
    del trimmed["W"]
    with pytest.raises(ValidationError):
        ProfileSpec.from_jsonable(trimmed)


# ---------------------------------------------------------------- chain structure


@pytest.mark.parametrize(
    "spec",
    [
        ProfileSpec.alpha_stable(2.0, 32, 8),
        ProfileSpec.alpha_stable(1.2, 32, 8),
        ProfileSpec.power_law(4.0, 32, 8),
        ProfileSpec.truncated_gaussian(1.0, 32, 8),
        ProfileSpec.flat(32),
        ProfileSpec.interpolated(ProfileSpec.alpha_stable(2.0, 32, 8), 0.3),
    ],
    ids=lambda s: s.kind,
)
def test_translation_invariant_chains_are_stochastic_and_symmetric(spec):
    chain = cached_chain(spec)
    assert chain.structure == "translation_invariant"
    assert chain.n_states == 32
    assert np.all(chain.row >= 0.0)
    assert abs(chain.row.sum() - 1.0) <= 1e-12
    m = chain.matrix()
    assert np.allclose(m, m.T, atol=1e-14)
    assert np.max(np.abs(m.sum(axis=1) - 1.0)) <= 1e-12


def test_flat_profile_is_uniform():
    chain = cached_chain(ProfileSpec.flat(16))
    assert np.max(np.abs(chain.row - 1.0 / 16.0)) <= 1e-15


def test_hankel_chain_is_reflective():
    base = ProfileSpec.alpha_stable(2.0, 16, 4)
    chain = cached_chain(ProfileSpec.hankel(base, 3))
    assert chain.structure == "reflective"
    assert chain.x0 == 3
    m = chain.matrix()
    assert np.allclose(m, m.T, atol=1e-14)
    assert np.max(np.abs(m.sum(axis=1) - 1.0)) <= 1e-12


def test_wegner_chain_is_block_structured():
    D, M = 8, 3
    chain = cached_chain(ProfileSpec.wegner(D, 1, M, 0.1))
    assert chain.structure == "block"
    assert chain.block_size == M
    assert chain.n_states == D * M
    assert chain.reduced.n_states == D
    m = chain.matrix()
    assert np.allclose(m, m.T, atol=1e-14)
    assert np.max(np.abs(m.sum(axis=1) - 1.0)) <= 1e-12


def test_interpolated_chain_mixes_toward_uniform():
    base = ProfileSpec.alpha_stable(2.0, 16, 4)
    lam = 0.25
    mixed = cached_chain(ProfileSpec.interpolated(base, lam)).matrix()
    expected = (1.0 - lam) * cached_chain(base).matrix() + lam * np.ones((16, 16)) / 16.0
    assert np.max(np.abs(mixed - expected)) <= 1e-15


def test_cached_chain_returns_the_same_object():
    spec = ProfileSpec.alpha_stable(2.0, 64, 8)
    assert cached_chain(spec) is cached_chain(ProfileSpec.alpha_stable(2.0, 64, 8))


def test_row_of_matches_dense_row():
    chain = cached_chain(ProfileSpec.hankel(ProfileSpec.alpha_stable(2.0, 16, 4), 5))
    m = chain.matrix()
    for x in (0, 3, 11):
        assert np.allclose(chain.row_of(x), m[x], atol=1e-15)


# ---------------------------------------------------------------- multi-step


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_n_step_fft_matches_dense_power(n):
    chain = cached_chain(ProfileSpec.alpha_stable(1.5, 48, 8))
    row = n_step_fft(chain, n)
    dense = dense_kernel_power(chain.matrix(), n)[0]
    assert np.max(np.abs(row - dense)) <= 1e-12


def test_n_step_power_matches_dense_power_on_reflective_chain():
    chain = cached_chain(ProfileSpec.hankel(ProfileSpec.alpha_stable(2.0, 24, 6), 7))
    dense = dense_kernel_power(chain.matrix(), 5)
    for x in (0, 7, 13):
        assert np.max(np.abs(n_step_power(chain, 5, x) - dense[x])) <= 1e-12


def test_wegner_block_kernel_aggregates_the_dense_power():
    D, M, lam, n = 6, 3, 0.2, 4
    table = wegner_block_kernel(D, 1, lam, n)
    assert table.shape == (D,)
    P = dense_kernel_power(cached_chain(ProfileSpec.wegner(D, 1, M, lam)).matrix(), n)
    agg = np.array([P[0, k * M:(k + 1) * M].sum() for k in range(D)])
    assert np.max(np.abs(table - agg)) <= 1e-13
    assert abs(table.sum() - 1.0) <= 1e-12


def test_wegner_block_kernel_two_dimensional():
    table = wegner_block_kernel(4, 2, 0.05, 3)
    assert table.shape == (4, 4)
    assert abs(table.sum() - 1.0) <= 1e-12
    # symmetric under coordinate swap and reflection
    assert np.max(np.abs(table - table.T)) <= 1e-14
    assert np.max(np.abs(table - np.roll(table[::-1, ::-1], (1, 1), (0, 1)))) <= 1e-14


def test_hankel_step_center_alternates_with_parity():
    base = ProfileSpec.alpha_stable(2.0, 64, 8)
    x0, x = 4, 20
    chain = cached_chain(ProfileSpec.hankel(base, x0))
    even = hankel_step(chain, 6, x)
    odd = hankel_step(chain, 7, x)
    assert even.center == x
    assert odd.center == (x0 - x) % 64
    assert abs(even.row.sum() - 1.0) <= 1e-12
    dense = dense_kernel_power(chain.matrix(), 6)
    assert np.max(np.abs(even.row - dense[x])) <= 1e-12


# ---------------------------------------------------------------- limits, export


def test_matrix_is_refused_beyond_the_dense_cap():
    big = cached_chain(ProfileSpec.alpha_stable(2.0, 2 * DENSE_CAP, 16))
    with pytest.raises(FeasibilityError):
        big.matrix()
    # structured routes still work at that size
    row = n_step_fft(big, 3)
    assert abs(row.sum() - 1.0) <= 1e-10


def test_export_kernel_csv_round_trips(tmp_path):
    spec = ProfileSpec.alpha_stable(2.0, 16, 4)
    chain = cached_chain(spec)
    path = tmp_path / "kernel.csv"
    export_kernel_csv(chain, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,p"
    assert len(lines) == 1 + 16 * 16
    m = chain.matrix()
    for line in lines[1:]:
        x, y, p = line.split(",")
        assert abs(float(p) - m[int(x), int(y)]) <= 1e-15


def test_export_kernel_csv_respects_cap(tmp_path):
    chain = cached_chain(ProfileSpec.alpha_stable(2.0, 64, 8))
    with pytest.raises(FeasibilityError):
        export_kernel_csv(chain, str(tmp_path / "refused.csv"), cap=32)
