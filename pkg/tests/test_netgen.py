import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from interdep.dgp import make_characteristics
from interdep.errors import InputError, ParameterError
from interdep.netgen import (
    InteractionMatrix,
    NetworkParams,
    UnitCharacteristics,
    build_weights,
    row_normalize,
    spectral_radius,
    stability_margin,
)

from conftest import random_weights


def dense_radius(a):
    return np.abs(np.linalg.eigvals(a)).max()


def test_line_nearest_neighbour_ties_go_to_lower_index():
    chars = UnitCharacteristics([[0.0], [1.0], [2.0]], [[0.0], [0.0], [0.0]])
    w = build_weights(chars, NetworkParams(k=1, decay=0, row_normalize=True))
    np.testing.assert_array_equal(w.w, [[0, 1, 0], [1, 0, 0], [0, 1, 0]])


def test_mixed_distance_uses_econ_weight():
    # geographically unit 1 is nearest to 0, economically unit 2 is
    chars = UnitCharacteristics([[0.0], [1.0], [5.0]], [[0.0], [9.0], [0.5]])
    geo = build_weights(chars, NetworkParams(k=1, econ_weight=0.0))
    eco = build_weights(chars, NetworkParams(k=1, econ_weight=1.0))
    assert geo.w[0, 1] == 1 and eco.w[0, 2] == 1


def test_inverse_distance_weights_before_normalisation():
    chars = UnitCharacteristics([[0.0], [1.0], [3.0]], [[0.0]] * 3)
    w = build_weights(chars, NetworkParams(k=2, decay=1.0, row_normalize=False))
    np.testing.assert_allclose(w.w[0], [0, 1.0, 1 / 3])
    np.testing.assert_allclose(w.w[2], [1 / 3, 1 / 2, 0])


@pytest.mark.parametrize("seed", range(5))
def test_row_normalised_rows_sum_to_one(seed):
    chars = make_characteristics(40, seed=seed)
    w = build_weights(chars, NetworkParams(k=3, decay=1.5, econ_weight=0.4))
    np.testing.assert_allclose(w.w.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(np.diag(w.w) == 0) and np.all(w.w >= 0)
    assert np.all((w.w > 0).sum(axis=1) == 3)


def test_default_network_has_unit_radius(default_world):
    _, w = default_world
    assert not np.any(w.w.sum(axis=1) == 0)
    assert w.spectral_radius == pytest.approx(dense_radius(w.w), abs=1e-8)
    assert w.spectral_radius == pytest.approx(1.0, abs=1e-12)


def test_build_rejects_bad_inputs():
    chars = make_characteristics(5, seed=0)
    with pytest.raises(ParameterError):
        build_weights(chars, NetworkParams(k=5))
    with pytest.raises(InputError):
        UnitCharacteristics([[0.0], [np.nan]], [[0.0], [1.0]])
    with pytest.raises(ParameterError):
        NetworkParams(decay=-1)
    with pytest.raises(InputError):
        build_weights(UnitCharacteristics([[0.0], [0.0], [1.0]], [[0.0]] * 3),
                      NetworkParams(k=1, decay=1.0))


def test_row_normalize_examples(rng):
    np.testing.assert_array_equal(row_normalize(np.array([[0, 2], [3, 0.0]])), [[0, 1], [1, 0]])
    np.testing.assert_array_equal(row_normalize(np.zeros((3, 3))), np.zeros((3, 3)))
    w = random_weights(rng, 5, density=0.4)
    w[2] = 0.0
    out = row_normalize(w)
    sums = out.sum(axis=1)
    oracle = [0.0 if w[i].sum() == 0 else 1.0 for i in range(5)]
    np.testing.assert_allclose(sums, oracle, atol=1e-12)
    assert np.all(np.diag(out) == 0)
    with pytest.raises(InputError):
        row_normalize(np.array([[0, -1], [1, 0.0]]))


def test_spectral_radius_examples():
    assert spectral_radius(np.zeros((4, 4))) == 0.0
    assert spectral_radius(np.array([[0, 1], [1, 0.0]])) == pytest.approx(1.0, abs=1e-12)
    p = np.array([[0, 0.5, 0.5], [1, 0, 0], [0.2, 0.8, 0]])
    assert spectral_radius(p) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(30))
def test_spectral_radius_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 51))
    w = random_weights(rng, n, density=rng.uniform(0.05, 0.6))
    if seed % 3 == 0:
        w[rng.integers(n)] = 0.0  # isolated unit
    oracle = dense_radius(w)
    assert abs(spectral_radius(w) - oracle) <= 1e-8 * max(oracle, 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_spectral_radius_signed_matrix(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((12, 12))
    assert spectral_radius(a) == pytest.approx(dense_radius(a), rel=1e-8)


def test_stability_margin(default_world):
    _, w = default_world
    assert stability_margin(w, 0.0) == 1.0
    assert stability_margin(w, 0.4) == pytest.approx(0.6, abs=1e-12)
    assert stability_margin(w, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert stability_margin(w, -0.4) == pytest.approx(0.6, abs=1e-12)


def test_interaction_matrix_is_read_only():
    w = InteractionMatrix.from_array([[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        w.w[0, 1] = 2.0
    with pytest.raises(InputError):
        InteractionMatrix.from_array([[1, 0], [0, 0]])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(3, 20), k=st.integers(1, 2),
       ew=st.floats(0, 1), decay=st.sampled_from([0.0, 1.0, 2.0]))
def test_permutation_equivariance(seed, n, k, ew, decay):
    chars = make_characteristics(n, seed=seed)
    params = NetworkParams(k=k, decay=decay, econ_weight=ew)
    perm = np.random.default_rng(seed).permutation(n)
    w = build_weights(chars, params).w
    wp = build_weights(chars.permute(perm), params).w
    np.testing.assert_allclose(wp, w[np.ix_(perm, perm)], atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(4, 20), k=st.integers(1, 3))
def test_support_is_k_smallest_distances(seed, n, k):
    chars = make_characteristics(n, seed=seed)
    w = build_weights(chars, NetworkParams(k=k)).w
    dist = np.linalg.norm(chars.coords[:, None] - chars.coords[None], axis=-1)
    np.fill_diagonal(dist, np.inf)
    for i in range(n):
        linked = np.flatnonzero(w[i])
        kth = np.sort(dist[i])[k - 1]
        assert linked.size == k and np.all(dist[i, linked] <= kth)
