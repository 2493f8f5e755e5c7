import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lpgoos import (ConfigurationError, DomainError, KernelSpec, LatentDistribution,
                    LatentSample, SparsityWarning, kernel_matrix, quadrant_labels,
                    read_edge_list, sample_adjacency, sample_graph, sample_latent,
                    sample_oos_connections, sample_oos_connections_batch, sparsity_schedule,
                    write_edge_list)


def _assert_hollow_symmetric(A):
    M = A.toarray()
    np.testing.assert_array_equal(M, M.T)
    assert not np.any(np.diag(M))
    assert set(np.unique(M)) <= {0, 1}


def test_point_cloud_verbatim():
    P = [[0.1, 0.2], [0.3, 0.4]]
    dist = LatentDistribution.point_cloud(P)
    for seed in (0, 7, 123):
        np.testing.assert_array_equal(sample_latent(dist, 2, seed), P)


def test_uniform_mean():
    X = sample_latent(LatentDistribution.uniform_box([0.0], [1.0]), 100_000, 3)
    assert abs(X.mean() - 0.5) < 0.01


def test_sampling_deterministic():
    dist = LatentDistribution.dirichlet([1, 2, 3])
    np.testing.assert_array_equal(sample_latent(dist, 50, 9), sample_latent(dist, 50, 9))
    assert not np.array_equal(sample_latent(dist, 50, 9), sample_latent(dist, 50, 10))


def test_dirichlet_drop_last_lands_in_simplex():
    X = sample_latent(LatentDistribution.dirichlet([1, 1, 1], drop_last=True), 500, 1)
    assert X.shape == (500, 2)
    assert np.all(X >= 0) and np.all(X.sum(axis=1) <= 1)


def test_mixture_moments():
    dist = LatentDistribution.gaussian_mixture([0.5, 0.5], [[1, 1], [-1, -1]], [np.eye(2)] * 2)
    X = sample_latent(dist, 40_000, 2)
    np.testing.assert_allclose(X.mean(axis=0), [0, 0], atol=0.03)
    # Var = 1 + 1 from the component means
    np.testing.assert_allclose(X.var(axis=0), [2, 2], atol=0.06)


@pytest.mark.parametrize("make", [
    lambda: LatentDistribution.dirichlet([1.0, -1.0]),
    lambda: LatentDistribution.gaussian_mixture([0.6, 0.6], [[0], [1]], [[[1]], [[1]]]),
    lambda: LatentDistribution.uniform_box([1.0], [0.0]),
    lambda: LatentDistribution("banana", {}),
])
def test_invalid_distributions(make):
    with pytest.raises(ConfigurationError):
        make()


def test_distribution_dict_round_trip():
    dist = LatentDistribution.gaussian_mixture([0.3, 0.7], [[0, 0], [1, 1]], [np.eye(2)] * 2)
    assert LatentDistribution.from_dict(dist.to_dict()).to_dict() == dist.to_dict()


def test_sparsity_schedules():
    assert sparsity_schedule("constant", 12345, 0.3) == 0.3
    assert sparsity_schedule("log-over-n", 1000) == pytest.approx(0.006908, abs=5e-7)
    assert sparsity_schedule("one-over-n", 2) == 0.5
    with pytest.raises(ConfigurationError):
        sparsity_schedule("constant", 10, 1.5)


def test_adjacency_extremes():
    n = 30
    assert sample_adjacency(np.zeros((n, n)), 4).n_edges == 0
    full = np.ones((n, n))
    np.fill_diagonal(full, 0)
    A = sample_adjacency(full, 4)
    assert A.n_edges == n * (n - 1) // 2
    _assert_hollow_symmetric(A)


def test_adjacency_density():
    A = sample_adjacency(np.full((200, 200), 0.5), 8)
    assert abs(A.n_edges / (200 * 199 / 2) - 0.5) < 0.03


def test_adjacency_domain_error():
    with pytest.raises(DomainError):
        sample_adjacency(np.full((3, 3), 1.1), 0)


def test_edge_frequency_calibration():
    rng = np.random.default_rng(0)
    X = rng.dirichlet([1, 1, 1], size=6)[:, :2]
    K = kernel_matrix(KernelSpec("dot-product"), X, 1.0)
    reps = 3000
    freq = sum(sample_adjacency(K, s).toarray().astype(float) for s in range(reps)) / reps
    off = ~np.eye(6, dtype=bool)
    band = 3 * np.sqrt(K * (1 - K) / reps) + 1e-3
    assert np.all(np.abs(freq - K)[off] <= band[off])


def test_average_degree_matches_kernel():
    spec = KernelSpec("gaussian", sigma=1.0)
    X = sample_latent(LatentDistribution.uniform_box([0, 0], [1, 1]), 800, 5)
    K = kernel_matrix(spec, X, 0.2)
    np.fill_diagonal(K, 0)
    A = sample_graph(spec, X, 0.2, 6)
    expected = K.sum()
    sd = math.sqrt(np.sum(K * (1 - K)))
    assert abs(2 * A.n_edges - expected) <= 3 * 2 * sd / math.sqrt(2)


def test_sample_graph_matches_sample_adjacency_bitwise():
    spec = KernelSpec("gaussian", sigma=0.8)
    X = sample_latent(LatentDistribution.uniform_box([0, 0], [1, 1]), 600, 1)
    A1 = sample_graph(spec, X, 0.7, 42)
    A2 = sample_adjacency(kernel_matrix(spec, X, 0.7), 42)
    np.testing.assert_array_equal(A1.toarray(), A2.toarray())


def test_dense_and_sparse_storage_agree():
    spec = KernelSpec("gaussian", sigma=0.5)
    X = sample_latent(LatentDistribution.uniform_box([0, 0], [1, 1]), 300, 2)
    dense = sample_graph(spec, X, 1.0, 5)
    sparse = sample_graph(spec, X, 1.0, 5, dense_limit=100)
    assert sparse.is_sparse and not dense.is_sparse
    np.testing.assert_array_equal(dense.toarray(), sparse.toarray())
    _assert_hollow_symmetric(sparse)
    np.testing.assert_array_equal(dense.edges(), sparse.edges())
    sub = [5, 3, 200]
    np.testing.assert_array_equal(dense.block(sub, sub), sparse.subgraph(sub).toarray())


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2 ** 32 - 1), st.floats(0.0, 1.0))
def test_hollow_symmetric_property(n, seed, p):
    A = sample_adjacency(np.full((n, n), p), seed)
    _assert_hollow_symmetric(A)


def test_sparsity_warning():
    X = sample_latent(LatentDistribution.uniform_box([0, 0], [1, 1]), 200, 0)
    with pytest.warns(SparsityWarning):
        sample_graph(KernelSpec("gaussian"), X, 0.01, 0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sample_graph(KernelSpec("gaussian"), X, 1.0, 0)


def test_oos_connections_examples():
    spec = KernelSpec("gaussian")
    X = sample_latent(LatentDistribution.uniform_box([0, 0], [1, 1]), 50, 0)
    assert not sample_oos_connections(X[0], X, spec, 0.0, 3).any()
    for seed in range(20):
        assert sample_oos_connections(X[7], X, spec, 1.0, seed)[7] == 1
    with pytest.raises(ValueError):
        sample_oos_connections([0.1, 0.2, 0.3], X, spec, 1.0, 0)


def test_oos_connections_mean():
    spec = KernelSpec("gaussian", sigma=0.6)
    X = sample_latent(LatentDistribution.uniform_box([0, 0], [1, 1]), 8, 0)
    x = np.array([0.4, 0.6])
    rho = 0.7
    p = rho * kernel_matrix(spec, np.vstack([x, X]), 1.0)[0, 1:]
    reps = 10_000
    mean = sum(sample_oos_connections(x, X, spec, rho, s).astype(float) for s in range(reps)) / reps
    assert np.all(np.abs(mean - p) <= 3 * np.sqrt(p * (1 - p) / reps) + 1e-3)


def test_oos_batch_columns():
    from lpgoos._random import derive_seed

    spec = KernelSpec("gaussian")
    X = sample_latent(LatentDistribution.uniform_box([0, 0], [1, 1]), 40, 0)
    Xn = sample_latent(LatentDistribution.uniform_box([0, 0], [1, 1]), 5, 1)
    B = sample_oos_connections_batch(Xn, X, spec, 0.5, 77)
    assert B.shape == (40, 5)
    for j in range(5):
        np.testing.assert_array_equal(
            B[:, j], sample_oos_connections(Xn[j], X, spec, 0.5, derive_seed(77, j)))


def test_edge_list_round_trip(tmp_path):
    A = sample_adjacency(np.full((25, 25), 0.3), 1)
    path = tmp_path / "g.txt"
    write_edge_list(path, A)
    lines = path.read_text().splitlines()
    assert lines[0] == "n=25"
    pairs = [tuple(map(int, l.split())) for l in lines[1:]]
    assert pairs == sorted(pairs) and all(i < j for i, j in pairs)
    np.testing.assert_array_equal(read_edge_list(path).toarray(), A.toarray())


def test_latent_sample_csv_round_trip(tmp_path):
    X = np.random.default_rng(0).standard_normal((6, 2))
    s = LatentSample(X, 0.25, quadrant_labels(X), 9)
    s.to_csv(tmp_path / "x.csv")
    back = LatentSample.from_csv(tmp_path / "x.csv")
    np.testing.assert_array_equal(back.positions, X)
    np.testing.assert_array_equal(back.labels, s.labels)
    assert back.rho == 0.25 and back.seed == 9


def test_latent_sample_invariants():
    with pytest.raises(ValueError):
        LatentSample([[0.0]], 1.5)
    with pytest.raises(ValueError):
        LatentSample([[0.0], [1.0]], 0.5, labels=[1])


def test_quadrant_labels():
    X = np.array([[1, 2], [-1, 2], [-1, -2], [1, -2], [0, 3]])
    np.testing.assert_array_equal(quadrant_labels(X), [1, -1, 1, -1, 1])
