import numpy as np
import pytest

from fbmloops import kernel as K
from fbmloops import sampler as S
from fbmloops.errors import DomainError, EmbeddingError, KernelNotPDError


def _spec(H=0.25, d=2):
    return K.KernelSpec.circle(1.0, H, d)


def test_empty_ensemble():
    spec = _spec()
    g = K.Grid.circle(1.0, 16)
    assert S.sample_dense(spec, g, 0).n_samples == 0
    assert S.sample_loop_circulant(spec, g, 0).n_samples == 0


def test_dense_rejects_non_pd():
    spec = K.KernelSpec.circle(1.0, 0.7, 1)
    with pytest.raises(KernelNotPDError) as err:
        S.sample_dense(spec, K.Grid.circle(1.0, 64), 3)
    assert err.value.min_eigenvalue < 0


def test_circulant_rejects_non_pd():
    with pytest.raises(EmbeddingError):
        S.sample_loop_circulant(K.KernelSpec.circle(1.0, 0.7, 1), K.Grid.circle(1.0, 64), 3)


def test_circulant_eigenvalues_nonnegative_at_half():
    lam = S.circulant_eigenvalues(K.KernelSpec.circle(1.0, 0.5, 1), 64)
    assert lam.min() >= 0 and lam[0] == 0


def test_circulant_two_points():
    ens = S.sample_loop_circulant(_spec(d=1), K.Grid.circle(1.0, 2), 50, seed=2)
    inc = S.loop_increments(ens)
    assert np.array_equal(inc[:, 0], -inc[:, 1])


def test_pinned_origin_and_closure():
    spec = _spec()
    g = K.Grid.circle(1.0, 32)
    for ens in (S.sample_loop_circulant(spec, g, 40, 1), S.sample_dense(spec, g, 40, 1)):
        assert np.all(ens.paths[:, 0, :] == 0.0)
        assert np.max(np.abs(S.loop_increments(ens).sum(axis=1))) <= 1e-9


def test_reproducible_and_thread_independent():
    spec = _spec()
    g = K.Grid.circle(1.0, 64)
    a = S.sample_loop_circulant(spec, g, 600, seed=5, threads=1).paths
    b = S.sample_loop_circulant(spec, g, 600, seed=5, threads=3).paths
    assert np.array_equal(a, b)
    c = S.sample_dense(spec, g, 600, seed=5, threads=1).paths
    d = S.sample_dense(spec, g, 600, seed=5, threads=2).paths
    assert np.array_equal(c, d)


def test_per_index_streams():
    # the first paths do not depend on how many are drawn
    spec = _spec()
    g = K.Grid.circle(1.0, 32)
    a = S.sample_loop_circulant(spec, g, 10, seed=9).paths
    b = S.sample_loop_circulant(spec, g, 300, seed=9).paths
    assert np.array_equal(a, b[:10])
    assert not np.array_equal(a, S.sample_loop_circulant(spec, g, 10, seed=10).paths)


def test_seed_validation():
    with pytest.raises(DomainError):
        S.SeedSpec(-1)


def test_increment_variances_dense():
    spec = _spec()
    g = K.Grid.circle(1.0, 64)
    ens = S.sample_dense(spec, g, 4000, seed=4)
    for i, j in [(0, 32), (5, 20), (10, 60)]:
        sq = np.mean((ens.paths[:, j] - ens.paths[:, i]) ** 2, axis=1)
        se = sq.std(ddof=1) / np.sqrt(sq.size)
        assert abs(sq.mean() - K.increment_variance(spec, g.t[i], g.t[j])) < 3 * se


def test_coordinate_independence():
    ens = S.sample_loop_circulant(_spec(), K.Grid.circle(1.0, 64), 4000, seed=8)
    prod = ens.paths[:, 20, 0] * ens.paths[:, 20, 1]
    assert abs(prod.mean()) < 3 * prod.std(ddof=1) / np.sqrt(prod.size)


def test_covariance_example_empirical():
    spec = _spec()
    g = K.Grid.circle(1.0, 10)
    ens = S.sample_loop_circulant(spec, g, 20000, seed=12)
    prod = (ens.paths[:, 2] * ens.paths[:, 8]).mean(axis=1)
    se = prod.std(ddof=1) / np.sqrt(prod.size)
    assert abs(prod.mean() - 0.130986) < 3 * se


def test_star_sampling():
    spec = K.KernelSpec.star((1.0, 1.0), 0.5, 2)
    g = K.Grid.star((1.0, 1.0), 8)
    ens = S.sample_star(spec, g, 3000, seed=1)
    assert np.all(ens.paths[:, 0] == 0)
    i, j = g.index_of(0.5, 0), g.index_of(0.75, 1)
    prod = (ens.paths[:, i] * ens.paths[:, j]).mean(axis=1)
    assert abs(prod.mean()) < 3 * prod.std(ddof=1) / np.sqrt(prod.size)


def test_single_branch_star_is_line_fbm():
    spec = K.KernelSpec.star((1.0,), 0.3, 1)
    g = K.Grid.star((1.0,), 8)
    ens = S.sample_star(spec, g, 6000, seed=3)
    i, j = g.index_of(0.25, 0), g.index_of(0.875, 0)
    sq = (ens.paths[:, j, 0] - ens.paths[:, i, 0]) ** 2
    assert abs(sq.mean() - 0.625 ** 0.6) < 3 * sq.std(ddof=1) / np.sqrt(sq.size)


def test_star_rejects_large_hurst():
    with pytest.raises(DomainError):
        S.sample_star(K.KernelSpec.star((1.0, 1.0), 0.6, 1), K.Grid.star((1.0, 1.0), 4), 2)


def test_jittered_cholesky_handles_singular_psd():
    # the H = 1/2 loop kernel is singular; jitter must rescue it
    spec = K.KernelSpec.circle(1.0, 0.5, 1)
    C = np.asarray(K.build_cov_matrix(spec, K.Grid.circle(1.0, 16)))[1:, 1:]
    L = S.jittered_cholesky(C)
    assert np.allclose(L @ L.T, C, atol=1e-7)


def test_dispatch():
    spec = _spec()
    g = K.Grid.circle(1.0, 16)
    assert np.array_equal(S.sample(spec, g, 5, 1).paths, S.sample_loop_circulant(spec, g, 5, 1).paths)
    with pytest.raises(DomainError):
        S.sample(spec, g, 5, 1, method="magic")
    with pytest.raises(DomainError):
        S.sample_loop_circulant(spec, K.Grid.circle_points(1.0, [0.0, 0.1, 0.5]), 2)
