"""Property-based tests of the structural invariants."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from fbmloops import edwards as E
from fbmloops import kernel as K
from fbmloops import localtime as LT
from fbmloops import sampler as S
from fbmloops import starburst as SB

hursts = st.floats(0.05, 0.5)
lengths = st.floats(0.1, 10.0)
unit = st.floats(0.0, 1.0)
fast = settings(max_examples=40, deadline=None, derandomize=True)


@fast
@given(T=lengths, a=unit, b=unit)
def test_geodesic_symmetric_and_bounded(T, a, b):
    s, t = a * T, b * T
    d1 = K.geodesic_circle(s, t, T)
    assert d1 == K.geodesic_circle(t, s, T)
    assert 0 <= d1 <= T / 2


@fast
@given(T=lengths, H=hursts, a=st.lists(unit, min_size=2, max_size=2))
def test_variance_reconstruction_circle(T, H, a):
    spec = K.KernelSpec.circle(T, H, 1)
    s, t = a[0] * T, a[1] * T
    lhs = K.covariance(spec, s, s) + K.covariance(spec, t, t) - 2 * K.covariance(spec, s, t)
    rhs = K.increment_variance(spec, s, t)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(rhs), 1e-300) + 1e-14 * T ** (2 * H)


@fast
@given(H=hursts, k=st.integers(0, 2), l=st.integers(0, 2), a=unit, b=unit)
def test_variance_reconstruction_star(H, k, l, a, b):
    L = (1.0, 2.0, 0.5)
    spec = K.KernelSpec.star(L, H, 1)
    p, q = (k, a * L[k]), (l, b * L[l])
    lhs = K.covariance(spec, p, p) + K.covariance(spec, q, q) - 2 * K.covariance(spec, p, q)
    rhs = K.increment_variance(spec, p, q)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(rhs), 1e-300) + 1e-14


@fast
@given(T=lengths, H=hursts, a=unit, b=unit)
def test_mu_consistency(T, H, a, b):
    spec = K.KernelSpec.circle(T, H, 1)
    s, t = a * T, b * T
    assert K.increment_cross_covariance(spec, s, t, s, t) == K.increment_variance(spec, s, t)


@fast
@given(H=st.floats(0.05, 0.5), scale=st.floats(0.2, 5.0),
       n=st.integers(3, 8))
def test_lnd_scale_invariance(H, scale, n):
    times = np.linspace(0, 1, n, endpoint=False)
    k1 = K.lnd_constant(K.KernelSpec.circle(1.0, H, 1), times)
    k2 = K.lnd_constant(K.KernelSpec.circle(scale, H, 1), times * scale)
    assert abs(k1 - k2) <= 1e-9
    if H < 0.5:
        assert k1 > 0
    elif n % 2 == 0:
        # at H = 1/2 the loop has no even Fourier modes, so even equispaced sets degenerate
        assert abs(k1) <= 1e-12


@fast
@given(H=hursts, seed=st.integers(0, 2 ** 32), idx=st.integers(0, 5))
def test_seed_determinism_and_closure(H, seed, idx):
    spec = K.KernelSpec.circle(1.0, H, 2)
    g = K.Grid.circle(1.0, 16)
    a = S.sample(spec, g, 6, seed=seed)
    b = S.sample(spec, g, 6, seed=seed, threads=2)
    assert np.array_equal(a.paths, b.paths)
    assert np.all(a.paths[:, 0] == 0)
    assert abs(S.loop_increments(a)[idx].sum(axis=0)).max() <= 1e-12


@fast
@given(H=hursts, seed=st.integers(0, 2 ** 16), eps=st.floats(1e-3, 1.0),
       delta=st.floats(0.02, 0.5))
def test_partition_identity(H, seed, eps, delta):
    spec = K.KernelSpec.circle(1.0, H, 2)
    g = K.Grid.circle(1.0, 24)
    ens = S.sample(spec, g, 2, seed=seed)
    for p in ens.paths:
        full = LT.local_time_path(p, g, eps)
        parts = LT.local_time_gap_split(p, g, eps, delta)
        assert abs(parts["gamma"] + parts["lambda"] - full) <= 1e-12 * full


@fast
@given(eps=st.lists(st.floats(1e-3, 1.0), min_size=2, max_size=2, unique=True))
def test_constant_path_monotone_in_eps(eps):
    g = K.Grid.circle(1.0, 8)
    lo, hi = sorted(eps)
    z = np.zeros((8, 3))
    assert LT.local_time_path(z, g, lo) > LT.local_time_path(z, g, hi)


@fast
@given(a=st.lists(st.floats(0, 5), min_size=3, max_size=3),
       b=st.lists(st.floats(0, 5), min_size=3, max_size=3),
       c=st.floats(0, 3))
def test_combined_linearity(a, b, c):
    spec = K.KernelSpec.star((1.0, 1.0, 1.0), 0.4, 2)
    ens = S.sample_star(spec, K.Grid.star((1.0, 1.0, 1.0), 6), 4, seed=1)
    w1 = SB.CouplingWeights(a, [[0, b[0], b[1]], [b[0], 0, b[2]], [b[1], b[2], 0]])
    w2 = SB.CouplingWeights(b, np.full((3, 3), c) - np.diag([c] * 3))
    w12 = SB.CouplingWeights(np.add(a, b), w1.g_cross + w2.g_cross)
    v1 = SB.combined_local_time(ens, w1, 0.05).per_path
    v2 = SB.combined_local_time(ens, w2, 0.05).per_path
    v12 = SB.combined_local_time(ens, w12, 0.05).per_path
    scale = np.abs(v1) + np.abs(v2) + 1e-300
    assert np.all(np.abs(v12 - (v1 + v2)) <= 1e-12 * scale)


@fast
@given(v=st.lists(st.floats(0, 50), min_size=1, max_size=30), g=st.floats(0, 20))
def test_edwards_normalization(v, g):
    ew = E.edwards_weights(np.array(v), g)
    assert abs(ew.weights.sum() - 1) <= 1e-12
    assert 0 < ew.ess <= len(v) * (1 + 1e-12)
    # the linear normalizer may underflow; its logarithm may not
    assert np.isfinite(ew.log_normalizer) and ew.log_normalizer <= 1e-15
    assert 0 <= ew.normalizer <= 1
    if g == 0:
        assert np.all(ew.weights == 1 / len(v))


@fast
@given(v=st.lists(st.floats(0, 50), min_size=1, max_size=30),
       g=st.lists(st.floats(0, 20), min_size=2, max_size=2))
def test_edwards_normalizer_monotone(v, g):
    lo, hi = sorted(g)
    a = E.edwards_weights(np.array(v), lo).log_normalizer
    b = E.edwards_weights(np.array(v), hi).log_normalizer
    assert b <= a
