"""Local times of fBm starbursts.

Branch ``k`` is plain fBm on ``[0, T_k]``.  Two different branches meet only
through the origin, so their cross local time

    L_kl = int_0^{T_k} int_0^{T_l} delta_eps(x_k(s) - x_l(t)) ds dt

has no ordering constraint.  The self part of each branch is centered by its
expectation, and the two kinds are combined with non-negative couplings.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .errors import DivergenceError, DomainError
from .kernel import Grid, KernelSpec
from .localtime import (LocalTimeEstimate, _kernel_from_r2, _profile, _weighted_pair_sum,
                        expected_line_local_time)
from .sampler import PathEnsemble, SeedSpec, _run_blocks, sample_points


@dataclass(frozen=True, eq=False)
class CouplingWeights:
    """Per-branch self couplings ``g_k`` and symmetric cross couplings ``g_kl``."""

    g_self: np.ndarray
    g_cross: np.ndarray

    def __post_init__(self):
        gs = np.atleast_1d(np.asarray(self.g_self, dtype=float))
        gc = np.atleast_2d(np.asarray(self.g_cross, dtype=float))
        n = gs.size
        if gc.shape != (n, n):
            raise DomainError(f"cross couplings must be {n}x{n}, got {gc.shape}")
        if np.any(gs < 0) or np.any(gc < 0):
            raise DomainError("couplings must be non-negative")
        if not np.allclose(gc, gc.T, rtol=0, atol=0):
            raise DomainError("cross couplings must be symmetric")
        object.__setattr__(self, "g_self", gs)
        object.__setattr__(self, "g_cross", gc)

    @property
    def n_branches(self) -> int:
        return self.g_self.size

    @classmethod
    def uniform(cls, n, g_self=1.0, g_cross=1.0):
        gc = np.full((n, n), float(g_cross))
        np.fill_diagonal(gc, 0.0)
        return cls(np.full(n, float(g_self)), gc)

    def scaled(self, factor: float) -> "CouplingWeights":
        return CouplingWeights(self.g_self * factor, self.g_cross * factor)

    def to_dict(self):
        return {"g_self": self.g_self.tolist(), "g_cross": self.g_cross.tolist()}


def _require_star(ens_or_grid):
    grid = ens_or_grid.grid if isinstance(ens_or_grid, PathEnsemble) else ens_or_grid
    if grid.is_circle:
        raise DomainError("expected a star grid")
    return grid


def self_local_time_values(paths, grid: Grid, k: int, eps) -> np.ndarray:
    """Ordered-pair local time on branch ``k``, shape ``(n, n_eps)``."""
    eps_list = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any(eps_list <= 0):
        raise DomainError("eps must be positive")
    idx = grid.branch_indices(k)
    w = grid.weights(k)
    W = np.triu(np.outer(w, w), k=1)
    X = np.asarray(paths, dtype=float)[:, idx]
    parts = _run_blocks(lambda a, b: _weighted_pair_sum(X[a:b], X[a:b], W, eps_list),
                        X.shape[0], None)
    return np.concatenate(parts, axis=1).T if parts else np.zeros((0, eps_list.size))


def cross_local_time_values(paths, grid: Grid, k: int, l: int, eps) -> np.ndarray:
    """Rectangle local time between branches ``k`` and ``l``, shape ``(n, n_eps)``."""
    if k == l:
        raise DomainError("cross local time needs two different branches")
    eps_list = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any(eps_list <= 0):
        raise DomainError("eps must be positive")
    # one summation order for both labelings keeps L_kl == L_lk bit for bit
    k, l = min(k, l), max(k, l)
    ik, il = grid.branch_indices(k), grid.branch_indices(l)
    W = np.outer(grid.weights(k), grid.weights(l))
    P = np.asarray(paths, dtype=float)
    X, Y = P[:, ik], P[:, il]
    parts = _run_blocks(lambda a, b: _weighted_pair_sum(X[a:b], Y[a:b], W, eps_list),
                        P.shape[0], None)
    return np.concatenate(parts, axis=1).T if parts else np.zeros((0, eps_list.size))


def cross_local_time(ens: PathEnsemble, k: int, l: int, eps: float) -> LocalTimeEstimate:
    grid = _require_star(ens)
    vals = cross_local_time_values(ens.paths, grid, k, l, [eps])[:, 0]
    return LocalTimeEstimate(vals, float(eps), False, None, "cross", grid, ens.spec,
                             "L_kl", meta={"branches": [int(k), int(l)]})


def expected_cross_local_time(spec: KernelSpec, k: int, l: int, eps: float) -> float:
    """Continuum ``E L_kl``: the rectangle integral of ``(2 pi ((s+t)^{2H} + eps))^{-d/2}``.

    Reduced to one dimension in ``u = s + t`` with the length of the
    anti-diagonal slice as weight.
    """
    if k == l:
        raise DomainError("cross local time needs two different branches")
    a, b = spec.geometry.lengths[k], spec.geometry.lengths[l]
    if eps < 0:
        raise DomainError("eps must be non-negative")
    if eps == 0 and spec.hd >= 2:
        raise DivergenceError("E L_kl diverges at the origin for Hd >= 2")
    f = _profile(spec, eps)

    def slice_len(u):
        return max(0.0, min(u, a) - max(0.0, u - b))

    lo, hi = min(a, b), max(a, b)
    total = 0.0
    for x0, x1 in ((0.0, lo), (lo, hi), (hi, a + b)):
        if x1 > x0:
            total += integrate.quad(lambda u: slice_len(u) * f(u), x0, x1,
                                    limit=200, epsabs=0.0, epsrel=1e-11)[0]
    return total


def _grid_pair_expectation(spec, grid, ik, il, W, eps):
    d, two_h = spec.dim, 2 * spec.hurst
    bk, tk = grid.branch[ik], grid.t[ik]
    bl, tl = grid.branch[il], grid.t[il]
    same = bk[:, None] == bl[None, :]
    sep = np.where(same, np.abs(tk[:, None] - tl[None, :]), tk[:, None] + tl[None, :])
    f = (2 * np.pi * (np.power(sep, two_h) + eps)) ** (-d / 2)
    return float(np.sum(W * f))


def expected_cross_local_time_grid(spec, grid: Grid, k, l, eps) -> float:
    """Exact mean of :func:`cross_local_time_values` on ``grid``."""
    ik, il = grid.branch_indices(k), grid.branch_indices(l)
    W = np.outer(grid.weights(k), grid.weights(l))
    # the origin sits on both branches; its separation to anything is its arc position
    return _grid_pair_expectation(spec, grid, ik, il, W, eps)


def expected_self_local_time_grid(spec, grid: Grid, k, eps) -> float:
    """Exact mean of :func:`self_local_time_values` on ``grid``."""
    idx = grid.branch_indices(k)
    w = grid.weights(k)
    W = np.triu(np.outer(w, w), k=1)
    d, two_h = spec.dim, 2 * spec.hurst
    t = grid.t[idx]
    f = (2 * np.pi * (np.power(np.abs(t[:, None] - t[None, :]), two_h) + eps)) ** (-d / 2)
    return float(np.sum(W * f))


def branch_self_local_time(ens: PathEnsemble, k: int, eps: float) -> LocalTimeEstimate:
    grid = _require_star(ens)
    vals = self_local_time_values(ens.paths, grid, k, [eps])[:, 0]
    return LocalTimeEstimate(vals, float(eps), False, None, "self", grid, ens.spec,
                             "L_k", meta={"branch": int(k)})


def branch_self_local_time_centered(ens: PathEnsemble, k: int, eps: float,
                                    method: str = "grid") -> LocalTimeEstimate:
    """Self local time of branch ``k`` minus its expectation.

    ``method="grid"`` subtracts the exact mean of the grid estimator,
    ``"continuum"`` the line-fBm quadrature on ``[0, T_k]``.
    """
    est = branch_self_local_time(ens, k, eps)
    if method == "grid":
        shift = expected_self_local_time_grid(ens.spec, ens.grid, k, eps)
    elif method == "continuum":
        shift = expected_line_local_time(ens.spec.geometry.lengths[k], ens.spec, eps)
    else:
        raise DomainError(f"unknown centering method {method!r}")
    return replace(est, per_path=est.per_path - shift, centered=True, shift=shift,
                   quantity="L_k,c")


def combined_local_time(ens: PathEnsemble, weights: CouplingWeights, eps: float,
                        method: str = "grid") -> LocalTimeEstimate:
    """``sum_k g_k L_{k,c} + sum_{l<k} g_kl L_kl`` per path."""
    grid = _require_star(ens)
    nb = ens.spec.geometry.n_branches
    if weights.n_branches != nb:
        raise DomainError(f"weights for {weights.n_branches} branches, star has {nb}")
    total = np.zeros(ens.n_samples)
    for k in range(nb):
        if weights.g_self[k] != 0:
            total += weights.g_self[k] * branch_self_local_time_centered(ens, k, eps, method).per_path
        for l in range(k):
            if weights.g_cross[k, l] != 0:
                total += weights.g_cross[k, l] * cross_local_time_values(
                    ens.paths, grid, k, l, [eps])[:, 0]
    return LocalTimeEstimate(total, float(eps), True, None, "combined", grid, ens.spec,
                             "L(g)", meta={"weights": weights.to_dict()})


def random_cross_moments(spec: KernelSpec, k: int, l: int, n: int, n_pairs: int, eps,
                         seed: SeedSpec | int = 0, threads=None) -> np.ndarray:
    """Unbiased per-path estimates of continuum ``L_kl`` from random time pairs.

    Each path is drawn at ``n_pairs`` uniform points ``(s, t)`` of the
    rectangle; returns shape ``(n, n_eps)``.
    """
    if spec.is_circle or k == l:
        raise DomainError("need a star and two different branches")
    spec.require_admissible()
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    eps_list = np.atleast_1d(np.asarray(eps, dtype=float))
    a, b = spec.geometry.lengths[k], spec.geometry.lengths[l]
    K = int(n_pairs)

    def one(i):
        rng = seed.rng(i, stream=2)
        s = rng.uniform(0.0, a, K)
        t = rng.uniform(0.0, b, K)
        branch = np.concatenate([[0], np.full(K, k), np.full(K, l)])
        X = sample_points(spec, branch, np.concatenate([[0.0], s, t]), rng)
        diff = X[1:1 + K] - X[1 + K:]
        r2 = np.einsum("kd,kd->k", diff, diff)
        return [a * b * _kernel_from_r2(r2, e, spec.dim).mean() for e in eps_list]

    parts = _run_blocks(lambda lo, hi: np.array([one(i) for i in range(lo, hi)]), n, threads)
    return np.concatenate(parts) if parts else np.zeros((0, eps_list.size))


def cross_branch_covariance(ens: PathEnsemble, p, q):
    """Empirical covariance of ``x(p)`` and ``x(q)`` pooled over coordinates.

    Returns ``(cov, std_error)`` with the standard error from the per-sample
    products.
    """
    grid = ens.grid
    i = grid.index_of(p[1], p[0]) if p[1] != 0 else 0
    j = grid.index_of(q[1], q[0]) if q[1] != 0 else 0
    prod = (ens.paths[:, i, :] * ens.paths[:, j, :]).mean(axis=1)
    n = prod.size
    return float(prod.mean()), float(prod.std(ddof=1) / np.sqrt(n))
