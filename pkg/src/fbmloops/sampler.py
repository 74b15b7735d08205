"""Sampling d-dimensional loops and starbursts.

Every sample index owns an independent Philox substream derived from the
master seed, so a path depends only on ``(master_seed, index)`` and never on
how the work was split across blocks or threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DomainError, EmbeddingError, KernelNotPDError
from .kernel import Grid, KernelSpec, build_cov_matrix, cov_from_points

#: samples per work unit; fixed so results never depend on the thread count
BLOCK = 256

EMBEDDING_TOL = 1e-8


def default_threads() -> int:
    return max(1, int(os.environ.get("FBMLOOPS_THREADS", "1")))


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus the rule ``index -> Philox(SeedSequence(seed, (index,)))``."""

    master_seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise DomainError("master seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "master_seed", int(self.master_seed))

    def rng(self, index: int, stream: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(stream, int(index)))
        return np.random.Generator(np.random.Philox(ss))

    def normals(self, start: int, stop: int, shape, stream: int = 0) -> np.ndarray:
        """Standard normals of ``shape`` for each index in ``[start, stop)``."""
        out = np.empty((stop - start,) + tuple(shape))
        for j, i in enumerate(range(start, stop)):
            out[j] = self.rng(i, stream).standard_normal(shape)
        return out


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """``paths[sample, point, coordinate]`` sampled from ``spec`` on ``grid``."""

    spec: KernelSpec
    grid: Grid
    paths: np.ndarray
    seed: SeedSpec = field(default_factory=SeedSpec)
    first_index: int = 0

    def __post_init__(self):
        p = np.asarray(self.paths, dtype=float)
        if p.ndim != 3 or p.shape[1:] != (self.grid.n_points, self.spec.dim):
            raise DomainError(
                f"paths shape {p.shape} incompatible with grid of {self.grid.n_points} points "
                f"and d={self.spec.dim}"
            )
        object.__setattr__(self, "paths", p)

    @property
    def n_samples(self) -> int:
        return self.paths.shape[0]

    @property
    def d(self) -> int:
        return self.spec.dim

    def __len__(self):
        return self.n_samples


def _blocks(n: int):
    return [(a, min(a + BLOCK, n)) for a in range(0, n, BLOCK)]


def _run_blocks(fn, n: int, threads: int | None):
    threads = default_threads() if threads is None else max(1, int(threads))
    blocks = _blocks(n)
    if threads == 1 or len(blocks) <= 1:
        parts = [fn(a, b) for a, b in blocks]
    else:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda ab: fn(*ab), blocks))
    return parts


def jittered_cholesky(C: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, adding a ridge only if plain factorization fails.

    The ridge starts at ``1e-12 * trace / m`` and grows tenfold up to
    ``1e-8 * trace / m``; beyond that the matrix is declared indefinite.
    """
    m = C.shape[0]
    if m == 0:
        return np.zeros((0, 0))
    try:
        return linalg.cholesky(C, lower=True, check_finite=False)
    except linalg.LinAlgError:
        pass
    scale = max(np.trace(C) / m, np.finfo(float).tiny)
    ridge = 1e-12
    while ridge <= 1e-8 * (1 + 1e-9):
        try:
            return linalg.cholesky(C + ridge * scale * np.eye(m), lower=True, check_finite=False)
        except linalg.LinAlgError:
            ridge *= 10
    lmin = float(linalg.eigvalsh(C)[0])
    raise KernelNotPDError(
        f"covariance is not positive semidefinite (min eigenvalue {lmin:.3e})", lmin
    )


def _dense_factor(spec, grid):
    C = np.asarray(build_cov_matrix(spec, grid).entries)
    return jittered_cholesky(C[1:, 1:])


def _draw_with_factor(L, n_points, d, seed, a, b, stream=0):
    Z = seed.normals(a, b, (d, L.shape[0]), stream)
    out = np.zeros((b - a, n_points, d))
    # (n, d, m) @ (m, m)^T -> (n, d, m)
    out[:, 1:, :] = np.swapaxes(Z @ L.T, 1, 2)
    return out


def sample_dense(spec: KernelSpec, grid: Grid, n: int, seed: SeedSpec | int = 0,
                 threads: int | None = None) -> PathEnsemble:
    """Draw ``n`` paths by Cholesky factorization of the grid covariance.

    Each of the ``d`` coordinates is an independent draw; the origin is held
    at 0 exactly.  Works for any grid and either geometry.
    """
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    if n < 0:
        raise DomainError("sample count must be non-negative")
    L = _dense_factor(spec, grid)
    parts = _run_blocks(
        lambda a, b: _draw_with_factor(L, grid.n_points, spec.dim, seed, a, b), n, threads
    )
    paths = np.concatenate(parts) if parts else np.zeros((0, grid.n_points, spec.dim))
    return PathEnsemble(spec, grid, paths, seed)


def sample_points(spec: KernelSpec, branch, t, rng: np.random.Generator) -> np.ndarray:
    """One ``(len(t), d)`` draw of the pinned field at arbitrary points."""
    C = cov_from_points(spec, branch, t)
    L = jittered_cholesky(C)
    return L @ rng.standard_normal((len(t), spec.dim))


# --------------------------------------------------------------------------
# circulant sampler for uniform loop grids

def circulant_increment_cov(spec: KernelSpec, N: int) -> np.ndarray:
    """First row of the circulant covariance of the ``N`` grid increments.

    ``c(k) = 1/2 (g(k+1) + g(k-1) - 2 g(k))`` with ``g(k) = d(k h)^{2H}``.
    """
    if not spec.is_circle:
        raise DomainError("circulant sampling needs a circle geometry")
    T = spec.geometry.T
    h = T / N
    k = np.arange(N)

    def g(j):
        j = np.mod(j, N)
        return (np.minimum(j, N - j) * h) ** (2 * spec.hurst)

    return 0.5 * (g(k + 1) + g(k - 1) - 2.0 * g(k))


def circulant_eigenvalues(spec: KernelSpec, N: int) -> np.ndarray:
    """Eigenvalues of the increment covariance (zero frequency first).

    Raises :class:`EmbeddingError` when any eigenvalue is below
    ``-1e-8 * max``.
    """
    lam = np.fft.fft(circulant_increment_cov(spec, N)).real
    lam[0] = 0.0
    lmax = lam.max(initial=0.0)
    if lam.min() < -EMBEDDING_TOL * lmax:
        raise EmbeddingError(
            f"negative circulant eigenvalue {lam.min():.3e} (max {lmax:.3e}); "
            f"H={spec.hurst} is outside the admissible range"
        )
    return np.clip(lam, 0.0, None)


def circulant_increments(sqrt_lam: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Map standard normals ``Z[..., N]`` to circularly stationary increments."""
    X = np.fft.ifft(sqrt_lam * np.fft.fft(Z, axis=-1), axis=-1).real
    # the zero mode is absent in law; remove its roundoff residue
    return X - X.mean(axis=-1, keepdims=True)


def _circulant_block(sqrt_lam, N, d, seed, a, b):
    X = circulant_increments(sqrt_lam, seed.normals(a, b, (d, N)))
    out = np.zeros((b - a, N, d))
    out[:, 1:, :] = np.swapaxes(np.cumsum(X[..., :-1], axis=-1), 1, 2)
    return out


def sample_loop_circulant(spec: KernelSpec, grid: Grid, n: int, seed: SeedSpec | int = 0,
                          threads: int | None = None) -> PathEnsemble:
    """Exact spectral sampler for loops on a uniform circle grid.

    The ``N`` increments around the circle are circularly stationary, so
    their covariance is diagonalized by the DFT.  The zero-frequency weight
    vanishes, which closes every loop: the increments sum to zero.
    """
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    if not spec.is_circle or not grid.is_circle or not grid.uniform:
        raise DomainError("circulant sampling needs a uniform circle grid")
    if grid.geometry != spec.geometry:
        raise DomainError("grid geometry does not match the kernel spec")
    if n < 0:
        raise DomainError("sample count must be non-negative")
    N = grid.n_points
    sqrt_lam = np.sqrt(circulant_eigenvalues(spec, N))
    parts = _run_blocks(lambda a, b: _circulant_block(sqrt_lam, N, spec.dim, seed, a, b),
                        n, threads)
    paths = np.concatenate(parts) if parts else np.zeros((0, N, spec.dim))
    return PathEnsemble(spec, grid, paths, seed)


def loop_increments(ens: PathEnsemble) -> np.ndarray:
    """All ``N`` increments of each loop, the last one closing back to 0.

    Shape ``(n, N, d)``.  Their sum is the closure defect, zero up to roundoff.
    """
    if not ens.grid.is_circle:
        raise DomainError("increments around the circle are defined for loops only")
    p = ens.paths
    closed = np.concatenate([p, p[:, :1, :]], axis=1)
    return np.diff(closed, axis=1)


def sample_star(spec: KernelSpec, grid: Grid, n: int, seed: SeedSpec | int = 0,
                threads: int | None = None) -> PathEnsemble:
    """Joint draw over all branches of a starburst (dense factorization)."""
    if spec.is_circle or grid.is_circle:
        raise DomainError("sample_star needs a star geometry and grid")
    spec.require_admissible()
    return sample_dense(spec, grid, n, seed, threads)


def sample(spec: KernelSpec, grid: Grid, n: int, seed: SeedSpec | int = 0,
           method: str = "auto", threads: int | None = None) -> PathEnsemble:
    """Dispatch to the circulant sampler when possible, else dense."""
    if method == "auto":
        method = "circulant" if (spec.is_circle and grid.uniform) else "dense"
    if method == "circulant":
        return sample_loop_circulant(spec, grid, n, seed, threads)
    if method == "dense":
        if not spec.is_circle:
            return sample_star(spec, grid, n, seed, threads)
        return sample_dense(spec, grid, n, seed, threads)
    raise DomainError(f"unknown sampling method {method!r}")
