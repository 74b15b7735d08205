"""Geodesic distances and covariance kernels for fBm loops and starbursts.

A loop is a centered Gaussian field ``b`` on a circle of circumference ``T``
whose increments satisfy ``E (b(s) - b(t))^2 = d(s, t)^{2H}`` with ``d`` the
arc-length (geodesic) distance.  A starburst is a family of branches glued at
a common origin, where the geodesic between two points on different branches
runs through the origin.  In both cases the field is pinned at the origin,
so the covariance follows from the increment variance by polarization::

    R(p, q) = 1/2 (d(p, 0)^{2H} + d(q, 0)^{2H} - d(p, q)^{2H})

The resulting kernel is positive semidefinite only for ``H <= 1/2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

import numpy as np
from scipy import linalg

from .errors import DomainError, NumericError, ResourceError

#: largest dense covariance (in points) we are willing to allocate
MAX_DENSE_POINTS = 12000

PD_TOL = 1e-8


@dataclass(frozen=True)
class CircleGeometry:
    T: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise DomainError(f"circumference must be positive, got {self.T!r}")

    @property
    def n_branches(self) -> int:
        return 1


@dataclass(frozen=True)
class StarGeometry:
    lengths: tuple = (1.0, 1.0)

    def __post_init__(self):
        lengths = tuple(float(x) for x in self.lengths)
        if len(lengths) < 1:
            raise DomainError("a star needs at least one branch")
        if not all(np.isfinite(x) and x > 0 for x in lengths):
            raise DomainError(f"branch lengths must be positive, got {lengths}")
        object.__setattr__(self, "lengths", lengths)

    @property
    def n_branches(self) -> int:
        return len(self.lengths)


Geometry = Union[CircleGeometry, StarGeometry]


@dataclass(frozen=True)
class KernelSpec:
    """Geometry, Hurst index and ambient dimension of a loop or starburst.

    ``hurst`` is accepted anywhere in (0, 1) so that diagnostics can probe the
    indefinite regime; constructions that need a valid Gaussian process call
    :meth:`require_admissible`.
    """

    geometry: Geometry
    hurst: float
    dim: int = 1

    def __post_init__(self):
        if not isinstance(self.geometry, (CircleGeometry, StarGeometry)):
            raise DomainError(f"unknown geometry {self.geometry!r}")
        if not (0.0 < self.hurst < 1.0):
            raise DomainError(f"Hurst index must lie in (0, 1), got {self.hurst!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"ambient dimension must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "hurst", float(self.hurst))

    @classmethod
    def circle(cls, T=1.0, hurst=0.25, dim=1):
        return cls(CircleGeometry(float(T)), hurst, dim)

    @classmethod
    def star(cls, lengths=(1.0, 1.0), hurst=0.5, dim=1):
        return cls(StarGeometry(tuple(lengths)), hurst, dim)

    @property
    def is_circle(self) -> bool:
        return isinstance(self.geometry, CircleGeometry)

    @property
    def hd(self) -> float:
        return self.hurst * self.dim

    def require_admissible(self):
        if self.hurst > 0.5:
            raise DomainError(
                f"H={self.hurst} > 1/2: the geodesic kernel is not positive definite"
            )

    def to_dict(self) -> dict:
        if self.is_circle:
            geo = {"type": "circle", "T": self.geometry.T}
        else:
            geo = {"type": "star", "lengths": list(self.geometry.lengths)}
        return {"geometry": geo, "hurst": self.hurst, "dim": self.dim}

    @classmethod
    def from_dict(cls, doc: dict) -> "KernelSpec":
        try:
            geo = doc["geometry"]
            kind = geo["type"]
            if kind == "circle":
                geometry = CircleGeometry(float(geo["T"]))
            elif kind == "star":
                geometry = StarGeometry(tuple(geo["lengths"]))
            else:
                raise DomainError(f"unknown geometry type {kind!r}")
            return cls(geometry, float(doc["hurst"]), int(doc.get("dim", 1)))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed kernel spec document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "KernelSpec":
        return cls.from_dict(json.loads(text))


# --------------------------------------------------------------------------
# grids

@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered parameter locations.

    Point 0 is always the origin.  On a circle ``branch`` is all zeros and ``t``
    is increasing in ``[0, T)``.  On a star the origin is stored once with
    branch 0; the remaining points are grouped by branch with increasing arc
    position in ``(0, T_k]``.
    """

    geometry: Geometry
    branch: np.ndarray
    t: np.ndarray
    uniform: bool = field(default=False)

    def __post_init__(self):
        branch = np.asarray(self.branch, dtype=np.int64).copy()
        t = np.asarray(self.t, dtype=float).copy()
        if branch.shape != t.shape or t.ndim != 1 or t.size < 1:
            raise DomainError("grid needs matching 1-d branch and position arrays")
        if t[0] != 0.0 or branch[0] != 0:
            raise DomainError("grid must start at the origin")
        if np.count_nonzero(t == 0.0) != 1:
            raise DomainError("origin must appear exactly once")
        if isinstance(self.geometry, CircleGeometry):
            if np.any(branch != 0):
                raise DomainError("circle grids have a single branch")
            if np.any(np.diff(t) <= 0) or t[-1] >= self.geometry.T:
                raise DomainError("circle grid points must increase strictly within [0, T)")
        else:
            nb = self.geometry.n_branches
            if np.any(branch < 0) or np.any(branch >= nb):
                raise DomainError("branch index out of range")
            rest_b, rest_t = branch[1:], t[1:]
            if np.any(np.diff(rest_b) < 0):
                raise DomainError("star grid points must be grouped by branch")
            for k in range(nb):
                tk = rest_t[rest_b == k]
                if tk.size and (np.any(np.diff(tk) <= 0) or tk[0] <= 0
                                or tk[-1] > self.geometry.lengths[k] * (1 + 1e-12)):
                    raise DomainError(f"positions on branch {k} must increase within (0, T_k]")
        branch.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "branch", branch)
        object.__setattr__(self, "t", t)

    @classmethod
    def circle(cls, T: float, N: int) -> "Grid":
        """Uniform grid of ``N`` points ``k T / N`` on the circle."""
        if N < 1:
            raise DomainError("need at least one grid point")
        geometry = CircleGeometry(float(T))
        return cls(geometry, np.zeros(N, dtype=np.int64), np.arange(N) * (geometry.T / N), True)

    @classmethod
    def star(cls, lengths: Sequence[float], M) -> "Grid":
        """Origin plus ``M`` uniformly spaced points ``i T_k / M`` per branch."""
        geometry = StarGeometry(tuple(lengths))
        counts = np.broadcast_to(np.asarray(M, dtype=np.int64), (geometry.n_branches,))
        if np.any(counts < 1):
            raise DomainError("need at least one point per branch")
        branch = [0]
        t = [0.0]
        for k, (L, m) in enumerate(zip(geometry.lengths, counts)):
            branch.extend([k] * int(m))
            t.extend(np.arange(1, m + 1) * (L / m))
        uniform = bool(np.all(counts == counts[0]))
        return cls(geometry, np.array(branch), np.array(t), uniform)

    @classmethod
    def circle_points(cls, T: float, points) -> "Grid":
        """Arbitrary increasing circle grid; 0 is prepended when missing."""
        pts = np.asarray(points, dtype=float)
        if pts.size == 0 or pts[0] != 0.0:
            pts = np.concatenate([[0.0], pts])
        return cls(CircleGeometry(float(T)), np.zeros(pts.size, dtype=np.int64), pts)

    def __len__(self):
        return self.t.size

    @property
    def n_points(self) -> int:
        return self.t.size

    @property
    def is_circle(self) -> bool:
        return isinstance(self.geometry, CircleGeometry)

    def branch_indices(self, k: int) -> np.ndarray:
        """Indices of the points on branch ``k`` (origin first)."""
        if self.is_circle:
            if k != 0:
                raise DomainError("circle grids have a single branch 0")
            return np.arange(self.n_points)
        if not 0 <= k < self.geometry.n_branches:
            raise DomainError(f"unknown branch {k}")
        idx = np.flatnonzero(self.branch == k)
        return np.concatenate([[0], idx[idx != 0]])

    def weights(self, k: int = 0) -> np.ndarray:
        """Trapezoid weights of the points returned by :meth:`branch_indices`.

        Circle: periodic trapezoid rule (``T/N`` on a uniform grid).  Star:
        trapezoid rule on ``[0, T_k]`` with the origin as left endpoint.
        """
        idx = self.branch_indices(k)
        t = self.t[idx]
        if self.is_circle:
            gaps = np.diff(np.concatenate([t, [self.geometry.T]]))
            return 0.5 * (gaps + np.roll(gaps, 1))
        if t.size == 1:
            return np.zeros(1)
        gaps = np.diff(t)
        w = np.zeros(t.size)
        w[:-1] += 0.5 * gaps
        w[1:] += 0.5 * gaps
        return w

    def spacing(self, k: int = 0) -> float:
        """Mean mesh width on branch ``k``."""
        if self.is_circle:
            return self.geometry.T / self.n_points
        idx = self.branch_indices(k)
        return self.geometry.lengths[k] / max(idx.size - 1, 1)

    def index_of(self, t: float, k: int = 0) -> int:
        idx = self.branch_indices(k)
        hit = np.flatnonzero(np.isclose(self.t[idx], t, rtol=0, atol=1e-12))
        if hit.size == 0:
            raise DomainError(f"point t={t} on branch {k} not on grid")
        return int(idx[hit[0]])

    def to_dict(self) -> dict:
        return {"branch": self.branch.tolist(), "t": self.t.tolist()}


# --------------------------------------------------------------------------
# distances

def geodesic_circle(s, t, T):
    """Arc-length distance ``min(|s-t|, T-|s-t|)`` on a circle of length ``T``.

    >>> float(geodesic_circle(0.1, 0.9, 1.0))
    0.2
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(s > T) or np.any(t < 0) or np.any(t > T):
        raise DomainError(f"circle arguments must lie in [0, {T}]")
    D = np.abs(s - t)
    out = np.minimum(D, T - D)
    return out if out.ndim else float(out)


def geodesic_star(k, s, l, t, lengths=None):
    """Geodesic on a star: ``|s-t|`` on one branch, ``s+t`` through the origin."""
    k = np.asarray(k)
    l = np.asarray(l)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(k < 0) or np.any(l < 0):
        raise DomainError("branch indices must be non-negative")
    if lengths is not None:
        lengths = np.asarray(lengths, dtype=float)
        nb = lengths.size
        if np.any(k >= nb) or np.any(l >= nb):
            raise DomainError(f"unknown branch index for a {nb}-branch star")
        if np.any(s < 0) or np.any(t < 0) or np.any(s > lengths[k]) or np.any(t > lengths[l]):
            raise DomainError("arc position outside its branch")
    elif np.any(s < 0) or np.any(t < 0):
        raise DomainError("arc positions must be non-negative")
    out = np.where(k == l, np.abs(s - t), s + t)
    return out if out.ndim else float(out)


def _as_points(geometry, p):
    """Split a point (or array of points) into branch and position arrays."""
    if isinstance(geometry, CircleGeometry):
        t = np.asarray(p, dtype=float)
        return np.zeros(t.shape, dtype=np.int64), t
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1:] != (2,):
        raise DomainError("star points are (branch, position) pairs")
    return arr[..., 0].astype(np.int64), arr[..., 1]


def _geo(geometry, bp, tp, bq, tq):
    if isinstance(geometry, CircleGeometry):
        return geodesic_circle(tp, tq, geometry.T)
    return geodesic_star(bp, tp, bq, tq, geometry.lengths)


def geodesic(spec: KernelSpec, p, q):
    """Geodesic distance between points of ``spec``'s parameter space."""
    bp, tp = _as_points(spec.geometry, p)
    bq, tq = _as_points(spec.geometry, q)
    return _geo(spec.geometry, bp, tp, bq, tq)


def increment_variance(spec: KernelSpec, p, q):
    """``E (b(p) - b(q))^2 = geodesic(p, q)^{2H}`` per coordinate."""
    return np.power(geodesic(spec, p, q), 2 * spec.hurst)


def covariance(spec: KernelSpec, p, q):
    """Covariance of the origin-pinned field, obtained by polarization."""
    bp, tp = _as_points(spec.geometry, p)
    bq, tq = _as_points(spec.geometry, q)
    return _polarized(spec, bp, tp, bq, tq)


def _polarized(spec, bp, tp, bq, tq):
    g = spec.geometry
    two_h = 2 * spec.hurst
    zero = np.zeros((), dtype=np.int64)
    vp = np.power(_geo(g, bp, tp, zero, 0.0), two_h)
    vq = np.power(_geo(g, bq, tq, zero, 0.0), two_h)
    vpq = np.power(_geo(g, bp, tp, bq, tq), two_h)
    out = 0.5 * (vp + vq - vpq)
    return out if np.ndim(out) else float(out)


def cov_from_points(spec: KernelSpec, branch, t) -> np.ndarray:
    """Dense covariance for arbitrary (possibly unsorted) point arrays."""
    branch = np.asarray(branch, dtype=np.int64)
    t = np.asarray(t, dtype=float)
    if t.size > MAX_DENSE_POINTS:
        raise ResourceError(
            f"{t.size} points exceed the dense covariance bound of {MAX_DENSE_POINTS}"
        )
    C = _polarized(spec, branch[:, None], t[:, None], branch[None, :], t[None, :])
    C = np.atleast_2d(np.asarray(C, dtype=float))
    # symmetric by construction up to roundoff in the power; make it exact
    return 0.5 * (C + C.T)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    entries: np.ndarray
    spec: KernelSpec

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    @property
    def shape(self):
        return self.entries.shape


def build_cov_matrix(spec: KernelSpec, grid: Grid) -> CovarianceMatrix:
    """Gram matrix of the scalar field on ``grid`` (origin row identically 0)."""
    if type(grid.geometry) is not type(spec.geometry) or grid.geometry != spec.geometry:
        raise DomainError("grid geometry does not match the kernel spec")
    C = cov_from_points(spec, grid.branch, grid.t)
    C[0, :] = 0.0
    C[:, 0] = 0.0
    C.flags.writeable = False
    return CovarianceMatrix(C, spec)


# --------------------------------------------------------------------------
# diagnostics

class PDCheck(NamedTuple):
    pd: bool
    min_eigenvalue: float
    max_eigenvalue: float
    witness: np.ndarray | None


def check_positive_definite(m, tol: float = PD_TOL) -> PDCheck:
    """Declare ``m`` positive (semi)definite when ``lam_min >= -tol * lam_max``.

    When the test fails the eigenvector of ``lam_min`` is returned as a witness:
    its Rayleigh quotient is negative.
    """
    A = np.asarray(m, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("expected a square matrix")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(np.abs(A).max(initial=0.0), 1.0)):
        raise DomainError("matrix is not symmetric")
    if A.size == 0:
        return PDCheck(True, 0.0, 0.0, None)
    try:
        w, V = linalg.eigh(A)
    except linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    lmin, lmax = float(w[0]), float(w[-1])
    pd = lmin >= -tol * max(lmax, 0.0)
    return PDCheck(pd, lmin, lmax, None if pd else V[:, 0].copy())


def increment_cross_covariance(spec: KernelSpec, s, t, s2, t2):
    """``E (b(s) - b(t)) (b(s2) - b(t2))`` per coordinate.

    Equals 1/2 (v(s, t2) + v(s2, t) - v(t, t2) - v(s, s2)) with
    ``v = geodesic^{2H}``; reduces to the increment variance when the two
    pairs coincide.
    """
    g = spec.geometry
    pts = [_as_points(g, x) for x in (s, t, s2, t2)]
    (bs, ts), (bt, tt), (bs2, ts2), (bt2, tt2) = pts
    two_h = 2 * spec.hurst

    def v(bp, tp, bq, tq):
        return np.power(_geo(g, bp, tp, bq, tq), two_h)

    out = 0.5 * (v(bs, ts, bt2, tt2) + v(bs2, ts2, bt, tt)
                 - v(bt, tt, bt2, tt2) - v(bs, ts, bs2, ts2))
    return out if np.ndim(out) else float(out)


def increment_gram(spec: KernelSpec, times) -> np.ndarray:
    """Gram matrix of consecutive increments ``b(t_i) - b(t_{i-1})``."""
    b, t = _as_points(spec.geometry, times)
    i = np.arange(1, t.size)
    if spec.is_circle:
        s_, t_ = t[i - 1], t[i]
        G = increment_cross_covariance(spec, s_[:, None], t_[:, None], s_[None, :], t_[None, :])
    else:
        P = np.stack([b, t], axis=-1)
        ps, pt = P[i - 1], P[i]
        G = increment_cross_covariance(spec, ps[:, None], pt[:, None], ps[None, :], pt[None, :])
    G = np.atleast_2d(G)
    return 0.5 * (G + G.T)


def lnd_constant(spec: KernelSpec, times) -> float:
    """Tightest local-nondeterminism constant for a set of ordered times.

    This is the smallest ``k`` with
    ``Var(sum u_i X_i) >= k sum u_i^2 Var(X_i)`` for the consecutive increments
    ``X_i``, i.e. the minimum eigenvalue of the increment correlation matrix.
    """
    spec.require_admissible()
    b, t = _as_points(spec.geometry, times)
    if t.size < 2:
        raise DomainError("need at least two times")
    if spec.is_circle or np.all(b == b[0]):
        if np.any(np.diff(t) <= 0):
            raise DomainError("times must be strictly increasing (no repeats)")
    G = increment_gram(spec, times)
    D = np.diag(G)
    if np.any(D <= 0):
        raise DomainError("an increment has zero variance")
    scale = 1.0 / np.sqrt(D)
    corr = G * scale[:, None] * scale[None, :]
    if corr.shape == (1, 1):
        return 1.0
    return float(linalg.eigvalsh(corr)[0])
