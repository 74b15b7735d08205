"""Regularized self-intersection local times and their moments.

For a path ``x`` and ``eps > 0`` the regularized local time is

    L_eps = int int_{s < t} delta_eps(x(t) - x(s)) ds dt,
    delta_eps(y) = (2 pi eps)^{-d/2} exp(-|y|^2 / (2 eps)).

On a grid it is evaluated as a product-weight sum over strictly ordered point
pairs (the diagonal is excluded).  The pair set can be split by geodesic
separation into a near part ``Lambda`` (separation < delta) and a far part
``Gamma`` (separation >= delta).

Expectations follow from ``E delta_eps(X) = (2 pi (sigma^2 + eps))^{-d/2}`` for
``X ~ N(0, sigma^2 I_d)``, and second moments from the bivariate version with
the increment cross-covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate

from .errors import DivergenceError, DomainError, NumericError
from .kernel import Grid, KernelSpec, _geo, geodesic_circle
from .sampler import BLOCK, PathEnsemble, SeedSpec, _run_blocks, sample_points

PARTS = ("full", "lambda", "gamma")


def heat_kernel(x, eps: float):
    """Gaussian mollifier ``(2 pi eps)^{-d/2} exp(-|x|^2 / (2 eps))``.

    ``x`` has the coordinates on its last axis.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    d = x.shape[-1]
    r2 = np.sum(x * x, axis=-1)
    out = (2 * np.pi * eps) ** (-d / 2) * np.exp(-r2 / (2 * eps))
    return out if np.ndim(out) else float(out)


def _kernel_from_r2(r2, eps, d, out=None):
    arg = np.multiply(r2, -1.0 / (2 * eps), out=out)
    # below e^-700 the value is irrelevant; clipping keeps exp off subnormals
    np.maximum(arg, -700.0, out=arg)
    np.exp(arg, out=arg)
    arg *= (2 * np.pi * eps) ** (-d / 2)
    return arg


@dataclass(frozen=True, eq=False)
class LocalTimeEstimate:
    """Per-path local-time values with the metadata needed to interpret them."""

    per_path: np.ndarray
    epsilon: float
    centered: bool = False
    delta: float | None = None
    part: str = "full"
    grid: Grid | None = None
    spec: KernelSpec | None = None
    quantity: str = "L_eps"
    shift: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "per_path", np.asarray(self.per_path, dtype=float))

    @property
    def n_samples(self) -> int:
        return self.per_path.size

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_path)) if self.n_samples else float("nan")

    @property
    def std_error(self) -> float:
        n = self.n_samples
        if n < 2:
            return float("nan")
        return float(np.std(self.per_path, ddof=1) / math.sqrt(n))

    def record(self) -> dict:
        """JSON-ready summary (per-path values are not included)."""
        rec = {
            "quantity": self.quantity,
            "part": self.part,
            "centered": self.centered,
            "eps": self.epsilon,
            "delta": self.delta,
            "n_samples": self.n_samples,
            "grid_N": None if self.grid is None else self.grid.n_points,
            "mean": self.mean,
            "std_error": self.std_error,
            "shift": self.shift,
        }
        if self.spec is not None:
            rec.update({"H": self.spec.hurst, "d": self.spec.dim})
            rec["T"] = self.spec.geometry.T if self.spec.is_circle else list(self.spec.geometry.lengths)
        rec.update(self.meta)
        return rec


# --------------------------------------------------------------------------
# pair sums

def _check_delta(delta, half):
    if delta is None:
        return
    if not (0 < delta <= half * (1 + 1e-12)):
        raise DomainError(f"gap delta must lie in (0, {half}], got {delta}")


def _near_mask(sep, delta, half):
    """Pairs counted in the near part.  delta = T/2 takes every pair."""
    if delta >= half * (1 - 1e-12):
        return np.ones_like(sep, dtype=bool)
    # a pair at separation delta up to roundoff counts as far on every grid path
    return sep < delta * (1 - 1e-12)


def _lag_sums(X, eps_list, max_lag):
    """``S[e, b, m-1] = sum_i delta_eps(x_{i+m} - x_i)`` over cyclic lags m."""
    B, N, d = X.shape
    S = np.zeros((len(eps_list), B, max_lag))
    Xt = np.ascontiguousarray(np.moveaxis(X, 2, 0))
    r2 = np.empty((B, N))
    tmp = np.empty((B, N))
    for m in range(1, max_lag + 1):
        r2.fill(0.0)
        for x in Xt:
            np.subtract(x[:, m:], x[:, :N - m], out=tmp[:, :N - m])
            np.subtract(x[:, :m], x[:, N - m:], out=tmp[:, N - m:])
            tmp *= tmp
            r2 += tmp
        for e, eps in enumerate(eps_list):
            S[e, :, m - 1] = _kernel_from_r2(r2, eps, d, out=tmp).sum(axis=1)
    return S


def _uniform_lag_weights(grid, delta, part):
    """Weight per cyclic lag for a uniform circle grid (unordered pairs once)."""
    N = grid.n_points
    T = grid.geometry.T
    h = T / N
    M = N // 2
    m = np.arange(1, M + 1)
    c = np.ones(M)
    if N % 2 == 0 and M >= 1:
        c[-1] = 0.5  # lag N/2 is visited from both ends
    sep = m * h
    if part != "full":
        near = _near_mask(sep, delta, T / 2)
        c = c * (near if part == "lambda" else ~near)
    return c * h * h


def _general_pair_weights(grid, delta, part, spec_geo):
    """Upper-triangular product weights over ordered pairs i < j."""
    w = grid.weights(0)
    W = np.triu(np.outer(w, w), k=1)
    if part != "full":
        sep = _geo(spec_geo, grid.branch[:, None], grid.t[:, None],
                   grid.branch[None, :], grid.t[None, :])
        near = _near_mask(sep, delta, grid.geometry.T / 2)
        W = W * (near if part == "lambda" else ~near)
    return W


def _weighted_pair_sum(X, Y, W, eps_list):
    """``sum_ij W_ij delta_eps(x_i - y_j)`` per path; X (B,P,d), Y (B,Q,d)."""
    B, _, d = X.shape
    out = np.zeros((len(eps_list), B))
    nz = W != 0
    rows = np.flatnonzero(nz.any(axis=1))
    for b in range(B):
        x = X[b, rows]
        diff = x[:, None, :] - Y[b][None, :, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        Wr = W[rows]
        for e, eps in enumerate(eps_list):
            out[e, b] = np.sum(Wr * _kernel_from_r2(r2, eps, d))
    return out


def local_time_values(paths, grid: Grid, eps, delta=None, part="full", threads=None):
    """Loop local times for many paths and several eps at once.

    Returns an array ``(n_paths, n_eps)``.  ``part`` selects all ordered pairs,
    the near pairs (``"lambda"``) or the far pairs (``"gamma"``).
    """
    if not grid.is_circle:
        raise DomainError("use the starburst functions for star grids")
    eps_list = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any(eps_list <= 0):
        raise DomainError("eps must be positive")
    if part not in PARTS:
        raise DomainError(f"part must be one of {PARTS}")
    if part != "full":
        if delta is None:
            raise DomainError("a gap delta is required for the split parts")
        _check_delta(delta, grid.geometry.T / 2)
    X = np.asarray(paths, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.shape[1] != grid.n_points:
        raise DomainError("path length does not match the grid")
    if grid.n_points < 2:
        raise DomainError("need at least two grid points")
    n = X.shape[0]

    if grid.uniform:
        c = _uniform_lag_weights(grid, delta, part)
        max_lag = int(np.max(np.flatnonzero(c), initial=-1)) + 1

        def work(a, b):
            if max_lag == 0:
                return np.zeros((len(eps_list), b - a))
            S = _lag_sums(X[a:b], eps_list, max_lag)
            return S @ c[:max_lag]
    else:
        W = _general_pair_weights(grid, delta, part, grid.geometry)

        def work(a, b):
            return _weighted_pair_sum(X[a:b], X[a:b], W, eps_list)

    parts = _run_blocks(work, n, threads)
    if not parts:
        return np.zeros((0, eps_list.size))
    return np.concatenate(parts, axis=1).T


def local_time_path(path, grid: Grid, eps: float) -> float:
    """Regularized local time of one loop path on ``grid``."""
    return float(local_time_values(path, grid, [eps])[0, 0])


def local_time(ens: PathEnsemble, eps: float, delta=None, part="full",
               threads=None) -> LocalTimeEstimate:
    vals = local_time_values(ens.paths, ens.grid, [eps], delta, part, threads)[:, 0]
    name = {"full": "L_eps", "lambda": "Lambda_eps", "gamma": "Gamma_eps"}[part]
    return LocalTimeEstimate(vals, float(eps), False, delta, part, ens.grid, ens.spec, name)


def local_time_gap_split(path, grid: Grid, eps: float, delta: float) -> dict:
    """Split one path's local time into far (gamma) and near (lambda) parts."""
    _check_delta(delta, grid.geometry.T / 2)
    gamma = float(local_time_values(path, grid, [eps], delta, "gamma")[0, 0])
    lam = float(local_time_values(path, grid, [eps], delta, "lambda")[0, 0])
    return {"gamma": gamma, "lambda": lam}


# --------------------------------------------------------------------------
# expectations

def _profile(spec, eps):
    d = spec.dim
    two_h = 2 * spec.hurst
    return lambda tau: (2 * np.pi * (np.power(tau, two_h) + eps)) ** (-d / 2)


def _quad_from_zero(f, a, b, eps, hurst):
    """Integrate on ``[a, b]`` with geometric refinement toward 0.

    The integrand may behave like ``tau^{-dH}`` near 0; dyadic sub-intervals
    down to well below the smoothing scale keep each piece benign.
    """
    if b <= a:
        return 0.0
    if a > 0:
        edges = [a, b]
    else:
        floor = 1e-14 * b
        if eps > 0:
            floor = min(floor, 1e-3 * eps ** (1 / (2 * hurst)))
        edges = [b]
        while edges[-1] > floor:
            edges.append(edges[-1] / 2)
        edges.append(0.0)
        edges = edges[::-1]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(f, lo, hi, limit=200, epsabs=0.0, epsrel=1e-11)
        total += val
    return total


def expected_L_eps_analytic(spec: KernelSpec, eps: float, delta=None, part="full") -> float:
    """``E L_eps`` (or its near/far part) for a continuum loop, by quadrature.

    After integrating out the rotation, ``E L_eps = T int_0^{T/2} f(tau) dtau``
    with ``f(tau) = (2 pi (tau^{2H} + eps))^{-d/2}``; the near part integrates
    over ``[0, delta)`` and the far part over ``[delta, T/2]``.  ``eps = 0`` is
    accepted only where the result is finite, and uses the closed form
    ``T (2 pi)^{-d/2} a^{1-dH} / (1 - dH)`` for the interval ``[0, a]``.
    """
    if not spec.is_circle:
        raise DomainError("loop expectation needs a circle geometry")
    if eps < 0:
        raise DomainError("eps must be non-negative")
    if part not in PARTS:
        raise DomainError(f"part must be one of {PARTS}")
    T = spec.geometry.T
    half = T / 2
    if part == "full":
        lo, hi = 0.0, half
    else:
        if delta is None:
            raise DomainError("a gap delta is required for the split parts")
        _check_delta(delta, half)
        lo, hi = (0.0, min(delta, half)) if part == "lambda" else (min(delta, half), half)
    d, H = spec.dim, spec.hurst
    if eps == 0 and lo == 0.0:
        if d * H >= 1:
            raise DivergenceError(f"E L diverges for Hd = {d * H:g} >= 1")
        return T * (2 * np.pi) ** (-d / 2) * hi ** (1 - d * H) / (1 - d * H)
    return T * _quad_from_zero(_profile(spec, eps), lo, hi, eps, H)


def expected_L_eps_unreduced(spec: KernelSpec, eps: float) -> float:
    """Same as :func:`expected_L_eps_analytic` via the ``(T - tau)`` weighted form.

    ``(2 pi)^{-d/2} int_0^T (T - tau) (d(tau)^{2H} + eps)^{-d/2} dtau``;
    kept as an independent route for cross-checks.
    """
    T = spec.geometry.T
    f = _profile(spec, eps)
    left = _quad_from_zero(lambda u: (T - u) * f(u), 0.0, T / 2, eps, spec.hurst)
    # tau in [T/2, T]: substitute v = T - tau, geodesic v
    right = _quad_from_zero(lambda v: v * f(v), 0.0, T / 2, eps, spec.hurst)
    return left + right


def expected_line_local_time(length: float, spec: KernelSpec, eps: float) -> float:
    """``E`` of the ordered-pair local time of plain fBm on ``[0, length]``."""
    if eps < 0:
        raise DomainError("eps must be non-negative")
    d, H = spec.dim, spec.hurst
    if eps == 0:
        if d * H >= 1:
            raise DivergenceError(f"E L diverges for Hd = {d * H:g} >= 1")
        a = 1 - d * H
        return (2 * np.pi) ** (-d / 2) * (length ** (1 + a) / a - length ** (1 + a) / (1 + a))
    f = _profile(spec, eps)
    return _quad_from_zero(lambda u: (length - u) * f(u), 0.0, length, eps, H)


def expected_local_time_grid(spec: KernelSpec, grid: Grid, eps: float, delta=None,
                             part="full") -> float:
    """Exact expectation of the grid estimator :func:`local_time_values`.

    This is the same pair sum with ``delta_eps(x_j - x_i)`` replaced by its
    Gaussian mean, so it carries the same discretization as the estimator.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    d, two_h = spec.dim, 2 * spec.hurst
    if grid.uniform:
        c = _uniform_lag_weights(grid, delta, part)
        m = np.arange(1, c.size + 1)
        sep = geodesic_circle(m * grid.geometry.T / grid.n_points % grid.geometry.T, 0.0,
                              grid.geometry.T)
        f = (2 * np.pi * (np.power(sep, two_h) + eps)) ** (-d / 2)
        return float(grid.n_points * np.sum(c * f))
    W = _general_pair_weights(grid, delta, part, grid.geometry)
    sep = _geo(grid.geometry, grid.branch[:, None], grid.t[:, None],
               grid.branch[None, :], grid.t[None, :])
    f = (2 * np.pi * (np.power(sep, two_h) + eps)) ** (-d / 2)
    return float(np.sum(W * f))


def center(est: LocalTimeEstimate, spec: KernelSpec | None = None,
           method: str = "grid") -> LocalTimeEstimate:
    """Subtract the analytic expectation from every per-path value.

    ``method="grid"`` uses the exact mean of the grid estimator (same pair set
    and weights); ``"continuum"`` uses the quadrature over the matching
    continuum domain.
    """
    if est.centered:
        raise DomainError("estimate is already centered")
    spec = spec or est.spec
    if spec is None:
        raise DomainError("a kernel spec is needed to center")
    if est.part not in PARTS:
        raise DomainError(f"no analytic expectation for part {est.part!r}")
    if method == "grid":
        if est.grid is None:
            raise DomainError("grid-consistent centering needs the estimate's grid")
        shift = expected_local_time_grid(spec, est.grid, est.epsilon, est.delta, est.part)
    elif method == "continuum":
        shift = expected_L_eps_analytic(spec, est.epsilon, est.delta, est.part)
    else:
        raise DomainError(f"unknown centering method {method!r}")
    return replace(est, per_path=est.per_path - shift, centered=True, shift=shift,
                   quantity=est.quantity + ",c")


# --------------------------------------------------------------------------
# second moment of the near part

def _geo_circle_diff(x, T):
    r = np.mod(x, T)
    return np.minimum(r, T - r)


def _pair_pair_density(spec, u, tau, tau2, eps, eps2=None):
    """Bivariate Gaussian factor for pairs (0, tau) and (u, u + tau2).

    With two smoothing scales the first pair is mollified at ``eps`` and the
    second at ``eps2``.
    """
    eps2 = eps if eps2 is None else eps2
    T = spec.geometry.T
    two_h = 2 * spec.hurst
    d = spec.dim

    def v(x):
        return np.power(_geo_circle_diff(x, T), two_h)

    lam = v(tau)
    rho = v(tau2)
    mu = 0.5 * (v(u + tau2) + v(u - tau) - v(u + tau2 - tau) - v(u))
    det = (lam + eps) * (rho + eps2) - mu * mu
    return (2 * np.pi) ** (-d) * np.power(det, -d / 2)


def _u_breakpoints(T, tau, tau2):
    pts = [np.zeros_like(tau), -tau2, tau, tau - tau2]
    pts = pts + [p + T / 2 for p in pts]
    P = np.mod(np.stack(pts, axis=-1), T)
    P = np.concatenate([P, np.full(P.shape[:-1] + (1,), T)], axis=-1)
    P[..., 0] = 0.0
    return np.sort(P, axis=-1)


def second_moment_analytic(spec: KernelSpec, eps: float, delta: float,
                           rtol: float = 1e-6) -> float:
    """``E Lambda_eps^2`` for the near part of a continuum loop.

    The four-fold integral over pairs ``(s, s + tau)``, ``(s', s' + tau')``
    with ``tau, tau' < delta`` reduces by rotation invariance to
    ``T int du dtau dtau'`` and by the pair-swap symmetry to twice the
    triangle ``tau' < tau``.  Each layer uses double-exponential quadrature
    on pieces whose ends are the cusps of the integrand.
    """
    return cross_moment_analytic(spec, eps, eps, delta, rtol)


def cross_moment_analytic(spec: KernelSpec, eps: float, eps2: float, delta: float,
                          rtol: float = 1e-6) -> float:
    """``E Lambda_eps Lambda_eps2`` for the near part of a continuum loop."""
    if not spec.is_circle:
        raise DomainError("second moment is implemented for loops")
    if not (eps > 0 and eps2 > 0):
        raise DomainError("eps must be positive")
    T = spec.geometry.T
    _check_delta(delta, T / 2)
    inner_tol = rtol * 1e-2
    # lower bound of the u-integrand: both pairs at the widest separation
    floor = (2 * np.pi * (delta ** (2 * spec.hurst) + max(eps, eps2))) ** (-spec.dim)
    inner_atol = inner_tol * floor * T / 8
    worst = [0.0]

    def integrand(u, tau, tau2):
        if eps == eps2:
            return _pair_pair_density(spec, u, tau, tau2, eps)
        # the triangle tau2 < tau stands for both orderings of the pairs
        return 0.5 * (_pair_pair_density(spec, u, tau, tau2, eps, eps2)
                      + _pair_pair_density(spec, u, tau, tau2, eps2, eps))

    def inner(tau, tau2):
        tau, tau2 = np.broadcast_arrays(tau, tau2)
        P = _u_breakpoints(T, tau, tau2)
        a, b = P[..., :-1], P[..., 1:]
        res = integrate.tanhsinh(
            integrand, a, b, args=(tau[..., None], tau2[..., None]),
            rtol=inner_tol, atol=inner_atol, maxlevel=12,
        )
        bad = ~res.success & (b > a)
        if np.any(bad):
            worst[0] = max(worst[0], float(np.max(res.error[bad]) / inner_atol))
        return res.integral.sum(axis=-1)

    def middle(tau):
        # integrate tau2 over [0, tau], split where tau + tau2 = T/2 can cross
        cut = np.clip(T / 2 - tau, 0.0, tau)
        total = 0.0
        for lo, hi in ((np.zeros_like(tau), cut), (cut, tau)):
            r = integrate.tanhsinh(lambda t2, tt: inner(tt, t2), lo, hi, args=(tau,),
                                   rtol=rtol * 1e-1, atol=rtol * 1e-4 * floor * T * delta,
                                   maxlevel=10)
            total = total + r.integral
        return total

    cut = min(delta, T / 4)
    total = 0.0
    for lo, hi in ((0.0, cut), (cut, delta)):
        if hi <= lo:
            continue
        res = integrate.tanhsinh(middle, lo, hi, rtol=rtol, atol=0.0, maxlevel=10)
        if not res.success:
            raise NumericError(
                f"outer quadrature did not converge (error estimate {float(res.error):.3e})"
            )
        total += float(res.integral)
    if worst[0] > 10:
        raise NumericError(
            f"inner quadrature missed its tolerance by a factor {worst[0]:.1f}"
        )
    return 2 * T * total


def second_moment_grid(spec: KernelSpec, grid: Grid, eps: float, delta: float) -> float:
    """Exact ``E Lambda_eps^2`` of the grid estimator on a uniform loop grid.

    Sum over pairs of near pairs of the bivariate Gaussian factor with the
    same product weights as :func:`local_time_values`.
    """
    if not (grid.is_circle and grid.uniform):
        raise DomainError("grid second moment needs a uniform circle grid")
    if not eps > 0:
        raise DomainError("eps must be positive")
    c = _uniform_lag_weights(grid, delta, "lambda")
    lags = np.flatnonzero(c) + 1
    cw = c[lags - 1]
    N = grid.n_points
    h = grid.geometry.T / N
    u = np.arange(N) * h
    total = 0.0
    for m, wm in zip(lags, cw):
        F = _pair_pair_density(spec, u[None, :], m * h, (lags * h)[:, None], eps)
        total += wm * np.sum(cw[:, None] * F)
    return float(N * total)


# --------------------------------------------------------------------------
# randomized continuous-time estimator

def random_pair_moments(spec: KernelSpec, n: int, n_pairs: int, eps, delta: float,
                        seed: SeedSpec | int = 0, threads=None):
    """Unbiased per-path estimates of ``Lambda_eps`` and ``Lambda_eps^2``.

    Each path is drawn at ``n_pairs`` random pairs ``(s, s + tau)`` with
    ``s`` uniform on the circle and ``tau = delta U^2`` (density
    ``1 / (2 sqrt(delta tau))``, which follows the near-diagonal peak).  The
    mean of the importance-weighted kernel values estimates ``Lambda_eps``
    and the off-diagonal U-statistic estimates ``Lambda_eps^2``, both without
    grid discretization bias.

    Returns ``(first, second)`` of shape ``(n, n_eps)``.
    """
    if not spec.is_circle:
        raise DomainError("random pairs are implemented for loops")
    spec.require_admissible()
    seed = seed if isinstance(seed, SeedSpec) else SeedSpec(seed)
    eps_list = np.atleast_1d(np.asarray(eps, dtype=float))
    T = spec.geometry.T
    _check_delta(delta, T / 2)
    K = int(n_pairs)
    if K < 2:
        raise DomainError("need at least two pairs per path")

    def one(i):
        rng = seed.rng(i, stream=1)
        s = rng.uniform(0.0, T, K)
        tau = delta * rng.uniform(0.0, 1.0, K) ** 2
        tau = np.maximum(tau, 1e-300)
        t = np.mod(s + tau, T)
        pts = np.concatenate([[0.0], s, t])
        X = sample_points(spec, np.zeros(pts.size, dtype=np.int64), pts, rng)
        diff = X[1 + K:] - X[1:1 + K]
        r2 = np.einsum("kd,kd->k", diff, diff)
        q = 1.0 / (2.0 * np.sqrt(delta * tau))
        first = np.empty(eps_list.size)
        second = np.empty(eps_list.size)
        for e, ep in enumerate(eps_list):
            v = T * _kernel_from_r2(r2, ep, spec.dim) / q
            sv = v.sum()
            first[e] = sv / K
            second[e] = (sv * sv - np.dot(v, v)) / (K * (K - 1))
        return first, second

    def work(a, b):
        out = [one(i) for i in range(a, b)]
        return (np.array([o[0] for o in out]).reshape(b - a, -1),
                np.array([o[1] for o in out]).reshape(b - a, -1))

    parts = _run_blocks(work, n, threads)
    if not parts:
        z = np.zeros((0, eps_list.size))
        return z, z.copy()
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


# --------------------------------------------------------------------------
# extrapolation

def richardson_eps(values, ratio: float = 4.0, order: int = 1):
    """Romberg table over an eps ladder ``eps_0 / ratio^k`` (last axis).

    Assumes an error expansion in integer powers of eps starting at
    ``order``.  Returns ``(estimate, residual)`` where the residual is the
    change between the last two entries of the final diagonal.
    """
    V = np.asarray(values, dtype=float)
    rows = [V[..., k] for k in range(V.shape[-1])]
    diag = [rows[-1]]
    p = order
    while len(rows) > 1:
        f = ratio ** p
        rows = [(f * rows[k + 1] - rows[k]) / (f - 1) for k in range(len(rows) - 1)]
        diag.append(rows[-1])
        p += 1
    est = diag[-1]
    resid = diag[-1] - diag[-2] if len(diag) > 1 else np.zeros_like(est)
    return est, resid


def richardson_grid(coarse, fine, exponent: float, refinement: float = 2.0):
    """Remove a leading ``h^exponent`` error from a coarse/fine pair."""
    f = refinement ** exponent
    return (f * np.asarray(fine) - np.asarray(coarse)) / (f - 1)


def ladder(eps0: float, rungs: int, ratio: float = 4.0) -> np.ndarray:
    return eps0 / ratio ** np.arange(rungs)


def block_size() -> int:
    return BLOCK
