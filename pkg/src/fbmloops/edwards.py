"""Edwards model as importance reweighting of the Gaussian ensemble.

A path with local time ``v`` gets raw weight ``exp(-g v)``.  The normalizer
``E exp(-g L)`` is estimated by the sample mean of the raw weights and
observables by self-normalized importance sampling.  Weights are formed in
log space and shifted by the maximum before exponentiating, so centered
(sign-indefinite) local times do not overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError
from .localtime import LocalTimeEstimate
from .sampler import PathEnsemble, loop_increments

#: largest log raw weight that can still be reported as a finite normalizer
LOG_MAX = math.log(np.finfo(float).max) - 1.0

MIN_ESS = 10.0


@dataclass(frozen=True, eq=False)
class EdwardsEstimate:
    """Reweighting of one ensemble at coupling ``g``."""

    g: object
    log_normalizer: float
    normalizer: float
    normalizer_stderr: float
    weights: np.ndarray
    ess: float
    observables: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.weights.size

    def record(self) -> dict:
        g = self.g.to_dict() if hasattr(self.g, "to_dict") else self.g
        return {
            "g": g,
            "normalizer": self.normalizer,
            "normalizer_stderr": self.normalizer_stderr,
            "log_normalizer": self.log_normalizer,
            "ess": self.ess,
            "n_samples": self.n_samples,
            "observables": {k: list(v) for k, v in self.observables.items()},
        }


def _values(est):
    return est.per_path if isinstance(est, LocalTimeEstimate) else np.asarray(est, dtype=float)


def edwards_weights(est, g) -> EdwardsEstimate:
    """Weights ``exp(-g v)`` for per-path values ``v``.

    ``est`` is a :class:`LocalTimeEstimate` or a plain array.  For a star,
    pass the combined local time and its :class:`CouplingWeights` as ``g``;
    the coupling is then already inside the values and the exponent is
    ``-v``.
    """
    v = _values(est)
    if v.ndim != 1 or v.size == 0:
        raise DomainError("need a non-empty 1-d array of per-path values")
    if not np.all(np.isfinite(v)):
        raise NumericError("per-path values contain non-finite entries")
    if hasattr(g, "g_self"):
        logw = -v
    else:
        g = float(g)
        if g < 0:
            raise DomainError("coupling g must be non-negative")
        logw = -g * v
    n = v.size
    top = float(logw.max())
    if top > LOG_MAX:
        raise NumericError(
            f"exp(-g L) overflows: largest exponent {top:.4g} (min value {v.min():.4g}); "
            "g is beyond the stable range for this ensemble"
        )
    w = np.exp(logw - top)
    s = w.sum()
    log_norm = top + math.log(s / n)
    norm = math.exp(log_norm)
    raw_sd = float(np.std(w, ddof=1)) * math.exp(top) if n > 1 else float("nan")
    stderr = raw_sd / math.sqrt(n)
    ess = float(s * s / np.dot(w, w))
    return EdwardsEstimate(g, log_norm, norm, stderr, w / s, ess)


def gyration_radius2(ens: PathEnsemble) -> np.ndarray:
    """Squared radius of gyration per path (grid-weighted)."""
    grid = ens.grid
    if grid.is_circle:
        w = grid.weights(0)
    else:
        w = np.zeros(grid.n_points)
        for k in range(grid.geometry.n_branches):
            w[grid.branch_indices(k)] += grid.weights(k)
    w = w / w.sum()
    c = np.einsum("p,npd->nd", w, ens.paths)
    r2 = np.sum((ens.paths - c[:, None, :]) ** 2, axis=-1)
    return r2 @ w


def antipodal_displacement2(ens: PathEnsemble) -> np.ndarray:
    """``|x(T/2) - x(0)|^2`` per loop."""
    grid = ens.grid
    if not grid.is_circle:
        raise DomainError("antipodal displacement is defined for loops")
    j = grid.index_of(grid.geometry.T / 2)
    return np.sum(ens.paths[:, j, :] ** 2, axis=-1)


def end_to_end2(ens: PathEnsemble, branch: int | None = None) -> np.ndarray:
    """Squared end-to-end distance of a star branch, averaged over branches by default."""
    grid = ens.grid
    if grid.is_circle:
        raise DomainError("end-to-end distance is defined for stars")
    nb = grid.geometry.n_branches
    ks = range(nb) if branch is None else [branch]
    ends = [grid.branch_indices(k)[-1] for k in ks]
    return np.mean([np.sum(ens.paths[:, j, :] ** 2, axis=-1) for j in ends], axis=0)


def closure_defect(ens: PathEnsemble) -> np.ndarray:
    return np.linalg.norm(loop_increments(ens).sum(axis=1), axis=-1)


OBSERVABLES = {
    "gyration": gyration_radius2,
    "antipodal": antipodal_displacement2,
    "end_to_end": end_to_end2,
}


@dataclass(frozen=True)
class ObservableEstimate:
    raw: float
    raw_stderr: float
    reweighted: float
    std_error: float
    ess: float
    unreliable: bool

    def __iter__(self):
        return iter((self.raw, self.reweighted, self.std_error))


def reweighted_observable(ens: PathEnsemble, ew: EdwardsEstimate, obs) -> ObservableEstimate:
    """Raw and self-normalized reweighted mean of an observable.

    ``obs`` is a name from :data:`OBSERVABLES`, a callable on the ensemble,
    or an array of per-path values.  The reweighted standard error uses the
    delta method ``sqrt(sum w_i^2 (f_i - mu)^2)`` with normalized ``w``.
    """
    if isinstance(obs, str):
        if obs not in OBSERVABLES:
            raise DomainError(f"unknown observable {obs!r}; choose from {sorted(OBSERVABLES)}")
        f = OBSERVABLES[obs](ens)
    elif callable(obs):
        f = np.asarray(obs(ens), dtype=float)
    else:
        f = np.asarray(obs, dtype=float)
    if f.shape != ew.weights.shape:
        raise DomainError("observable and weights come from different ensembles")
    n = f.size
    raw = float(f.mean())
    raw_se = float(f.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    w = ew.weights
    if ew.g == 0 or (not hasattr(ew.g, "g_self") and float(ew.g) == 0.0):
        mu, se = raw, raw_se
    else:
        mu = float(np.dot(w, f))
        se = float(math.sqrt(np.dot(w * w, (f - mu) ** 2)))
    unreliable = ew.ess < MIN_ESS
    if unreliable:
        warnings.warn(f"effective sample size {ew.ess:.1f} < {MIN_ESS:g}; reweighting unreliable",
                      RuntimeWarning, stacklevel=2)
    return ObservableEstimate(raw, raw_se, mu, se, ew.ess, unreliable)


def with_observables(ens: PathEnsemble, ew: EdwardsEstimate, names) -> EdwardsEstimate:
    """Copy of ``ew`` with the named observables filled in."""
    obs = dict(ew.observables)
    for name in names:
        o = reweighted_observable(ens, ew, name)
        obs[name] = (o.raw, o.reweighted, o.std_error)
    return EdwardsEstimate(ew.g, ew.log_normalizer, ew.normalizer, ew.normalizer_stderr,
                           ew.weights, ew.ess, obs)


@dataclass(frozen=True)
class StabilityScan:
    g: np.ndarray
    log_normalizer: np.ndarray
    ess: np.ndarray
    stable: np.ndarray
    ess_fraction: float

    @property
    def stable_range(self):
        """``(g_min, g_max)`` over stable couplings, or ``None``."""
        gs = self.g[self.stable]
        return (float(gs.min()), float(gs.max())) if gs.size else None

    def record(self) -> dict:
        return {
            "g": self.g.tolist(),
            "log_normalizer": self.log_normalizer.tolist(),
            "ess": self.ess.tolist(),
            "stable": self.stable.tolist(),
            "ess_fraction": self.ess_fraction,
            "stable_range": self.stable_range,
        }


def stability_scan(est, g_values, ess_fraction: float = 0.01) -> StabilityScan:
    """Couplings for which the normalizer is finite and ``ess >= fraction * n``."""
    v = _values(est)
    g_values = np.asarray(g_values, dtype=float)
    logz = np.full(g_values.size, np.inf)
    ess = np.zeros(g_values.size)
    for i, g in enumerate(g_values):
        try:
            ew = edwards_weights(v, g)
        except NumericError:
            continue
        logz[i] = ew.log_normalizer
        ess[i] = ew.ess
    stable = np.isfinite(logz) & (ess >= ess_fraction * v.size)
    return StabilityScan(g_values, logz, ess, stable, ess_fraction)
