import math
import warnings

import numpy as np
import pytest

from fbmloops import edwards as E
from fbmloops import kernel as K
from fbmloops import localtime as LT
from fbmloops import sampler as S
from fbmloops import starburst as SB
from fbmloops.errors import DomainError, NumericError


@pytest.fixture(scope="module")
def loop_ens():
    spec = K.KernelSpec.circle(1.0, 0.25, 2)
    return S.sample(spec, K.Grid.circle(1.0, 64), 3000, seed=2)


@pytest.fixture(scope="module")
def loop_est(loop_ens):
    return LT.local_time(loop_ens, 0.01)


def test_zero_coupling(loop_ens, loop_est):
    ew = E.edwards_weights(loop_est, 0.0)
    assert ew.normalizer == 1.0
    assert np.all(ew.weights == 1 / loop_est.n_samples)
    assert ew.ess == pytest.approx(loop_est.n_samples, rel=1e-12)
    for name in ("gyration", "antipodal"):
        o = E.reweighted_observable(loop_ens, ew, name)
        assert o.reweighted == o.raw


def test_weights_normalized_and_bounded(loop_est):
    for g in (0.5, 1.0, 2.0, 10.0):
        ew = E.edwards_weights(loop_est, g)
        assert abs(ew.weights.sum() - 1) <= 1e-12
        raw = np.exp(-g * loop_est.per_path)
        assert np.all(raw > 0) and np.all(raw <= 1)
        assert 0 < ew.normalizer <= 1
        assert 0 < ew.ess <= loop_est.n_samples
        assert ew.normalizer == pytest.approx(raw.mean(), rel=1e-12)


def test_normalizer_monotone(loop_est):
    norms = [E.edwards_weights(loop_est, g).normalizer for g in (0.0, 0.5, 1.0, 2.0, 4.0)]
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_log_space_handles_large_negative_values():
    v = np.array([-600.0, -599.0, -590.0])
    ew = E.edwards_weights(v, 1.0)
    assert np.isfinite(ew.log_normalizer) and abs(ew.weights.sum() - 1) <= 1e-12
    assert ew.weights[0] > ew.weights[1] > ew.weights[2]
    with pytest.raises(NumericError, match="overflows"):
        E.edwards_weights(np.array([-1e6, 0.0]), 1.0)


def test_errors(loop_est):
    with pytest.raises(DomainError):
        E.edwards_weights(loop_est, -1.0)
    with pytest.raises(DomainError):
        E.edwards_weights(np.array([]), 1.0)


def test_antipodal_raw_moment(loop_ens):
    ew = E.edwards_weights(np.zeros(loop_ens.n_samples), 0.0)
    o = E.reweighted_observable(loop_ens, ew, "antipodal")
    assert abs(o.raw - 2 * 0.5 ** 0.5) < 3 * o.raw_stderr


def test_self_repulsion_swells_loop(loop_ens, loop_est):
    ew = E.edwards_weights(loop_est, 5.0)
    o = E.reweighted_observable(loop_ens, ew, "gyration")
    assert o.reweighted >= o.raw - 3 * o.std_error


def test_low_ess_warns(loop_ens):
    v = np.zeros(loop_ens.n_samples)
    v[0] = -50.0
    ew = E.edwards_weights(v, 1.0)
    with pytest.warns(RuntimeWarning, match="effective sample size"):
        o = E.reweighted_observable(loop_ens, ew, "gyration")
    assert o.unreliable


def test_observable_shape_mismatch(loop_ens):
    ew = E.edwards_weights(np.zeros(5), 1.0)
    with pytest.raises(DomainError):
        E.reweighted_observable(loop_ens, ew, "gyration")
    with pytest.raises(DomainError):
        E.reweighted_observable(loop_ens, E.edwards_weights(np.zeros(loop_ens.n_samples), 1.0),
                                "nonsense")


def test_star_edwards():
    spec = K.KernelSpec.star((1.0, 1.0), 0.5, 2)
    ens = S.sample_star(spec, K.Grid.star((1.0, 1.0), 8), 400, seed=1)
    w = SB.CouplingWeights.uniform(2, 0.5, 0.5)
    est = SB.combined_local_time(ens, w, 0.02)
    ew = E.edwards_weights(est, w)
    assert abs(ew.weights.sum() - 1) <= 1e-12
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        o = E.reweighted_observable(ens, ew, "end_to_end")
    assert o.raw == pytest.approx(2.0, rel=0.15)
    rec = E.with_observables(ens, ew, ["end_to_end"]).record()
    assert rec["g"]["g_self"] == [0.5, 0.5]


def test_stability_scan():
    spec = K.KernelSpec.circle(1.0, 0.5, 2)
    ens = S.sample(spec, K.Grid.circle(1.0, 64), 1000, seed=5)
    est = LT.center(LT.local_time(ens, 0.01))
    scan = E.stability_scan(est, [0.0, 0.1, 1.0, 10.0, 1e3, 1e6])
    assert scan.stable[0] and scan.stable[1]
    assert not scan.stable[-1]
    assert scan.stable_range[0] == 0.0
    assert math.isinf(scan.log_normalizer[-1]) or scan.ess[-1] < 10
