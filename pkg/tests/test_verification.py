import json

import numpy as np
import pytest

from fbmloops import kernel as K
from fbmloops import verification as V


def test_report_verdict_semantics():
    rep = V.ExperimentReport("x", {"seed": 1})
    assert not rep.verdict
    rep.add("a", 1.0, 1.0, "exact", True)
    assert rep.verdict
    rep.add("b", 2.0, 1.0, "exact", False)
    assert not rep.verdict
    doc = rep.to_dict()
    assert doc["verdict"] == "fail" and doc["inputs"] == {"seed": 1}
    assert [r[-1] for r in rep.summary_rows()] == ["pass", "fail"]
    assert "FAIL" in str(rep)
    json.dumps(doc)


def test_pd_boundary_small():
    rep = V.verify_pd_boundary(N=(16,), H_list=(0.3, 0.5, 0.7))
    assert rep.verdict
    assert rep.values["N=16,H=0.7"] < -1e-6


def test_kernel_identity():
    assert V.verify_kernel_identity(n_pairs=200).verdict


def test_lnd_report():
    spec = K.KernelSpec.circle(1.0, 0.4, 1)
    rep = V.verify_lnd(spec, [np.linspace(0, 1, 8, endpoint=False), [0.0, 0.3, 0.6]])
    assert rep.verdict and rep.values["min_k"] > 0


def test_sampler_small():
    rep = V.verify_sampler(N=32, n=3000, n_pairs=4)
    assert rep.verdict, str(rep)
    assert rep.inputs["seed"] == 3


def test_mean_local_time_small():
    rep = V.verify_mean_local_time(grid_N=128, n=300, eps_ladder=(1e-2, 2.5e-3), rel_tol=0.25)
    assert rep.checks[-1].name == "extrapolated E L"
    assert all(c.passed for c in rep.checks[:-1]), str(rep)
    with pytest.raises(Exception):
        V.verify_mean_local_time(grid_N=127, n=10)


def test_log_divergence():
    rep = V.verify_log_divergence()
    assert rep.verdict, str(rep)
    assert rep.values["r2"] >= 0.999


def test_rate_half_small_reports_structure():
    rep = V.verify_rate_half(grid_N=128, n=400, eps_ladder=(0.02, 0.01))
    assert set(rep.values) >= {"m", "m_se", "exponent", "exponent_se"}
    assert np.all(np.asarray(rep.values["m"]) > 0)


def test_rate_continuum_positive():
    m = V.rate_half_continuum(eps_ladder=(0.04,), rtol=1e-5)
    assert m.shape == (1,) and m[0] > 0


def test_second_moment_small():
    rep = V.verify_second_moment(n=1500, n_pairs=30, eps=0.05, delta=0.2)
    assert rep.verdict, str(rep)


def test_star_small():
    rep = V.verify_star_independence(M=8, n=3000, n_cross=800, n_time_pairs=24, n_pairs=4)
    assert rep.verdict, str(rep)


def test_edwards_small():
    rep = V.verify_edwards(N=32, n=1500, critical_g=(0.01, 1.0, 100.0))
    assert rep.verdict, str(rep)


def test_reproducibility_and_determinism():
    kw = dict(N=32, n=600, n_pairs=3)
    rep = V.verify_reproducibility(V.verify_sampler, (1, 3), **kw)
    assert rep.verdict, str(rep)
    a = V.verify_sampler(**kw).to_dict()
    b = V.verify_sampler(**kw).to_dict()
    a.pop("runtime_s")
    b.pop("runtime_s")
    assert a == b


def test_reproducibility_catches_difference():
    calls = []

    def drifting(threads=None):
        calls.append(threads)
        rep = V.ExperimentReport("drift", {})
        rep.add("x", 1.0 + len(calls) * 1e-6, 1.0, "loose", True)
        return rep

    assert not V.verify_reproducibility(drifting, (1, 2)).verdict
