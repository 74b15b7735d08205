"""Acceptance criteria, each at its stated parameters and tolerance.

Every test records a one-line verdict that ``conftest.py`` prints in the
terminal summary, so ``pytest tests/test_acceptance.py`` ends with a table.
"""

import pytest

from fbmloops import verification as V

RESULTS = {}


def _record(key, title, rep, limit_s, extra=""):
    ok = rep.verdict and rep.runtime < limit_s
    limit = f"limit {limit_s:g} s" if limit_s != float("inf") else "no time limit"
    line = f"[{'PASS' if ok else 'FAIL'}] {key} {title}: {rep.runtime:.1f} s ({limit}){extra}"
    RESULTS[key] = line
    print(line)
    print(rep)
    assert rep.verdict, str(rep)
    assert rep.runtime < limit_s


def test_c01_pd_boundary():
    rep = V.verify_pd_boundary(T=1.0, N=(16, 64, 256), H_list=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7),
                               pd_tol=1e-8, fail_tol=1e-6)
    _record("C01", "PD boundary", rep, 10)


def test_c02_kernel_identity():
    rep = V.verify_kernel_identity(T=1.0, n_pairs=1000, rtol=1e-12)
    _record("C02", "kernel identity", rep, 1)


def test_c03_sampler_fidelity():
    rep = V.verify_sampler(H=0.25, d=2, T=1.0, N=128, n=20000, n_pairs=10)
    _record("C03", "sampler fidelity", rep, 60)


@pytest.mark.parametrize("H,target", [(0.25, 0.225079), (0.3, 0.301532)])
def test_c04_mean_local_time(H, target):
    rep = V.verify_mean_local_time(H=H, d=2, T=1.0, rel_tol=0.05)
    est = rep.values["extrapolated"]
    rel = est / target - 1
    rep.add(f"extrapolated vs {target}", est, target, "5% relative", abs(rel) <= 0.05)
    _record(f"C04 H={H}", "mean local time", rep, 300,
            f", extrapolated {est:.6f} vs {target} ({rel:+.2%})")


def test_c05_log_divergence():
    rep = V.verify_log_divergence(d=2, T=1.0, r2_min=0.999, slope_tol=0.10)
    _record("C05", "log divergence at Hd=1", rep, 30, f", R^2 {rep.values['r2']:.6f}")


@pytest.mark.slow
def test_c06_rate_half():
    rep = V.verify_rate_half(H=0.5, d=2, delta=0.1, n=20000, ratio=4.0, min_exponent=0.3)
    _record("C06", "eps^1/2 rate", rep, 600,
            f", exponent {rep.values['exponent']:.3f} +- {rep.values['exponent_se']:.3f}")


def test_c07_second_moment():
    rep = V.verify_second_moment(H=0.25, d=2, eps=0.01, delta=0.25)
    _record("C07", "second moment", rep, 600)


def test_c08_star_independence():
    rep = V.verify_star_independence(H=0.5, d=2, n_pairs=10)
    _record("C08", "starburst independence", rep, 120)


def test_c09_edwards():
    rep = V.verify_edwards(g_list=(0.5, 1.0, 2.0))
    scan = rep.values["stability_scan"]
    _record("C09", "Edwards suite", rep, 300, f", stable g range {scan['stable_range']}")


@pytest.mark.parametrize("experiment", [V.verify_sampler, V.verify_second_moment,
                                        V.verify_edwards],
                         ids=["sampler", "second_moment", "edwards"])
def test_c10_reproducibility(experiment):
    rep = V.verify_reproducibility(experiment, thread_counts=(1, 2, 4), rtol=1e-12)
    _record(f"C10 {experiment.__name__}", "thread-count reproducibility", rep, float("inf"))
