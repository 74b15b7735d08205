"""Command-line entry point: ``python -m fbmloops <subcommand> ...``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 a
verification verdict failed.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import os
import sys

import numpy as np

from . import edwards, io, localtime, starburst, verification
from .errors import FbmLoopsError, NumericError
from .kernel import Grid, KernelSpec
from .sampler import SeedSpec, sample

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_VERDICT = 0, 1, 2, 3

DEFAULTS = {
    "geometry": "circle", "T": 1.0, "lengths": "1,1", "H": "0.25", "d": 1, "N": 128,
    "n": 1000, "seed": 0, "method": "auto", "format": None, "eps": "0.01", "delta": None,
    "part": "full", "center": "none", "g": "1", "g_self": None, "g_cross": None,
    "observables": "", "pairs": None, "rtol": 1e-6, "summary": None, "per_path": None,
}

REQUIRED = {
    "sample": ("out",),
    "loctime": ("input",),
    "star": ("input",),
    "edwards": ("input",),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fbmloops", description="fBm loops, starbursts and their local times")
    p.add_argument("--config", help="JSON file with option values (flags take precedence)")
    p.add_argument("--threads", type=int, help="worker threads (default: $FBMLOOPS_THREADS or 1)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, *, model=True, out=True):
        sp.add_argument("--config", default=argparse.SUPPRESS)
        sp.add_argument("--threads", type=int, default=argparse.SUPPRESS)
        if model:
            sp.add_argument("--geometry", choices=["circle", "star"])
            sp.add_argument("--T", type=float, help="loop length")
            sp.add_argument("--lengths", help="comma-separated branch lengths")
            sp.add_argument("--H", help="Hurst index (comma list for verify pd)")
            sp.add_argument("--d", type=int, help="ambient dimension")
            sp.add_argument("--N", type=int, help="grid points (loop) or per branch (star)")
        if out:
            sp.add_argument("--out", help="output file (default: stdout for JSON)")

    s = sub.add_parser("sample", help="draw an ensemble and save it")
    common(s)
    s.add_argument("--n", type=int, help="number of paths")
    s.add_argument("--seed", type=int)
    s.add_argument("--method", choices=["auto", "circulant", "dense"])
    s.add_argument("--format", choices=["binary", "csv"])

    lt = sub.add_parser("loctime", help="regularized local time of a saved loop ensemble")
    common(lt, model=False)
    lt.add_argument("--in", dest="input")
    lt.add_argument("--eps", help="comma-separated eps values")
    lt.add_argument("--delta", type=float)
    lt.add_argument("--part", choices=list(localtime.PARTS))
    lt.add_argument("--center", choices=["none", "grid", "continuum"])
    lt.add_argument("--per-path", dest="per_path", help="CSV file for per-path values")

    mo = sub.add_parser("moments", help="analytic expectations by quadrature")
    common(mo)
    mo.add_argument("--eps")
    mo.add_argument("--delta", type=float)
    mo.add_argument("--rtol", type=float)

    st = sub.add_parser("star", help="cross, self and combined local times of a star ensemble")
    common(st, model=False)
    st.add_argument("--in", dest="input")
    st.add_argument("--eps")
    st.add_argument("--pairs", help="branch pairs like 0-1,0-2 (default: all)")
    st.add_argument("--g-self", dest="g_self", help="comma-separated self couplings")
    st.add_argument("--g-cross", dest="g_cross", help="single cross coupling for every pair")
    st.add_argument("--center", choices=["grid", "continuum"])

    ed = sub.add_parser("edwards", help="Edwards reweighting of a saved ensemble")
    common(ed, model=False)
    ed.add_argument("--in", dest="input")
    ed.add_argument("--eps")
    ed.add_argument("--g", help="comma-separated couplings")
    ed.add_argument("--center", choices=["none", "grid", "continuum"])
    ed.add_argument("--observables", help="comma list from gyration,antipodal,end_to_end")

    ve = sub.add_parser("verify", help="run a verification experiment")
    common(ve)
    ve.add_argument("experiment", choices=sorted(verification.EXPERIMENTS) + ["all"])
    ve.add_argument("--n", type=int)
    ve.add_argument("--seed", type=int)
    ve.add_argument("--summary", help="CSV summary table")
    return p


def _resolve(args) -> dict:
    """Merge flags over the config file over defaults."""
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
    flags = {k: v for k, v in vars(args).items() if v is not None}
    known = set(vars(args))
    merged = {k: v for k, v in DEFAULTS.items() if k in known}
    merged.update({k: v for k, v in cfg.items() if k in known or k == "threads"})
    merged.update(flags)
    merged.pop("config", None)
    for key in REQUIRED.get(merged["command"], ()):
        if merged.get(key) is None:
            raise UsageError(f"{merged['command']}: missing required option --{'in' if key == 'input' else key}")
    return merged


def _spec(c) -> KernelSpec:
    H = _floats(c["H"])[0]
    if c["geometry"] == "circle":
        return KernelSpec.circle(float(c["T"]), H, int(c["d"]))
    return KernelSpec.star(_floats(c["lengths"]), H, int(c["d"]))


def _emit(c, doc):
    doc = dict(doc)
    doc["config"] = dict(c)
    if c.get("out"):
        io.write_json(c["out"], doc)
    else:
        sys.stdout.write(json.dumps(doc, indent=2, default=io._json_default) + "\n")


def _cmd_sample(c):
    spec = _spec(c)
    N = int(c["N"])
    grid = Grid.circle(spec.geometry.T, N) if spec.is_circle else Grid.star(spec.geometry.lengths, N)
    ens = sample(spec, grid, int(c["n"]), SeedSpec(int(c["seed"])), c["method"], c.get("threads"))
    io.save_ensemble(ens, c["out"], c["format"], meta={"config": c})
    sys.stdout.write(json.dumps({"written": c["out"], "n_samples": ens.n_samples,
                                 "n_points": grid.n_points}) + "\n")
    return EXIT_OK


def _write_per_path(path, columns: dict):
    out = _io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    names = list(columns)
    w.writerow(["sample_id"] + names)
    rows = zip(*[columns[k] for k in names])
    for i, row in enumerate(rows):
        w.writerow([i] + [repr(float(x)) for x in row])
    io.write_text(path, out.getvalue())


def _loop_estimates(ens, c):
    out = []
    for eps in _floats(c["eps"]):
        est = localtime.local_time(ens, eps, c.get("delta"), c.get("part", "full"),
                                   c.get("threads"))
        if c.get("center", "none") != "none":
            est = localtime.center(est, method=c["center"])
        out.append(est)
    return out


def _load(c):
    ens, meta = io.load_ensemble(c["input"], with_meta=True)
    c["source"] = {"spec": ens.spec.to_dict(), "seed": ens.seed.master_seed,
                   "n_samples": ens.n_samples, "n_points": ens.grid.n_points,
                   "config": meta.get("config")}
    return ens


def _cmd_loctime(c):
    ens = _load(c)
    ests = _loop_estimates(ens, c)
    records = []
    for est in ests:
        rec = est.record()
        if c.get("per_path"):
            rec["per_path_file"] = c["per_path"]
        records.append(rec)
    if c.get("per_path"):
        _write_per_path(c["per_path"], {f"eps={e.epsilon:g}": e.per_path for e in ests})
    _emit(c, {"estimates": records})
    return EXIT_OK


def _cmd_moments(c):
    spec = _spec(c)
    if not spec.is_circle:
        recs = []
        nb = spec.geometry.n_branches
        for eps in _floats(c["eps"]):
            for k in range(nb):
                for l in range(k):
                    recs.append({"quantity": "E L_kl", "branches": [l, k], "eps": eps,
                                 "value": starburst.expected_cross_local_time(spec, l, k, eps)})
            for k in range(nb):
                recs.append({"quantity": "E L_k", "branch": k, "eps": eps,
                             "value": localtime.expected_line_local_time(
                                 spec.geometry.lengths[k], spec, eps)})
        _emit(c, {"moments": recs})
        return EXIT_OK
    recs = []
    for eps in _floats(c["eps"]):
        rec = {"eps": eps, "H": spec.hurst, "d": spec.dim, "T": spec.geometry.T,
               "E_L": localtime.expected_L_eps_analytic(spec, eps)}
        if c["delta"] is not None and eps > 0:
            rec["delta"] = c["delta"]
            rec["E_Lambda"] = localtime.expected_L_eps_analytic(spec, eps, c["delta"], "lambda")
            rec["E_Lambda2"] = localtime.second_moment_analytic(spec, eps, c["delta"], c["rtol"])
        recs.append(rec)
    _emit(c, {"moments": recs})
    return EXIT_OK


def _pairs(c, nb):
    if c.get("pairs"):
        out = []
        for item in str(c["pairs"]).split(","):
            k, l = (int(x) for x in item.split("-"))
            out.append((k, l))
        return out
    return [(l, k) for k in range(nb) for l in range(k)]


def _star_weights(c, nb):
    gs = _floats(c["g_self"]) if c.get("g_self") is not None else [1.0] * nb
    if len(gs) == 1:
        gs = gs * nb
    gc = float(c["g_cross"]) if c.get("g_cross") is not None else 1.0
    w = starburst.CouplingWeights.uniform(nb, 0.0, gc)
    return starburst.CouplingWeights(np.asarray(gs), w.g_cross)


def _cmd_star(c):
    ens = _load(c)
    if ens.spec.is_circle:
        raise UsageError("star: the ensemble is a loop")
    nb = ens.spec.geometry.n_branches
    method = c["center"] if c.get("center") not in (None, "none") else "grid"
    weights = _star_weights(c, nb)
    recs = []
    for eps in _floats(c["eps"]):
        for k, l in _pairs(c, nb):
            rec = starburst.cross_local_time(ens, k, l, eps).record()
            rec["expected_continuum"] = starburst.expected_cross_local_time(ens.spec, k, l, eps)
            recs.append(rec)
        for k in range(nb):
            recs.append(starburst.branch_self_local_time_centered(ens, k, eps, method).record())
        recs.append(starburst.combined_local_time(ens, weights, eps, method).record())
    _emit(c, {"estimates": recs})
    return EXIT_OK


def _cmd_edwards(c):
    ens = _load(c)
    eps = _floats(c["eps"])[0]
    names = [x for x in str(c["observables"]).split(",") if x]
    if not names:
        names = ["gyration", "antipodal"] if ens.spec.is_circle else ["gyration", "end_to_end"]
    reports = []
    if ens.spec.is_circle:
        c1 = dict(c, eps=str(eps))
        est = _loop_estimates(ens, c1)[0]
        for g in _floats(c["g"]):
            ew = edwards.with_observables(ens, edwards.edwards_weights(est, g), names)
            reports.append(ew.record())
    else:
        nb = ens.spec.geometry.n_branches
        method = c["center"] if c.get("center") not in (None, "none") else "grid"
        base = _star_weights(c, nb)
        for g in _floats(c["g"]):
            w = base.scaled(g)
            est = starburst.combined_local_time(ens, w, eps, method)
            ew = edwards.with_observables(ens, edwards.edwards_weights(est, w), names)
            reports.append(ew.record())
    _emit(c, {"eps": eps, "edwards": reports})
    return EXIT_OK


def _verify_kwargs(name, c, explicit):
    """Map the generic flags given on the command line onto experiment parameters."""
    given = {k for k in explicit if k in c}
    kw = {}
    if name == "pd":
        if "T" in given:
            kw["T"] = float(c["T"])
        if "N" in given:
            kw["N"] = [int(c["N"])]
        if "H" in given:
            kw["H_list"] = _floats(c["H"])
        return kw
    if name == "lnd":
        spec = _spec(c)
        N = int(c["N"]) if "N" in given else 8
        T = spec.geometry.T if spec.is_circle else spec.geometry.lengths[0]
        return {"spec": spec, "time_sets": [np.arange(m) * (T / m) for m in (N, 2 * N, 4 * N)]}
    if name in ("kernel", "logdiv"):
        return {"T": float(c["T"])} if "T" in given else {}
    for key in ("n", "seed", "d", "T"):
        if key in given:
            kw[key] = c[key]
    if "H" in given and name != "star":
        kw["H"] = _floats(c["H"])[0]
    if "N" in given:
        kw["grid_N" if name in ("mean", "rate") else "N"] = int(c["N"])
    if name == "repro":
        kw = {}
    if c.get("threads") is not None and name != "repro":
        kw["threads"] = int(c["threads"])
    return kw


def _cmd_verify(c, explicit):
    names = ["pd", "kernel", "logdiv", "sampler", "star", "edwards", "second", "mean", "rate",
             "repro"] if c["experiment"] == "all" else [c["experiment"]]
    reports = []
    for name in names:
        fn = verification.EXPERIMENTS[name]
        rep = fn(**_verify_kwargs(name, c, explicit))
        sys.stderr.write(str(rep) + "\n")
        reports.append(rep)
    doc = {"reports": [r.to_dict() for r in reports],
           "verdict": "pass" if all(r.verdict for r in reports) else "fail"}
    if c.get("summary"):
        out = _io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["experiment", "check", "measured", "expected", "tolerance", "verdict"])
        for r in reports:
            for row in r.summary_rows():
                w.writerow([json.dumps(x) if isinstance(x, (list, dict)) else x for x in row])
        io.write_text(c["summary"], out.getvalue())
    _emit(c, doc)
    return EXIT_OK if doc["verdict"] == "pass" else EXIT_VERDICT


def run(argv=None) -> int:
    """Run one subcommand and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        explicit = {k for k, v in vars(args).items() if v is not None}
        c = _resolve(args)
        if c.get("threads") is not None and int(c["threads"]) < 1:
            raise UsageError("--threads must be at least 1")
        if c.get("threads") is not None:
            os.environ["FBMLOOPS_THREADS"] = str(int(c["threads"]))
        cmd = c["command"]
        if cmd == "verify":
            return _cmd_verify(c, explicit)
        return {"sample": _cmd_sample, "loctime": _cmd_loctime, "moments": _cmd_moments,
                "star": _cmd_star, "edwards": _cmd_edwards}[cmd](c)
    except UsageError as exc:
        sys.stderr.write(str(exc) + "\n")
        return EXIT_INVALID
    except NumericError as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return EXIT_NUMERIC
    except (FbmLoopsError, ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_INVALID


def main():
    sys.exit(run())
