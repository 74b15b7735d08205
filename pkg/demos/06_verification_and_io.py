"""
Experiments and file formats
============================

Each verification experiment returns a report holding its inputs and a
pass/fail verdict. Ensembles round-trip through a compact
binary format or a CSV file.
"""

import tempfile
from pathlib import Path

import numpy as np

from fbmloops import Grid, KernelSpec, load_ensemble, sample, save_ensemble
from fbmloops import verification as V

print(V.verify_pd_boundary(N=(16, 64)))
print(V.verify_log_divergence())
print(V.verify_sampler(N=64, n=20000, n_pairs=3))

ens = sample(KernelSpec.circle(1.0, 0.3, 2), Grid.circle(1.0, 32), n=3, seed=8)
with tempfile.TemporaryDirectory() as tmp:
    for name in ("paths.frlp", "paths.csv"):
        p = Path(tmp) / name
        save_ensemble(ens, p)
        back = load_ensemble(p)
        print(f"{name}: {p.stat().st_size} bytes, identical={np.array_equal(back.paths, ens.paths)}")
