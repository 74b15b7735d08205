import json
import struct

import numpy as np
import pytest

from fbmloops import io
from fbmloops import kernel as K
from fbmloops import sampler as S
from fbmloops.errors import FormatError


@pytest.fixture
def loop_ens():
    return S.sample(K.KernelSpec.circle(1.0, 0.25, 2), K.Grid.circle(1.0, 16), 3, seed=4)


@pytest.fixture
def star_ens():
    spec = K.KernelSpec.star((1.0, 0.5, 2.0), 0.4, 3)
    return S.sample_star(spec, K.Grid.star((1.0, 0.5, 2.0), [4, 3, 5]), 3, seed=4)


def test_binary_roundtrip_exact(tmp_path, loop_ens, star_ens):
    for ens in (loop_ens, star_ens):
        p = tmp_path / "e.frlp"
        io.save_ensemble(ens, p, meta={"note": "x"})
        assert p.read_bytes()[:4] == b"FRLP"
        back, meta = io.load_ensemble(p, with_meta=True)
        assert np.array_equal(back.paths, ens.paths)
        assert back.spec == ens.spec
        assert np.array_equal(back.grid.t, ens.grid.t)
        assert np.array_equal(back.grid.branch, ens.grid.branch)
        assert back.grid.uniform == ens.grid.uniform
        assert back.seed == ens.seed
        assert meta == {"note": "x"}


def test_binary_header_fields(tmp_path, loop_ens):
    p = tmp_path / "e.frlp"
    io.save_ensemble(loop_ens, p)
    magic, version, n, P, d, H = struct.unpack_from("<4sIQQId", p.read_bytes())
    assert (magic, version, n, P, d, H) == (b"FRLP", 1, 3, 16, 2, 0.25)


def test_truncated_file(tmp_path, loop_ens):
    p = tmp_path / "e.frlp"
    io.save_ensemble(loop_ens, p)
    data = p.read_bytes()
    for cut in (3, 20, len(data) - 1):
        p.write_bytes(data[:cut])
        with pytest.raises(FormatError):
            io.load_ensemble(p)


def test_bad_magic_and_version(tmp_path, loop_ens):
    p = tmp_path / "e.frlp"
    io.save_ensemble(loop_ens, p)
    data = bytearray(p.read_bytes())
    bad = bytes(b"XXXX" + data[4:])
    p.write_bytes(bad)
    with pytest.raises(FormatError, match="magic"):
        io.load_ensemble(p)
    data[4:8] = struct.pack("<I", 99)
    p.write_bytes(bytes(data))
    with pytest.raises(FormatError, match="version"):
        io.load_ensemble(p)


def test_trailing_bytes(tmp_path, loop_ens):
    p = tmp_path / "e.frlp"
    io.save_ensemble(loop_ens, p)
    p.write_bytes(p.read_bytes() + b"\0")
    with pytest.raises(FormatError):
        io.load_ensemble(p)


def test_csv_roundtrip(tmp_path, loop_ens, star_ens):
    for ens in (loop_ens, star_ens):
        p = tmp_path / "e.csv"
        io.save_ensemble(ens, p)
        lines = p.read_text().splitlines()
        assert lines[1].startswith("sample_id,branch,t,x_1")
        back = io.load_ensemble(p)
        assert np.allclose(back.paths, ens.paths, rtol=1e-15, atol=0)
        assert back.spec == ens.spec


def test_csv_bad_header(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("# {not json\nsample_id,branch,t,x_1\n")
    with pytest.raises(FormatError):
        io.load_ensemble(p)


def test_atomic_write_leaves_no_temp(tmp_path):
    p = tmp_path / "out.json"
    io.write_json(p, {"a": np.float64(1.5), "b": np.arange(2)})
    assert json.loads(p.read_text()) == {"a": 1.5, "b": [0, 1]}
    assert [f.name for f in tmp_path.iterdir()] == ["out.json"]


def test_atomic_write_failure_keeps_old_file(tmp_path):
    p = tmp_path / "out.json"
    io.write_json(p, {"a": 1})
    with pytest.raises(TypeError):
        io.write_json(p, {"a": object()})
    assert json.loads(p.read_text()) == {"a": 1}
    assert len(list(tmp_path.iterdir())) == 1
