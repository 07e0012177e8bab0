"""Checkpoint layout, CSV fidelity and manifests."""

import struct

import numpy as np
import pytest

from sqgmodes.experiments import fit_decay_rate
from sqgmodes.io import (
    MAGIC,
    CheckpointError,
    load_checkpoint,
    read_csv,
    save_checkpoint,
    sha256_file,
    verify_manifest,
    write_csv,
    write_json,
    write_manifest,
    write_rows,
)
from sqgmodes.spectral import FieldError, make_domain, random_field


@pytest.fixture
def saved(tmp_path, d64):
    theta = random_field(d64, 7, 1.0, (1, 10), 0.3)
    path = save_checkpoint(tmp_path / "x.sqgf", theta, 1.25, 1.5, 0.5)
    return path, theta


class TestCheckpoint:
    def test_round_trip(self, saved):
        path, theta = saved
        ck = load_checkpoint(path)
        assert np.array_equal(ck.theta.coeffs, theta.coeffs)
        assert ck.theta.coeffs.tobytes() == theta.coeffs.tobytes()
        assert (ck.t, ck.alpha, ck.nu) == (1.25, 1.5, 0.5)
        assert ck.theta.domain.N == 64 and ck.theta.domain.L == 1.0

    def test_layout(self, saved):
        path, theta = saved
        raw = path.read_bytes()
        magic, version, n = struct.unpack_from("<4sII", raw)
        assert (magic, version, n) == (MAGIC, 1, 64)
        assert len(raw) == 4 + 4 + 4 + 32 + 16 * 64 * 64
        # C order with k2 fastest: second complex is coefficient (0, 1)
        second = np.frombuffer(raw, "<c16", count=1, offset=44 + 16)[0]
        assert second == theta.coeffs[0, 1]

    @pytest.mark.parametrize("cut", [0, 10, 44, 45, 1000])
    def test_truncated(self, saved, cut):
        path, _ = saved
        raw = path.read_bytes()
        path.write_bytes(raw[:cut])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_bad_magic(self, saved):
        path, _ = saved
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_bad_version(self, saved):
        path, _ = saved
        raw = bytearray(path.read_bytes())
        raw[4:8] = struct.pack("<I", 9)
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)

    def test_is_field_error(self):
        assert issubclass(CheckpointError, FieldError)


class TestCsv:
    def test_exact_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        cols = {"t": np.linspace(0, 1, 50), "v": rng.standard_normal(50) * 1e-7}
        back = read_csv(write_csv(tmp_path / "a.csv", cols))
        assert list(back) == ["t", "v"]
        for k in cols:
            assert np.array_equal(back[k], cols[k])

    def test_seventeen_digits(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", {"x": [0.1]})
        assert path.read_text().splitlines()[1] == "0.10000000000000001"

    def test_fit_fidelity(self, tmp_path):
        rng = np.random.default_rng(1)
        t = np.linspace(0, 3, 40)
        v = np.exp(-1.7 * t) * (1 + 0.02 * rng.standard_normal(t.size))
        back = read_csv(write_csv(tmp_path / "s.csv", {"t": t, "besov_w": v}))
        a, b = fit_decay_rate(t, v), fit_decay_rate(back["t"], back["besov_w"])
        assert abs(a[0] - b[0]) <= 1e-12 and abs(a[1] - b[1]) <= 1e-12

    def test_ragged(self, tmp_path):
        with pytest.raises(FieldError):
            write_csv(tmp_path / "a.csv", {"a": [1.0, 2.0], "b": [1.0]})

    def test_rows(self, tmp_path):
        path = write_rows(tmp_path / "r.csv", ["Q", "verdict"], [(0, "synchronized"), (1, 0.5)])
        assert path.read_text() == "Q,verdict\n0,synchronized\n1,0.5\n"

    def test_empty(self, tmp_path):
        (tmp_path / "e.csv").write_text("")
        with pytest.raises(FieldError):
            read_csv(tmp_path / "e.csv")


class TestManifest:
    def test_digests(self, tmp_path):
        a = write_csv(tmp_path / "a.csv", {"x": [1.0, 2.0]})
        b = write_json(tmp_path / "b.json", {"k": np.float64(1.5), "n": np.int64(2), "arr": np.arange(2), "ok": np.bool_(True)})
        m = write_manifest(tmp_path, {"cfg": 1}, [a, b], "s", "f", "0.1.0")
        verify_manifest(m)
        import json

        doc = json.loads(m.read_text())
        assert doc["files"]["a.csv"] == sha256_file(a)
        assert doc["version"] == "0.1.0" and doc["config"] == {"cfg": 1}

    def test_mismatch(self, tmp_path):
        a = write_csv(tmp_path / "a.csv", {"x": [1.0]})
        m = write_manifest(tmp_path, {}, [a], "s", "f", "0")
        a.write_text("x\n2\n")
        with pytest.raises(FieldError, match="digest mismatch"):
            verify_manifest(m)

    def test_json_rejects_objects(self, tmp_path):
        with pytest.raises(TypeError):
            write_json(tmp_path / "x.json", {"a": object()})
