"""Checkpoint container: exact round-trip, corruption detection, hashing."""

import numpy as np
import pytest

from kicksense.nn import load_checkpoint, save_checkpoint, sha256_of_file


def test_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {
        "a.w": rng.normal(size=(7, 3)),
        "a.b": rng.normal(size=3),
        "scalar": np.array(4.25),
        "big": rng.normal(size=(2, 3, 4, 5)),
    }
    meta = {"kind": "fusion", "task": "classification", "nested": {"x": [1, 2, 3]}}
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, meta, tensors)
    meta2, tensors2 = load_checkpoint(path)
    assert meta2 == meta
    assert set(tensors2) == set(tensors)
    for name in tensors:
        np.testing.assert_array_equal(tensors2[name], np.asarray(tensors[name], dtype=np.float64))


def test_same_content_same_bytes(tmp_path):
    tensors = {"w": np.arange(12.0).reshape(3, 4)}
    meta = {"seed": 1, "kind": "time"}
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(p1, meta, tensors)
    save_checkpoint(p2, dict(reversed(list(meta.items()))), tensors)  # key order irrelevant
    assert sha256_of_file(p1) == sha256_of_file(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_rejects_wrong_magic(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"NOTACKPT" + b"\x00" * 32)
    with pytest.raises(ValueError, match="not a recognised"):
        load_checkpoint(path)


def test_rejects_truncated_tensor(tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, {}, {"w": np.ones((10, 10))})
    data = path.read_bytes()
    path.write_bytes(data[:-40])
    with pytest.raises(ValueError, match="truncated"):
        load_checkpoint(path)


def test_float32_inputs_upcast_to_float64(tmp_path):
    path = tmp_path / "model.ckpt"
    w32 = np.ones((3, 3), dtype=np.float32) / 3.0
    save_checkpoint(path, {}, {"w": w32})
    _, tensors = load_checkpoint(path)
    assert tensors["w"].dtype == np.float64
    np.testing.assert_array_equal(tensors["w"], w32.astype(np.float64))
