import json

import numpy as np
import pytest

from oscillent.core import ModelParams
from oscillent.storage import (
    CacheError,
    KernelCache,
    content_hash,
    default_cache_dir,
    read_result,
    read_samples,
    write_result,
    write_samples,
)


def test_content_hash_canonical():
    a = content_hash(x=1.0, y=[1, 2], p=ModelParams(1.0, 2.0, 0.1))
    b = content_hash(p=ModelParams(1.0, 2.0, 0.1), y=[1, 2], x=1.0)
    assert a == b and len(a) == 64
    assert a != content_hash(x=1.0, y=[1, 2], p=ModelParams(1.0, 2.0, 0.2))


def test_default_cache_dir_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("OSCILLENT_CACHE", str(tmp_path / "c"))
    assert default_cache_dir() == tmp_path / "c"


def test_kernel_cache_store_load_invalidate(tmp_path):
    cache = KernelCache(tmp_path)
    key = cache.key(a=1)
    assert cache.load(key) is None
    arr = np.arange(12.0).reshape(3, 4)
    cache.store(key, arr, {"note": "x"})
    got, meta = cache.load(key)
    assert np.array_equal(got, arr) and meta == {"note": "x"}
    side = json.loads((tmp_path / f"{key}.json").read_text())
    assert side["shape"] == [3, 4]
    # tampered payload -> miss, and both files removed
    np.save(tmp_path / f"{key}.npy", arr + 1)
    assert cache.load(key) is None
    assert not list(tmp_path.iterdir())


def test_samples_round_trip(tmp_path):
    p = ModelParams(1.0, 3.0, 0.2)
    data = np.random.default_rng(1).normal(size=(57, 4))
    path = tmp_path / "s.bin"
    write_samples(path, data, p)
    assert path.stat().st_size == 52 + data.size * 8
    assert np.array_equal(read_samples(path, p), data)
    assert np.array_equal(read_samples(path), data)


def test_samples_errors(tmp_path):
    p = ModelParams(1.0, 3.0, 0.2)
    path = tmp_path / "s.bin"
    write_samples(path, np.zeros((3, 4)), p)
    with pytest.raises(CacheError):
        read_samples(path, p.replace(C=0.3))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CacheError):
        read_samples(path)
    (tmp_path / "bad.bin").write_bytes(b"NOTMAGIC" + bytes(44))
    with pytest.raises(CacheError):
        read_samples(tmp_path / "bad.bin")
    with pytest.raises(ValueError):
        write_samples(path, np.zeros(3), p)


def test_result_round_trip(tmp_path):
    rec = {"b": 1.5, "a": [1, 2], "c": None}
    write_result(tmp_path / "r.json", rec)
    text = (tmp_path / "r.json").read_text()
    assert text.index('"a"') < text.index('"b"')
    assert read_result(tmp_path / "r.json") == rec
