"""IFV1 container round trips and validation."""

import struct

import numpy as np
import pytest

from embed_extractor import ifv1
from embed_extractor.errors import ExtractorError


def _pairs(rng, n=4, dim=16):
    return [(f"img{i:02d}", rng.normal(size=dim).astype(np.float32))
            for i in range(n)]


class TestRoundTrip:
    def test_bit_exact(self, tmp_path):
        rng = np.random.default_rng(42)
        items = _pairs(rng)
        path = tmp_path / "v.ifv"
        ifv1.write_vectors(path, items)
        back = ifv1.read_vectors(path)
        assert [i for i, _ in back] == [i for i, _ in items]
        for (_, a), (_, b) in zip(items, back):
            assert b.dtype == np.float32
            np.testing.assert_array_equal(a, b)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.ifv"
        ifv1.write_vectors(path, [])
        assert ifv1.read_vectors(path) == []
        assert path.stat().st_size == 12

    def test_header_layout(self, tmp_path):
        path = tmp_path / "v.ifv"
        ifv1.write_vectors(path, [("a", np.zeros(3, dtype=np.float32))])
        raw = path.read_bytes()
        magic, count, dim = struct.unpack_from("<4sII", raw)
        assert (magic, count, dim) == (b"IFV1", 1, 3)


class TestValidation:
    def test_mixed_dims(self, tmp_path):
        items = [("a", np.zeros(3, dtype=np.float32)),
                 ("b", np.zeros(4, dtype=np.float32))]
        with pytest.raises(ExtractorError, match="mixed dimensions"):
            ifv1.write_vectors(tmp_path / "v.ifv", items)

    def test_duplicate_id(self, tmp_path):
        items = [("a", np.zeros(3, dtype=np.float32)),
                 ("a", np.ones(3, dtype=np.float32))]
        with pytest.raises(ExtractorError, match="duplicate"):
            ifv1.write_vectors(tmp_path / "v.ifv", items)

    def test_non_finite(self, tmp_path):
        bad = np.array([0.0, np.nan, 1.0], dtype=np.float32)
        with pytest.raises(ExtractorError, match="non-finite"):
            ifv1.write_vectors(tmp_path / "v.ifv", [("a", bad)])

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "v.ifv"
        path.write_bytes(b"NOPE" + b"\x00" * 8)
        with pytest.raises(ExtractorError, match="bad magic"):
            ifv1.read_vectors(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "v.ifv"
        path.write_bytes(b"IFV1\x01")
        with pytest.raises(ExtractorError, match="truncated header"):
            ifv1.read_vectors(path)

    def test_truncated_values(self, tmp_path):
        path = tmp_path / "v.ifv"
        ifv1.write_vectors(path, [("a", np.zeros(8, dtype=np.float32))])
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(ExtractorError, match="truncated values"):
            ifv1.read_vectors(path)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "v.ifv"
        ifv1.write_vectors(path, [("a", np.zeros(2, dtype=np.float32))])
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(ExtractorError, match="trailing"):
            ifv1.read_vectors(path)
