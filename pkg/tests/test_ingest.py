"""Record types, file formats, and their validation errors."""

import json
import struct

import numpy as np
import pytest

from interfuse import ingest
from interfuse.errors import ValidationError


class TestRecords:
    def test_document_requires_id_and_content(self):
        with pytest.raises(ValidationError):
            ingest.DocumentRecord("", "some text")
        with pytest.raises(ValidationError):
            ingest.DocumentRecord("d1", "")
        # image-only documents are allowed
        assert ingest.DocumentRecord("d1", "", ("i1",)).image_refs == ("i1",)

    def test_query_requires_id(self):
        with pytest.raises(ValidationError):
            ingest.QueryRecord("", "beach")

    def test_dense_vector_rejects_bad_shapes(self):
        with pytest.raises(ValidationError):
            ingest.DenseVector("v", np.zeros((2, 2), dtype=np.float32))
        with pytest.raises(ValidationError):
            ingest.DenseVector("v", np.array([np.nan], dtype=np.float32))

    def test_qrelset_membership(self):
        qrels = ingest.QrelSet(relevant={"q1": frozenset({"d1"})},
                               judged={"q1": frozenset({"d1", "d2"})})
        assert "q1" in qrels
        assert "q9" not in qrels
        assert qrels.relevant_for("q1") == frozenset({"d1"})
        assert qrels.judged_for("q1") == frozenset({"d1", "d2"})
        assert qrels.relevant_for("q9") == frozenset()


class TestScoreTable:
    def test_add_and_lookup(self):
        table = ingest.ScoreTable()
        table.add("q1", "d1", "text", 0.5)
        table.add("q1", "d1", "image", 0.25)
        assert table.get("q1", "d1", "text") == 0.5
        assert len(table) == 2

    def test_rejects_duplicates_and_bad_values(self):
        table = ingest.ScoreTable()
        table.add("q1", "d1", "text", 0.5)
        with pytest.raises(ValidationError):
            table.add("q1", "d1", "text", 0.5)
        with pytest.raises(ValidationError):
            table.add("q1", "d2", "text", -0.1)
        with pytest.raises(ValidationError):
            table.add("q1", "d2", "text", float("nan"))
        with pytest.raises(ValidationError):
            table.add("q1", "d2", "audio", 0.2)

    def test_items_sorted(self):
        table = ingest.ScoreTable()
        table.add("q2", "d1", "text", 0.1)
        table.add("q1", "d2", "image", 0.2)
        table.add("q1", "d1", "text", 0.3)
        keys = [key for key, _ in table.items()]
        assert keys == sorted(keys)


class TestCorpusIO:
    def test_jsonl_round_trip(self, tmp_path, toy_docs):
        path = tmp_path / "corpus.jsonl"
        with open(path, "w") as fh:
            for d in toy_docs:
                fh.write(json.dumps({"doc_id": d.doc_id, "text": d.text,
                                     "image_refs": list(d.image_refs)}) + "\n")
        assert ingest.load_corpus(path) == toy_docs

    def test_tsv_corpus(self, tmp_path):
        path = tmp_path / "corpus.tsv"
        path.write_text("d1\tbeach sunset\ti1,i2\nd2\tmountains\n")
        docs = ingest.load_corpus(path, fmt="tsv")
        assert docs[0].image_refs == ("i1", "i2")
        assert docs[1].image_refs == ()

    def test_duplicate_doc_id_rejected(self, tmp_path):
        path = tmp_path / "corpus.tsv"
        path.write_text("d1\tone\nd1\ttwo\n")
        with pytest.raises(ValidationError, match="duplicate"):
            ingest.load_corpus(path, fmt="tsv")

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"doc_id": "d1", "text": "ok"}\nnot json\n')
        with pytest.raises(ValidationError, match=":2"):
            ingest.load_corpus(path)

    def test_collect_mode_gathers_errors(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"doc_id": "d1", "text": "ok"}\n'
                        "bad\n"
                        '{"doc_id": "d2", "text": "ok"}\n'
                        '{"doc_id": "d2", "text": "dup"}\n')
        docs, errors = ingest.load_corpus(path, on_error="collect")
        assert [d.doc_id for d in docs] == ["d1", "d2"]
        assert len(errors) == 2

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "corpus.tsv"
        path.write_text("\nd1\tone\n\n\nd2\ttwo\n")
        assert len(ingest.load_corpus(path, fmt="tsv")) == 2


class TestQueryQrelIO:
    def test_query_round_trip(self, tmp_path, toy_queries):
        path = tmp_path / "queries.jsonl"
        ingest.write_queries(toy_queries, path)
        assert ingest.load_queries(path) == toy_queries

    def test_qrels_round_trip(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("q1 0 d1 1\nq1 0 d2 0\nq2 0 d1 1\n")
        qrels = ingest.load_qrels(path)
        assert qrels.relevant_for("q1") == frozenset({"d1"})
        assert qrels.judged_for("q1") == frozenset({"d1", "d2"})
        out = tmp_path / "copy.txt"
        ingest.write_qrels(qrels, out)
        assert ingest.load_qrels(out) == qrels

    def test_graded_relevance_rejected(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("q1 0 d1 2\n")
        with pytest.raises(ValidationError, match="binary"):
            ingest.load_qrels(path)

    def test_duplicate_judgment_rejected(self, tmp_path):
        path = tmp_path / "qrels.txt"
        path.write_text("q1 0 d1 1\nq1 0 d1 0\n")
        with pytest.raises(ValidationError):
            ingest.load_qrels(path)


class TestVectorIO:
    def test_binary_round_trip_bit_exact(self, tmp_path, make_vectors):
        vecs = make_vectors(("a", [1.0, -2.5, 3e-7]),
                            ("b", [0.0, 1e38, -1e-38]))
        path = tmp_path / "v.ifv"
        ingest.write_vectors(vecs, path)
        back = ingest.load_vectors(path)
        assert [v.vector_id for v in back] == ["a", "b"]
        for orig, rt in zip(vecs, back):
            assert rt.values.dtype == np.float32
            assert orig.values.tobytes() == rt.values.tobytes()

    def test_binary_layout(self, tmp_path, make_vectors):
        path = tmp_path / "v.ifv"
        ingest.write_vectors(make_vectors(("id", [1.5, 2.5])), path)
        raw = path.read_bytes()
        magic, count, dim = struct.unpack_from("<4sII", raw, 0)
        assert magic == b"IFV1"
        assert (count, dim) == (1, 2)
        (id_len,) = struct.unpack_from("<H", raw, 12)
        assert raw[14:14 + id_len] == b"id"
        assert struct.unpack_from("<2f", raw, 14 + id_len) == (1.5, 2.5)

    def test_tsv_round_trip_via_nine_digits(self, tmp_path, make_vectors):
        vals = np.array([1 / 3, 2e-8, 12345.678], dtype=np.float32)
        path = tmp_path / "v.tsv"
        ingest.write_vectors(make_vectors(("a", vals)), path, fmt="tsv")
        back = ingest.load_vectors(path)
        assert np.array_equal(back[0].values, vals)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "v.ifv"
        path.write_bytes(b"NOPE" + b"\x00" * 8)
        with pytest.raises(ValidationError, match="magic"):
            ingest.load_vectors(path)

    def test_truncated_file_rejected(self, tmp_path, make_vectors):
        vecs = make_vectors(("a", [1.0, 2.0]))
        path = tmp_path / "v.ifv"
        ingest.write_vectors(vecs, path)
        path.write_bytes(path.read_bytes()[:-2])
        with pytest.raises(ValidationError):
            ingest.load_vectors(path)

    def test_trailing_bytes_rejected(self, tmp_path, make_vectors):
        path = tmp_path / "v.ifv"
        ingest.write_vectors(make_vectors(("a", [1.0])), path)
        path.write_bytes(path.read_bytes() + b"x")
        with pytest.raises(ValidationError, match="trailing"):
            ingest.load_vectors(path)

    def test_vectors_by_id_rejects_duplicates(self, make_vectors):
        vecs = make_vectors(("a", [1.0]), ("a", [2.0]))
        with pytest.raises(ValidationError, match="duplicate"):
            ingest.vectors_by_id(vecs)


class TestScoreIO:
    def test_round_trip(self, tmp_path):
        table = ingest.ScoreTable()
        table.add("q1", "d1", "text", 1 / 3)
        table.add("q1", "d1", "image", 0.125)
        path = tmp_path / "scores.tsv"
        ingest.write_scores(table, path)
        back = ingest.load_scores(path)
        assert dict(back.items()).keys() == dict(table.items()).keys()
        assert back.get("q1", "d1", "image") == 0.125
        assert abs(back.get("q1", "d1", "text") - 1 / 3) < 5e-10

    def test_bad_modality_reports_line(self, tmp_path):
        path = tmp_path / "scores.tsv"
        path.write_text("q1\td1\ttext\t0.5\nq1\td1\taudio\t0.5\n")
        with pytest.raises(ValidationError, match=":2"):
            ingest.load_scores(path)


class TestGoldenFixture:
    """Frozen on-disk bytes guard the binary format against drift."""

    def test_checked_in_vectors_load(self):
        import os
        path = os.path.join(os.path.dirname(__file__), "data", "golden.ifv")
        vecs = ingest.load_vectors(path)
        assert [v.vector_id for v in vecs] == [f"img{i:02d}" for i in range(4)]
        assert all(v.values.shape == (16,) for v in vecs)
        np.testing.assert_allclose(
            vecs[0].values[:4],
            [-0.956571519, 2.5504899, 1.02616096, -0.303337961],
            rtol=0, atol=1e-6)
        total = sum(float(v.values.sum()) for v in vecs)
        assert abs(total - -5.528130888938904) < 1e-9
