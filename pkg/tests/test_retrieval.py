import numpy as np
import pytest

from stagekit.catalog import Catalog
from stagekit.errors import (DegenerateFeatureError, IngestionError,
                             InvalidInputError)
from stagekit.imaging import BinaryMask, uniform_image
from stagekit.retrieval import (EmbeddingVector, RetrievalIndex,
                                ToyHistogramExtractor, build_index, embed,
                                eval_retrieval, load_index, save_index, top_k)
from stagekit.saliency import BorderContrastSaliency
from synth import write_catalog

FX = ToyHistogramExtractor()


def unit(vec):
    v = np.asarray(vec, dtype=np.float64)
    return v / np.linalg.norm(v)


def make_index(items):
    """items: list of (id, category, direction-vector)"""
    ids = tuple(i for i, _, _ in items)
    cats = tuple(c for _, c, _ in items)
    mat = (np.stack([unit(v) for _, _, v in items]).astype(np.float32)
           if items else np.zeros((0, 12), dtype=np.float32))
    return RetrievalIndex("toy-histogram", mat.shape[1] if items else 12,
                          ids, cats, mat)


class TestEmbed:
    def test_black_image_histogram(self):
        vec = embed(uniform_image(8, 8, (0, 0, 0)), FX)
        expected = np.zeros(12)
        expected[[0, 4, 8]] = 1 / np.sqrt(3)
        assert np.allclose(vec.values, expected, atol=1e-12)

    def test_unit_norm(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            from stagekit.imaging import Image
            img = Image(rng.integers(0, 256, (16, 16, 3), dtype=np.uint8))
            vec = embed(img, FX)
            assert abs(np.linalg.norm(vec.values) - 1.0) <= 1e-6

    def test_determinism(self):
        rng = np.random.default_rng(1)
        from stagekit.imaging import Image
        img = Image(rng.integers(0, 256, (16, 16, 3), dtype=np.uint8))
        assert np.array_equal(embed(img, FX).values, embed(img, FX).values)

    def test_mask_restricts_histogram(self):
        img = uniform_image(8, 8, (255, 255, 255))
        arr = img.array.copy()
        arr[0:2, 0:2] = 0
        from stagekit.imaging import Image
        img = Image(arr)
        mask = BinaryMask(np.zeros((8, 8), dtype=bool))
        mask.values[0:2, 0:2] = True
        vec = embed(img, FX, BinaryMask(mask.values))
        expected = np.zeros(12)
        expected[[0, 4, 8]] = 1 / np.sqrt(3)
        assert np.allclose(vec.values, expected)

    def test_empty_mask_degenerate(self):
        img = uniform_image(8, 8, (10, 10, 10))
        with pytest.raises(DegenerateFeatureError):
            embed(img, FX, BinaryMask(np.zeros((8, 8), dtype=bool)))


class TestTopK:
    def test_exact_match_first_with_zero_distance(self):
        idx = make_index([
            ("a", "C1", [1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]),
            ("b", "C1", [0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0]),
        ])
        q = EmbeddingVector(unit([1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]), "query")
        res = top_k(idx, q, 1)
        assert res[0].id == "a"
        assert abs(res[0].distance) <= 1e-6

    def test_ordering_matches_brute_force(self):
        rng = np.random.default_rng(5)
        items = [(f"i{j}", "C", rng.random(12) + 0.01) for j in range(10)]
        idx = make_index(items)
        q = EmbeddingVector(unit(rng.random(12) + 0.01), "query")
        res = top_k(idx, q, 10)
        brute = sorted(
            ((float(1.0 - unit(v) @ q.values.astype(np.float64)
                    if False else 1.0 - idx.matrix[j].astype(np.float64) @ q.values), f"i{j}")
             for j, (_, _, v) in enumerate(items)),
            key=lambda t: (t[0], t[1]))
        assert [r.id for r in res] == [i for _, i in brute]
        assert [r.distance for r in res] == pytest.approx([d for d, _ in brute])

    def test_self_excluded(self):
        idx = make_index([
            ("a", "C", [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]),
            ("b", "C", [0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]),
        ])
        q = EmbeddingVector(idx.matrix[0].astype(np.float64), source_id="a")
        res = top_k(idx, q, 5)
        assert [r.id for r in res] == ["b"]

    def test_k_saturation(self):
        idx = make_index([(f"i{j}", "C", np.eye(12)[j]) for j in range(4)])
        q = EmbeddingVector(unit(np.ones(12)), "q")
        assert len(top_k(idx, q, 100)) == 4

    def test_prefix_property(self):
        rng = np.random.default_rng(6)
        idx = make_index([(f"i{j}", "C", rng.random(12) + 0.01) for j in range(8)])
        q = EmbeddingVector(unit(rng.random(12) + 0.01), "q")
        for k in range(1, 8):
            a = [r.id for r in top_k(idx, q, k)]
            b = [r.id for r in top_k(idx, q, k + 1)]
            assert b[:k] == a

    def test_distance_symmetry(self):
        rng = np.random.default_rng(7)
        a = unit(rng.random(12) + 0.01)
        b = unit(rng.random(12) + 0.01)
        assert abs((1 - a @ b) - (1 - b @ a)) < 1e-12

    def test_tie_break_by_id(self):
        v = [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]
        idx = make_index([("z", "C", v), ("a", "C", v), ("m", "C", v)])
        q = EmbeddingVector(unit(v), "q")
        assert [r.id for r in top_k(idx, q, 3)] == ["a", "m", "z"]


class TestEvalRetrieval:
    def test_perfect_retrieval(self):
        idx = make_index([
            ("a1", "X", [1, 0.1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]),
            ("a2", "X", [1, 0.2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]),
            ("b1", "Y", [0, 0, 0, 1, 0.1, 0, 0, 0, 0, 0, 0, 0]),
            ("b2", "Y", [0, 0, 0, 1, 0.2, 0, 0, 0, 0, 0, 0, 0]),
        ])
        queries = [(EmbeddingVector(idx.matrix[i].astype(np.float64), idx.ids[i]),
                    idx.categories[i]) for i in range(4)]
        m = eval_retrieval(idx, queries, [1])
        assert m.precision(1) == 1.0
        assert m.recall(1) == 1.0

    def test_precision1_equals_recall1(self):
        rng = np.random.default_rng(11)
        for trial in range(20):
            n = int(rng.integers(4, 12))
            items = [(f"i{j}", f"C{rng.integers(3)}", rng.random(12) + 0.01)
                     for j in range(n)]
            idx = make_index(items)
            queries = [(EmbeddingVector(idx.matrix[i].astype(np.float64), idx.ids[i]),
                        idx.categories[i]) for i in range(n)]
            m = eval_retrieval(idx, queries, [1])
            assert m.precision(1) == m.recall(1)

    def test_recall_non_decreasing(self):
        rng = np.random.default_rng(12)
        items = [(f"i{j}", f"C{rng.integers(4)}", rng.random(12) + 0.01)
                 for j in range(15)]
        idx = make_index(items)
        queries = [(EmbeddingVector(idx.matrix[i].astype(np.float64), idx.ids[i]),
                    idx.categories[i]) for i in range(15)]
        m = eval_retrieval(idx, queries, [1, 3, 5, 10])
        recalls = [m.recall(k) for k in (1, 3, 5, 10)]
        assert recalls == sorted(recalls)

    def test_two_query_hand_count(self):
        # index: q1's neighbors are [same, diff], q2's are [diff, diff]
        idx = make_index([
            ("q1", "A", [1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]),
            ("n1", "A", [1, 0.1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]),
            ("n2", "B", [1, 0.5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]),
            ("q2", "B", [0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0]),
            ("n3", "A", [0, 0, 0, 0, 0, 0, 1, 0.1, 0, 0, 0, 0]),
            ("n4", "A", [0, 0, 0, 0, 0, 0, 1, 0.5, 0, 0, 0, 0]),
        ])
        queries = [
            (EmbeddingVector(idx.matrix[0].astype(np.float64), "q1"), "A"),
            (EmbeddingVector(idx.matrix[3].astype(np.float64), "q2"), "B"),
        ]
        m = eval_retrieval(idx, queries, [2])
        # q1 top-2: n1 (A, hit), n2 (B). q2 top-2: n3, n4 (both A, miss).
        assert m.precision(2) == pytest.approx((1 / 2 + 0 / 2) / 2)
        assert m.recall(2) == pytest.approx(1 / 2)

    def test_empty_queries_rejected(self):
        idx = make_index([("a", "C", np.eye(12)[0])])
        with pytest.raises(InvalidInputError):
            eval_retrieval(idx, [], [1])


class TestIndexBuildAndSerialize:
    def test_empty_catalog(self):
        idx = build_index(Catalog(()), FX, BorderContrastSaliency())
        assert len(idx) == 0

    def test_build_from_fixture_catalog(self, tmp_path):
        _, cat = write_catalog(tmp_path, size=48, per_color=2)
        idx = build_index(cat, FX, BorderContrastSaliency(), image_root=tmp_path)
        assert len(idx) == 6
        assert idx.ids == tuple(e.id for e in cat)

    def test_unreadable_image_names_entry(self, tmp_path):
        from stagekit.catalog import CatalogEntry
        cat = Catalog((CatalogEntry("ghost", "missing.png", ("C",), True),))
        with pytest.raises(IngestionError, match="ghost"):
            build_index(cat, FX, BorderContrastSaliency(), image_root=tmp_path)

    def test_rebuild_bit_identical(self, tmp_path):
        _, cat = write_catalog(tmp_path, size=48, per_color=2)
        a = build_index(cat, FX, BorderContrastSaliency(), image_root=tmp_path)
        b = build_index(cat, FX, BorderContrastSaliency(), image_root=tmp_path)
        assert np.array_equal(a.matrix, b.matrix)
        save_index(a, tmp_path / "a.stkidx")
        save_index(b, tmp_path / "b.stkidx")
        assert (tmp_path / "a.stkidx").read_bytes() == (tmp_path / "b.stkidx").read_bytes()

    def test_serialization_roundtrip_bit_exact(self, tmp_path):
        _, cat = write_catalog(tmp_path, size=48, per_color=2)
        idx = build_index(cat, FX, BorderContrastSaliency(), image_root=tmp_path)
        path = tmp_path / "idx.stkidx"
        save_index(idx, path)
        back = load_index(path)
        assert back.ids == idx.ids
        assert back.categories == idx.categories
        assert back.extractor_name == idx.extractor_name
        assert np.array_equal(back.matrix, idx.matrix)
        save_index(back, tmp_path / "again.stkidx")
        assert (tmp_path / "again.stkidx").read_bytes() == path.read_bytes()
