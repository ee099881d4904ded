import json

import pytest

from stagekit.catalog import (Catalog, CatalogEntry, category_stats,
                              export_catalog, filter_catalog, ingest_catalog)
from stagekit.errors import IntegrityError, ParseError


def write_lines(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def entry(i, cat="Furniture > Chairs", staged=False, impressions=None):
    row = {"id": f"p{i}", "image": f"imgs/p{i}.png", "category": cat, "staged": staged}
    if impressions is not None:
        row["impressions"] = impressions
    return row


class TestIngest:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "cat.jsonl"
        path.write_text("")
        assert len(ingest_catalog(path)) == 0

    def test_three_lines_order_preserved(self, tmp_path):
        path = tmp_path / "cat.jsonl"
        write_lines(path, [entry(3), entry(1), entry(2)])
        cat = ingest_catalog(path)
        assert [e.id for e in cat] == ["p3", "p1", "p2"]

    def test_duplicate_id_names_offender(self, tmp_path):
        path = tmp_path / "cat.jsonl"
        write_lines(path, [entry(1), entry(1)])
        with pytest.raises(IntegrityError, match="p1"):
            ingest_catalog(path)

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "cat.jsonl"
        path.write_text(json.dumps(entry(1)) + "\n{not json\n")
        with pytest.raises(ParseError, match="line 2"):
            ingest_catalog(path)

    def test_missing_key_reports_line_number(self, tmp_path):
        path = tmp_path / "cat.jsonl"
        write_lines(path, [{"id": "x", "image": "x.png", "staged": True}])
        with pytest.raises(ParseError, match="line 1"):
            ingest_catalog(path)

    def test_category_parsing(self, tmp_path):
        path = tmp_path / "cat.jsonl"
        write_lines(path, [entry(1, cat="Furniture > Bedroom > Headboards > Queen")])
        cat = ingest_catalog(path)
        assert cat.entries[0].category_path == (
            "Furniture", "Bedroom", "Headboards", "Queen")

    def test_roundtrip_field_exact(self, tmp_path):
        path = tmp_path / "cat.jsonl"
        write_lines(path, [
            entry(1, staged=True, impressions=12000),
            entry(2, cat="Shoe > Heel > Oxford Heel"),
        ])
        cat = ingest_catalog(path)
        out = tmp_path / "out.jsonl"
        export_catalog(cat, out)
        assert ingest_catalog(out) == cat

    def test_export_key_order(self, tmp_path):
        cat = Catalog((CatalogEntry("a", "a.png", ("X",), True, 5),))
        out = tmp_path / "o.jsonl"
        export_catalog(cat, out)
        keys = list(json.loads(out.read_text()).keys())
        assert keys == ["id", "image", "category", "staged", "impressions"]


class TestFilter:
    @pytest.fixture()
    def mixed(self):
        return Catalog(tuple(
            CatalogEntry(f"e{i}", f"{i}.png", cat, staged, imp)
            for i, (cat, staged, imp) in enumerate([
                (("Furniture", "Chairs"), True, 20000),
                (("Furniture", "Chairs"), False, 500),
                (("Furniture", "Beds"), True, 15000),
                (("Shoe", "Heel"), False, None),
                (("Furniture", "Chairs"), False, 11000),
            ])))

    def test_no_predicates_identity(self, mixed):
        assert filter_catalog(mixed) == mixed

    def test_staged_filter(self, mixed):
        assert [e.id for e in filter_catalog(mixed, staged=True)] == ["e0", "e2"]

    def test_top_category(self, mixed):
        assert len(filter_catalog(mixed, top_category="Furniture")) == 4

    def test_min_impressions_excludes_missing(self, mixed):
        kept = filter_catalog(mixed, min_impressions=10000)
        assert [e.id for e in kept] == ["e0", "e2", "e4"]

    def test_min_subcategory_count(self):
        entries = [CatalogEntry(f"a{i}", "x.png", ("F", "Big"), True)
                   for i in range(19)]
        entries += [CatalogEntry(f"b{i}", "x.png", ("F", "Bigger"), True)
                    for i in range(20)]
        cat = Catalog(tuple(entries))
        kept = filter_catalog(cat, min_subcategory_count=20)
        assert len(kept) == 20
        assert all(e.category_path == ("F", "Bigger") for e in kept)

    def test_result_is_subsequence(self, mixed):
        kept = filter_catalog(mixed, staged=False)
        ids = [e.id for e in mixed]
        kept_ids = [e.id for e in kept]
        assert kept_ids == [i for i in ids if i in set(kept_ids)]


class TestStats:
    def test_empty(self):
        assert category_stats(Catalog(()), 1) == []

    def test_depth_two(self):
        cat = Catalog(tuple(
            CatalogEntry(f"e{i}", "x.png", path, False)
            for i, path in enumerate(
                [("A", "B"), ("A", "B"), ("A", "B"), ("A", "C")])))
        assert category_stats(cat, 2) == [("A > B", 3), ("A > C", 1)]
        assert category_stats(cat, 1) == [("A", 4)]

    def test_counts_sum_to_catalog_size(self):
        cat = Catalog(tuple(
            CatalogEntry(f"e{i}", "x.png", ("A", f"S{i % 3}", f"T{i % 2}"), False)
            for i in range(17)))
        for depth in (1, 2, 3, 5):
            assert sum(c for _, c in category_stats(cat, depth)) == 17

    def test_tie_break_lexicographic(self):
        cat = Catalog(tuple(
            CatalogEntry(f"e{i}", "x.png", path, False)
            for i, path in enumerate([("B",), ("A",), ("C",), ("A",), ("C",)])))
        assert category_stats(cat, 1) == [("A", 2), ("C", 2), ("B", 1)]

    def test_bad_depth(self):
        with pytest.raises(ValueError):
            category_stats(Catalog(()), 0)


def test_duplicate_ids_rejected_at_construction():
    with pytest.raises(IntegrityError):
        Catalog((CatalogEntry("a", "x.png", ("C",), False),
                 CatalogEntry("a", "y.png", ("C",), False)))


def test_empty_category_rejected():
    with pytest.raises(IntegrityError):
        CatalogEntry("a", "x.png", (), False)
