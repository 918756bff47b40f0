import csv
import json
import math
import random

import pytest

from gsdtest.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, parse_grid, run_cli
from gsdtest.errors import EmptyGroup, FileError, NonFiniteNumber, SchemaError, UnknownLevel
from gsdtest.io import DatasetSpec, RunManifest, ingest, read_manifest, read_report
from gsdtest.permutation import TestConfig

HEALTH = ("poor", "fair", "good")

FOUR_POINT_ROWS = [
    ("delta", 1, "1"), ("delta", 1, "1"), ("delta", 2, "2"), ("delta", 2, "2"),
    ("lambda", 1, "1"), ("lambda", 1, "2"), ("lambda", 2, "1"), ("lambda", 2, "2"),
]


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return str(path)


@pytest.fixture
def four_point_csv(tmp_path):
    return write_csv(tmp_path / "four_point.csv", ["g", "x", "y"], FOUR_POINT_ROWS)


def four_point_spec(path):
    return DatasetSpec(path, "g", ("delta", "lambda"), cardinal=["x"], ordinal=[("y", ("1", "2"))])


@pytest.fixture
def small_csv(tmp_path):
    rows = [
        ("X", 3, "good"), ("X", 2, "fair"), ("X", 4, "good"), ("X", 1, "poor"),
        ("Y", 1, "fair"), ("Y", 0, "poor"), ("Y", 2, "poor"), ("Y", 1, "good"),
    ]
    return write_csv(tmp_path / "small.csv", ["id", "group", "income", "health"],
                     [(i,) + r for i, r in enumerate(rows)])


def small_args(path, out, *extra):
    return ["--input", path, "--group-col", "group", "--groups", "X,Y", "--cardinal", "income",
            "--ordinal", "health:" + "<".join(HEALTH), "--out", str(out), *extra]


class TestDatasetSpec:
    def test_overlapping_columns(self, tmp_path):
        with pytest.raises(ValueError):
            DatasetSpec("f.csv", "g", ("a", "b"), cardinal=["x"], ordinal=[("x", ("1", "2"))])

    def test_same_group_labels(self):
        with pytest.raises(ValueError):
            DatasetSpec("f.csv", "g", ("a", "a"), cardinal=["x"])

    def test_short_level_list(self):
        with pytest.raises(ValueError):
            DatasetSpec("f.csv", "g", ("a", "b"), ordinal=[("y", ("1",))])

    def test_partial_bounds(self):
        with pytest.raises(ValueError):
            DatasetSpec("f.csv", "g", ("a", "b"), cardinal=["x", "z"], bounds=[("x", 0, 1)])


class TestIngest:
    def test_four_point(self, four_point_csv):
        from gsdtest.core import build_pooled

        xs, ys, schema = ingest(four_point_spec(four_point_csv))
        assert len(xs) == len(ys) == 4
        assert xs[0] == (1.0, 0.0) and ys[1] == (1.0, 1.0)
        pooled = build_pooled(xs, ys, schema)
        assert pooled.s == 4

    def test_unknown_level(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", ["g", "h"], [("a", "poor"), ("b", "excellent")])
        with pytest.raises(UnknownLevel) as info:
            ingest(DatasetSpec(path, "g", ("a", "b"), ordinal=[("h", HEALTH)]))
        assert info.value.row == 3 and info.value.column == "h"
        assert "row 3" in str(info.value)

    def test_empty_group(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", ["g", "x"], [("a", 1), ("a", 2)])
        with pytest.raises(EmptyGroup):
            ingest(DatasetSpec(path, "g", ("a", "b"), cardinal=["x"]))

    def test_missing_value(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", ["g", "x"], [("a", 1), ("b", "")])
        with pytest.raises(SchemaError) as info:
            ingest(DatasetSpec(path, "g", ("a", "b"), cardinal=["x"]))
        assert info.value.row == 3

    @pytest.mark.parametrize("cell", ["nan", "inf", "-Infinity"])
    def test_non_finite(self, tmp_path, cell):
        path = write_csv(tmp_path / "a.csv", ["g", "x"], [("a", 1), ("b", cell)])
        with pytest.raises(NonFiniteNumber):
            ingest(DatasetSpec(path, "g", ("a", "b"), cardinal=["x"]))

    def test_unparseable_number(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", ["g", "x"], [("a", "1,5"), ("b", 2)])
        with pytest.raises(SchemaError):
            ingest(DatasetSpec(path, "g", ("a", "b"), cardinal=["x"]))

    def test_missing_column(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", ["g", "x"], [("a", 1), ("b", 2)])
        with pytest.raises(SchemaError) as info:
            ingest(DatasetSpec(path, "g", ("a", "b"), cardinal=["income"]))
        assert info.value.column == "income"

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileError):
            ingest(DatasetSpec(str(tmp_path / "nope.csv"), "g", ("a", "b"), cardinal=["x"]))

    def test_other_groups_are_skipped(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", ["g", "x"], [("a", 1), ("c", 9), ("b", 2)])
        xs, ys, _ = ingest(DatasetSpec(path, "g", ("a", "b"), cardinal=["x"]))
        assert xs == [(1.0,)] and ys == [(2.0,)]


class TestManifest:
    def test_round_trip_and_digest(self, four_point_csv, tmp_path):
        cfg = TestConfig(epsilons=[0, 1], gammas=[0, 0.1], resamples=50, seed=3)
        m = RunManifest.create(four_point_spec(four_point_csv), cfg)
        assert m.verify()
        again = RunManifest.from_dict(json.loads(json.dumps(m.to_dict())))
        assert again == m
        other = RunManifest.create(four_point_spec(four_point_csv), TestConfig(resamples=50, seed=4))
        assert other.digest != m.digest


class TestCli:
    def test_parse_grid(self):
        assert parse_grid("0,0.25,0.5") == [0.0, 0.25, 0.5]
        assert parse_grid("0:0.15:0.05") == [0.0, 0.05, 0.1, 0.15]

    def test_exact_run(self, small_csv, tmp_path):
        out = tmp_path / "run"
        code = run_cli(small_args(small_csv, out, "--exact", "--epsilon", "0,1", "--gamma", "0,0.1",
                                  "--reversed", "--dump-constraints"))
        assert code == EXIT_OK
        for name in ["manifest.json", "report.json", "resamples.csv", "pvalue_curve.csv",
                     "report_reversed.json", "resamples_reversed.csv", "pvalue_curve_reversed.csv",
                     "constraints.txt"]:
            assert (out / name).exists(), name
        report = read_report(out / "report.json")
        assert report.metadata["mode"] == "exact"
        assert len(report.result(0.0).resamples) == math.comb(8, 4) == 70
        with open(out / "resamples.csv") as fh:
            assert len(list(csv.DictReader(fh))) == 2 * 70
        with open(out / "pvalue_curve.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
        assert float(rows[0]["p_value"]) == report.p_value(0.0, 0.0)
        assert read_manifest(out / "manifest.json").verify()

    def test_report_files_are_reproducible(self, small_csv, tmp_path):
        args = ["--resamples", "100", "--seed", "17", "--epsilon", "0,0.5"]
        assert run_cli(small_args(small_csv, tmp_path / "a", *args)) == EXIT_OK
        assert run_cli(small_args(small_csv, tmp_path / "b", *args, "--workers", "2")) == EXIT_OK
        for name in ["report.json", "resamples.csv", "pvalue_curve.csv"]:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        da = json.loads((tmp_path / "a" / "manifest.json").read_text())["digest"]
        db = json.loads((tmp_path / "b" / "manifest.json").read_text())["digest"]
        assert da == db

    def test_row_and_column_order_invariance(self, small_csv, tmp_path):
        with open(small_csv) as fh:
            header, *rows = list(csv.reader(fh))
        random.Random(0).shuffle(rows)
        order = [3, 0, 2, 1]
        shuffled = write_csv(tmp_path / "shuffled.csv", [header[i] for i in order],
                             [[r[i] for i in order] for r in rows])
        args = ["--resamples", "60", "--seed", "2", "--epsilon", "0,1"]
        assert run_cli(small_args(small_csv, tmp_path / "a", *args)) == EXIT_OK
        assert run_cli(small_args(shuffled, tmp_path / "b", *args)) == EXIT_OK
        assert read_report(tmp_path / "a" / "report.json") == read_report(tmp_path / "b" / "report.json")

    @pytest.mark.parametrize(
        "argv",
        [
            ["--groups", "X,Y"],
            ["--resamples", "10", "--alpha", "0.05"],
            ["--ordinal", "health:poor"],
            ["--epsilon", "2"],
            ["--resamples", "100", "--exact"],
        ],
    )
    def test_usage_errors(self, small_csv, tmp_path, argv):
        if argv == ["--groups", "X,Y"]:
            argv = ["--input", small_csv, "--groups", "X,Y", "--out", str(tmp_path)]
        else:
            argv = small_args(small_csv, tmp_path / "o", *argv)
        assert run_cli(argv) == EXIT_USAGE

    def test_data_error(self, small_csv, tmp_path):
        argv = small_args(small_csv, tmp_path / "o")
        argv[argv.index("health:poor<fair<good")] = "health:poor<good"
        assert run_cli(argv) == EXIT_DATA

    def test_missing_input_is_data_error(self, tmp_path):
        assert run_cli(small_args(str(tmp_path / "none.csv"), tmp_path / "o")) == EXIT_DATA

    def test_explicit_bounds(self, small_csv, tmp_path):
        args = ["--bound", "income:0,10", "--bound", "health:poor,good", "--resamples", "40", "--alpha", "0.1"]
        assert run_cli(small_args(small_csv, tmp_path / "o", *args)) == EXIT_OK
        report = read_report(tmp_path / "o" / "report.json")
        assert report.metadata["bounds"]["upper"] == [10.0, 2.0]
        assert not report.metadata["bounds_synthesized"]
