import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from caneshuffle.classes import CLASS_NAMES
from caneshuffle.cli import main
from caneshuffle.weights import save_weights

from conftest import png_bytes, synthetic_leaf
from test_curation import AUGMENT_TABLE, build_dedup_fixture, image_with_dhash_bits


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def model_file(default_model, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "model.cnew"
    path.write_bytes(save_weights(default_model))
    return path


class TestInitModel:
    def test_writes_container(self, runner, tmp_path):
        out = tmp_path / "m.cnew"
        result = runner.invoke(main, ["init-model", "--seed", "1", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert out.read_bytes()[:4] == b"CNEW"


class TestCurate:
    def test_dedup_fixture_dir(self, runner, tmp_path):
        corpus = tmp_path / "corpus" / "X"
        corpus.mkdir(parents=True)
        rng = np.random.default_rng(1)
        base = rng.integers(0, 2, (8, 8))

        def flipped(positions):
            b = base.copy()
            for p in positions:
                b[p // 8, p % 8] ^= 1
            return b

        f1 = image_with_dhash_bits(base)
        (corpus / "f1.png").write_bytes(f1)
        (corpus / "f2.png").write_bytes(f1)
        (corpus / "f3.png").write_bytes(image_with_dhash_bits(flipped(range(4))))
        (corpus / "f4.png").write_bytes(image_with_dhash_bits(flipped(range(10, 16))))
        (corpus / "f5.png").write_bytes(image_with_dhash_bits(flipped(range(20, 52))))

        out = tmp_path / "out"
        result = runner.invoke(main, ["curate", str(tmp_path / "corpus"),
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "5 images scanned, 2 removed (1 exact, 1 near), 3 kept" in result.output

        removals = list(csv.DictReader((out / "removals.csv").open()))
        assert {r["path"] for r in removals} == {"X/f2.png", "X/f3.png"}
        manifest = list(csv.DictReader((out / "manifest.csv").open()))
        assert len(manifest) == 3
        plan = json.loads((out / "plan.json").read_text())
        assert plan["rows"][0]["original"] == 3
        assert (out / "plan.png").stat().st_size > 0

    def test_empty_dir_fails(self, runner, tmp_path):
        result = runner.invoke(main, ["curate", str(tmp_path)])
        assert result.exit_code == 1
        assert "no images found" in result.output


class TestSplitPlan:
    def test_published_counts(self, runner, tmp_path):
        counts = {name: vals[0] for name, vals in AUGMENT_TABLE.items()}
        counts_path = tmp_path / "counts.json"
        counts_path.write_text(json.dumps(counts))
        out = tmp_path / "plan"
        result = runner.invoke(main, ["split-plan", str(counts_path), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "26.3:1 -> 3.80:1" in result.output

        rows = {r["class"]: r for r in csv.DictReader((out / "plan.csv").open())}
        for name, (orig, train, factor, final) in AUGMENT_TABLE.items():
            row = rows[name]
            assert (int(row["original"]), int(row["train"]),
                    int(row["factor"]), int(row["final"])) == (orig, train, factor, final)
        assert (out / "plan.json").exists()
        assert (out / "plan.png").stat().st_size > 0


class TestEval:
    def write_predictions(self, path, with_scores=False):
        used = list(CLASS_NAMES[:5]) * 4
        fields = ["true", "pred"]
        if with_scores:
            fields += [f"score_{n}" for n in CLASS_NAMES]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fields)
            w.writeheader()
            for name in used:
                row = {"true": name, "pred": name}
                if with_scores:
                    for n in CLASS_NAMES:
                        row[f"score_{n}"] = "0.9" if n == name else "0.005"
                w.writerow(row)

    def test_perfect_predictions(self, runner, tmp_path):
        preds = tmp_path / "preds.csv"
        self.write_predictions(preds)
        out = tmp_path / "eval"
        result = runner.invoke(main, ["eval", str(preds), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "accuracy 1.0000" in result.output
        rep = json.loads((out / "report.json").read_text())
        assert rep["accuracy"] == 1.0
        assert (out / "confusion.png").stat().st_size > 0
        assert (out / "class_accuracy_ci.png").stat().st_size > 0

    def test_score_columns_produce_curves(self, runner, tmp_path):
        preds = tmp_path / "preds.csv"
        self.write_predictions(preds, with_scores=True)
        out = tmp_path / "eval"
        result = runner.invoke(main, ["eval", str(preds), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "roc.png").stat().st_size > 0
        assert (out / "pr.png").stat().st_size > 0

    def test_unknown_class_exit_1(self, runner, tmp_path):
        preds = tmp_path / "preds.csv"
        preds.write_text("true,pred\nNot A Class,Healthy\n")
        result = runner.invoke(main, ["eval", str(preds), "--out", str(tmp_path / "o")])
        assert result.exit_code == 1

    def test_missing_file_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["eval", str(tmp_path / "nope.csv")])
        assert result.exit_code == 2


class TestBench:
    def test_report_and_figure(self, runner, model_file, tmp_path):
        out = tmp_path / "bench"
        result = runner.invoke(main, ["bench", str(model_file), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "reference" in result.output
        rep = json.loads((out / "bench.json").read_text())
        assert rep["runs"] >= 30
        assert rep["p95_ms"] >= rep["median_ms"]
        assert rep["total_params"] > 2_000_000
        assert (out / "latency.png").stat().st_size > 0

    def test_too_few_runs_exit_1(self, runner, model_file, tmp_path):
        result = runner.invoke(main, ["bench", str(model_file), "--runs", "3",
                                      "--out", str(tmp_path / "b")])
        assert result.exit_code == 1


class TestExplain:
    def test_argmax_default(self, runner, model_file, tmp_path):
        img = tmp_path / "leaf.png"
        img.write_bytes(png_bytes(synthetic_leaf()))
        out = tmp_path / "explain"
        result = runner.invoke(main, ["explain", str(model_file), str(img),
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "overlay.png").read_bytes()[:4] == b"\x89PNG"
        cam = json.loads((out / "cam.json").read_text())
        assert cam["target_class"] in CLASS_NAMES

    def test_explicit_class(self, runner, model_file, tmp_path):
        img = tmp_path / "leaf.png"
        img.write_bytes(png_bytes(synthetic_leaf()))
        out = tmp_path / "explain"
        result = runner.invoke(main, ["explain", str(model_file), str(img),
                                      "Red Rot", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert json.loads((out / "cam.json").read_text())["target_class"] == "Red Rot"

    def test_unknown_class_exit_1(self, runner, model_file, tmp_path):
        img = tmp_path / "leaf.png"
        img.write_bytes(png_bytes(synthetic_leaf()))
        result = runner.invoke(main, ["explain", str(model_file), str(img),
                                      "Leaf Blight"])
        assert result.exit_code == 1


class TestExportEmbeddings:
    def test_csv_written(self, runner, model_file, tmp_path):
        imgdir = tmp_path / "imgs"
        imgdir.mkdir()
        (imgdir / "a.png").write_bytes(png_bytes(synthetic_leaf(seed=1)))
        (imgdir / "b.png").write_bytes(png_bytes(synthetic_leaf(seed=2)))
        out = tmp_path / "emb.csv"
        result = runner.invoke(main, ["export-embeddings", str(model_file),
                                      str(imgdir), "--out", str(out)])
        assert result.exit_code == 0, result.output
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 3
        assert lines[0].startswith("image_id,label,f0")


class TestClasses:
    def test_roster_printed(self, runner):
        result = runner.invoke(main, ["classes"])
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert lines == list(CLASS_NAMES)
