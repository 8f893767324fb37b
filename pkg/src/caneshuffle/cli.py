"""Umbrella CLI: curate / split-plan / eval / bench / explain / serve and helpers.

Every report-producing subcommand writes machine-readable files (CSV/JSON) and
matplotlib figures into its output directory, in addition to console output.
Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import bench as benchmod
from . import curation, figures, gradcam, metrics
from .classes import CLASS_NAMES
from .errors import CaneError
from .model import ModelConfig, build_model, export_embeddings
from .weights import load_weights, save_weights

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp", ".webp"}


def _fail(message: str) -> "SystemExit":
    click.echo(f"error: {message}", err=True)
    return SystemExit(1)


def _load_model(path: str):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise _fail(f"cannot read model file: {exc}")
    try:
        return load_weights(data), data
    except CaneError as exc:
        raise _fail(str(exc))


@click.group()
def main():
    """Sugarcane leaf-disease toolkit."""


@main.command("init-model")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", default="model.cnew", show_default=True,
              type=click.Path(dir_okay=False))
def init_model(seed, out_path):
    """Write a randomly initialized weight container (for testing/benchmarks)."""
    model = build_model(ModelConfig(), seed=seed)
    data = save_weights(model)
    Path(out_path).write_bytes(data)
    click.echo(f"wrote {out_path} ({len(data)} bytes)")


@main.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", default="curation_out", show_default=True,
              type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
def curate(corpus_dir, out_dir, seed):
    """Dedup, rename, split, and plan augmentation for a class-per-subdir corpus."""
    root = Path(corpus_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    entries = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(class_dir.iterdir()):
            if f.suffix.lower() not in IMAGE_SUFFIXES:
                continue
            try:
                data = f.read_bytes()
                entries.append(curation.CorpusEntry(
                    path=str(f.relative_to(root)),
                    label=class_dir.name,
                    digest=curation.hash_exact(data),
                    phash=curation.phash64(data),
                ))
            except (OSError, CaneError) as exc:
                click.echo(f"skipping {f}: {exc}", err=True)
    if not entries:
        raise _fail(f"no images found under {corpus_dir}")

    survivors, removals = curation.dedup(entries)
    with open(out / "removals.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "label", "reason", "matched"])
        for e in removals:
            w.writerow([e.path, e.label, e.role, e.matched])

    mapping = curation.rename_normalize(survivors)
    with open(out / "manifest.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["original_path", "new_name"])
        for old, new in sorted(mapping.items()):
            w.writerow([old, new])

    counts: dict[str, int] = {}
    for e in survivors:
        counts[e.label] = counts.get(e.label, 0) + 1
    plan = curation.augmentation_plan(counts)
    (out / "plan.json").write_text(json.dumps(plan.to_dict(), indent=2))
    figures.save_plan_chart(plan, out / "plan.png")

    click.echo(f"{len(entries)} images scanned, {len(removals)} removed "
               f"({sum(1 for e in removals if e.role == 'removed(exact)')} exact, "
               f"{sum(1 for e in removals if e.role == 'removed(near)')} near), "
               f"{len(survivors)} kept")
    click.echo(f"reports written to {out}")


@main.command("split-plan")
@click.argument("counts_json", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", default="plan_out", show_default=True,
              type=click.Path(file_okay=False))
def split_plan(counts_json, out_dir):
    """Augmentation plan from a {class: original_count} JSON file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    counts = json.loads(Path(counts_json).read_text())
    try:
        plan = curation.augmentation_plan(counts)
    except CaneError as exc:
        raise _fail(str(exc))
    (out / "plan.json").write_text(json.dumps(plan.to_dict(), indent=2))
    with open(out / "plan.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class", "original", "train", "test", "factor", "final"])
        for r in plan.rows:
            w.writerow([r.label, r.original, r.train, r.test, r.factor, r.final])
    figures.save_plan_chart(plan, out / "plan.png")
    click.echo(f"imbalance ratio {plan.original_ratio:.1f}:1 -> {plan.final_ratio:.2f}:1")
    click.echo(f"plan written to {out}")


@main.command("eval")
@click.argument("predictions_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", default="eval_out", show_default=True,
              type=click.Path(file_okay=False))
def eval_cmd(predictions_csv, out_dir):
    """Evaluate a predictions CSV (columns: true, pred [, score_<class>...])."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = {name: i for i, name in enumerate(CLASS_NAMES)}
    true_labels, pred_labels, score_rows = [], [], []
    with open(predictions_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        score_cols = [c for c in (reader.fieldnames or []) if c.startswith("score_")]
        for row in reader:
            try:
                true_labels.append(index[row["true"]])
                pred_labels.append(index[row["pred"]])
            except KeyError as exc:
                raise _fail(f"unknown class or missing column: {exc}")
            if score_cols:
                score_rows.append([float(row[c]) for c in score_cols])
    if not true_labels:
        raise _fail("predictions file has no rows")

    scores = None
    if score_rows:
        if len(score_rows[0]) != len(CLASS_NAMES):
            raise _fail(f"expected {len(CLASS_NAMES)} score columns, got {len(score_rows[0])}")
        scores = np.asarray(score_rows)

    rep = metrics.report(true_labels, pred_labels, CLASS_NAMES, scores)
    (out / "report.json").write_text(rep.to_json())
    (out / "report.csv").write_text(rep.to_csv())
    figures.save_confusion_matrix(rep.cm, CLASS_NAMES, out / "confusion.png")
    figures.save_ci_bars(
        CLASS_NAMES,
        [m.recall for m in rep.per_class],
        [m.ci_low for m in rep.per_class],
        [m.ci_high for m in rep.per_class],
        out / "class_accuracy_ci.png",
    )
    if scores is not None:
        roc_curves, pr_curves = {}, {}
        t = np.asarray(true_labels)
        for c, name in enumerate(CLASS_NAMES):
            y = (t == c).astype(int)
            if 0 < y.sum() < len(y):
                roc_curves[name] = metrics.roc_auc(scores[:, c], y)[0]
                pr_curves[name] = metrics.pr_curve_ap(scores[:, c], y)[0]
        if roc_curves:
            figures.save_roc_curves(roc_curves, rep.per_class_auc, out / "roc.png")
            figures.save_pr_curves(pr_curves, rep.per_class_ap, out / "pr.png")

    click.echo(f"accuracy {rep.accuracy:.4f}  macro-F1 {rep.macro_f1:.4f}")
    click.echo(f"reports written to {out}")


@main.command("bench")
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--runs", default=30, show_default=True, type=int)
@click.option("--warmup", default=10, show_default=True, type=int)
@click.option("--out", "out_dir", default="bench_out", show_default=True,
              type=click.Path(file_okay=False))
def bench_cmd(model_path, runs, warmup, out_dir):
    """Measure single-image inference latency plus params/MACs/file size."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, data = _load_model(model_path)
    try:
        rep = benchmod.bench(model, runs=runs, warmup=warmup, model_file_bytes=len(data))
    except CaneError as exc:
        raise _fail(str(exc))
    (out / "bench.json").write_text(json.dumps(rep.to_dict(), indent=2))
    figures.save_latency_hist(rep.samples_ms, out / "latency.png")

    ref = benchmod.REFERENCE_PROFILE
    click.echo(f"latency: mean {rep.mean_ms:.2f} ms, median {rep.median_ms:.2f} ms, "
               f"p95 {rep.p95_ms:.2f} ms over {rep.runs} runs")
    click.echo(f"params: {rep.total_params / 1e6:.2f} M  (reference {ref['params_m']} M)")
    click.echo(f"MACs:   {rep.total_macs / 1e6:.2f} MMac (reference {ref['macs_mmac']} MMac)")
    click.echo(f"size:   {len(data) / 1e6:.2f} MB   (reference {ref['model_size_mb']} MB)")
    click.echo(f"reference per-image latency: {ref['latency_ms']} ms (hardware-dependent)")
    click.echo(f"report written to {out}")


@main.command("explain")
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("image_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("target_class", required=False)
@click.option("--out", "out_dir", default="explain_out", show_default=True,
              type=click.Path(file_okay=False))
def explain(model_path, image_path, target_class, out_dir):
    """Grad-CAM overlay for an image (argmax class unless one is given)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, _ = _load_model(model_path)
    try:
        x = curation.preprocess(Path(image_path).read_bytes())
    except CaneError as exc:
        raise _fail(str(exc))
    cls_index = None
    if target_class is not None:
        if target_class not in CLASS_NAMES:
            raise _fail(f"unknown class {target_class!r}; see `caneshuffle classes`")
        cls_index = CLASS_NAMES.index(target_class)
    cam = gradcam.gradcam_map(model, x, cls_index)
    (out / "overlay.png").write_bytes(cam.overlay_png)
    (out / "cam.json").write_text(json.dumps({
        "target_class": CLASS_NAMES[cam.target_class],
        "alphas": [float(a) for a in cam.alphas],
        "raw_map": cam.raw_map.tolist(),
        "normalized_map": cam.normalized_map.tolist(),
    }, indent=2))
    click.echo(f"explained class {CLASS_NAMES[cam.target_class]!r}; outputs in {out}")


@main.command("export-embeddings")
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("image_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", default="embeddings.csv", show_default=True,
              type=click.Path(dir_okay=False))
def export_embeddings_cmd(model_path, image_dir, out_path):
    """Penultimate-feature CSV for external projection tools (e.g. t-SNE)."""
    model, _ = _load_model(model_path)
    images = [(str(p.relative_to(image_dir)), p)
              for p in sorted(Path(image_dir).rglob("*"))
              if p.suffix.lower() in IMAGE_SUFFIXES]
    csv_text = export_embeddings(model, images, CLASS_NAMES, curation.preprocess,
                                 log=lambda m: click.echo(m, err=True))
    Path(out_path).write_text(csv_text)
    click.echo(f"wrote {out_path}")


@main.command("serve")
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--port", default=lambda: int(os.environ.get("PORT", "8000")),
              type=int, help="listen port [env: PORT]")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--reco-endpoint", default=lambda: os.environ.get("RECO_ENDPOINT"),
              help="remote recommendation provider URL [env: RECO_ENDPOINT]")
@click.option("--reco-key", default=lambda: os.environ.get("RECO_KEY"),
              help="remote provider API key [env: RECO_KEY]")
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False),
              help="static web UI bundle to serve at /")
def serve(model_path, port, host, reco_endpoint, reco_key, ui_dir):
    """Run the HTTP diagnosis service."""
    import uvicorn

    from .service import app_from_container

    app = app_from_container(model_path, reco_endpoint=reco_endpoint,
                             reco_key=reco_key, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_config=None)


@main.command("classes")
def classes_cmd():
    """Print the canonical 17-class roster."""
    for name in CLASS_NAMES:
        click.echo(name)


if __name__ == "__main__":
    sys.exit(main())
