"""Acceptance gate: one test per top-level criterion, one PASS line each.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
"""

import base64
import io
import math
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from caneshuffle import curation, gradcam, hpo, metrics
from caneshuffle import tensorops as T
from caneshuffle.bench import bench
from caneshuffle.classes import CLASS_NAMES
from caneshuffle.model import Linear
from caneshuffle.service import create_app
from caneshuffle.weights import save_weights

from conftest import png_bytes, synthetic_leaf
from oracles import (auc_pair_counting, confusion_naive, conv2d_naive,
                     gap_naive, linear_naive, maxpool_naive,
                     per_class_f1_naive)
from test_curation import AUGMENT_TABLE, build_dedup_fixture
from test_gradcam import random_head


def _pass(line):
    print(f"PASS {line}")


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_curation_plan_reproduction():
    with Timer() as t:
        counts = {name: vals[0] for name, vals in AUGMENT_TABLE.items()}
        plan = curation.augmentation_plan(counts)
        for row in plan.rows:
            orig, train, factor, final = AUGMENT_TABLE[row.label]
            assert (row.original, row.train, row.factor, row.final) == \
                (orig, train, factor, final), row.label
        assert abs(plan.original_ratio - 26.3) <= 0.1
        assert abs(plan.final_ratio - 3.80) <= 0.01
    assert t.elapsed < 1.0
    _pass(f"curation plan: all 17 rows exact, imbalance 26.3:1 -> 3.80:1 "
          f"({t.elapsed:.3f}s)")


def test_dedup_fixture():
    with Timer() as t:
        survivors, removals = curation.dedup(build_dedup_fixture())
        assert sorted(e.path for e in survivors) == ["f1.png", "f4.png", "f5.png"]
        assert {e.path for e in removals} == {"f2.png", "f3.png"}
        again, extra = curation.dedup(survivors)
        assert [e.path for e in again] == [e.path for e in survivors]
        assert not extra
    assert t.elapsed < 1.0
    _pass(f"dedup fixture: survivors {{f1, f4, f5}}, idempotent ({t.elapsed:.3f}s)")


def test_kernel_correctness():
    rng = np.random.default_rng(42)
    with Timer() as t:
        conv_checked = 0
        for _ in range(110):
            groups = int(rng.choice([1, 1, 1, 2, 4]))
            cin = groups * int(rng.integers(1, 4))
            cout = groups * int(rng.integers(1, 4))
            if rng.random() < 0.2:  # depthwise
                cin = cout = groups = int(rng.integers(2, 8))
            k = int(rng.integers(1, 4))
            s = int(rng.integers(1, 3))
            p = int(rng.integers(0, 2))
            h = int(rng.integers(k, k + 5))
            w = int(rng.integers(k, k + 5))
            x = rng.standard_normal((2, cin, h, w)).astype(np.float32)
            wts = rng.standard_normal((cout, cin // groups, k, k)).astype(np.float32)
            spec = T.ConvSpec(cin, cout, (k, k), (s, s), (p, p), groups)
            got = T.conv2d(x, wts, spec)
            ref = conv2d_naive(x.astype(np.float64), wts.astype(np.float64),
                               (s, s), (p, p), groups)
            scale = max(np.abs(ref).max(), 1.0)
            assert np.abs(got - ref).max() / scale < 1e-5
            conv_checked += 1
        assert conv_checked >= 100

        for _ in range(100):
            c = int(rng.integers(1, 5))
            h = int(rng.integers(3, 9))
            w = int(rng.integers(3, 9))
            x = rng.standard_normal((2, c, h, w)).astype(np.float32)
            assert np.abs(T.maxpool2d(x, (3, 3), (2, 2), (1, 1))
                          - maxpool_naive(x, (3, 3), (2, 2), (1, 1))).max() < 1e-5
            assert np.abs(T.global_avg_pool(x) - gap_naive(x)).max() < 1e-5
            f, o = int(rng.integers(1, 16)), int(rng.integers(1, 8))
            xv = rng.standard_normal((3, f)).astype(np.float32)
            wv = rng.standard_normal((o, f)).astype(np.float32)
            bv = rng.standard_normal(o).astype(np.float32)
            ref = linear_naive(xv, wv, bv)
            scale = max(np.abs(ref).max(), 1.0)
            assert np.abs(T.linear(xv, wv, bv) - ref).max() / scale < 1e-5

        for c in range(2, 65):
            x = rng.standard_normal((1, c, 2, 2)).astype(np.float32)
            for g in range(1, c + 1):
                if c % g:
                    continue
                shuffled = T.channel_shuffle(x, g)
                assert np.array_equal(T.channel_shuffle(shuffled, c // g), x)
    assert t.elapsed < 60.0
    _pass(f"kernels: {conv_checked} conv shapes + pool/GAP/linear oracles, "
          f"shuffle identity for all (C,g) C<=64 ({t.elapsed:.1f}s)")


def test_gradcam_gradients(tiny_model):
    rng = np.random.default_rng(7)
    with Timer() as t:
        checked = 0
        attempts = 0
        while checked < 50 and attempts < 500:
            attempts += 1
            head = random_head(rng)
            a = rng.standard_normal((4, 2, 2)).astype(np.float32)
            z = head.fc1.weight @ a.mean(axis=(1, 2)) + head.fc1.bias
            if np.min(np.abs(z)) < 1e-4:
                continue
            c = int(rng.integers(head.config.num_classes))
            grad = gradcam.head_gradient(head, a, c)
            step = 1e-3
            fd = np.zeros_like(grad)
            for k in range(4):
                for i in range(2):
                    for j in range(2):
                        ap = a.copy(); ap[k, i, j] += step
                        am = a.copy(); am[k, i, j] -= step
                        fd[k, i, j] = (head.logit(ap, c) - head.logit(am, c)) / (2 * step)
            scale = max(np.abs(fd).max(), 1e-8)
            assert np.abs(grad - fd).max() / scale < 1e-3
            checked += 1
        assert checked == 50

        import copy
        x = curation.preprocess(synthetic_leaf(), size=tiny_model.config.input_size)
        cam1 = gradcam.gradcam_map(tiny_model, x, 1)
        scaled = copy.deepcopy(tiny_model)
        scaled.fc2.weight = scaled.fc2.weight.copy()
        scaled.fc2.weight[1] *= 3.0
        cam2 = gradcam.gradcam_map(scaled, x, 1)
        assert np.abs(cam2.normalized_map - cam1.normalized_map).max() < 1e-5
    assert t.elapsed < 60.0
    _pass(f"grad-cam: 50 finite-difference heads within 1e-3, heatmap "
          f"scale-invariant ({t.elapsed:.1f}s)")


def test_profiler_and_bench(default_model):
    rep = default_model.cost_report()
    stem = next(l for l in rep.layers if l.name == "stem")
    assert stem.params - 2 * 24 == 648          # conv weights alone
    assert stem.macs == 8_128_512
    fc2 = next(l for l in rep.layers if l.name == "head.fc2")
    assert fc2.params == 17_425
    assert 2_000_000 <= rep.total_params <= 2_450_000
    assert 140_000_000 <= rep.total_macs <= 165_000_000

    x = np.random.default_rng(0).standard_normal((1, 3, 224, 224)).astype(np.float32)
    t0 = time.perf_counter()
    default_model.forward(x)
    single_ms = (time.perf_counter() - t0) * 1000.0
    assert single_ms < 100.0

    b = bench(default_model, runs=30, warmup=10)
    assert b.runs >= 30
    assert b.p95_ms >= b.median_ms
    _pass(f"profiler: stem 648/8128512 exact, totals {rep.total_params} params / "
          f"{rep.total_macs} MACs in band (ref 2.19M / 152.43 MMac), forward "
          f"{single_ms:.1f} ms, bench p95 {b.p95_ms:.1f} >= median {b.median_ms:.1f}")


def test_metrics_against_oracles():
    rng = np.random.default_rng(11)
    with Timer() as t:
        for _ in range(100):
            n = int(rng.integers(30, 150))
            true = rng.integers(0, 17, n).tolist()
            pred = np.where(rng.random(n) < 0.6, true,
                            rng.integers(0, 17, n)).tolist()
            cm = metrics.confusion(true, pred, 17)
            assert np.array_equal(cm, confusion_naive(true, pred, 17))
            per_class = metrics.precision_recall_f1(cm)
            for c in range(17):
                assert per_class[c].f1 == pytest.approx(
                    per_class_f1_naive(true, pred, c), abs=1e-12)
            assert metrics.macro_f1(cm) == pytest.approx(
                sum(per_class_f1_naive(true, pred, c) for c in range(17)) / 17,
                abs=1e-12)

        for _ in range(100):
            n = int(rng.integers(5, 50))
            labels = rng.integers(0, 2, n)
            if labels.sum() in (0, n):
                labels[0] = 1 - labels[0]
            scores = np.round(rng.random(n), 1)
            _, auc = metrics.roc_auc(scores, labels)
            assert auc == pytest.approx(
                auc_pair_counting(scores.tolist(), labels.tolist()), abs=1e-9)

        lo, hi = metrics.wilson_ci(95, 100)
        assert lo == pytest.approx(0.888, abs=1e-3)
        assert hi == pytest.approx(0.978, abs=1e-3)
    assert t.elapsed < 60.0
    _pass(f"metrics: 100 label sets vs oracles exact, AUC pair-counting 1e-9, "
          f"Wilson(95,100)=({lo:.3f},{hi:.3f}) ({t.elapsed:.1f}s)")


def test_tpe_acceptance():
    space = hpo.default_space()
    with Timer() as t:
        cfg = hpo.TpeConfig(seed=5)

        def run(transform):
            history, picks = [], []
            for _ in range(25):
                a = hpo.suggest(history, space, cfg)
                picks.append(a)
                raw = (a["dropout1"] - 0.3) ** 2 + math.log10(a["lr"]) ** 2
                history = hpo.observe(history, hpo.TrialRecord(a, transform(raw)))
            return picks

        assert run(lambda v: v) == run(lambda v: math.exp(v))

        def objective(a):
            return (math.log10(a["lr"]) + 3.5) ** 2 + (a["dropout1"] - 0.35) ** 2

        tpe_best, rand_best = [], []
        for seed in range(20):
            history = []
            for _ in range(40):
                a = hpo.suggest(history, space, hpo.TpeConfig(seed=seed))
                for d in space.dimensions:
                    assert d.contains(a[d.name]), d.name
                history = hpo.observe(history, hpo.TrialRecord(a, objective(a)), space)
            tpe_best.append(hpo.best(history).objective)
            rng = np.random.default_rng(seed)
            rand_best.append(min(objective(hpo._uniform_draw(space, rng))
                                 for _ in range(40)))
        tpe_med, rand_med = np.median(tpe_best), np.median(rand_best)
        assert tpe_med <= rand_med
    assert t.elapsed < 120.0
    _pass(f"tpe: rank-transform invariant, median best {tpe_med:.4f} <= "
          f"random {rand_med:.4f}, all in bounds ({t.elapsed:.1f}s)")


def test_protocol_math():
    assert hpo.cosine_lr(0, 100, 6.17e-4) == pytest.approx(6.17e-4, abs=1e-18)
    assert hpo.cosine_lr(100, 100, 6.17e-4) == pytest.approx(0.0, abs=1e-18)
    assert hpo.cosine_lr(50, 100, 6.17e-4) == pytest.approx(3.085e-4, abs=1e-18)

    state = hpo.EarlyStopState(patience=10)
    state, stop = hpo.early_stop_step(state, 1.0)
    assert not stop
    for i in range(10):
        state, stop = hpo.early_stop_step(state, 1.0)
        assert stop == (i == 9)

    for eps in (0.0, 0.052, 0.1, 0.2):
        assert hpo.label_smooth_ce(np.zeros(17), 0, eps) == pytest.approx(
            math.log(17), abs=1e-9)
    _pass("protocol: cosine endpoints/midpoint exact, early stop at epoch 10, "
          "uniform-logit CE = ln 17")


def test_service_contract(default_model):
    app = create_app(model=default_model,
                     container_bytes=save_weights(default_model))
    upload = {"file": ("leaf.png", png_bytes(synthetic_leaf()), "image/png")}
    with TestClient(app) as client:
        body = client.post("/predict", files=upload).json()
        confidences = [e["confidence"] for e in body["top5"]]
        assert len(confidences) == 5
        assert confidences == sorted(confidences, reverse=True)
        assert sum(confidences) <= 1.0 + 1e-9
        overlay = Image.open(io.BytesIO(base64.b64decode(body["gradcam"])))
        assert overlay.format == "PNG"

        roster = client.get("/classes").json()
        assert len(roster) == 17

        for name in CLASS_NAMES:
            reco = client.post("/recommend", json={"disease": name}).json()
            sections = reco["sections"]
            assert set(sections) == {"cause", "immediate_steps", "long_term_control"}
            assert all(sections[k].strip() for k in sections)

    fallback_app = create_app(model=default_model,
                              reco_endpoint="http://127.0.0.1:9/advice")
    with TestClient(fallback_app) as client:
        reco = client.post("/recommend", json={"disease": "Smut"}).json()
        assert reco["source"] == "local"
    _pass("service: /predict top-5 + PNG overlay, /classes 17, /recommend 3 "
          "sections for all classes with local fallback")
