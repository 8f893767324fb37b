"""Independent brute-force reference implementations used by the tests.

These deliberately use the slowest, most literal formulation (nested loops,
pair counting) and never share code with the library paths they check.
"""

import math

import numpy as np


def conv2d_naive(x, w, stride, padding, groups):
    """Seven-nested-loop grouped cross-correlation."""
    n, cin, h, width = x.shape
    cout, cin_g, kh, kw = w.shape
    sh, sw = stride
    ph, pw = padding
    cout_g = cout // groups
    hout = (h + 2 * ph - kh) // sh + 1
    wout = (width + 2 * pw - kw) // sw + 1
    xp = np.zeros((n, cin, h + 2 * ph, width + 2 * pw), dtype=np.float64)
    xp[:, :, ph:ph + h, pw:pw + width] = x
    out = np.zeros((n, cout, hout, wout), dtype=np.float64)
    for b in range(n):
        for o in range(cout):
            g = o // cout_g
            for oy in range(hout):
                for ox in range(wout):
                    acc = 0.0
                    for ci in range(cin_g):
                        for ky in range(kh):
                            for kx in range(kw):
                                acc += (xp[b, g * cin_g + ci, oy * sh + ky, ox * sw + kx]
                                        * w[o, ci, ky, kx])
                    out[b, o, oy, ox] = acc
    return out


def conv2d_multiply_count(x_shape, w_shape, stride, padding, groups):
    """Number of multiplications the naive conv oracle performs."""
    n, cin, h, width = x_shape
    cout, cin_g, kh, kw = w_shape
    hout = (h + 2 * padding[0] - kh) // stride[0] + 1
    wout = (width + 2 * padding[1] - kw) // stride[1] + 1
    return n * cout * hout * wout * cin_g * kh * kw


def maxpool_naive(x, kernel, stride, padding):
    n, c, h, w = x.shape
    kh, kw = kernel
    sh, sw = stride
    ph, pw = padding
    xp = np.full((n, c, h + 2 * ph, w + 2 * pw), -np.inf)
    xp[:, :, ph:ph + h, pw:pw + w] = x
    hout = (h + 2 * ph - kh) // sh + 1
    wout = (w + 2 * pw - kw) // sw + 1
    out = np.empty((n, c, hout, wout))
    for b in range(n):
        for ci in range(c):
            for oy in range(hout):
                for ox in range(wout):
                    out[b, ci, oy, ox] = xp[b, ci, oy * sh:oy * sh + kh,
                                            ox * sw:ox * sw + kw].max()
    return out


def gap_naive(x):
    n, c, h, w = x.shape
    out = np.zeros((n, c, 1, 1))
    for b in range(n):
        for ci in range(c):
            s = 0.0
            for yy in range(h):
                for xx in range(w):
                    s += float(x[b, ci, yy, xx])
            out[b, ci, 0, 0] = s / (h * w)
    return out


def linear_naive(x, w, b):
    n, f = x.shape
    o = w.shape[0]
    out = np.zeros((n, o))
    for i in range(n):
        for j in range(o):
            acc = float(b[j])
            for k in range(f):
                acc += float(x[i, k]) * float(w[j, k])
            out[i, j] = acc
    return out


def batchnorm_naive(x, mean, var, gamma, beta, eps):
    out = np.empty_like(x, dtype=np.float64)
    n, c, h, w = x.shape
    for b in range(n):
        for ci in range(c):
            for yy in range(h):
                for xx in range(w):
                    out[b, ci, yy, xx] = (gamma[ci] * (x[b, ci, yy, xx] - mean[ci])
                                          / math.sqrt(var[ci] + eps) + beta[ci])
    return out


def confusion_naive(true_labels, pred_labels, k):
    cm = [[0] * k for _ in range(k)]
    for t, p in zip(true_labels, pred_labels):
        cm[t][p] += 1
    return np.asarray(cm)


def per_class_f1_naive(true_labels, pred_labels, c):
    tp = sum(1 for t, p in zip(true_labels, pred_labels) if t == c and p == c)
    fp = sum(1 for t, p in zip(true_labels, pred_labels) if t != c and p == c)
    fn = sum(1 for t, p in zip(true_labels, pred_labels) if t == c and p != c)
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    return 2 * prec * rec / (prec + rec) if prec + rec else 0.0


def auc_pair_counting(scores, labels):
    """Mann-Whitney: fraction of (pos, neg) pairs ranked correctly, ties count 1/2."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def ap_brute_sweep(scores, labels):
    """AP = sum over descending unique thresholds of (dRecall * precision)."""
    pairs = sorted(zip(scores, labels), key=lambda t: -t[0])
    npos = sum(labels)
    thresholds = sorted({s for s, _ in pairs}, reverse=True)
    ap = 0.0
    prev_recall = 0.0
    for th in thresholds:
        kept = [(s, y) for s, y in pairs if s >= th]
        tp = sum(y for _, y in kept)
        precision = tp / len(kept)
        recall = tp / npos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def label_smooth_ce_naive(logits, c, eps):
    k = len(logits)
    m = max(logits)
    exps = [math.exp(v - m) for v in logits]
    z = sum(exps)
    logp = [v - m - math.log(z) for v in logits]
    loss = 0.0
    for j in range(k):
        target = eps / k + (1.0 - eps if j == c else 0.0)
        loss -= target * logp[j]
    return loss
