"""Slow, loop-based twins of the fast paths.

These exist to be obviously correct rather than fast: explicit Python
loops, scalar float64 math, no vectorization. The self-test command and
the test suite compare the production implementations against them.
Keep them independent of the modules they check; the only shared pieces
are the radial edge table (itself checked against a logspace oracle) and
numpy's scalar arctan2/sqrt primitives.
"""

from __future__ import annotations

import math

import numpy as np

from .descriptor import GsdConfig, radial_edges

TWO_PI = 2.0 * math.pi


def naive_contour(mask: np.ndarray) -> list[tuple[int, int]]:
    """(x, y) pixels of the mask with a 4-neighbor outside it, row-major."""
    h, w = mask.shape
    pts = []
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            exposed = False
            for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                ny, nx = y + dy, x + dx
                if ny < 0 or ny >= h or nx < 0 or nx >= w or not mask[ny, nx]:
                    exposed = True
                    break
            if exposed:
                pts.append((x, y))
    return pts


def naive_point_histogram(sx: int, sy: int, contour_pts, config: GsdConfig,
                          edges=None) -> np.ndarray:
    """(n_rho, n_theta) float64 histogram by per-point scalar arithmetic."""
    if edges is None:
        edges = radial_edges(config)
    rs = []
    thetas = []
    for (px, py) in contour_pts:
        dx = float(px - sx)
        dy_neg = float(sy - py)
        rs.append(float(np.sqrt(dx * dx + dy_neg * dy_neg)))
        t = float(np.arctan2(dy_neg, dx))
        if t < 0.0:
            t += TWO_PI
        thetas.append(t)
    rmax = max(rs)
    hist = np.zeros((config.n_rho, config.n_theta), dtype=np.float64)
    delta = TWO_PI / config.n_theta
    for r, t in zip(rs, thetas):
        rn = 0.0 if rmax == 0.0 else 2.0 * r / rmax
        b_r = config.n_rho
        for k in range(config.n_rho):
            if rn <= edges[k]:
                b_r = k + 1
                break
        b_t = int(math.floor(t / delta))
        if b_t >= config.n_theta:
            b_t = config.n_theta - 1
        hist[b_r - 1, b_t] += 1.0
    n = len(contour_pts)
    return hist / (n + config.epsilon)


def naive_compute_batch(batch: np.ndarray, config: GsdConfig,
                        standardized: bool = True) -> np.ndarray:
    """Four-loop descriptor tensor: batch, instance, query pixel, contour point."""
    b_sz, h, w = batch.shape
    out = np.zeros((b_sz, config.channels, h, w), dtype=np.float32)
    edges = radial_edges(config)
    for b in range(b_sz):
        item = batch[b]
        for iid in sorted(int(v) for v in np.unique(item)):
            if iid == 0:
                continue
            mask = item == iid
            cpts = naive_contour(mask)
            for y in range(h):
                for x in range(w):
                    if not mask[y, x]:
                        continue
                    hist = naive_point_histogram(x, y, cpts, config, edges)
                    out[b, :, y, x] = hist.reshape(-1).astype(np.float32)
    if standardized:
        out = naive_standardize(out, config.epsilon)
    return out


def naive_standardize(raw: np.ndarray, epsilon: float) -> np.ndarray:
    """Per-item whole-tensor standardization with population std."""
    out = np.empty_like(raw, dtype=np.float32)
    for b in range(raw.shape[0]):
        x = raw[b].astype(np.float64)
        mu = np.mean(x)
        sigma = np.sqrt(np.mean((x - mu) ** 2))
        out[b] = ((x - mu) / (sigma + epsilon)).astype(np.float32)
    return out


def naive_confusion(pred: np.ndarray, truth: np.ndarray, k: int,
                    ignore: int | None = None) -> np.ndarray:
    cm = np.zeros((k, k), dtype=np.int64)
    h, w = truth.shape
    for y in range(h):
        for x in range(w):
            t = int(truth[y, x])
            if ignore is not None and t == ignore:
                continue
            cm[t, int(pred[y, x])] += 1
    return cm


def naive_seg_metrics(cm: np.ndarray) -> tuple[float, float, float]:
    """(miou, accuracy, fwiou) by per-class scalar arithmetic."""
    k = cm.shape[0]
    total = float(sum(int(cm[i, j]) for i in range(k) for j in range(k)))
    ious = []
    weights = []
    for i in range(k):
        row = float(sum(int(cm[i, j]) for j in range(k)))
        col = float(sum(int(cm[j, i]) for j in range(k)))
        union = row + col - float(cm[i, i])
        if union > 0.0:
            ious.append(float(cm[i, i]) / union)
        else:
            ious.append(None)
        weights.append(row / total)
    valid = [v for v in ious if v is not None]
    miou = sum(valid) / len(valid)
    accuracy = float(sum(int(cm[i, i]) for i in range(k))) / total
    fwiou = sum(weights[i] * ious[i] for i in range(k) if weights[i] > 0.0)
    return miou, accuracy, fwiou


def naive_diversity(distance_maps, label_maps, k: int):
    """(lpips_mean, mcsd, mocd) by explicit per-pixel accumulation."""
    sums = [0.0] * k
    counts = [0] * k
    comp_sums = [0.0] * k
    comp_counts = [0] * k
    total = 0.0
    n = 0
    for dist, labels in zip(distance_maps, label_maps):
        h, w = labels.shape
        for y in range(h):
            for x in range(w):
                d = float(dist[y, x])
                c = int(labels[y, x])
                total += d
                n += 1
                sums[c] += d
                counts[c] += 1
                for other in range(k):
                    if other != c:
                        comp_sums[other] += d
                        comp_counts[other] += 1
    present = [c for c in range(k) if counts[c] > 0]
    l_c = [sums[c] / counts[c] for c in present]
    mcsd = sum(l_c) / len(l_c) if l_c else 0.0
    l_not = [comp_sums[c] / comp_counts[c] for c in present if comp_counts[c] > 0]
    mocd = sum(l_not) / len(l_not) if l_not else 0.0
    return total / n, mcsd, mocd


def naive_adv_d(real: np.ndarray, fake: np.ndarray) -> float:
    acc = 0.0
    for v in real.reshape(-1):
        acc += max(0.0, 1.0 - float(v)) / real.size
    for v in fake.reshape(-1):
        acc += max(0.0, 1.0 + float(v)) / fake.size
    return acc


def naive_adv_g(fake: np.ndarray) -> float:
    acc = 0.0
    for v in fake.reshape(-1):
        acc += float(v)
    return -acc / fake.size


def naive_feature_match(real_stack, fake_stack) -> float:
    loss = 0.0
    for a, b in zip(real_stack, fake_stack):
        s = 0.0
        for x, y in zip(a.reshape(-1), b.reshape(-1)):
            s += abs(float(x) - float(y))
        loss += s / a.size
    return loss


def naive_perceptual(real_stack, fake_stack) -> float:
    loss = 0.0
    for a, b in zip(real_stack, fake_stack):
        for x, y in zip(a.reshape(-1), b.reshape(-1)):
            loss += abs(float(x) - float(y))
    return loss


def naive_softmax(scores) -> list[float]:
    m = max(scores)
    exps = [math.exp(s - m) for s in scores]
    z = sum(exps)
    return [e / z for e in exps]


def naive_ref_ce(logits: np.ndarray, labels: np.ndarray) -> float:
    k, h, w = logits.shape
    acc = 0.0
    for y in range(h):
        for x in range(w):
            probs = naive_softmax([float(logits[c, y, x]) for c in range(k)])
            acc += -math.log(probs[int(labels[y, x])])
    return acc / (h * w)


def naive_ref_consistency(real_logits: np.ndarray, fake_logits: np.ndarray,
                          clamp: float = 1e-12) -> float:
    k, h, w = real_logits.shape
    acc = 0.0
    for y in range(h):
        for x in range(w):
            p = naive_softmax([float(real_logits[c, y, x]) for c in range(k)])
            q = naive_softmax([float(fake_logits[c, y, x]) for c in range(k)])
            for c in range(k):
                acc += -p[c] * math.log(max(q[c], clamp))
    return acc / (h * w)


def naive_frechet_1d(mu_a: float, var_a: float, mu_b: float, var_b: float) -> float:
    return (mu_a - mu_b) ** 2 + (math.sqrt(var_a) - math.sqrt(var_b)) ** 2
