"""Built-in verification suites comparing the fast paths against the
loop-based twins in naive.py, plus shipped-default checks.

Every suite runs on deterministic generated fixtures, so two runs print
identical summaries. The environment variable GSDKIT_SELFTEST_FAULT can
name a suite to force-fail, which exists so the failure-reporting path
itself can be exercised.
"""

from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import losses, metrics, naive
from .contour import extract_contours, instance_pixels
from .descriptor import GsdConfig, compute_batch, point_histogram, radial_edges
from .embedding import PyramidSpec, assemble, downsample, split
from .raster import InstanceMap, LabelMap, one_hot, read_tensor, write_tensor

FAULT_ENV = "GSDKIT_SELFTEST_FAULT"


def random_blob(rng, h: int, w: int, n_seeds: int = 3, steps: int = 40) -> np.ndarray:
    """Connected-ish random blob mask grown by a lattice walk."""
    mask = np.zeros((h, w), dtype=bool)
    for _ in range(n_seeds):
        y, x = int(rng.integers(h)), int(rng.integers(w))
        for _ in range(steps):
            mask[y, x] = True
            dy, dx = rng.integers(-1, 2), rng.integers(-1, 2)
            y = int(np.clip(y + dy, 0, h - 1))
            x = int(np.clip(x + dx, 0, w - 1))
    return mask


def random_instance_map(rng, h: int, w: int, n_instances: int = 2) -> np.ndarray:
    ids = np.zeros((h, w), dtype=np.int32)
    for i in range(1, n_instances + 1):
        blob = random_blob(rng, h, w)
        ids[blob] = i
    return ids


# --------------------------------------------------------------------------
# suites; each returns None on success or a failure description

def suite_one_hot_sum() -> str | None:
    rng = np.random.default_rng(101)
    for _ in range(10):
        k = int(rng.integers(2, 9))
        labels = rng.integers(0, k, size=(16, 16)).astype(np.int32)
        oh = one_hot(LabelMap(labels=labels, num_classes=k))
        sums = oh.sum(axis=0)
        for y in range(16):
            for x in range(16):
                if sums[y, x] != 1.0:
                    return f"channel sum {sums[y, x]} at ({x},{y})"
                if oh[labels[y, x], y, x] != 1.0:
                    return f"hot channel not 1 at ({x},{y})"
    return None


def suite_container_roundtrip() -> str | None:
    rng = np.random.default_rng(102)
    with tempfile.TemporaryDirectory() as tmp:
        for dtype in (np.float32, np.float64, np.uint8, np.int32):
            arr = (rng.random((3, 4, 5)) * 100).astype(dtype)
            p = Path(tmp) / f"t_{np.dtype(dtype).name}.gsdt"
            write_tensor(p, arr)
            back = read_tensor(p)
            if back.dtype != arr.dtype or not np.array_equal(back, arr):
                return f"round-trip mismatch for {np.dtype(dtype).name}"
            if p.read_bytes() != (lambda q: (write_tensor(q, back), q.read_bytes())[1])(
                    Path(tmp) / "rewrite.gsdt"):
                return "re-save not byte-identical"
    return None


def suite_contour_properties() -> str | None:
    rng = np.random.default_rng(103)
    for trial in range(15):
        ids = random_instance_map(rng, 16, 16)
        inst = InstanceMap(ids=ids)
        for iid in inst.instance_ids():
            cs = extract_contours(inst, iid)
            pix = instance_pixels(inst, iid)
            pix_set = {(int(x), int(y)) for x, y in pix}
            expected = set(naive.naive_contour(ids == iid))
            got = {(int(x), int(y)) for x, y in cs.points}
            if got != expected:
                return f"trial {trial} id {iid}: contour differs from 4-neighbor scan"
            if not got <= pix_set:
                return f"trial {trial} id {iid}: contour not a subset of pixels"
    # solid convex shapes, exhaustive rectangles within 6x6
    for y0 in range(6):
        for y1 in range(y0, 6):
            for x0 in range(6):
                for x1 in range(x0, 6):
                    ids = np.zeros((6, 6), dtype=np.int32)
                    ids[y0:y1 + 1, x0:x1 + 1] = 1
                    cs = extract_contours(InstanceMap(ids=ids), 1)
                    if {(int(x), int(y)) for x, y in cs.points} != set(
                            naive.naive_contour(ids == 1)):
                        return f"rectangle ({x0},{y0})-({x1},{y1}) contour mismatch"
    return None


def suite_gsd_bruteforce() -> str | None:
    rng = np.random.default_rng(104)
    cfg = GsdConfig()
    fixtures = [random_instance_map(rng, 8, 8, n_instances=int(rng.integers(1, 4)))
                for _ in range(8)]
    fixtures.append(np.zeros((8, 8), dtype=np.int32))
    full = np.ones((8, 8), dtype=np.int32)
    fixtures.append(full)
    batch = np.stack(fixtures)
    fast = compute_batch(batch, cfg).values
    slow = naive.naive_compute_batch(batch, cfg)
    if not np.array_equal(fast, slow):
        return "fast/naive descriptor tensors differ on 8x8 fixtures"
    blob = random_instance_map(rng, 16, 16, n_instances=2)[None]
    if not np.array_equal(compute_batch(blob, cfg).values,
                          naive.naive_compute_batch(blob, cfg)):
        return "fast/naive differ on 16x16 blob"
    return None


def suite_gsd_mass() -> str | None:
    rng = np.random.default_rng(105)
    cfg = GsdConfig()
    for _ in range(5):
        ids = random_instance_map(rng, 12, 12)
        inst = InstanceMap(ids=ids)
        for iid in inst.instance_ids():
            cs = extract_contours(inst, iid)
            n = len(cs)
            expected = n / (n + cfg.epsilon)
            for x, y in instance_pixels(inst, iid)[:20]:
                h = point_histogram((int(x), int(y)), cs, cfg)
                if abs(h.sum() - expected) > 1e-9:
                    return f"mass {h.sum()} != {expected} at ({x},{y})"
    return None


def suite_radial_edges() -> str | None:
    for n_rho, inner, outer in ((6, 0.125, 2.0), (2, 0.125, 2.0), (9, 0.3, 4.0)):
        cfg = GsdConfig(n_rho=n_rho, r_inner=inner, r_outer=outer)
        mine = radial_edges(cfg)
        oracle = np.logspace(math.log10(inner), math.log10(outer), n_rho)
        rel = np.abs(mine - oracle) / oracle
        if rel.max() > 1e-12:
            return f"edges off by {rel.max()} for n_rho={n_rho}"
        if not (np.diff(mine) > 0).all():
            return "edges not strictly increasing"
    return None


def suite_standardize_moments() -> str | None:
    rng = np.random.default_rng(106)
    for _ in range(3):
        ids = random_instance_map(rng, 16, 16, n_instances=3)[None]
        out = compute_batch(ids, GsdConfig()).values[0].astype(np.float64)
        mu = out.mean()
        sd = np.sqrt(((out - mu) ** 2).mean())
        if abs(mu) >= 1e-5:
            return f"|mean| {abs(mu)} >= 1e-5"
        if abs(sd - 1.0) >= 1e-3:
            return f"|std-1| {abs(sd - 1.0)} >= 1e-3"
    return None


def suite_gsd_invariance() -> str | None:
    rng = np.random.default_rng(107)
    cfg = GsdConfig()
    blob = random_blob(rng, 10, 10)
    base = np.zeros((24, 24), dtype=np.int32)
    base[2:12, 2:12][blob] = 1
    moved = np.zeros_like(base)
    moved[7:17, 7:17][blob] = 1
    raw_a = compute_batch(base[None], cfg, standardized=False).values[0]
    raw_b = compute_batch(moved[None], cfg, standardized=False).values[0]
    if not np.array_equal(raw_a[:, 2:12, 2:12], raw_b[:, 7:17, 7:17]):
        return "translation changed descriptor values"
    rot = np.rot90(base).copy()
    raw_r = compute_batch(rot[None], cfg, standardized=False).values[0]
    shift = cfg.n_theta // 4
    hists = raw_a.reshape(cfg.n_rho, cfg.n_theta, 24, 24).astype(np.float64)
    hists_r = raw_r.reshape(cfg.n_rho, cfg.n_theta, 24, 24).astype(np.float64)
    contour = {(int(x), int(y))
               for x, y in extract_contours(InstanceMap(ids=base), 1).points}
    self_mass = 1.0 / (len(contour) + cfg.epsilon)
    for y, x in zip(*np.nonzero(base == 1)):
        ry, rx = 24 - 1 - x, y  # destination under one quarter-turn
        pred = np.roll(hists[:, :, y, x], shift, axis=1)
        act = hists_r[:, :, ry, rx].copy()
        if (x, y) in contour:
            # the self count sits in bin (1, 1) in both frames by convention
            pred[0, shift] -= self_mass
            act[0, 0] -= self_mass
        if np.abs(pred - act).max() > 1e-6:
            return f"rotation shift broken at ({x},{y})"
    return None


def suite_embedding() -> str | None:
    rng = np.random.default_rng(108)
    labels = rng.integers(0, 3, size=(8, 8)).astype(np.int32)
    oh = one_hot(LabelMap(labels=labels, num_classes=3))[None]
    desc = rng.standard_normal((1, 12, 8, 8)).astype(np.float32)
    emb = assemble(oh, desc)
    back_oh, back_desc = split(emb)
    if not (np.array_equal(back_oh, oh) and np.array_equal(back_desc, desc)):
        return "assemble/split not an identity"
    for level in downsample(emb, PyramidSpec.from_square_sizes([8, 4, 2])):
        sums = level.layout.sum(axis=1)
        if not (sums == 1.0).all():
            return "pyramid layout channels lost the one-hot property"
    return None


def suite_frechet() -> str | None:
    rng = np.random.default_rng(109)
    for _ in range(200):
        mu_a, mu_b = rng.normal(size=2)
        sd_a, sd_b = rng.uniform(0.1, 3.0, size=2)
        a = metrics.GaussianStats(mu=np.array([mu_a]), cov=np.array([[sd_a ** 2]]), n=10)
        b = metrics.GaussianStats(mu=np.array([mu_b]), cov=np.array([[sd_b ** 2]]), n=10)
        want = naive.naive_frechet_1d(mu_a, sd_a ** 2, mu_b, sd_b ** 2)
        if abs(metrics.frechet_distance(a, b) - want) > 1e-8:
            return f"1-D closed form off: {metrics.frechet_distance(a, b)} vs {want}"
    for dim in (2, 64):
        feats = rng.standard_normal((dim + 16, dim))
        g = metrics.fit_gaussian(feats)
        if abs(metrics.frechet_distance(g, g)) > 1e-6:
            return f"self distance nonzero at dim {dim}"
    return None


def suite_segmentation() -> str | None:
    rng = np.random.default_rng(110)
    for k in (2, 6, 16):
        for _ in range(10):
            truth = rng.integers(0, k, size=(16, 16)).astype(np.int32)
            pred = np.where(rng.random((16, 16)) < 0.7, truth,
                            rng.integers(0, k, size=(16, 16))).astype(np.int32)
            cm = metrics.confusion(LabelMap(labels=pred, num_classes=k),
                                   LabelMap(labels=truth, num_classes=k))
            if not np.array_equal(cm.counts, naive.naive_confusion(pred, truth, k)):
                return f"confusion counts differ at K={k}"
            want = naive.naive_seg_metrics(cm.counts)
            got = (metrics.miou(cm), metrics.accuracy(cm), metrics.fwiou(cm))
            if got != want:
                return f"metrics differ at K={k}: {got} vs {want}"
    return None


def suite_diversity() -> str | None:
    labels = np.zeros((4, 4), dtype=np.int32)
    labels[:, 2:] = 1
    lm = LabelMap(labels=labels, num_classes=2)
    dist = np.full((4, 4), 0.2)
    dist[:, 2:] = 0.4
    res = metrics.diversity(metrics.DistanceMapSet(pairs=((dist, lm),)), 2)
    if abs(res.mcsd - 0.3) > 1e-9 or abs(res.mocd - 0.3) > 1e-9:
        return f"two-class fixture: mcsd={res.mcsd} mocd={res.mocd}"
    want = naive.naive_diversity([dist], [labels], 2)
    if max(abs(a - b) for a, b in zip(res.as_tuple(), want)) > 1e-12:
        return "diversity differs from per-pixel accumulation"
    single = metrics.diversity(metrics.DistanceMapSet(
        pairs=((np.full((3, 3), 0.5), LabelMap(labels=np.zeros((3, 3), np.int32),
                                               num_classes=1)),)), 1)
    if single.lpips_mean != single.mcsd or single.mocd != 0.0:
        return "single-class conventions broken"
    return None


def suite_losses() -> str | None:
    rng = np.random.default_rng(111)
    for _ in range(5):
        real = rng.standard_normal((4, 8, 8))
        fake = rng.standard_normal((4, 8, 8))
        checks = [
            (losses.adv_d(real, fake), naive.naive_adv_d(real, fake)),
            (losses.adv_g(fake), naive.naive_adv_g(fake)),
            (losses.feature_match([real, fake], [fake, real]),
             naive.naive_feature_match([real, fake], [fake, real])),
            (losses.perceptual([real], [fake]), naive.naive_perceptual([real], [fake])),
        ]
        logits_r = rng.standard_normal((5, 6, 6))
        logits_f = rng.standard_normal((5, 6, 6))
        mask = rng.integers(0, 5, size=(6, 6))
        checks.append((losses.ref_ce(logits_r, mask),
                       naive.naive_ref_ce(logits_r, mask)))
        checks.append((losses.ref_consistency(logits_r, logits_f),
                       naive.naive_ref_consistency(logits_r, logits_f)))
        for got, want in checks:
            if abs(got - want) > 1e-6 * max(1.0, abs(want)):
                return f"loss parity broken: {got} vs {want}"
    sched_off = losses.RefineSchedule(epoch=79, gamma=80)
    sched_on = losses.RefineSchedule(epoch=80, gamma=80)
    if losses.ref_total(sched_off, 1.0, 5.0, 7.0) != 1.0:
        return "schedule active before gamma"
    if losses.ref_total(sched_on, 1.0, 5.0, 7.0) != 13.0:
        return "schedule inactive at gamma"
    return None


def suite_defaults() -> str | None:
    cfg = GsdConfig()
    if (cfg.n_rho, cfg.n_theta) != (6, 12):
        return f"bin defaults ({cfg.n_rho}, {cfg.n_theta}) != (6, 12)"
    if cfg.epsilon != 1e-8:
        return f"epsilon default {cfg.epsilon} != 1e-8"
    w = losses.LossWeights()
    if (w.lambda_adv, w.lambda_fm, w.lambda_perc, w.lambda_ref) != (1, 10, 10, 1):
        return "loss weight defaults are not (1, 10, 10, 1)"
    if losses.RefineSchedule(epoch=0).gamma != 80:
        return "warm-up epoch default is not 80"
    if losses.DEFAULT_PERCEPTUAL_LAYERS != 5:
        return "perceptual layer default is not 5"
    return None


SUITES = [
    ("raster.one_hot_sum", suite_one_hot_sum),
    ("raster.container_roundtrip", suite_container_roundtrip),
    ("contour.properties", suite_contour_properties),
    ("gsd.bruteforce", suite_gsd_bruteforce),
    ("gsd.mass", suite_gsd_mass),
    ("gsd.radial_edges", suite_radial_edges),
    ("gsd.standardize_moments", suite_standardize_moments),
    ("gsd.invariance", suite_gsd_invariance),
    ("embed.roundtrip", suite_embedding),
    ("metrics.frechet", suite_frechet),
    ("metrics.segmentation", suite_segmentation),
    ("metrics.diversity", suite_diversity),
    ("losses.parity", suite_losses),
    ("config.defaults", suite_defaults),
]


def run_selftest(only: str | None = None, out=None) -> bool:
    """Run all suites (or one), print a line per suite, return overall pass."""
    import sys

    out = out or sys.stdout
    fault = os.environ.get(FAULT_ENV)
    all_ok = True
    for name, fn in SUITES:
        if only is not None and name != only:
            continue
        if fault == name:
            detail = "forced failure via " + FAULT_ENV
        else:
            detail = fn()
        ok = detail is None
        all_ok &= ok
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {name}" + ("" if ok else f": {detail}")
        print(line, file=out)
    return all_ok
