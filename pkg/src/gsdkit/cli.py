"""Command-line front end.

One executable with subcommands for descriptor computation, embedding
assembly, contour dumps, evaluation metrics, loss oracles, and the
built-in self-test. Structured output is JSON; binary tensors travel as
GSDT containers. Report-producing commands optionally render matplotlib
figures and per-class CSV tables next to the report.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, losses, metrics
from .contour import contours_as_json, extract_contours
from .descriptor import GsdConfig, compute_batch, instances_from_labels
from .embedding import PyramidSpec, assemble, downsample
from .raster import (InstanceMap, LabelMap, RasterError, load_instance_map,
                     load_label_map, one_hot, read_tensor, write_tensor)
from .report import build_report, write_report


class CliError(ValueError):
    """User-facing validation problem; exits with status 2."""


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("GSD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise CliError(f"GSD_THREADS={env!r} is not an integer") from exc
    return os.cpu_count() or 1


def _load_config(path: str | None) -> GsdConfig:
    if path is None:
        return GsdConfig()
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    try:
        return GsdConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad config {path}: {exc}") from exc


def _load_instance_batch(path: str) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise CliError(f"{path}: no such file")
    try:
        if p.suffix.lower() == ".gsdt" or _is_container(p):
            arr = read_tensor(p)
            if arr.ndim == 2:
                arr = arr[None]
            if arr.ndim != 3 or arr.dtype.kind not in "iu":
                raise CliError(f"{path}: expected integer (H, W) or (B, H, W) ids, "
                               f"got {arr.dtype} {arr.shape}")
            return arr
        return load_instance_map(p).ids[None]
    except RasterError as exc:
        raise CliError(str(exc)) from exc


def _is_container(p: Path) -> bool:
    try:
        with open(p, "rb") as fh:
            return fh.read(4) == b"GSDT"
    except OSError:
        return False


def _figure_dir(args) -> Path | None:
    if getattr(args, "figures", None) is None:
        return None
    d = Path(args.figures)
    d.mkdir(parents=True, exist_ok=True)
    return d


# --------------------------------------------------------------------------
# subcommands

def cmd_gsd(args) -> int:
    if args.action != "compute":
        raise CliError(f"unknown gsd action {args.action!r}")
    cfg = _load_config(args.config)
    t0 = time.perf_counter()
    batch = _load_instance_batch(args.instances)
    if args.from_labels:
        stacked = []
        for item in batch:
            lm = LabelMap(labels=item, num_classes=int(item.max()) + 1)
            stacked.append(instances_from_labels(lm).ids)
        batch = np.stack(stacked)
    t_load = time.perf_counter()
    dt = compute_batch(batch, cfg, threads=_threads(args),
                       standardized=not args.raw)
    t_compute = time.perf_counter()
    write_tensor(args.out, dt.values)
    warnings = []
    if dt.clamped_bins:
        warnings.append(f"{dt.clamped_bins} normalized radii exceeded the outer "
                        f"edge and were clamped")
    figdir = _figure_dir(args)
    results = {
        "out": str(args.out),
        "shape": list(dt.values.shape),
        "standardized": dt.standardized,
        "clamped_radial_bins": dt.clamped_bins,
    }
    if figdir is not None:
        from .figures import save_descriptor_montage
        results["figures"] = [str(save_descriptor_montage(dt, figdir / "descriptor_channels.png"))]
    report = build_report("gsd compute", cfg.to_dict() | {"raw": args.raw}, results,
                          warnings,
                          {"load_s": t_load - t0, "compute_s": t_compute - t_load})
    write_report(report, args.report)
    return 0


def cmd_embed(args) -> int:
    t0 = time.perf_counter()
    try:
        lm = load_label_map(args.labels, num_classes=args.num_classes)
    except RasterError as exc:
        raise CliError(str(exc)) from exc
    gsd_values = read_tensor(args.gsd)
    if gsd_values.ndim == 3:
        gsd_values = gsd_values[None]
    oh = one_hot(lm)[None]
    emb = assemble(oh, gsd_values)
    if args.scales:
        sizes = [int(s) for s in args.scales.split(",")]
        spec = PyramidSpec.from_square_sizes(sizes)
        levels = downsample(emb, spec)
    else:
        levels = [emb]
    outputs = []
    for level in levels:
        h, w = level.values.shape[2:]
        out = Path(f"{args.out_prefix}_{h}x{w}.gsdt")
        write_tensor(out, level.values)
        outputs.append(str(out))
    report = build_report(
        "embed",
        {"labels": str(args.labels), "gsd": str(args.gsd),
         "scales": args.scales or "native", "num_classes": lm.num_classes},
        {"outputs": outputs, "split": emb.split,
         "channels": int(emb.values.shape[1])},
        [], {"total_s": time.perf_counter() - t0})
    write_report(report, args.report)
    return 0


def cmd_contour(args) -> int:
    batch = _load_instance_batch(args.instances)
    if batch.shape[0] != 1:
        raise CliError("contour dump expects a single instance map")
    inst = InstanceMap(ids=batch[0])
    if args.id is not None:
        data = {str(args.id): extract_contours(inst, args.id).as_lists()}
    else:
        data = contours_as_json(inst)
    text = json.dumps(data, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return 0


def _load_features(path: str, name: str) -> np.ndarray:
    arr = read_tensor(path)
    if arr.ndim != 2:
        raise CliError(f"{name} features must be (n, dim), got {arr.shape}")
    return arr


def cmd_fid(args) -> int:
    t0 = time.perf_counter()
    real = _load_features(args.real, "real")
    fake = _load_features(args.fake, "fake")
    try:
        g_real = metrics.fit_gaussian(real)
        g_fake = metrics.fit_gaussian(fake)
        value = metrics.frechet_distance(g_real, g_fake)
    except metrics.MetricError as exc:
        raise CliError(str(exc)) from exc
    report = build_report(
        "fid",
        {"real": str(args.real), "fake": str(args.fake)},
        {"fid": value, "n_real": g_real.n, "n_fake": g_fake.n, "dim": g_real.dim},
        [], {"total_s": time.perf_counter() - t0})
    write_report(report, args.report)
    return 0


def _matched_rasters(pred_dir: str, truth_dir: str) -> list[tuple[Path, Path]]:
    pred_dir, truth_dir = Path(pred_dir), Path(truth_dir)
    if not pred_dir.is_dir() or not truth_dir.is_dir():
        raise CliError("seg-metrics expects two directories")
    names = sorted(p.name for p in truth_dir.iterdir()
                   if p.is_file() and not p.name.endswith(".json"))
    pairs = []
    for name in names:
        p = pred_dir / name
        if not p.exists():
            raise CliError(f"prediction missing for {name}")
        pairs.append((p, truth_dir / name))
    if not pairs:
        raise CliError(f"no rasters found in {truth_dir}")
    return pairs


def cmd_seg_metrics(args) -> int:
    t0 = time.perf_counter()
    cm_total: metrics.ConfusionMatrix | None = None
    n_pairs = 0
    for pred_path, truth_path in _matched_rasters(args.pred, args.truth):
        try:
            truth = load_label_map(truth_path, num_classes=args.num_classes)
            pred = load_label_map(pred_path, num_classes=truth.num_classes)
            cm = metrics.confusion(pred, truth, ignore=args.ignore)
        except (RasterError, metrics.MetricError) as exc:
            raise CliError(f"{truth_path.name}: {exc}") from exc
        cm_total = cm if cm_total is None else cm_total + cm
        n_pairs += 1
    iou = metrics.per_class_iou(cm_total)
    results = {
        "miou": metrics.miou(cm_total),
        "accuracy": metrics.accuracy(cm_total),
        "fwiou": metrics.fwiou(cm_total),
        "pairs": n_pairs,
        "evaluated_pixels": cm_total.total,
        "per_class_iou": [None if np.isnan(v) else float(v) for v in iou],
    }
    warnings = []
    absent = int(np.isnan(iou).sum())
    if absent:
        warnings.append(f"{absent} classes with empty union excluded from the mean")
    figdir = _figure_dir(args)
    if figdir is not None:
        from .figures import save_confusion_heatmap, save_iou_bars
        results["figures"] = [
            str(save_confusion_heatmap(cm_total, figdir / "confusion.png")),
            str(save_iou_bars(cm_total, figdir / "per_class_iou.png")),
        ]
    if args.csv:
        _write_iou_csv(args.csv, cm_total)
        results["csv"] = str(args.csv)
    report = build_report(
        "seg-metrics",
        {"pred": str(args.pred), "truth": str(args.truth), "ignore": args.ignore},
        results, warnings, {"total_s": time.perf_counter() - t0})
    write_report(report, args.report)
    return 0


def _write_iou_csv(path: str, cm: metrics.ConfusionMatrix) -> None:
    iou = metrics.per_class_iou(cm)
    freq = cm.counts.sum(axis=1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "true_pixels", "iou"])
        for c in range(cm.num_classes):
            writer.writerow([c, int(freq[c]),
                             "" if np.isnan(iou[c]) else f"{iou[c]:.6f}"])


def cmd_diversity(args) -> int:
    t0 = time.perf_counter()
    try:
        with open(args.pairs) as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read manifest {args.pairs}: {exc}") from exc
    entries = manifest.get("pairs", [])
    if not entries:
        raise CliError("manifest lists no pairs")
    base = Path(args.pairs).parent
    k = args.num_classes or manifest.get("num_classes")
    pairs = []
    for e in entries:
        dist = read_tensor(base / e["distances"])
        lm = load_label_map(base / e["labels"], num_classes=k)
        pairs.append((dist, lm))
    if k is None:
        k = max(lm.num_classes for _, lm in pairs)
    try:
        result = metrics.diversity(metrics.DistanceMapSet(pairs=tuple(pairs)), int(k))
    except metrics.MetricError as exc:
        raise CliError(str(exc)) from exc
    warnings = []
    if result.skipped_classes:
        warnings.append(f"classes without pixels skipped: {list(result.skipped_classes)}")
    if result.empty_complement_classes:
        warnings.append("classes with empty complement skipped from the "
                        f"other-class mean: {list(result.empty_complement_classes)}")
    results = {
        "lpips_mean": result.lpips_mean,
        "mcsd": result.mcsd,
        "mocd": result.mocd,
        "pairs": len(pairs),
        "class_diversity": {str(c): v for c, v in sorted(result.class_diversity.items())},
        "other_class_diversity": {str(c): v for c, v in
                                  sorted(result.other_class_diversity.items())},
    }
    figdir = _figure_dir(args)
    if figdir is not None:
        from .figures import save_diversity_bars
        results["figures"] = [str(save_diversity_bars(result, figdir / "diversity.png"))]
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["class", "class_region_mean", "other_classes_mean"])
            for c in sorted(result.class_diversity):
                writer.writerow([c, f"{result.class_diversity[c]:.6f}",
                                 f"{result.other_class_diversity.get(c, float('nan')):.6f}"])
        results["csv"] = str(args.csv)
    report = build_report("diversity", {"pairs": str(args.pairs), "num_classes": int(k)},
                          results, warnings, {"total_s": time.perf_counter() - t0})
    write_report(report, args.report)
    return 0


def _stack_halves(paths: list[str]):
    if len(paths) % 2:
        raise CliError("stack ops need an even number of inputs "
                       "(real layers then fake layers)")
    half = len(paths) // 2
    real = [read_tensor(p) for p in paths[:half]]
    fake = [read_tensor(p) for p in paths[half:]]
    return real, fake


def cmd_loss(args) -> int:
    op = args.op
    weights = losses.LossWeights(**json.loads(args.weights)) if args.weights \
        else losses.LossWeights()
    inputs = args.inputs or []
    try:
        if op == "adv_d":
            if len(inputs) != 2:
                raise CliError("adv_d needs --inputs REAL FAKE")
            value = losses.adv_d(read_tensor(inputs[0]), read_tensor(inputs[1]))
        elif op == "adv_g":
            if len(inputs) != 1:
                raise CliError("adv_g needs --inputs FAKE")
            value = losses.adv_g(read_tensor(inputs[0]))
        elif op == "fm":
            value = losses.feature_match(*_stack_halves(inputs))
        elif op == "perc":
            value = losses.perceptual(*_stack_halves(inputs),
                                      normalized=args.normalized)
        elif op == "ref_ce":
            if len(inputs) != 2:
                raise CliError("ref_ce needs --inputs LOGITS MASK")
            logits = read_tensor(inputs[0])
            mask = _load_instance_batch(inputs[1])[0]
            value = losses.ref_ce(logits, mask)
        elif op == "ref_cons":
            if len(inputs) != 2:
                raise CliError("ref_cons needs --inputs REAL_LOGITS FAKE_LOGITS")
            value = losses.ref_consistency(read_tensor(inputs[0]),
                                           read_tensor(inputs[1]))
        elif op == "ref_total":
            if len(args.values or []) != 3:
                raise CliError("ref_total needs --values L_REAL L_FAKE L_CONS")
            sched = losses.RefineSchedule(epoch=args.epoch, gamma=args.gamma)
            value = losses.ref_total(sched, *args.values)
        elif op == "total":
            if len(args.values or []) != 4:
                raise CliError("total needs --values ADV_G FM PERC REF")
            value = losses.total(weights, *args.values)
        else:
            raise CliError(f"unknown loss op {op!r}")
    except losses.LossInputError as exc:
        raise CliError(str(exc)) from exc
    sys.stdout.write(json.dumps(value) + "\n")
    if args.report:
        write_report(build_report(f"loss {op}",
                                  {"op": op, "inputs": inputs,
                                   "values": args.values,
                                   "epoch": args.epoch, "gamma": args.gamma},
                                  {"value": value}, [], {}), args.report)
    return 0


def cmd_selftest(args) -> int:
    from .selftest import SUITES, run_selftest

    if args.list:
        for name, _ in SUITES:
            print(name)
        return 0
    ok = run_selftest(only=args.only)
    print("selftest:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsdkit",
        description="Spatial descriptor tensors, hybrid embeddings, and "
                    "synthesis evaluation oracles for label rasters.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: GSD_THREADS or CPU count)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gsd", help="descriptor tensor computation")
    p.add_argument("action", choices=["compute"])
    p.add_argument("--instances", required=True,
                   help="instance raster (PNG) or GSDT container of ids")
    p.add_argument("--from-labels", action="store_true",
                   help="treat input as class labels; split into 8-connected "
                        "components first")
    p.add_argument("--config", help="JSON with n_rho/n_theta/r_inner/r_outer/epsilon")
    p.add_argument("--out", required=True, help="output GSDT container")
    p.add_argument("--raw", action="store_true", help="skip standardization")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--report", help="write the JSON report here (default stdout)")
    p.add_argument("--figures", help="directory for channel montage figures")
    p.set_defaults(fn=cmd_gsd)

    p = sub.add_parser("embed", help="hybrid embedding assembly")
    p.add_argument("--labels", required=True)
    p.add_argument("--gsd", required=True, help="descriptor GSDT container")
    p.add_argument("--scales", help="comma-separated square sizes, e.g. 256,128,64")
    p.add_argument("--num-classes", type=int)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--report")
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("contour", help="contour point dump as JSON")
    p.add_argument("--instances", required=True)
    p.add_argument("--id", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_contour)

    p = sub.add_parser("fid", help="Fréchet distance between feature sets")
    p.add_argument("--real", required=True)
    p.add_argument("--fake", required=True)
    p.add_argument("--report")
    p.set_defaults(fn=cmd_fid)

    p = sub.add_parser("seg-metrics", help="confusion-matrix scores over raster dirs")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--ignore", type=int, default=None,
                   help="truth class to exclude from evaluation")
    p.add_argument("--num-classes", type=int)
    p.add_argument("--report")
    p.add_argument("--figures")
    p.add_argument("--csv", help="per-class IoU table")
    p.set_defaults(fn=cmd_seg_metrics)

    p = sub.add_parser("diversity", help="masked perceptual diversity from a manifest")
    p.add_argument("--pairs", required=True,
                   help='JSON manifest {"pairs": [{"distances": ..., "labels": ...}]}')
    p.add_argument("--num-classes", type=int)
    p.add_argument("--report")
    p.add_argument("--figures")
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_diversity)

    p = sub.add_parser("loss", help="forward loss values for trainer cross-checks")
    p.add_argument("--op", required=True,
                   choices=["adv_d", "adv_g", "fm", "perc", "ref_ce", "ref_cons",
                            "ref_total", "total"])
    p.add_argument("--inputs", nargs="*", help="GSDT containers, op-specific")
    p.add_argument("--values", nargs="*", type=float,
                   help="precomputed component values for ref_total/total")
    p.add_argument("--weights", help='JSON, e.g. {"lambda_fm": 10}')
    p.add_argument("--epoch", type=int, default=0)
    p.add_argument("--gamma", type=int, default=80)
    p.add_argument("--normalized", action="store_true",
                   help="per-element mean in the perceptual op")
    p.add_argument("--report")
    p.set_defaults(fn=cmd_loss)

    p = sub.add_parser("selftest", help="run the built-in verification suites")
    p.add_argument("--list", action="store_true")
    p.add_argument("--only", help="run a single suite by name")
    p.set_defaults(fn=cmd_selftest)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RasterError, metrics.MetricError, losses.LossInputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
