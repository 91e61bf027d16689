"""Batch command line interface: train, segment, evaluate."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig
from .dataset import IMAGE_EXTENSIONS, ANNOTATION_TAG, ingest_dataset, load_entry
from .errors import ConfigError, GlandSegError, IngestError
from .forest import load_forest, save_forest
from .io import atomic_write_text, load_annotation, save_label_map, save_overlay
from .metrics import evaluate_split
from .segmenter import GlandSegmenter

logger = logging.getLogger("glandseg")


def _load_config(path: str | None) -> PipelineConfig:
    return PipelineConfig.from_file(path) if path else PipelineConfig()


def _worker_count() -> int:
    env = os.environ.get("GLANDSEG_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"GLANDSEG_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigError("GLANDSEG_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    index = ingest_dataset(args.data, split=args.split)
    logger.info("training on %d images from %s", len(index), index.root)
    images, annotations = [], []
    for entry in index.entries:
        img, anno = load_entry(entry)
        images.append(img)
        annotations.append(anno)
    segmenter = GlandSegmenter.from_config(config).fit(images, annotations)
    summary = segmenter.training_summary_
    logger.info("candidates: %d (%d positive)", summary["samples"], summary["positives"])
    logger.info("regime threshold: %.6f", segmenter.n_th_)
    model_path = Path(args.model)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_forest(segmenter.forest_, model_path, metadata={
        "n_th": segmenter.n_th_,
        "config_hash": config.config_hash(),
        "trained_on": index.split,
    })
    logger.info("model written to %s", model_path)
    return 0


def _segment_one(segmenter: GlandSegmenter, entry, out_dir: Path, overlays: bool) -> dict:
    img, _ = load_entry(entry)
    result = segmenter.segment(img)
    seg_path = out_dir / f"{entry.id}_seg.png"
    save_label_map(seg_path, result.regions)
    if overlays:
        save_overlay(out_dir / f"{entry.id}_overlay.png", img, result.regions)
    return {
        "id": entry.id,
        "status": "ok",
        "regions": result.count,
        "kind": result.kind.kind,
        "ratio": round(result.kind.ratio, 6),
        "output": seg_path.name,
    }


def cmd_segment(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    forest = load_forest(args.model)
    model_sha = hashlib.sha256(Path(args.model).read_bytes()).hexdigest()
    segmenter = GlandSegmenter.from_config(config).attach_model(forest)
    try:
        n_th = segmenter._resolved_n_th()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    index = ingest_dataset(args.data, split=args.split, require_annotations=False)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = _worker_count()
    logger.info("segmenting %d images with %d worker(s)", len(index), workers)

    def safe(entry) -> dict:
        try:
            row = _segment_one(segmenter, entry, out_dir, args.overlays)
            logger.info("%s: %d region(s), %s boundary", entry.id, row["regions"], row["kind"])
            return row
        except Exception as exc:
            logger.error("%s failed: %s", entry.id, exc)
            return {"id": entry.id, "status": "error", "error": str(exc)}

    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(safe, index.entries))

    manifest = {
        "config_hash": config.config_hash(),
        "model": {"path": str(args.model), "sha256": model_sha},
        "n_th": n_th,
        "split": index.split,
        "entries": rows,
    }
    atomic_write_text(out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True))
    failures = sum(1 for r in rows if r["status"] != "ok")
    if failures:
        logger.error("%d of %d images failed", failures, len(rows))
        return 1
    return 0


def _find_ground_truth(gt_dir: Path, split: str) -> list[tuple[str, Path]]:
    if not gt_dir.is_dir():
        raise IngestError(f"ground-truth directory not found: {gt_dir}")
    found = []
    for path in sorted(gt_dir.iterdir()):
        if not (path.is_file() and path.suffix.lower() in IMAGE_EXTENSIONS):
            continue
        if not path.stem.endswith(ANNOTATION_TAG):
            continue
        entry_id = path.stem[: -len(ANNOTATION_TAG)]
        found.append((entry_id, path))
    prefix = f"{split.lower()}_"
    prefixed = [f for f in found if f[0].lower().startswith(prefix)]
    if prefixed:
        found = prefixed
    if not found:
        raise IngestError(f"no annotation rasters under {gt_dir}")
    return found


def cmd_evaluate(args: argparse.Namespace) -> int:
    gt_items = _find_ground_truth(Path(args.gt), args.split)
    pred_dir = Path(args.pred)
    if not pred_dir.is_dir():
        raise IngestError(f"prediction directory not found: {pred_dir}")
    ids, preds, gts, missing = [], [], [], set()
    for entry_id, gt_path in gt_items:
        gt = load_annotation(gt_path)
        pred_path = pred_dir / f"{entry_id}_seg.png"
        if pred_path.exists():
            pred = load_annotation(pred_path)
            if pred.shape != gt.shape:
                raise IngestError(
                    f"prediction {pred_path} shape {pred.shape} does not match "
                    f"annotation shape {gt.shape}"
                )
        else:
            logger.warning("missing prediction for %s; scoring all objects as misses",
                           entry_id)
            missing.add(entry_id)
            pred = np.zeros_like(gt)
        ids.append(entry_id)
        preds.append(pred)
        gts.append(gt)
    report = evaluate_split(preds, gts, ids, split=args.split)
    for row in report.rows:
        if row["id"] in missing:
            row["missing_prediction"] = True
    report_path = Path(args.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(report_path, report.to_json())
    atomic_write_text(report_path.with_suffix(".txt"), report.to_text())
    sys.stdout.write(report.to_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glandseg",
        description="Gland segmentation for H&E histopathology images",
    )
    parser.add_argument("--version", action="version", version=f"glandseg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a nucleus classifier")
    train.add_argument("--data", required=True, help="dataset directory")
    train.add_argument("--model", required=True, help="output model file")
    train.add_argument("--config", help="INI config file")
    train.add_argument("--split", default="train", help="split prefix (default: train)")
    train.add_argument("--seed", type=int, help="override the config seed")
    train.set_defaults(func=cmd_train)

    segment = sub.add_parser("segment", help="segment a directory of images")
    segment.add_argument("--data", required=True, help="dataset directory")
    segment.add_argument("--model", required=True, help="trained model file")
    segment.add_argument("--out", required=True, help="output directory")
    segment.add_argument("--config", help="INI config file")
    segment.add_argument("--split", default="test", help="split prefix (default: test)")
    segment.add_argument("--overlays", action="store_true",
                         help="also write tinted overlay images")
    segment.set_defaults(func=cmd_segment)

    evaluate = sub.add_parser("evaluate", help="score predictions against annotations")
    evaluate.add_argument("--pred", required=True, help="directory of *_seg.png predictions")
    evaluate.add_argument("--gt", required=True, help="directory of *_anno annotations")
    evaluate.add_argument("--report", required=True, help="output report path (JSON)")
    evaluate.add_argument("--split", default="test", help="split name for the report")
    evaluate.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GlandSegError as exc:
        logger.error("error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
