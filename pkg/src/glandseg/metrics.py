"""Object-level segmentation metrics: detection F1 with a coverage rule,
object-weighted Dice, and object-weighted symmetric Hausdorff distance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .validation import check_label_map, check_same_shape


@dataclass(frozen=True)
class ObjectMatch:
    """Greedy one-to-one matching between predicted and ground-truth
    objects: (pred_label, gt_label) pairs plus the resulting counts."""

    pairs: tuple[tuple[int, int], ...]
    tp: int
    fp: int
    fn: int

    @property
    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        return 2.0 * self.tp / denom if denom else 1.0


def _overlaps(pred: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, int, int]:
    """Dense intersection-count matrix indexed [pred_label, gt_label]."""
    np_ = int(pred.max()) if pred.size else 0
    ng = int(gt.max()) if gt.size else 0
    inter = np.zeros((np_ + 1, ng + 1), dtype=np.int64)
    both = (pred > 0) & (gt > 0)
    if both.any():
        joint = pred[both].astype(np.int64) * (ng + 1) + gt[both]
        counts = np.bincount(joint, minlength=(np_ + 1) * (ng + 1))
        inter = counts.reshape(np_ + 1, ng + 1)
    return inter, np_, ng


def match_objects(pred: np.ndarray, gt: np.ndarray, min_coverage: float = 0.5) -> ObjectMatch:
    """Greedy detection matching.

    A predicted object may claim a ground-truth object when it covers at
    least min_coverage of its area; candidate pairs are claimed in order of
    descending coverage, ties going to the smaller ground-truth label (then
    the smaller predicted label). Each object matches at most once.
    """
    pred = check_label_map(pred)
    gt = check_label_map(gt)
    check_same_shape(pred, gt, "label maps")
    inter, np_, ng = _overlaps(pred, gt)
    gt_sizes = np.bincount(gt.ravel(), minlength=ng + 1)
    ps, gs = np.nonzero(inter[1:, 1:])
    ps, gs = ps + 1, gs + 1
    coverage = inter[ps, gs] / gt_sizes[gs]
    ok = coverage >= min_coverage
    ps, gs, coverage = ps[ok], gs[ok], coverage[ok]
    order = np.lexsort((ps, gs, -coverage))
    used_p = np.zeros(np_ + 1, dtype=bool)
    used_g = np.zeros(ng + 1, dtype=bool)
    pairs: list[tuple[int, int]] = []
    for i in order:
        p, g = int(ps[i]), int(gs[i])
        if used_p[p] or used_g[g]:
            continue
        used_p[p] = used_g[g] = True
        pairs.append((p, g))
    tp = len(pairs)
    return ObjectMatch(tuple(pairs), tp, np_ - tp, ng - tp)


def dice(a: np.ndarray, b: np.ndarray) -> float:
    """Dice overlap of two boolean masks; two empty masks score 1."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    denom = int(a.sum()) + int(b.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / denom


def object_dice(pred: np.ndarray, gt: np.ndarray) -> float:
    """Area-weighted two-sided object Dice.

    Each ground-truth object is scored against the predicted object
    overlapping it most (an object nothing overlaps scores 0), weighted by
    its share of total ground-truth area; symmetrically for predicted
    objects; the two sums average. A side with no objects contributes 0.
    """
    pred = check_label_map(pred)
    gt = check_label_map(gt)
    check_same_shape(pred, gt, "label maps")
    inter, np_, ng = _overlaps(pred, gt)
    p_sizes = np.bincount(pred.ravel(), minlength=np_ + 1)
    g_sizes = np.bincount(gt.ravel(), minlength=ng + 1)

    def one_side(sizes_a, sizes_b, inter_ab) -> float:
        total = sizes_a[1:].sum()
        if total == 0:
            return 0.0
        acc = 0.0
        for a in range(1, len(sizes_a)):
            partner = int(np.argmax(inter_ab[a, 1:])) + 1 if inter_ab.shape[1] > 1 else 0
            best = int(inter_ab[a, partner]) if partner else 0
            if best > 0:
                d = 2.0 * best / (sizes_a[a] + sizes_b[partner])
            else:
                d = 0.0
            acc += (sizes_a[a] / total) * d
        return acc

    side_g = one_side(g_sizes, p_sizes, inter.T)
    side_p = one_side(p_sizes, g_sizes, inter)
    return 0.5 * (side_g + side_p)


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two nonempty boolean masks,
    in pixels (Euclidean)."""
    pa = np.column_stack(np.nonzero(np.asarray(a, dtype=bool)))
    pb = np.column_stack(np.nonzero(np.asarray(b, dtype=bool)))
    if len(pa) == 0 or len(pb) == 0:
        raise ValueError("hausdorff distance requires nonempty masks")
    d_ab = cKDTree(pb).query(pa)[0].max()
    d_ba = cKDTree(pa).query(pb)[0].max()
    return float(max(d_ab, d_ba))


def object_hausdorff(pred: np.ndarray, gt: np.ndarray) -> float:
    """Area-weighted two-sided object Hausdorff distance.

    Same pairing and weighting as object_dice, with the symmetric
    Hausdorff distance in place of Dice; an object with no overlapping
    partner scores the image diagonal.
    """
    pred = check_label_map(pred)
    gt = check_label_map(gt)
    check_same_shape(pred, gt, "label maps")
    inter, np_, ng = _overlaps(pred, gt)
    p_sizes = np.bincount(pred.ravel(), minlength=np_ + 1)
    g_sizes = np.bincount(gt.ravel(), minlength=ng + 1)
    sentinel = float(np.hypot(*pred.shape))

    def one_side(labels_a, sizes_a, labels_b, sizes_b, inter_ab) -> float:
        total = sizes_a[1:].sum()
        if total == 0:
            return 0.0
        acc = 0.0
        for a in range(1, len(sizes_a)):
            partner = int(np.argmax(inter_ab[a, 1:])) + 1 if inter_ab.shape[1] > 1 else 0
            if partner and inter_ab[a, partner] > 0:
                h = hausdorff(labels_a == a, labels_b == partner)
            else:
                h = sentinel
            acc += (sizes_a[a] / total) * h
        return acc

    side_g = one_side(gt, g_sizes, pred, p_sizes, inter.T)
    side_p = one_side(pred, p_sizes, gt, g_sizes, inter)
    return 0.5 * (side_g + side_p)


@dataclass
class MetricsReport:
    """Per-image scores plus unweighted aggregate means for one split."""

    split: str
    rows: list[dict]
    aggregate: dict

    def to_json(self) -> str:
        return json.dumps(
            {"split": self.split, "aggregate": self.aggregate, "images": self.rows},
            indent=2, sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        data = json.loads(text)
        return cls(data["split"], data["images"], data["aggregate"])

    def to_text(self) -> str:
        head = f"{'split':<12}{'images':>8}{'F1':>10}{'ObjDice':>10}{'ObjHaus':>10}"
        agg = self.aggregate
        line = (f"{self.split:<12}{len(self.rows):>8}{agg['f1']:>10.4f}"
                f"{agg['object_dice']:>10.4f}{agg['object_hausdorff']:>10.2f}")
        parts = [head, line, "", f"{'image':<20}{'F1':>10}{'ObjDice':>10}{'ObjHaus':>10}"]
        for row in self.rows:
            parts.append(f"{row['id']:<20}{row['f1']:>10.4f}"
                         f"{row['object_dice']:>10.4f}{row['object_hausdorff']:>10.2f}")
        return "\n".join(parts) + "\n"


def evaluate_split(preds, gts, ids, split: str = "test") -> MetricsReport:
    """Score every (prediction, ground truth) label-map pair and aggregate
    with unweighted means."""
    rows = []
    for pred, gt, name in zip(preds, gts, ids, strict=True):
        match = match_objects(pred, gt)
        rows.append({
            "id": str(name),
            "f1": match.f1,
            "tp": match.tp,
            "fp": match.fp,
            "fn": match.fn,
            "object_dice": object_dice(pred, gt),
            "object_hausdorff": object_hausdorff(pred, gt),
        })
    if not rows:
        raise ValueError("nothing to evaluate")
    aggregate = {
        key: float(np.mean([r[key] for r in rows]))
        for key in ("f1", "object_dice", "object_hausdorff")
    }
    return MetricsReport(split, rows, aggregate)
