"""Average-precision evaluation for oriented boxes.

Per class, predictions across all images are sorted by score and matched
greedily against ground truth using rotated IoU; each truth box can be
claimed once. AP is the area under the all-point-interpolated
precision-recall curve. mAP averages over classes that appear in the
truth; classes with no truth are excluded from the mean.
"""

from __future__ import annotations

import numpy as np

from .geometry import OrientedBox, rotated_iou


def _ap_from_pr(tp_flags: np.ndarray, n_truth: int) -> float:
    if n_truth == 0:
        return float("nan")
    if tp_flags.size == 0:
        return 0.0
    tp = np.cumsum(tp_flags)
    fp = np.cumsum(1 - tp_flags)
    recall = tp / n_truth
    precision = tp / (tp + fp)
    # all-point interpolation: running max of precision from the right
    prec_env = np.maximum.accumulate(precision[::-1])[::-1]
    recall = np.concatenate([[0.0], recall])
    prec_env = np.concatenate([prec_env[:1], prec_env])
    return float(np.sum((recall[1:] - recall[:-1]) * prec_env[1:]))


def eval_map(preds: list[list[OrientedBox]], truth: list[list[OrientedBox]],
             iou_thresh: float = 0.5) -> tuple[float, dict[int, float]]:
    """Mean AP and per-class AP at a single IoU matching threshold.

    ``preds`` and ``truth`` are parallel per-image box lists.
    """
    if len(preds) != len(truth):
        raise ValueError("preds and truth must cover the same images")
    classes = sorted({b.class_id for img in truth for b in img})
    per_class: dict[int, float] = {}
    for cls in classes:
        records = []  # (score, image index, box)
        n_truth = 0
        for idx, img_truth in enumerate(truth):
            n_truth += sum(1 for b in img_truth if b.class_id == cls)
        for idx, img_preds in enumerate(preds):
            for b in img_preds:
                if b.class_id == cls:
                    records.append((b.score, idx, b))
        records.sort(key=lambda r: (-r[0], r[1], r[2].cx, r[2].cy))
        matched: dict[int, set[int]] = {i: set() for i in range(len(truth))}
        flags = np.zeros(len(records), dtype=np.int64)
        for i, (_, idx, pred) in enumerate(records):
            best_iou, best_j = 0.0, -1
            for j, t in enumerate(truth[idx]):
                if t.class_id != cls or j in matched[idx]:
                    continue
                iou = rotated_iou(pred, t)
                if iou > best_iou:
                    best_iou, best_j = iou, j
            if best_j >= 0 and best_iou >= iou_thresh:
                matched[idx].add(best_j)
                flags[i] = 1
        per_class[cls] = _ap_from_pr(flags, n_truth)
    if not per_class:
        return 0.0, {}
    return float(np.mean(list(per_class.values()))), per_class


def eval_map_sweep(preds, truth,
                   thresholds=tuple(np.arange(0.5, 1.0, 0.05))) -> float:
    """COCO-style mean of single-threshold mAP over an IoU sweep."""
    return float(np.mean([eval_map(preds, truth, float(t))[0]
                          for t in thresholds]))
