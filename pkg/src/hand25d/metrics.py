"""Evaluation metrics: end-point error, PCK curves and their AUC, the
head-normalized 2D variant, and root alignment.

Two protocols are expressed by the caller: ROOT_ALIGNED translates the
prediction so its root matches ground truth before 3D errors (the
synthetic-dataset convention), ABSOLUTE_WITH_SCALE compares poses as-is,
which scores the full absolute reconstruction including global scale.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BadHeadLengthError,
    ConfigError,
    EmptyThresholdsError,
    InvalidRootError,
    NoValidKeypointsError,
    ShapeMismatchError,
    TooFewPointsError,
)
from .types import Pose3D

PROTOCOLS = ("root_aligned", "absolute_with_scale")

# default threshold grids; the exact grid is a config knob and is recorded
# in every report because AUC values are only comparable on equal grids
DEFAULT_THRESHOLDS_3D_MM = tuple(np.linspace(20.0, 50.0, 31))
DEFAULT_THRESHOLDS_2D_PX = tuple(np.linspace(0.0, 30.0, 31))


@dataclass(frozen=True)
class EvalReport:
    protocol: str
    space: str
    unit: str
    per_keypoint_errors: tuple[float, ...]
    epe_mean: float
    epe_median: float
    pck: tuple[tuple[float, float], ...]
    auc: float
    num_samples: int = 0
    num_failed: int = 0
    meta: dict = field(default_factory=dict)


def epe(
    pred: np.ndarray, gt: np.ndarray, valid: np.ndarray | None = None
) -> tuple[np.ndarray, float, float]:
    """Euclidean errors over valid keypoints, plus their mean and median."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 2:
        raise ShapeMismatchError("pred and gt must be matching (K, D) arrays")
    mask = np.ones(pred.shape[0], dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    if not np.any(mask):
        raise NoValidKeypointsError("no valid keypoint to evaluate")
    errors = np.linalg.norm(pred[mask] - gt[mask], axis=1)
    return errors, float(errors.mean()), float(np.median(errors))


def align_root(pred: Pose3D, gt: Pose3D, root_index: int = 0) -> Pose3D:
    """Translate pred so its root coincides with the ground-truth root."""
    if not (pred.valid[root_index] and gt.valid[root_index]):
        raise InvalidRootError(f"root keypoint {root_index} must be valid in both poses")
    shift = gt.xyz[root_index] - pred.xyz[root_index]
    return Pose3D(xyz=pred.xyz + shift, valid=pred.valid.copy())


def pck_curve(errors: np.ndarray, thresholds: Sequence[float]) -> np.ndarray:
    """Fraction of errors <= t for each threshold t (closed inequality)."""
    thr = np.asarray(thresholds, dtype=np.float64)
    if thr.size == 0:
        raise EmptyThresholdsError("at least one threshold required")
    if thr.size > 1 and np.any(np.diff(thr) <= 0):
        raise ConfigError("thresholds must be strictly increasing")
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise NoValidKeypointsError("no errors to aggregate")
    return (errors[None, :] <= thr[:, None]).mean(axis=1)


def auc(thresholds: Sequence[float], fractions: Sequence[float]) -> float:
    """Trapezoidal area under the PCK curve, normalized by the threshold
    range so a perfect curve scores 1."""
    thr = np.asarray(thresholds, dtype=np.float64)
    frac = np.asarray(fractions, dtype=np.float64)
    if thr.size != frac.size:
        raise ShapeMismatchError("thresholds and fractions differ in length")
    if thr.size < 2:
        raise TooFewPointsError("AUC needs at least two curve points")
    dt = np.diff(thr)
    area = float((0.5 * (frac[1:] + frac[:-1]) * dt).sum())
    return area / float(thr[-1] - thr[0])


def pckh_curve(
    pred2d: np.ndarray,
    gt2d: np.ndarray,
    head_length: float,
    thresholds: Sequence[float],
    valid: np.ndarray | None = None,
) -> np.ndarray:
    """PCK on 2D errors normalized by head length; thresholds are
    fractions of the head length."""
    if not (np.isfinite(head_length) and head_length > 0):
        raise BadHeadLengthError(f"head length must be positive, got {head_length}")
    errors, _, _ = epe(pred2d, gt2d, valid)
    return pck_curve(errors / head_length, thresholds)


def evaluate(
    pred_points: Sequence[np.ndarray],
    gt_points: Sequence[np.ndarray],
    valid_masks: Sequence[np.ndarray | None],
    protocol: str,
    space: str,
    thresholds: Sequence[float] | None = None,
    num_failed: int = 0,
) -> EvalReport:
    """Pool per-keypoint errors over a corpus and build a report.

    Points are (K, 2) pixel or (K, 3) mm arrays; root alignment, when the
    protocol asks for it, must already have been applied by the caller
    (it needs pose semantics, not bare arrays).
    """
    if protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {protocol!r}")
    if space not in ("2d", "3d"):
        raise ConfigError(f"unknown space {space!r}")
    if len(pred_points) != len(gt_points):
        raise ShapeMismatchError("prediction and ground-truth corpora differ in length")
    if thresholds is None:
        thresholds = DEFAULT_THRESHOLDS_3D_MM if space == "3d" else DEFAULT_THRESHOLDS_2D_PX
    pooled: list[np.ndarray] = []
    for pred, gt, mask in zip(pred_points, gt_points, valid_masks):
        mask = np.asarray(mask, dtype=bool) if mask is not None else None
        if mask is not None and not mask.any():
            continue
        errors, _, _ = epe(pred, gt, mask)
        pooled.append(errors)
    if not pooled:
        raise NoValidKeypointsError("no valid keypoints in the whole corpus")
    errors = np.concatenate(pooled)
    fractions = pck_curve(errors, thresholds)
    thr = np.asarray(thresholds, dtype=np.float64)
    return EvalReport(
        protocol=protocol,
        space=space,
        unit="mm" if space == "3d" else "px",
        per_keypoint_errors=tuple(float(e) for e in errors),
        epe_mean=float(errors.mean()),
        epe_median=float(np.median(errors)),
        pck=tuple((float(t), float(f)) for t, f in zip(thr, fractions)),
        auc=auc(thr, fractions),
        num_samples=len(pred_points),
        num_failed=num_failed,
    )
