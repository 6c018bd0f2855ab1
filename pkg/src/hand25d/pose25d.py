"""Scale-normalized 2.5D pose construction.

A pose is normalized by scaling it so a chosen bone (default: index MCP
to palm) has fixed length C. The 2.5D view keeps the 2D projection,
which normalization does not move, plus root-relative normalized depths.
The representation is invariant to the metric scale of the input pose.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraIntrinsics, project
from .errors import ConfigError, ZeroBoneError
from .skeleton import ROOT_INDEX, canonical_skeleton
from .types import Pose3D, Pose25D

MIN_BONE_MM = 1e-9


@dataclass(frozen=True)
class NormalizationConfig:
    """Which bone is pinned to constant length c.

    pair is (keypoint, its parent) and must be an edge of the canonical
    tree; (5, 0) is index MCP to palm, the most stably detected bone.
    """

    c: float = 1.0
    pair: tuple[int, int] = (5, ROOT_INDEX)

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c > 0):
            raise ConfigError("normalization constant c must be positive and finite")
        n, m = self.pair
        if not canonical_skeleton().is_edge(n, m):
            raise ConfigError(f"pair {self.pair} is not a (child, parent) bone of the hand tree")


def normalization_scale(pose: Pose3D, cfg: NormalizationConfig = NormalizationConfig()) -> float:
    """Length s of the configured bone, in the pose's own units."""
    n, m = cfg.pair
    s = float(np.linalg.norm(pose.xyz[n] - pose.xyz[m]))
    if s < MIN_BONE_MM:
        raise ZeroBoneError(f"normalization pair {cfg.pair} is degenerate (|bone| = {s:g})")
    return s


def normalize_pose(
    pose: Pose3D, cfg: NormalizationConfig = NormalizationConfig()
) -> tuple[Pose3D, float]:
    """Scale the pose by c/s so the configured bone has length exactly c."""
    s = normalization_scale(pose, cfg)
    scaled = Pose3D(xyz=(cfg.c / s) * pose.xyz, valid=pose.valid.copy())
    return scaled, s


def to_25d(
    pose: Pose3D,
    cam: CameraIntrinsics,
    cfg: NormalizationConfig = NormalizationConfig(),
    root: int = ROOT_INDEX,
) -> Pose25D:
    """Project to pixels and attach scale-normalized root-relative depths.

    The output is identical for pose and lambda*pose (lambda > 0): the
    projection is scale invariant and the depths are normalized by the
    pair bone length.
    """
    p2d, z = project(pose, cam)
    s = normalization_scale(pose, cfg)
    z_hat = (cfg.c / s) * z
    zr = z_hat - z_hat[root]
    return Pose25D(xy=p2d.xy, zr=zr, root=root, valid=pose.valid.copy())
