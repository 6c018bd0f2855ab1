"""Synthetic hand pose generator used as the round-trip oracle.

Poses are built from exact bone lengths and per-finger planar flexion,
then rigidly placed so that every keypoint depth stays inside the
configured range and every projection lands inside the target grid. The
articulation model is deliberately simple; the generator exists for
geometric coverage, not visual realism.

Every sample is deterministic in (seed, index). Configurations whose
normalization-pair bone points almost straight down the optical axis are
redrawn: there the root-depth quadratic has two nearly coincident (or
swapped) front-of-camera solutions and no decoder could tell them apart,
so such samples would test the ambiguity of the representation rather
than the correctness of the reconstruction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .camera import CameraIntrinsics
from .errors import ConfigError
from .pose25d import NormalizationConfig, normalization_scale, to_25d
from .reconstruct import quadratic_coefficients, solve_zroot
from .serialize import PoseRecord
from .skeleton import FINGERS, BoneStats, canonical_skeleton
from .types import Pose3D, Pose25D

# palm->mcp, mcp->pip, pip->dip, dip->tip per finger, mm
DEFAULT_BONE_MM = {
    "thumb": (38.0, 45.0, 30.0, 23.0),
    "index": (50.0, 42.0, 25.0, 21.0),
    "middle": (52.0, 46.0, 28.0, 22.0),
    "ring": (48.0, 42.0, 26.0, 21.0),
    "pinky": (44.0, 31.0, 19.0, 17.0),
}
# in-plane splay of each finger's base direction, degrees from straight ahead
FINGER_SPLAY_DEG = {"thumb": -65.0, "index": -18.0, "middle": 0.0, "ring": 15.0, "pinky": 32.0}

DEFAULT_CAMERA = CameraIntrinsics(fx=150.0, fy=150.0, cx=63.5, cy=63.5)

_MAX_REDRAWS = 1000
_EDGE_MARGIN_PX = 1.0
_ROOT_GAP_FRACTION = 0.05


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    camera: CameraIntrinsics = DEFAULT_CAMERA
    grid: tuple[int, int] = (128, 128)
    depth_range: tuple[float, float] = (450.0, 1100.0)
    bone_stats: BoneStats | None = None
    bone_jitter: float = 0.15
    mcp_flexion_deg: tuple[float, float] = (0.0, 70.0)
    pip_flexion_deg: tuple[float, float] = (0.0, 95.0)
    dip_flexion_deg: tuple[float, float] = (0.0, 70.0)
    abduction_deg: tuple[float, float] = (-12.0, 12.0)
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)

    def __post_init__(self):
        zmin, zmax = self.depth_range
        if not (0 < zmin < zmax):
            raise ConfigError("depth range must satisfy 0 < zmin < zmax")
        if not 0 <= self.bone_jitter < 1:
            raise ConfigError("bone jitter must be in [0, 1)")
        for lo, hi in (
            self.mcp_flexion_deg,
            self.pip_flexion_deg,
            self.dip_flexion_deg,
            self.abduction_deg,
        ):
            if hi < lo:
                raise ConfigError("articulation ranges must be non-empty")


def _rotation_from_quaternion(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _articulated_hand(rng: np.random.Generator, cfg: SynthConfig) -> np.ndarray:
    """Root-centered keypoints with exact bone lengths (before rigid placement)."""
    skel = canonical_skeleton()
    xyz = np.zeros((skel.num_keypoints, 3))
    normal = np.array([0.0, 0.0, 1.0])
    for f, finger in enumerate(FINGERS):
        if cfg.bone_stats is not None:
            lengths = cfg.bone_stats.mean_length[4 * f : 4 * f + 4]
        else:
            base = np.array(DEFAULT_BONE_MM[finger])
            lengths = base * rng.uniform(1 - cfg.bone_jitter, 1 + cfg.bone_jitter, 4)
        splay = np.deg2rad(FINGER_SPLAY_DEG[finger] + rng.uniform(*cfg.abduction_deg))
        base_dir = np.array([np.sin(splay), np.cos(splay), 0.0])
        flex = np.deg2rad(
            [
                0.0,
                rng.uniform(*cfg.mcp_flexion_deg),
                rng.uniform(*cfg.pip_flexion_deg),
                rng.uniform(*cfg.dip_flexion_deg),
            ]
        )
        cumulative = np.cumsum(flex)
        position = np.zeros(3)
        for j in range(4):
            direction = np.cos(cumulative[j]) * base_dir - np.sin(cumulative[j]) * normal
            position = position + lengths[j] * direction
            xyz[1 + 4 * f + j] = position
    return xyz


def _well_posed_pair(pose: Pose3D, cfg: SynthConfig) -> bool:
    """True when the larger quadratic root is the true root depth by a
    clear margin, i.e. the sample sits inside the uniquely decodable
    regime."""
    norm_cfg = cfg.normalization
    n, m = norm_cfg.pair
    s = normalization_scale(pose, norm_cfg)
    z_hat = (norm_cfg.c / s) * pose.xyz[:, 2]
    z_true_root = z_hat[0]
    zr = z_hat - z_true_root
    rays = pose.xyz[:, :2] / pose.xyz[:, 2:3]
    q = quadratic_coefficients(
        (rays[n, 0], rays[n, 1]), (rays[m, 0], rays[m, 1]), zr[n], zr[m], norm_cfg.c
    )
    if q.a <= 1e-10:
        return False
    disc = q.b * q.b - q.a * q.c
    if disc <= 0:
        return False
    z_big = solve_zroot(q)
    z_small = (-q.b - np.sqrt(disc)) / q.a
    if abs(z_big - z_true_root) > 1e-6 * max(1.0, abs(z_true_root)):
        return False
    return (z_big - z_small) >= _ROOT_GAP_FRACTION * z_true_root


def gen_pose(cfg: SynthConfig, index: int) -> tuple[Pose3D, Pose25D, PoseRecord]:
    """Deterministic synthetic sample: metric pose, its 2.5D view, and the
    serializable record."""
    rng = np.random.default_rng([cfg.seed, index])
    cam = cfg.camera
    width, height = cfg.grid
    zmin, zmax = cfg.depth_range
    u_lim_x = min(cam.cx - _EDGE_MARGIN_PX, width - 1 - _EDGE_MARGIN_PX - cam.cx) / cam.fx
    u_lim_y = min(cam.cy - _EDGE_MARGIN_PX, height - 1 - _EDGE_MARGIN_PX - cam.cy) / cam.fy
    if u_lim_x <= 0 or u_lim_y <= 0:
        raise ConfigError("grid too small for the camera principal point")

    for _ in range(_MAX_REDRAWS):
        local = _articulated_hand(rng, cfg)
        rotation = _rotation_from_quaternion(rng.normal(size=4))
        placed = local @ rotation.T
        radius = float(np.linalg.norm(placed, axis=1).max())
        z_lo, z_hi = zmin + radius, zmax - radius
        if z_lo >= z_hi:
            raise ConfigError(
                f"depth range {cfg.depth_range} cannot contain a hand of radius {radius:.0f} mm"
            )
        tz = rng.uniform(z_lo, z_hi)
        mx = max(0.0, (tz - radius) * u_lim_x - radius)
        my = max(0.0, (tz - radius) * u_lim_y - radius)
        tx = rng.uniform(-mx, mx) if mx > 0 else 0.0
        ty = rng.uniform(-my, my) if my > 0 else 0.0
        xyz = placed + np.array([tx, ty, tz])
        pose = Pose3D(xyz=xyz)
        if not _well_posed_pair(pose, cfg):
            continue
        p25 = to_25d(pose, cam, cfg.normalization)
        record = PoseRecord(
            valid=pose.valid.copy(),
            px=p25.xy.copy(),
            xyz_mm=pose.xyz.copy(),
            zr_norm=p25.zr.copy(),
            side="right",
            camera=cam,
            meta={"dataset": "synthetic", "frame": index, "seed": cfg.seed},
        )
        return pose, p25, record
    raise ConfigError(f"no well-posed sample found for (seed={cfg.seed}, index={index})")


def synth_bone_stats(cfg: SynthConfig) -> BoneStats:
    """Bone statistics matching the generator defaults (exact when the
    config pins bone_stats, the template means otherwise)."""
    if cfg.bone_stats is not None:
        return cfg.bone_stats
    lengths = np.concatenate([DEFAULT_BONE_MM[f] for f in FINGERS])
    return BoneStats(mean_length=np.asarray(lengths))
