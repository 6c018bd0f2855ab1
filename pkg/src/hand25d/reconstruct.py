"""Absolute pose recovery from the 2.5D representation.

The root depth is the solution of a quadratic: requiring the
normalization pair to sit at mutual distance c pins down where along the
two pixel rays the pair lies. With coordinates mapped through K^-1 the
constraint in the unknown root depth Z reads

    a Z^2 + 2 b Z + c_ = 0

with the coefficient definitions implemented in quadratic_coefficients
(b is half the linear coefficient). The root in front of the camera is
(-b + sqrt(b^2 - a c_)) / a, the larger of the two; the reconstructed
pair then has distance exactly c, which solve_zroot's callers verify.
A widely circulated form of this solution, 0.5 (-b + sqrt(b^2 - 4 a c_)) / a,
mixes the half-coefficient convention with the full-coefficient
discriminant and does not satisfy the distance constraint; see the tests.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraIntrinsics, normalized_image_coords
from .errors import (
    BadScaleError,
    DegenerateProjectionError,
    NonFiniteError,
    NonPositiveDepthError,
    NoRealSolutionError,
    NoValidBonesError,
    NoValidKeypointsError,
)
from .pose25d import NormalizationConfig
from .skeleton import BoneStats, Skeleton
from .types import Pose3D, Pose25D

DEGENERATE_A = 1e-12
DISCRIMINANT_SLACK = -1e-9


@dataclass(frozen=True)
class QuadraticCoeffs:
    """Coefficients of a Z^2 + 2 b Z + c = 0 for the root depth."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.a, self.b, self.c)):
            raise NonFiniteError("quadratic coefficients must be finite")


def quadratic_coefficients(
    pn: tuple[float, float],
    pm: tuple[float, float],
    zn: float,
    zm: float,
    c: float = 1.0,
) -> QuadraticCoeffs:
    """Build the root-depth quadratic from the pair's normalized image
    coordinates (already mapped through K^-1) and relative depths."""
    xn, yn = pn
    xm, ym = pm
    a = (xn - xm) ** 2 + (yn - ym) ** 2
    b = zn * (xn * xn + yn * yn - xn * xm - yn * ym) + zm * (
        xm * xm + ym * ym - xn * xm - yn * ym
    )
    cc = (
        (xn * zn - xm * zm) ** 2
        + (yn * zn - ym * zm) ** 2
        + (zn - zm) ** 2
        - c * c
    )
    return QuadraticCoeffs(a=a, b=b, c=cc)


def solve_zroot(q: QuadraticCoeffs) -> float:
    """Front-of-camera root of the depth quadratic (the larger real root)."""
    if q.a <= DEGENERATE_A:
        raise DegenerateProjectionError(
            "pair projections coincide; root depth is unobservable"
        )
    disc = q.b * q.b - q.a * q.c
    if disc < DISCRIMINANT_SLACK:
        raise NoRealSolutionError(f"discriminant {disc:g} below tolerance")
    disc = max(disc, 0.0)
    return (-q.b + np.sqrt(disc)) / q.a


def reconstruct_pose(
    p25: Pose25D,
    cam: CameraIntrinsics,
    cfg: NormalizationConfig = NormalizationConfig(),
) -> Pose3D:
    """Recover the scale-normalized 3D pose from 2.5D coordinates.

    Solves for the root depth using the normalization pair, then
    back-projects every keypoint at depth zroot + zr. The result is in
    normalized units (pair bone length = c).
    """
    n, m = cfg.pair
    if not (p25.valid[n] and p25.valid[m]):
        raise NoValidKeypointsError(f"normalization pair {cfg.pair} must be valid in the 2.5D pose")
    rays = normalized_image_coords(p25.xy, cam)
    q = quadratic_coefficients(
        (rays[n, 0], rays[n, 1]),
        (rays[m, 0], rays[m, 1]),
        float(p25.zr[n]),
        float(p25.zr[m]),
        cfg.c,
    )
    z_root = solve_zroot(q)
    z = z_root + p25.zr
    if np.any(z[p25.valid] <= 0):
        raise NonPositiveDepthError("reconstruction placed a valid keypoint behind the camera")
    xyz = np.zeros((p25.num_keypoints, 3))
    xyz[:, 0] = rays[:, 0] * z
    xyz[:, 1] = rays[:, 1] * z
    xyz[:, 2] = z
    xyz[~p25.valid] = 0.0
    return Pose3D(xyz=xyz, valid=p25.valid.copy())


def recover_scale(pose: Pose3D, stats: BoneStats, skel: Skeleton) -> float:
    """Least-squares global scale: argmin_s sum_bones (s d - mu)^2.

    Closed form s = sum(mu d) / sum(d^2) over bones whose endpoints are
    both valid and whose length is nonzero, so fingertip-only data still
    works.
    """
    if stats.mean_length.shape[0] != len(skel.bones):
        raise NoValidBonesError("bone stats do not cover the skeleton")
    children = np.array([c for c, _ in skel.bones])
    parents = np.array([p for _, p in skel.bones])
    usable = pose.valid[children] & pose.valid[parents]
    d = np.linalg.norm(pose.xyz[children] - pose.xyz[parents], axis=1)
    usable &= d > 0
    if not np.any(usable):
        raise NoValidBonesError("no bone has two valid endpoints and nonzero length")
    mu = stats.mean_length[usable]
    d = d[usable]
    return float(np.dot(mu, d) / np.dot(d, d))


def absolute_pose(pose: Pose3D, s_hat: float, c: float = 1.0) -> Pose3D:
    """Scale a normalized pose back to metric units: P = (s_hat / c) * P_hat."""
    if not (np.isfinite(s_hat) and s_hat > 0):
        raise BadScaleError(f"scale must be positive and finite, got {s_hat}")
    return Pose3D(xyz=(s_hat / c) * pose.xyz, valid=pose.valid.copy())
