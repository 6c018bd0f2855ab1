"""Central-difference verification of the analytic VJPs.

For each seeded random problem the driver projects the op's outputs onto
a random upstream cotangent, giving a scalar whose gradient equals the
VJP; central differences of that scalar are then compared entrywise.

Error measure: |analytic - fd| / max(|analytic|, |fd|, 1e-6). The floor
keeps accidental near-zero gradient entries (where central differences
are pure rounding noise) from dominating the report.

Steps below 1e-8 are flagged as a finite-difference breakdown: there the
difference quotient is rounding-dominated in float64 no matter how good
the analytic gradient is, so a large error is reported as a warning, not
a failure.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownTargetError
from .heatmap import (
    HeatmapStack,
    SpreadParams,
    decode_latent,
    depth_readout,
    softargmax,
    spatial_softmax,
    vjp_decode_latent,
    vjp_depth_readout,
    vjp_softargmax,
    vjp_spatial_softmax,
)

TARGETS = ("spatial_softmax", "softargmax", "depth_readout", "decode_latent")

REL_ERR_FLOOR = 1e-6
FD_BREAKDOWN_EPS = 1e-8
DEFAULT_TOL = 1e-4

_K, _H, _W = 3, 9, 11


@dataclass
class GradcheckReport:
    target: str
    seeds: int
    eps: float
    tol: float
    max_rel_err: float
    worst: tuple[int, str, int] | None  # (seed, input class, flat index)
    per_input_max: dict[str, float] = field(default_factory=dict)
    status: str = "ok"  # ok | warning | fail

    def lines(self) -> list[str]:
        out = [
            f"gradcheck {self.target}: seeds={self.seeds} eps={self.eps:g} "
            f"max_rel_err={self.max_rel_err:.3e} tol={self.tol:g} -> {self.status.upper()}"
        ]
        for name, err in self.per_input_max.items():
            out.append(f"  {name:<12} max_rel_err={err:.3e}")
        if self.worst is not None:
            seed, klass, idx = self.worst
            out.append(f"  worst entry: seed={seed} input={klass} flat_index={idx}")
        if self.status == "warning":
            out.append(
                "  warning: step below 1e-8 makes central differences rounding-"
                "dominated; result not evidence of a gradient defect"
            )
        return out


def _rel_err(analytic: np.ndarray, fd: np.ndarray) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), REL_ERR_FLOOR)
    return np.abs(analytic - fd) / denom


def _fd_gradient(scalar_fn, arrays: list[np.ndarray], eps: float) -> list[np.ndarray]:
    grads = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + eps
            fp = scalar_fn()
            flat[i] = saved - eps
            fm = scalar_fn()
            flat[i] = saved
            gflat[i] = (fp - fm) / (2.0 * eps)
        grads.append(g)
    return grads


def _problem(seed: int):
    rng = np.random.default_rng(seed)
    latent = rng.uniform(-1.0, 1.0, (_K, _H, _W))
    depth = rng.uniform(-1.0, 1.0, (_K, _H, _W))
    beta = rng.uniform(0.5, 2.0, _K)
    return rng, latent, depth, beta


def _case_decode_latent(seed: int, eps: float):
    rng, latent, depth, beta = _problem(seed)
    upstream = rng.normal(size=(_K, 3))

    def analytic():
        stack = HeatmapStack(kind="latent", likelihood=latent, depth=depth)
        return vjp_decode_latent(stack, SpreadParams(beta=beta), upstream)

    def scalar():
        stack = HeatmapStack(kind="latent", likelihood=latent, depth=depth)
        decoded = decode_latent(stack, SpreadParams(beta=beta))
        out = np.column_stack([decoded.xy, decoded.zr])
        return float((upstream * out).sum())

    names = ["likelihood", "depth", "beta"]
    return analytic(), _fd_gradient(scalar, [latent, depth, beta], eps), names


def _case_spatial_softmax(seed: int, eps: float):
    rng, latent, _, beta = _problem(seed)
    upstream = rng.normal(size=(_K, _H, _W))

    def scalar():
        return float((spatial_softmax(latent, SpreadParams(beta=beta)) * upstream).sum())

    analytic = vjp_spatial_softmax(latent, SpreadParams(beta=beta), upstream)
    return analytic, _fd_gradient(scalar, [latent, beta], eps), ["latent", "beta"]


def _case_softargmax(seed: int, eps: float):
    rng, latent, _, beta = _problem(seed)
    prob = spatial_softmax(latent[:1], SpreadParams(beta=beta[:1]))[0]
    upstream = tuple(rng.normal(size=2))

    def scalar():
        x, y = softargmax(prob, validate=False)
        return float(upstream[0] * x + upstream[1] * y)

    analytic = (vjp_softargmax(prob, upstream),)
    return analytic, _fd_gradient(scalar, [prob], eps), ["prob"]


def _case_depth_readout(seed: int, eps: float):
    rng, latent, depth, beta = _problem(seed)
    prob = spatial_softmax(latent[:1], SpreadParams(beta=beta[:1]))[0]
    dmap = depth[0]
    upstream = float(rng.normal())

    def scalar():
        return upstream * depth_readout(prob, dmap, validate=False)

    analytic = vjp_depth_readout(prob, dmap, upstream)
    return analytic, _fd_gradient(scalar, [prob, dmap], eps), ["prob", "depth"]


_CASES = {
    "decode_latent": _case_decode_latent,
    "spatial_softmax": _case_spatial_softmax,
    "softargmax": _case_softargmax,
    "depth_readout": _case_depth_readout,
}


def gradcheck(
    target: str, seeds: int = 100, eps: float = 1e-4, tol: float = DEFAULT_TOL
) -> GradcheckReport:
    """Compare the analytic VJP of `target` against central differences on
    `seeds` random problems."""
    if target not in _CASES:
        raise UnknownTargetError(f"no gradcheck target {target!r}; choose from {TARGETS}")
    case = _CASES[target]
    max_err = 0.0
    worst = None
    per_input: dict[str, float] = {}
    for seed in range(seeds):
        analytic, fd, names = case(seed, eps)
        for name, a, f in zip(names, analytic, fd):
            err = _rel_err(np.asarray(a), np.asarray(f))
            local = float(err.max())
            per_input[name] = max(per_input.get(name, 0.0), local)
            if local > max_err:
                max_err = local
                worst = (seed, name, int(err.argmax()))
    breakdown = eps < FD_BREAKDOWN_EPS
    status = "warning" if (breakdown and max_err > tol) else ("ok" if max_err <= tol else "fail")
    return GradcheckReport(
        target=target,
        seeds=seeds,
        eps=eps,
        tol=tol,
        max_rel_err=max_err,
        worst=worst,
        per_input_max=per_input,
        status=status,
    )
