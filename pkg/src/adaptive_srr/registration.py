"""Horn-Schunck optical flow on a coarse-to-fine pyramid.

``horn_schunck_flow(a, b)`` returns the displacement ``d`` with
``a(p) ~ b(p + d(p))``, i.e. the motion G(t) for ``a = y(t)`` and
``b = y(t-1)``. Derivatives are circular central differences and the
smoothness term is the squared 4-neighbour difference of the total flow.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .motion import Motion, apply_warp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowParams:
    smoothness_weight: float = 1e3
    pyramid_levels: int = 4
    pyramid_spacing: float = 2.0
    iterations: int = 100
    warps: int = 3
    tolerance: float = 1e-4

    def __post_init__(self):
        if not self.smoothness_weight > 0:
            raise ValueError("smoothness_weight must be positive")
        if self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be >= 1")
        if not self.pyramid_spacing > 1:
            raise ValueError("pyramid_spacing must exceed 1")
        if self.iterations < 1 or self.warps < 1:
            raise ValueError("iterations and warps must be >= 1")


@dataclass
class FlowInfo:
    converged: list = field(default_factory=list)  # one flag per (level, warp)
    sweeps: list = field(default_factory=list)
    energies: list = field(default_factory=list)  # per (level, warp): energy after each sweep

    @property
    def all_converged(self) -> bool:
        return all(self.converged)


def gradients(img):
    """Circular central differences (d/dy, d/dx)."""
    gy = 0.5 * (np.roll(img, -1, axis=0) - np.roll(img, 1, axis=0))
    gx = 0.5 * (np.roll(img, -1, axis=1) - np.roll(img, 1, axis=1))
    return gy, gx


def neighbour_mean(u):
    return 0.25 * (np.roll(u, 1, 0) + np.roll(u, -1, 0) + np.roll(u, 1, 1) + np.roll(u, -1, 1))


def hs_energy(iy, ix, it, v0, u0, v, u, lam) -> float:
    """Linearized Horn-Schunck energy of total flow (v, u) about (v0, u0)."""
    r = iy * (v - v0) + ix * (u - u0) + it
    smooth = 0.0
    for w in (u, v):
        smooth += np.sum((w - np.roll(w, 1, 0)) ** 2) + np.sum((w - np.roll(w, 1, 1)) ** 2)
    return float(np.sum(r * r) + lam * smooth)


def hs_sweep(iy, ix, it, v0, u0, v, u, lam):
    """One Jacobi sweep: per-pixel exact minimization with neighbours frozen."""
    vb, ub = neighbour_mean(v), neighbour_mean(u)
    c = (iy * (vb - v0) + ix * (ub - u0) + it) / (4 * lam + ix * ix + iy * iy)
    return vb - iy * c, ub - ix * c


def _level_shapes(shape, p: FlowParams):
    shapes = [tuple(shape)]
    for _ in range(p.pyramid_levels - 1):
        h, w = shapes[-1]
        nh, nw = int(round(h / p.pyramid_spacing)), int(round(w / p.pyramid_spacing))
        if min(nh, nw) < 4:
            break
        shapes.append((nh, nw))
    return shapes


def _resize(img, shape):
    if img.shape == tuple(shape):
        return img
    zoom = (shape[0] / img.shape[0], shape[1] / img.shape[1])
    return ndimage.zoom(img, zoom, order=1, mode="grid-wrap", grid_mode=True)


def _downsample(img, shape, spacing):
    if img.shape == tuple(shape):
        return img
    sm = ndimage.gaussian_filter(img, sigma=0.5 * spacing / np.sqrt(2.0), mode="wrap")
    return _resize(sm, shape)


def horn_schunck_level(a, b, v, u, p: FlowParams, info: FlowInfo | None = None):
    """Refine total flow (v, u) at one pyramid level with ``p.warps`` warping passes."""
    lam = p.smoothness_weight
    for _ in range(p.warps):
        bw = apply_warp(Motion.dense(np.stack([v, u])), b)
        iy, ix = gradients(bw)
        it = bw - a
        v0, u0 = v.copy(), u.copy()
        energies = [hs_energy(iy, ix, it, v0, u0, v, u, lam)]
        converged = False
        n = 0
        for n in range(1, p.iterations + 1):
            nv, nu = hs_sweep(iy, ix, it, v0, u0, v, u, lam)
            step = max(np.max(np.abs(nv - v)), np.max(np.abs(nu - u)))
            v, u = nv, nu
            energies.append(hs_energy(iy, ix, it, v0, u0, v, u, lam))
            if step < p.tolerance:
                converged = True
                break
        if info is not None:
            info.converged.append(converged)
            info.sweeps.append(n)
            info.energies.append(energies)
    return v, u


def horn_schunck_flow(a, b, p: FlowParams = FlowParams(), *, return_info: bool = False):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"frames must be 2-D with equal shapes, got {a.shape} and {b.shape}")
    shapes = _level_shapes(a.shape, p)
    pyr_a, pyr_b = [a], [b]
    for s in shapes[1:]:
        pyr_a.append(_downsample(pyr_a[-1], s, p.pyramid_spacing))
        pyr_b.append(_downsample(pyr_b[-1], s, p.pyramid_spacing))
    info = FlowInfo()
    v = np.zeros(shapes[-1])
    u = np.zeros(shapes[-1])
    for lvl in range(len(shapes) - 1, -1, -1):
        s = shapes[lvl]
        if v.shape != s:
            sy, sx = s[0] / v.shape[0], s[1] / v.shape[1]
            v, u = _resize(v, s) * sy, _resize(u, s) * sx
        v, u = horn_schunck_level(pyr_a[lvl], pyr_b[lvl], v, u, p, info)
    if not info.all_converged:
        log.debug("Horn-Schunck hit the sweep budget on %d of %d passes", info.converged.count(False), len(info.converged))
    m = Motion.dense(np.stack([v, u]))
    return (m, info) if return_info else m


def flow_to_global(flow: Motion) -> Motion:
    if flow.kind == "global":
        return flow
    dy, dx = flow.flow
    return Motion.translation(float(np.mean(dy)), float(np.mean(dx)))


def upscale_motion(m: Motion, factor: int) -> Motion:
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if m.kind == "global":
        return Motion.translation(m.shift[0] * factor, m.shift[1] * factor)
    h, w = m.flow.shape[1:]
    shape = (h * factor, w * factor)
    return Motion.dense(np.stack([_resize(c, shape) * factor for c in m.flow]))


def estimate_motions(lr_frames, p: FlowParams = FlowParams(), factor: int = 2, mode: str = "global") -> list:
    """HR motions G(t) for a sequence from consecutive LR frame pairs."""
    motions = [Motion.zero()]
    for prev, cur in zip(lr_frames[:-1], lr_frames[1:]):
        flow = horn_schunck_flow(cur, prev, p)
        if mode == "global":
            flow = flow_to_global(flow)
        elif mode != "dense":
            raise ValueError(f"unknown motion mode {mode!r}")
        motions.append(upscale_motion(flow, factor))
    return motions
