"""Warp operator G(t): global translations and dense displacement fields.

A motion ``d`` maps a frame ``f`` to ``(G f)(p) = f(p + d(p))`` with
circulant wrap-around. Integer global shifts are exact pixel rolls;
fractional shifts and dense fields use bilinear interpolation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import DimensionError


@dataclass(frozen=True, eq=False)
class Motion:
    kind: str
    shift: tuple = (0.0, 0.0)
    flow: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("global", "dense"):
            raise ValueError(f"unknown motion kind {self.kind!r}")
        if self.kind == "dense":
            flow = np.array(self.flow, dtype=np.float64)
            if flow.ndim != 3 or flow.shape[0] != 2:
                raise ValueError(f"dense flow must have shape (2, H, W), got {flow.shape}")
            if not np.all(np.isfinite(flow)):
                raise ValueError("dense flow contains non-finite components")
            flow.setflags(write=False)
            object.__setattr__(self, "flow", flow)
        else:
            dy, dx = (float(v) for v in self.shift)
            if not (np.isfinite(dy) and np.isfinite(dx)):
                raise ValueError("global shift must be finite")
            object.__setattr__(self, "shift", (dy, dx))

    @classmethod
    def translation(cls, dy: float, dx: float) -> "Motion":
        return cls("global", (dy, dx))

    @classmethod
    def zero(cls) -> "Motion":
        return cls("global", (0.0, 0.0))

    @classmethod
    def dense(cls, flow) -> "Motion":
        return cls("dense", flow=flow)

    @property
    def is_integer(self) -> bool:
        return self.kind == "global" and all(float(v).is_integer() for v in self.shift)

    def to_dict(self) -> dict:
        if self.kind == "global":
            return {"kind": "global", "dy": self.shift[0], "dx": self.shift[1]}
        return {"kind": "dense", "shape": list(self.flow.shape[1:])}


def _displacements(m: Motion, shape):
    if m.kind == "global":
        dy = np.full(shape, m.shift[0])
        dx = np.full(shape, m.shift[1])
    else:
        if m.flow.shape[1:] != tuple(shape):
            raise DimensionError(f"flow shape {m.flow.shape[1:]} does not match frame {tuple(shape)}")
        dy, dx = m.flow
    return dy, dx


def _bilinear_taps(m: Motion, shape):
    """Flat source indices and weights of the four bilinear taps per output pixel."""
    h, w = shape
    dy, dx = _displacements(m, shape)
    ii, jj = np.indices(shape, dtype=np.float64)
    sy = ii + dy
    sx = jj + dx
    y0 = np.floor(sy)
    x0 = np.floor(sx)
    fy = sy - y0
    fx = sx - x0
    y0 = y0.astype(np.int64) % h
    x0 = x0.astype(np.int64) % w
    y1 = (y0 + 1) % h
    x1 = (x0 + 1) % w
    idx = (y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1)
    wts = ((1 - fy) * (1 - fx), (1 - fy) * fx, fy * (1 - fx), fy * fx)
    return idx, wts


def apply_warp(m: Motion, f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if m.is_integer:
        dy, dx = (int(v) for v in m.shift)
        return np.roll(f, (-dy, -dx), axis=(0, 1))
    idx, wts = _bilinear_taps(m, f.shape)
    flat = f.ravel()
    out = np.zeros(f.shape)
    for i, wt in zip(idx, wts):
        out += wt * flat[i]
    return out


def apply_warp_transpose(m: Motion, f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if m.is_integer:
        dy, dx = (int(v) for v in m.shift)
        return np.roll(f, (dy, dx), axis=(0, 1))
    idx, wts = _bilinear_taps(m, f.shape)
    n = f.size
    out = np.zeros(n)
    for i, wt in zip(idx, wts):
        out += np.bincount(i.ravel(), weights=(wt * f).ravel(), minlength=n)
    return out.reshape(f.shape)


def compose_global(a: Motion, b: Motion) -> Motion:
    """Displacement of applying ``a`` then ``b`` for global translations."""
    if a.kind != "global" or b.kind != "global":
        raise ValueError("only global motions compose in closed form")
    return Motion.translation(a.shift[0] + b.shift[0], a.shift[1] + b.shift[1])
