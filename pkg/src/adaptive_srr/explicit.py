"""Dense-matrix oracles for the matrix-free operators.

Matrices are assembled entry by entry from the operator definitions
(index arithmetic and interpolation weights), never by calling the
matrix-free kernels, so they serve as an independent check. Frames are
vectorized row-major.
"""
from __future__ import annotations

import math

import numpy as np

from .motion import Motion
from .operators import Decimator, KernelOperator

MAX_PIXELS = 4096


class OracleSizeError(ValueError):
    pass


def _cap(*shapes):
    for s in shapes:
        if s[0] * s[1] > MAX_PIXELS:
            raise OracleSizeError(f"{s} exceeds the {MAX_PIXELS}-pixel oracle cap")


def decimation_matrix(d: Decimator, hr_shape) -> np.ndarray:
    _cap(hr_shape)
    h, w = hr_shape
    lh, lw = d.lr_shape(hr_shape)
    D = np.zeros((lh * lw, h * w))
    for i in range(lh):
        for j in range(lw):
            D[i * lw + j, (d.factor * i + d.phase) * w + d.factor * j + d.phase] = 1.0
    return D


def convolution_matrix(k: KernelOperator, shape) -> np.ndarray:
    _cap(shape)
    h, w = shape
    kh, kw = k.mask.shape
    ch, cw = kh // 2, kw // 2
    A = np.zeros((h * w, h * w))
    for i in range(h):
        for j in range(w):
            for a in range(kh):
                for b in range(kw):
                    # out(i,j) = sum_s mask(c+s) f((i,j) - s)
                    si = (i - (a - ch)) % h
                    sj = (j - (b - cw)) % w
                    A[i * w + j, si * w + sj] += k.mask[a, b]
    return A


def warp_matrix(m: Motion, shape) -> np.ndarray:
    _cap(shape)
    h, w = shape
    G = np.zeros((h * w, h * w))
    for i in range(h):
        for j in range(w):
            if m.kind == "global":
                dy, dx = m.shift
            else:
                dy, dx = m.flow[0, i, j], m.flow[1, i, j]
            sy, sx = i + dy, j + dx
            y0, x0 = math.floor(sy), math.floor(sx)
            fy, fx = sy - y0, sx - x0
            for oy, wy in ((0, 1 - fy), (1, fy)):
                for ox, wx in ((0, 1 - fx), (1, fx)):
                    G[i * w + j, ((y0 + oy) % h) * w + (x0 + ox) % w] += wy * wx
    return G


def temporal_inverse_matrix(q: KernelOperator, alpha_t: float, shape) -> np.ndarray:
    Q = convolution_matrix(q, shape)
    n = Q.shape[0]
    return np.linalg.inv(np.eye(n) + Q.T @ Q / alpha_t)


def build_explicit_matrix(op: str, shape, *, decimator=None, kernel=None, motion=None, alpha_t=None):
    """Explicit matrix of operator ``op`` in {"D", "H", "S", "Q", "G", "M"} on HR ``shape``."""
    _cap(shape)
    if op == "D":
        return decimation_matrix(decimator or Decimator(), shape)
    if op in ("H", "S", "Q"):
        if kernel is None:
            raise ValueError(f"operator {op} needs a kernel")
        return convolution_matrix(kernel, shape)
    if op == "G":
        return warp_matrix(motion if motion is not None else Motion.zero(), shape)
    if op == "M":
        if kernel is None or alpha_t is None:
            raise ValueError("operator M needs the Q kernel and alpha_t")
        return temporal_inverse_matrix(kernel, alpha_t, shape)
    raise ValueError(f"unknown operator {op!r}")


def matrix_from_operator(fn, in_shape) -> np.ndarray:
    """Probe a linear map with canonical basis frames (columns of its matrix)."""
    _cap(in_shape)
    n = in_shape[0] * in_shape[1]
    cols = []
    for idx in range(n):
        e = np.zeros(n)
        e[idx] = 1.0
        cols.append(np.asarray(fn(e.reshape(in_shape))).ravel())
    return np.stack(cols, axis=1)
