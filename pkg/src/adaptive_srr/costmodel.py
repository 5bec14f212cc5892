"""Per-iteration memory and operation counts, predicted and measured.

Accounting convention used by both the closed-form model and the
instrumented kernels:

* a convolution with operator ``A`` on an HR frame costs ``|A|`` operations
  (one fused multiply-add per nonzero matrix entry);
* a convolution whose mask carries a folded regularization weight
  (alpha, alpha_t or 1/alpha_t) accumulates straight into the update
  buffer, so the accumulation is absorbed in its FMAs;
* any other combination of two HR frames costs ``M^2`` (one op per pixel,
  an FMA when the step size is folded in);
* nothing is cached across inner iterations;
* decimation and zero-filling are pure re-samplings, tallied per output
  pixel in a separate column and excluded from the arithmetic total.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import (
    OperatorSet,
    apply_decimate,
    apply_decimate_adjoint,
)
from .srr import Algorithm, SrrParams

ALGORITHMS = (Algorithm.LMS, Algorithm.RLMS, Algorithm.TSR_LMS, Algorithm.LTSR_LMS)


@dataclass(frozen=True)
class CostModelInput:
    hr_pixels: int
    nnz_h: int
    nnz_s: int
    nnz_q: int
    nnz_m: int

    def __post_init__(self):
        for name in ("hr_pixels", "nnz_h", "nnz_s", "nnz_q", "nnz_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def for_operators(cls, ops: OperatorSet, shape, alpha_t: float = 1.0) -> "CostModelInput":
        return cls(
            hr_pixels=shape[0] * shape[1],
            nnz_h=ops.blur.nnz(shape),
            nnz_s=ops.smooth.nnz(shape),
            nnz_q=ops.q.nnz(shape),
            nnz_m=ops.temporal_inverse(alpha_t, shape).nnz(),
        )


def operation_count(c: CostModelInput, algorithm) -> int:
    alg = Algorithm.parse(algorithm)
    m2, h, s, q, mm = c.hr_pixels, c.nnz_h, c.nnz_s, c.nnz_q, c.nnz_m
    if alg == Algorithm.LMS:
        return 3 * h + 2 * m2
    if alg == Algorithm.RLMS:
        return 3 * h + 2 * s + 2 * m2
    if alg == Algorithm.TSR_LMS:
        return 3 * h + 2 * s + 2 * q + mm + 2 * m2
    if alg == Algorithm.LTSR_LMS:
        return 3 * h + 2 * s + 2 * q + 3 * m2
    raise ValueError(f"no cost model for {alg.value}")


def memory_count(c: CostModelInput, algorithm):
    """Stored samples: estimate frame(s) plus operator coefficients."""
    alg = Algorithm.parse(algorithm)
    m2 = c.hr_pixels
    if alg == Algorithm.LMS:
        return m2 + c.nnz_h / m2
    if alg == Algorithm.RLMS:
        return m2 + (c.nnz_h + c.nnz_s) / m2
    if alg == Algorithm.TSR_LMS:
        return 2 * m2 + (c.nnz_h + c.nnz_s + c.nnz_m + c.nnz_q) / m2
    if alg == Algorithm.LTSR_LMS:
        return 2 * m2 + (c.nnz_h + c.nnz_s + c.nnz_q) / m2
    raise ValueError(f"no cost model for {alg.value}")


def cost_table(c: CostModelInput) -> dict:
    return {a.value: {"operations": operation_count(c, a), "memory": memory_count(c, a)} for a in ALGORITHMS}


# --- instrumented kernels ----------------------------------------------------


@dataclass
class OpCounter:
    arithmetic: int = 0
    resample: int = 0
    stored: dict = field(default_factory=dict)  # name -> persistent sample count

    def memory(self) -> float:
        return float(sum(self.stored.values()))


class _Taps:
    """A circular convolution stored as explicit (offset, coefficient) taps."""

    def __init__(self, mask: np.ndarray, origin_centered: bool = True):
        mask = np.asarray(mask, dtype=np.float64)
        if origin_centered:
            ch, cw = mask.shape[0] // 2, mask.shape[1] // 2
        else:
            ch = cw = 0
        self.taps = [
            ((a - ch, b - cw), mask[a, b]) for a in range(mask.shape[0]) for b in range(mask.shape[1]) if mask[a, b] != 0
        ]

    def __len__(self):
        return len(self.taps)


def _conv(taps: _Taps, f, counter: OpCounter, *, adjoint=False, scale=1.0, into=None):
    out = np.zeros(f.shape) if into is None else into
    for (dy, dx), w in taps.taps:
        s = (-dy, -dx) if adjoint else (dy, dx)
        out += (scale * w) * np.roll(f, s, axis=(0, 1))
    counter.arithmetic += len(taps) * f.size
    return out


class InstrumentedIteration:
    """One inner iteration of each algorithm with every operation tallied."""

    def __init__(self, ops: OperatorSet, shape, alpha_t: float = 1.0, m_rtol: float = 1e-15):
        self.ops = ops
        self.shape = tuple(shape)
        self.h = _Taps(ops.blur.mask)
        self.s = _Taps(ops.smooth.mask)
        self.q = _Taps(ops.q.mask)
        self.alpha_t = alpha_t
        k = ops.temporal_inverse(alpha_t, shape).kernel()
        self.m = _Taps(np.where(np.abs(k) > m_rtol * np.abs(k).max(), k, 0.0), origin_centered=False)

    def _d(self, f, c):
        out = apply_decimate(self.ops.decimator, f)
        c.resample += out.size
        return out

    def _dt(self, f, c):
        out = apply_decimate_adjoint(self.ops.decimator, f)
        c.resample += out.size
        return out

    def _store(self, c, alg, n2):
        c.stored["estimate"] = n2
        c.stored["H"] = len(self.h)
        if alg != Algorithm.LMS:
            c.stored["S"] = len(self.s)
        if alg in (Algorithm.TSR_LMS, Algorithm.LTSR_LMS):
            c.stored["warped_prev"] = n2
            c.stored["Q"] = len(self.q)
        if alg == Algorithm.TSR_LMS:
            c.stored["M"] = len(self.m)

    def run(self, x, y, warped_prev, params: SrrParams):
        alg = params.algorithm
        c = OpCounter()
        n2 = x.size
        self._store(c, alg, n2)
        mu, alpha, at = params.mu, params.alpha, params.alpha_t
        # data term, evaluated from scratch: H^T D^T y - H^T D^T D H x
        hx = _conv(self.h, x, c)
        back_model = _conv(self.h, self._dt(self._d(hx, c), c), c, adjoint=True)
        back_obs = _conv(self.h, self._dt(y, c), c, adjoint=True)
        g = back_obs - back_model
        c.arithmetic += n2
        if alg != Algorithm.LMS:
            sx = _conv(self.s, x, c)
            _conv(self.s, sx, c, adjoint=True, scale=-alpha, into=g)
        if alg == Algorithm.LTSR_LMS:
            diff = x - warped_prev
            c.arithmetic += n2
            qd = _conv(self.q, diff, c)
            _conv(self.q, qd, c, adjoint=True, scale=-at, into=g)
        out = x + mu * g
        c.arithmetic += n2
        if alg == Algorithm.TSR_LMS:
            qw = _conv(self.q, warped_prev, c)
            _conv(self.q, qw, c, adjoint=True, scale=1.0 / at, into=out)
            out = _conv(self.m, out, c)
        return out, c


def flops_probe(ops: OperatorSet, shape, params_by_alg: dict, seed: int = 0) -> list:
    """Measure one inner iteration per algorithm on random data and compare with the model."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 255, size=shape)
    w = rng.uniform(0, 255, size=shape)
    y = rng.uniform(0, 255, size=ops.decimator.lr_shape(shape))
    rows = []
    for alg, p in params_by_alg.items():
        alpha_t = p.alpha_t if p.alpha_t > 0 else 1.0
        inst = InstrumentedIteration(ops, shape, alpha_t)
        out, c = inst.run(x, y, w, p)
        model = CostModelInput(
            hr_pixels=x.size,
            nnz_h=ops.blur.nnz(shape),
            nnz_s=ops.smooth.nnz(shape),
            nnz_q=ops.q.nnz(shape),
            nnz_m=len(inst.m) * x.size,
        )
        rows.append(
            {
                "algorithm": Algorithm.parse(alg).value,
                "height": shape[0],
                "width": shape[1],
                "measured_ops": c.arithmetic,
                "predicted_ops": operation_count(model, alg),
                "resamplings": c.resample,
                "measured_memory": c.memory(),
                "predicted_memory": memory_count(model, alg),
                "output": out,
            }
        )
    return rows
