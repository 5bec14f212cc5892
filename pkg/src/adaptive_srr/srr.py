"""Adaptive video super-resolution: LMS, R-LMS, TSR-LMS and LTSR-LMS.

Each time instant runs ``k_iters`` inner gradient-type iterations on the
current estimate, followed by the motion-compensated time update
``x0(t+1) = G(t+1) xK(t)``.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import ndimage

from .motion import Motion, apply_warp
from .operators import (
    DimensionError,
    OperatorSet,
    TemporalInverse,
    apply_kernel,
    apply_kernel_adjoint,
    apply_temporal_inverse,
    identity_kernel,
)


class Algorithm(str, enum.Enum):
    LMS = "LMS"
    RLMS = "RLMS"
    TSR_LMS = "TSR_LMS"
    LTSR_LMS = "LTSR_LMS"
    LEAST_PERTURBATION = "LEAST_PERTURBATION"

    @classmethod
    def parse(cls, name) -> "Algorithm":
        if isinstance(name, cls):
            return name
        key = str(name).upper().replace("-", "_")
        aliases = {"R_LMS": "RLMS", "TSR": "TSR_LMS", "LTSR": "LTSR_LMS", "LP": "LEAST_PERTURBATION"}
        return cls(aliases.get(key, key))


class DivergenceError(RuntimeError):
    """A step produced non-finite samples (step size too large)."""

    def __init__(self, frame_index, inner_index):
        super().__init__(f"non-finite estimate at frame {frame_index}, inner iteration {inner_index}")
        self.frame_index = frame_index
        self.inner_index = inner_index


@dataclass(frozen=True)
class SrrParams:
    mu: float
    alpha: float = 0.0
    alpha_t: float = 0.0
    k_iters: int = 2
    algorithm: Algorithm = Algorithm.RLMS

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm.parse(self.algorithm))
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.alpha < 0 or self.alpha_t < 0:
            raise ValueError("alpha and alpha_t must be nonnegative")
        if int(self.k_iters) != self.k_iters or self.k_iters < 1:
            raise ValueError(f"k_iters must be a positive integer, got {self.k_iters}")
        if self.algorithm in (Algorithm.TSR_LMS, Algorithm.LEAST_PERTURBATION) and not self.alpha_t > 0:
            raise ValueError(f"{self.algorithm.value} requires alpha_t > 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["algorithm"] = self.algorithm.value
        return d


# Parameter sets tuned for outlier-free sequences and for sequences with outliers.
TABLE_OUTLIER_FREE = {
    Algorithm.LMS: SrrParams(mu=2.0, algorithm="LMS"),
    Algorithm.RLMS: SrrParams(mu=2.75, alpha=5e-4, algorithm="RLMS"),
    Algorithm.TSR_LMS: SrrParams(mu=1.15, alpha=1.5e-4, alpha_t=82.0, algorithm="TSR_LMS"),
    Algorithm.LTSR_LMS: SrrParams(mu=3.0, alpha=1e-4, alpha_t=0.02, algorithm="LTSR_LMS"),
}
TABLE_OUTLIER = {
    Algorithm.LMS: SrrParams(mu=4.7, algorithm="LMS"),
    Algorithm.RLMS: SrrParams(mu=4.2, alpha=40e-4, algorithm="RLMS"),
    Algorithm.TSR_LMS: SrrParams(mu=2.2, alpha=18e-4, alpha_t=16.0, algorithm="TSR_LMS"),
    Algorithm.LTSR_LMS: SrrParams(mu=3.4, alpha=1e-4, alpha_t=0.017, algorithm="LTSR_LMS"),
}


@dataclass(frozen=True, eq=False)
class SrrState:
    estimate: np.ndarray
    previous_estimate: np.ndarray
    time_index: int = 0
    inner_index: int = 0


def _check(x, y, ops: OperatorSet):
    lr = ops.decimator.lr_shape(x.shape)
    if y.shape != lr:
        raise DimensionError(f"LR frame shape {y.shape} does not match expected {lr}")


def _data_gradient(x, y, ops):
    """H^T D^T (D H x - y)."""
    return ops.backward(ops.forward(x) - y)


def lms_step(x, params: SrrParams, ops: OperatorSet, y) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check(x, y, ops)
    return x - params.mu * _data_gradient(x, y, ops)


def rlms_step(x, params: SrrParams, ops: OperatorSet, y) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check(x, y, ops)
    out = x - params.mu * _data_gradient(x, y, ops)
    if params.alpha:
        out -= params.alpha * params.mu * ops.smooth_normal(x)
    return out


def tsr_step(x, params: SrrParams, ops: OperatorSet, y, warped_prev, minv: TemporalInverse | None = None):
    if not params.alpha_t > 0:
        raise ValueError("TSR-LMS requires alpha_t > 0")
    x = np.asarray(x, dtype=np.float64)
    if np.shape(warped_prev) != x.shape:
        raise DimensionError("warped_prev must have HR dimensions")
    if minv is None:
        minv = ops.temporal_inverse(params.alpha_t, x.shape)
    bracket = rlms_step(x, params, ops, y) + ops.q_normal(warped_prev) / params.alpha_t
    return apply_temporal_inverse(minv, bracket)


def ltsr_step(x, params: SrrParams, ops: OperatorSet, y, warped_prev) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.shape(warped_prev) != x.shape:
        raise DimensionError("warped_prev must have HR dimensions")
    out = rlms_step(x, params, ops, y)
    if params.alpha_t:
        q = ops.q
        out -= params.mu * params.alpha_t * apply_kernel_adjoint(
            q, apply_kernel(q, x) - apply_kernel(q, warped_prev)
        )
    return out


def least_perturbation_step(x, params: SrrParams, ops: OperatorSet, y, warped_prev, minv=None):
    """TSR-LMS with Q = I: classical temporal regularization."""
    lp_ops = ops.with_q(identity_kernel())
    if minv is None:
        minv = lp_ops.temporal_inverse(params.alpha_t, np.shape(x))
    return tsr_step(x, params, lp_ops, y, warped_prev, minv)


def time_update(state: SrrState, motion: Motion) -> SrrState:
    return SrrState(
        estimate=apply_warp(motion, state.estimate),
        previous_estimate=state.estimate,
        time_index=state.time_index + 1,
        inner_index=0,
    )


def bicubic_init(lr, factor: int) -> np.ndarray:
    """Cubic-spline upsampling aligned with phase-0 decimation (LR pixel i sits at HR pixel factor*i)."""
    lr = np.asarray(lr, dtype=np.float64)
    h, w = lr.shape
    ii, jj = np.indices((h * factor, w * factor), dtype=np.float64)
    return ndimage.map_coordinates(lr, [ii / factor, jj / factor], order=3, mode="grid-wrap")


class Reconstructor:
    """Stateful per-frame driver for one algorithm.

    ``process(y, motion)`` consumes the next LR frame with the motion G(t)
    relating the previous HR frame to this one, and returns xK(t).
    """

    def __init__(self, params: SrrParams, ops: OperatorSet, init):
        self.params = params
        self.ops = ops
        init = np.asarray(init, dtype=np.float64)
        self.state = SrrState(estimate=init, previous_estimate=init, time_index=0, inner_index=0)
        self._started = False
        alg = params.algorithm
        self._minv = None
        if alg == Algorithm.TSR_LMS:
            self._minv = ops.temporal_inverse(params.alpha_t, init.shape)
        elif alg == Algorithm.LEAST_PERTURBATION:
            self._minv = ops.with_q(identity_kernel()).temporal_inverse(params.alpha_t, init.shape)

    def _step(self, x, y, warped_prev):
        p, ops = self.params, self.ops
        alg = p.algorithm
        if alg == Algorithm.LMS:
            return lms_step(x, p, ops, y)
        if alg == Algorithm.RLMS:
            return rlms_step(x, p, ops, y)
        if alg == Algorithm.TSR_LMS:
            return tsr_step(x, p, ops, y, warped_prev, self._minv)
        if alg == Algorithm.LTSR_LMS:
            return ltsr_step(x, p, ops, y, warped_prev)
        return least_perturbation_step(x, p, ops, y, warped_prev, self._minv)

    def process(self, y, motion: Motion | None = None) -> np.ndarray:
        if self._started:
            self.state = time_update(self.state, motion if motion is not None else Motion.zero())
        self._started = True
        # x0(t) = G(t) x(t-1), constant over the inner loop
        warped_prev = self.state.estimate
        x = warped_prev
        t = self.state.time_index
        for k in range(self.params.k_iters):
            x = self._step(x, y, warped_prev)
            if not np.all(np.isfinite(x)):
                raise DivergenceError(t, k)
        self.state = replace(self.state, estimate=x, inner_index=self.params.k_iters)
        return x


def run_sequence(lr_frames, motions, params: SrrParams, ops: OperatorSet, init) -> list:
    """Reconstruct a whole sequence; ``motions[t]`` is G(t) (``motions[0]`` is unused)."""
    lr_frames = list(lr_frames)
    motions = list(motions)
    if len(lr_frames) != len(motions):
        raise ValueError(f"{len(lr_frames)} frames but {len(motions)} motions")
    init = np.asarray(init, dtype=np.float64)
    if lr_frames:
        _check(init, np.asarray(lr_frames[0]), ops)
    rec = Reconstructor(params, ops, init)
    return [rec.process(y, m).copy() for y, m in zip(lr_frames, motions)]


def eval_rms_cost(x, y, params: SrrParams, ops: OperatorSet) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check(x, y, ops)
    r = y - ops.forward(x)
    cost = float(np.sum(r * r))
    if params.alpha:
        sx = apply_kernel(ops.smooth, x)
        cost += params.alpha * float(np.sum(sx * sx))
    return cost


def eval_ltsr_lagrangian(x, y, warped_prev, params: SrrParams, ops: OperatorSet) -> float:
    cost = eval_rms_cost(x, y, params, ops)
    if params.alpha_t:
        dq = apply_kernel(ops.q, np.asarray(x, dtype=np.float64) - np.asarray(warped_prev, dtype=np.float64))
        cost += params.alpha_t * float(np.sum(dq * dq))
    return cost
