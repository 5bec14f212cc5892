"""Monte Carlo experiment recipes built on the synthesis and SRR modules."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .images import image_pool
from .metrics import mean_mse_db, mse
from .operators import Decimator, OperatorSet
from .registration import FlowParams, estimate_motions
from .srr import TABLE_OUTLIER, TABLE_OUTLIER_FREE, Algorithm, SrrParams, bicubic_init, run_sequence
from .synth import InnovationSpec, OutlierSpec, SequenceSpec, estimate_psd, innovation_fields, synthesize


@dataclass(frozen=True)
class MonteCarloConfig:
    hr_size: tuple = (256, 256)
    frame_count: int = 200
    realizations: int = 10
    seed: int = 0
    decimation_factor: int = 2
    noise_variance: float = 10.0
    outlier: OutlierSpec | None = None
    motion: str = "known"  # known | global | dense
    params: dict = field(default_factory=lambda: dict(TABLE_OUTLIER_FREE))

    def realization_seeds(self):
        return [self.seed + r for r in range(self.realizations)]


def outlier_config(realizations: int = 10, **kw) -> MonteCarloConfig:
    return MonteCarloConfig(
        realizations=realizations, outlier=OutlierSpec(side=128, onset_frame=32, offset_frame=35),
        params=dict(TABLE_OUTLIER), **kw
    )


def outlier_free_config(realizations: int = 10, **kw) -> MonteCarloConfig:
    return MonteCarloConfig(realizations=realizations, params=dict(TABLE_OUTLIER_FREE), **kw)


def illustrative_config(realizations: int = 50, **kw) -> MonteCarloConfig:
    """32x32 window, 16x16 black square in frames 32-34, R-LMS with mu = 4."""
    params = {
        "alpha=2e-4,K=2": SrrParams(mu=4.0, alpha=2e-4, k_iters=2, algorithm="RLMS"),
        "alpha=100e-4,K=2": SrrParams(mu=4.0, alpha=100e-4, k_iters=2, algorithm="RLMS"),
        "alpha=2e-4,K=100": SrrParams(mu=4.0, alpha=2e-4, k_iters=100, algorithm="RLMS"),
    }
    base = dict(
        hr_size=(32, 32), frame_count=40, realizations=realizations,
        outlier=OutlierSpec(side=16, onset_frame=32, offset_frame=35), params=params,
    )
    base.update(kw)
    return MonteCarloConfig(**base)


def _realization(args):
    cfg, image, seed, ops = args
    spec = SequenceSpec(
        image, cfg.hr_size, cfg.frame_count, seed=seed, decimation_factor=cfg.decimation_factor,
        noise_variance=cfg.noise_variance, outlier=cfg.outlier,
    )
    hr, lr, walk = synthesize(spec)
    if cfg.motion == "known":
        motions = walk
    else:
        motions = estimate_motions(lr, FlowParams(), cfg.decimation_factor, cfg.motion)
    init = bicubic_init(lr[0], cfg.decimation_factor)
    curves = {}
    for name, p in cfg.params.items():
        est = run_sequence(lr, motions, p, ops, init)
        curves[_label(name)] = np.array([mse(e, x) for e, x in zip(est, hr)])
    return curves


def _label(name) -> str:
    return name.value if isinstance(name, Algorithm) else str(name)


def run_montecarlo(cfg: MonteCarloConfig, images=None, ops: OperatorSet | None = None, workers: int = 1) -> dict:
    """Per-configuration arrays of linear MSE, shape (realizations, frames).

    Realization ``r`` uses source image ``r mod len(images)`` with seed
    ``cfg.seed + r``; reusing an image therefore changes walk and noise.
    """
    if cfg.realizations < 1:
        raise ValueError("at least one realization is required")
    if images is None:
        need = max(cfg.hr_size) + 32
        images = image_pool(min_size=need)
    if not images:
        raise ValueError("empty image pool")
    ops = ops or OperatorSet(decimator=Decimator(cfg.decimation_factor))
    jobs = [(cfg, images[r % len(images)], s, ops) for r, s in enumerate(cfg.realization_seeds())]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_realization, jobs))
    else:
        results = [_realization(j) for j in jobs]
    return {k: np.stack([r[k] for r in results]) for k in results[0]}


def aggregate(curves: dict) -> list:
    """Rows (frame, algorithm, mean_mse_db) sorted by algorithm then frame; frames are 1-based."""
    rows = []
    for name in sorted(curves):
        for i, v in enumerate(mean_mse_db(curves[name])):
            rows.append((i + 1, name, float(v)))
    return rows


def window_mean_db(curves: dict, name: str, frames) -> float:
    """Realization-mean MSE in dB averaged over 1-based ``frames``."""
    arr = np.asarray(curves[name])
    idx = [f - 1 for f in frames]
    return float(10 * np.log10(arr[:, idx].mean()))


def psd_experiment(pool=None, realizations: int = 200, seed: int = 0, **kw):
    pool = pool if pool is not None else image_pool()
    ispec = InnovationSpec(pool=tuple(pool), realizations=realizations, **kw)
    return estimate_psd(innovation_fields(ispec, seed))
