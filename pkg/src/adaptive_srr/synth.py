"""Synthetic video sequences, outlier injection and innovation statistics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .motion import Motion
from .operators import Decimator, KernelOperator, OperatorSet, apply_decimate, apply_kernel, uniform_blur


@dataclass(frozen=True)
class OutlierSpec:
    """A square of constant ``value`` centred in the frame.

    Frame numbers are 1-based; the square is present in frames
    ``onset_frame <= n < offset_frame``.
    """

    side: int = 16
    onset_frame: int = 32
    offset_frame: int = 35
    value: float = 0.0

    def __post_init__(self):
        if self.side < 1:
            raise ValueError("outlier side must be positive")
        if not self.onset_frame < self.offset_frame:
            raise ValueError("outlier onset must precede offset")

    def active(self, frame_number: int) -> bool:
        return self.onset_frame <= frame_number < self.offset_frame


@dataclass(frozen=True, eq=False)
class SequenceSpec:
    source_image: np.ndarray
    hr_size: tuple = (256, 256)
    frame_count: int = 200
    seed: int = 0
    decimation_factor: int = 2
    blur: KernelOperator = field(default_factory=uniform_blur)
    noise_variance: float = 10.0
    outlier: OutlierSpec | None = None

    def __post_init__(self):
        src = np.asarray(self.source_image, dtype=np.float64)
        if src.ndim != 2:
            raise ValueError("source image must be grayscale 2-D")
        object.__setattr__(self, "source_image", src)
        object.__setattr__(self, "hr_size", tuple(int(s) for s in self.hr_size))
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")
        h, w = self.hr_size
        if h % self.decimation_factor or w % self.decimation_factor:
            raise ValueError(f"HR size {self.hr_size} not divisible by {self.decimation_factor}")
        if self.outlier is not None and self.outlier.offset_frame > self.frame_count + 1:
            raise ValueError("outlier offset beyond the last frame")

    @property
    def operators(self) -> OperatorSet:
        return OperatorSet(decimator=Decimator(self.decimation_factor), blur=self.blur)


def walk_positions(spec: SequenceSpec) -> np.ndarray:
    """Top-left crop corners of the random walk, shape (frame_count, 2).

    Steps are i.i.d. +-1 per axis, reflected at the borders of the
    source image; the walk starts with the window centred.
    """
    sh, sw = spec.source_image.shape
    h, w = spec.hr_size
    limit = np.array([sh - h, sw - w])
    if np.any(limit < 2):
        raise ValueError(f"source image {spec.source_image.shape} too small for a {spec.hr_size} walk")
    rng = np.random.default_rng(spec.seed)
    steps = rng.choice(np.array([-1, 1]), size=(spec.frame_count, 2))
    pos = np.empty((spec.frame_count, 2), dtype=np.int64)
    pos[0] = limit // 2
    for t in range(1, spec.frame_count):
        nxt = pos[t - 1] + steps[t]
        out = (nxt < 0) | (nxt > limit)
        nxt[out] = pos[t - 1][out] - steps[t][out]
        pos[t] = nxt
    return pos


def gen_random_walk(spec: SequenceSpec) -> list:
    """Per-frame global motion G(t); the first frame has zero displacement."""
    pos = walk_positions(spec)
    steps = np.diff(pos, axis=0, prepend=pos[:1])
    return [Motion.translation(int(dy), int(dx)) for dy, dx in steps]


def positions_from_walk(walk, start=(0, 0)) -> np.ndarray:
    d = np.array([m.shift for m in walk], dtype=np.int64)
    return np.cumsum(d, axis=0) + np.asarray(start)


def insert_outlier(frame, outlier: OutlierSpec) -> np.ndarray:
    out = np.array(frame, dtype=np.float64)
    h, w = out.shape
    s = outlier.side
    if s > h or s > w:
        raise ValueError(f"outlier side {s} exceeds frame {out.shape}")
    r0, c0 = (h - s) // 2, (w - s) // 2
    out[r0 : r0 + s, c0 : c0 + s] = outlier.value
    return out


def render_hr_sequence(spec: SequenceSpec, walk=None) -> list:
    if walk is None:
        pos = walk_positions(spec)
    else:
        sh, sw = spec.source_image.shape
        start = (np.array([sh, sw]) - np.array(spec.hr_size)) // 2
        pos = positions_from_walk(walk, start)
    h, w = spec.hr_size
    sh, sw = spec.source_image.shape
    frames = []
    for t, (r, c) in enumerate(pos):
        if r < 0 or c < 0 or r + h > sh or c + w > sw:
            raise ValueError(f"crop at {(r, c)} falls outside the source image")
        f = spec.source_image[r : r + h, c : c + w].copy()
        if spec.outlier is not None and spec.outlier.active(t + 1):
            f = insert_outlier(f, spec.outlier)
        frames.append(f)
    return frames


def degrade(hr, spec: SequenceSpec, noise_seed) -> np.ndarray:
    """y = D H x + e with white Gaussian e of variance ``spec.noise_variance``."""
    y = apply_decimate(Decimator(spec.decimation_factor), apply_kernel(spec.blur, hr))
    if spec.noise_variance > 0:
        rng = np.random.default_rng(noise_seed)
        y = y + rng.normal(0.0, np.sqrt(spec.noise_variance), size=y.shape)
    return y


def degrade_sequence(hr_frames, spec: SequenceSpec) -> list:
    # one independent stream per frame so any frame can be regenerated alone
    return [degrade(x, spec, [spec.seed, 1, t]) for t, x in enumerate(hr_frames)]


def synthesize(spec: SequenceSpec):
    """HR frames, LR frames and ground-truth motions for ``spec``."""
    walk = gen_random_walk(spec)
    hr = render_hr_sequence(spec, walk)
    return hr, degrade_sequence(hr, spec), walk


# --- innovation statistics -------------------------------------------------


@dataclass(frozen=True, eq=False)
class InnovationSpec:
    pool: tuple
    background_size: tuple = (64, 64)
    patch_min: int = 5
    patch_max: int = 15
    patch_count: int = 8
    realizations: int = 200

    def __post_init__(self):
        pool = tuple(np.asarray(p, dtype=np.float64) for p in self.pool)
        object.__setattr__(self, "pool", pool)
        if len(pool) < 2:
            raise ValueError("innovation pool needs at least two source images")
        if not 1 <= self.patch_min <= self.patch_max:
            raise ValueError("invalid patch size range")
        bh, bw = self.background_size
        if self.patch_max > min(bh, bw):
            raise ValueError("patches do not fit inside the background")
        for p in pool:
            if p.ndim != 2 or min(p.shape) < self.patch_max:
                raise ValueError("pool images must be 2-D and larger than the largest patch")


def gen_innovation_field(ispec: InnovationSpec, seed) -> np.ndarray:
    """Zero background with pasted differences of patches from two different images."""
    rng = np.random.default_rng(seed)
    bh, bw = ispec.background_size
    field_ = np.zeros((bh, bw))
    n = len(ispec.pool)
    for _ in range(ispec.patch_count):
        ph, pw = rng.integers(ispec.patch_min, ispec.patch_max + 1, size=2)
        ia, ib = rng.choice(n, size=2, replace=False)
        a, b = ispec.pool[ia], ispec.pool[ib]
        ra, ca = rng.integers(0, a.shape[0] - ph + 1), rng.integers(0, a.shape[1] - pw + 1)
        rb, cb = rng.integers(0, b.shape[0] - ph + 1), rng.integers(0, b.shape[1] - pw + 1)
        r, c = rng.integers(0, bh - ph + 1), rng.integers(0, bw - pw + 1)
        field_[r : r + ph, c : c + pw] = a[ra : ra + ph, ca : ca + pw] - b[rb : rb + ph, cb : cb + pw]
    return field_


def innovation_fields(ispec: InnovationSpec, seed: int) -> list:
    return [gen_innovation_field(ispec, seed + i) for i in range(ispec.realizations)]


@dataclass
class RadialPSD:
    radius: np.ndarray  # bin centres in frequency samples, 1..rmax
    power: np.ndarray  # mean periodogram per bin
    energy: np.ndarray  # summed periodogram per bin
    dc: float
    nyquist: float = 0.0  # radius of the folding frequency along the shorter axis

    def band_fraction(self, rmax: float) -> float:
        """Share of non-DC energy at radius <= rmax."""
        total = self.energy.sum()
        return float(self.energy[self.radius <= rmax].sum() / total) if total > 0 else 0.0

    def low_quarter_fraction(self) -> float:
        """Share of non-DC energy within a quarter of the Nyquist radius."""
        return self.band_fraction(self.nyquist / 4)


def estimate_psd(fields) -> RadialPSD:
    fields = [np.asarray(f, dtype=np.float64) for f in fields]
    if not fields:
        raise ValueError("need at least one field")
    shape = fields[0].shape
    if any(f.shape != shape for f in fields):
        raise ValueError("all fields must share dimensions")
    h, w = shape
    pgram = np.zeros(shape)
    for f in fields:
        pgram += np.abs(np.fft.fft2(f)) ** 2
    pgram /= len(fields) * h * w
    fy = np.fft.fftfreq(h) * h
    fx = np.fft.fftfreq(w) * w
    r = np.rint(np.hypot(fy[:, None], fx[None, :])).astype(np.int64)
    nb = r.max() + 1
    energy = np.bincount(r.ravel(), weights=pgram.ravel(), minlength=nb)
    counts = np.bincount(r.ravel(), minlength=nb)
    radius = np.arange(1, nb)
    return RadialPSD(radius, energy[1:] / counts[1:], energy[1:], float(pgram[0, 0]), min(h, w) / 2)


def circular_autocorr(x) -> np.ndarray:
    """r(l) = mean_p x(p) x(p - l), circular, l = 0..n-1."""
    x = np.asarray(x, dtype=np.float64)
    X = np.fft.fft(x)
    return np.fft.ifft(X * np.conj(X)).real / x.size


def autocorr_difference(signal, delta: int) -> np.ndarray:
    """Circular autocorrelation of s(p) = I(p) - I(p - delta)."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise ValueError("signal must be 1-D")
    if delta < 0 or signal.size <= 2 * delta:
        raise ValueError(f"delta must satisfy 0 <= delta < n/2, got {delta} for n={signal.size}")
    s = signal - np.roll(signal, delta)
    return circular_autocorr(s)


def autocorr_difference_from_image(signal, delta: int) -> np.ndarray:
    """2 r_I(l) - r_I(l - delta) - r_I(l + delta) from the image autocorrelation."""
    r = circular_autocorr(signal)
    return 2 * r - np.roll(r, delta) - np.roll(r, -delta)
