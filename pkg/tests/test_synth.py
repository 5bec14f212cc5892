import numpy as np
import pytest

from adaptive_srr.motion import Motion, apply_warp
from adaptive_srr.operators import Decimator, apply_decimate, apply_kernel
from adaptive_srr.synth import (
    InnovationSpec,
    OutlierSpec,
    SequenceSpec,
    autocorr_difference,
    autocorr_difference_from_image,
    circular_autocorr,
    degrade,
    degrade_sequence,
    estimate_psd,
    gen_innovation_field,
    gen_random_walk,
    innovation_fields,
    insert_outlier,
    render_hr_sequence,
    synthesize,
    walk_positions,
)


def source(shape=(96, 96), seed=0):
    r = np.random.default_rng(seed)
    return r.uniform(0, 255, shape)


def spec(**kw):
    base = dict(source_image=source(), hr_size=(32, 32), frame_count=40, seed=3)
    base.update(kw)
    return SequenceSpec(**base)


# --- walk ---------------------------------------------------------------


def test_walk_deterministic():
    a = [m.shift for m in gen_random_walk(spec())]
    b = [m.shift for m in gen_random_walk(spec())]
    assert a == b
    c = [m.shift for m in gen_random_walk(spec(seed=4))]
    assert a != c


def test_walk_single_frame():
    w = gen_random_walk(spec(frame_count=1))
    assert len(w) == 1 and w[0].shift == (0.0, 0.0)


def test_walk_step_marginal():
    s = spec(source_image=np.zeros((600, 600)), frame_count=10_001)
    steps = np.array([m.shift for m in gen_random_walk(s)[1:]])
    assert set(np.unique(steps)) == {-1.0, 1.0}
    freq = (steps == 1).mean(axis=0)
    assert np.all(np.abs(freq - 0.5) < 0.02)


def test_walk_stays_inside():
    s = spec(source_image=np.zeros((36, 36)), frame_count=500)
    pos = walk_positions(s)
    assert pos.min() >= 0 and pos.max() <= 4
    assert np.all(np.abs(np.diff(pos, axis=0)) == 1)


def test_walk_source_too_small():
    with pytest.raises(ValueError):
        gen_random_walk(spec(source_image=np.zeros((33, 33))))


# --- rendering ----------------------------------------------------------


def test_zero_walk_identical_frames():
    s = spec(frame_count=5)
    frames = render_hr_sequence(s, [Motion.zero()] * 5)
    assert all(np.array_equal(f, frames[0]) for f in frames)


def test_outlier_frames():
    out = OutlierSpec(side=16, onset_frame=32, offset_frame=35)
    s = spec(source_image=source() + 1, outlier=out)
    frames = render_hr_sequence(s)
    for n, f in enumerate(frames, 1):
        if 32 <= n < 35:
            assert f[16, 16] == 0 and np.all(f[8:24, 8:24] == 0)
        else:
            assert f[16, 16] != 0


def test_crop_shift_relation():
    src = source()
    s = spec(source_image=src, frame_count=2)
    frames = render_hr_sequence(s, [Motion.zero(), Motion.translation(1, 0)])
    assert np.array_equal(frames[1][:-1], frames[0][1:])


def test_dynamics_consistency():
    s = spec(frame_count=20)
    hr, _, walk = synthesize(s)
    for t in range(1, 20):
        pred = apply_warp(walk[t], hr[t - 1])
        # interior: drop one wrapped row and column on each side
        assert np.array_equal(hr[t][1:-1, 1:-1], pred[1:-1, 1:-1])


def test_insert_outlier_centered():
    f = insert_outlier(np.ones((8, 8)), OutlierSpec(side=4, onset_frame=1, offset_frame=2, value=7))
    assert np.all(f[2:6, 2:6] == 7) and f.sum() == 64 - 16 + 16 * 7


def test_outlier_validation():
    with pytest.raises(ValueError):
        OutlierSpec(onset_frame=5, offset_frame=5)
    with pytest.raises(ValueError):
        spec(frame_count=10, outlier=OutlierSpec(onset_frame=3, offset_frame=20))


def test_out_of_bounds_crop():
    s = spec(frame_count=3)
    with pytest.raises(ValueError):
        render_hr_sequence(s, [Motion.zero(), Motion.translation(40, 0), Motion.zero()])


# --- degradation --------------------------------------------------------


def test_degrade_constant_noise_free():
    s = spec(noise_variance=0)
    assert np.allclose(degrade(np.full((32, 32), 42.0), s, 0), 42.0, atol=1e-12)


def test_degrade_noise_variance():
    s = spec(hr_size=(640, 640), source_image=np.zeros((648, 648)), noise_variance=10)
    x = np.zeros((640, 640))
    e = degrade(x, s, 5)
    assert e.size >= 1e5
    assert abs(e.var() - 10) < 0.5


def test_degrade_composition_bitwise():
    s = spec()
    x = source((32, 32), 9)
    clean = apply_decimate(Decimator(2), apply_kernel(s.blur, x))
    noise = np.random.default_rng(11).normal(0.0, np.sqrt(10.0), size=clean.shape)
    assert np.array_equal(degrade(x, s, 11), clean + noise)


def test_degradation_consistency():
    s = spec(source_image=source((300, 300)), hr_size=(256, 256), frame_count=3)
    hr, lr, _ = synthesize(s)
    ops = s.operators
    for x, y in zip(hr, lr):
        r = y - ops.forward(x)
        assert abs(np.mean(r * r) - 10) < 1.0


def test_synthesis_reproducible():
    a = synthesize(spec())
    b = synthesize(spec())
    assert all(np.array_equal(u, v) for u, v in zip(a[1], b[1]))
    assert np.array_equal(degrade_sequence(a[0], spec())[7], a[1][7])


def test_lr_dims():
    s = spec(source_image=source((300, 300)), hr_size=(256, 256), frame_count=1)
    hr, lr, _ = synthesize(s)
    assert hr[0].shape == (256, 256) and lr[0].shape == (128, 128)


def test_spec_validation():
    with pytest.raises(ValueError):
        spec(hr_size=(31, 32))
    with pytest.raises(ValueError):
        spec(frame_count=0)
    with pytest.raises(ValueError):
        spec(noise_variance=-1)


# --- innovations --------------------------------------------------------


def pool():
    return [source((80, 80), s) for s in range(4)]


def test_innovation_zero_patches():
    isp = InnovationSpec(pool=tuple(pool()), patch_count=0)
    assert not gen_innovation_field(isp, 0).any()


def test_innovation_support():
    # constant sources: every pasted sample is +-2, everything else is 0
    isp = InnovationSpec(pool=(np.ones((40, 40)), np.full((40, 40), 3.0)), patch_count=8)
    for seed in range(20):
        f = gen_innovation_field(isp, seed)
        assert f.shape == (64, 64)
        assert set(np.unique(f)) <= {-2.0, 0.0, 2.0}
        assert 25 <= np.count_nonzero(f) <= 8 * 15 * 15


def test_innovation_mean_zero():
    isp = InnovationSpec(pool=tuple(pool()), realizations=200)
    means = np.array([f.mean() for f in innovation_fields(isp, 0)])
    assert abs(means.mean()) < 2 * means.std(ddof=1) / np.sqrt(means.size)


def test_innovation_needs_two_images():
    with pytest.raises(ValueError):
        InnovationSpec(pool=(source(),))


def test_psd_white_noise_flat():
    r = np.random.default_rng(0)
    res = estimate_psd([r.normal(size=(64, 64)) for _ in range(200)])
    assert res.power.max() / res.power.min() < 2


def test_psd_constant_field():
    res = estimate_psd([np.full((16, 16), 3.0)])
    assert res.dc == pytest.approx(9.0 * 256)
    assert np.allclose(res.energy, 0, atol=1e-18)


def test_psd_dims_mismatch():
    with pytest.raises(ValueError):
        estimate_psd([np.zeros((4, 4)), np.zeros((4, 5))])
    with pytest.raises(ValueError):
        estimate_psd([])


def test_psd_parseval():
    r = np.random.default_rng(1)
    fields = [r.normal(size=(16, 16)) for _ in range(3)]
    res = estimate_psd(fields)
    total = np.mean([np.sum(f * f) for f in fields])
    assert res.dc + res.energy.sum() == pytest.approx(total, rel=1e-12)


def test_autocorr_difference_zero_delta():
    assert not autocorr_difference(np.arange(10.0), 0).any()


def test_autocorr_difference_white_noise():
    r = np.random.default_rng(2)
    x = r.normal(size=20000)
    assert autocorr_difference(x, 50)[0] == pytest.approx(2 * circular_autocorr(x)[0], rel=0.05)


def test_autocorr_difference_identity():
    r = np.random.default_rng(3)
    for delta in (1, 3, 7):
        x = r.normal(size=64)
        assert np.max(np.abs(autocorr_difference(x, delta) - autocorr_difference_from_image(x, delta))) < 1e-10


def test_circular_autocorr_brute_force():
    r = np.random.default_rng(4)
    x = r.normal(size=12)
    n = x.size
    ref = [sum(x[p] * x[(p - l) % n] for p in range(n)) / n for l in range(n)]
    assert np.allclose(circular_autocorr(x), ref, atol=1e-12)


def test_autocorr_difference_range():
    with pytest.raises(ValueError):
        autocorr_difference(np.zeros(10), 5)
    with pytest.raises(ValueError):
        autocorr_difference(np.zeros(10), -1)
