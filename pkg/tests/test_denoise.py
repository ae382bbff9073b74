import numpy as np
import pytest

from bandsurf.cloud import PointCloud, wrap
from bandsurf.denoise import (
    IrlsConfig,
    denoise,
    irls,
    nuclear_norm_surrogate,
    trace_gradient,
    trace_objective,
    weight_matrix,
)
from bandsurf.errors import DomainError, NonFiniteObjective
from bandsurf.lifting import KernelConfig, feature_matrix, kernel_gram
from bandsurf.support import centered_rect
from bandsurf.trigpoly import random_poly_with_zero_set, sample_zero_set

K55 = KernelConfig.shape((5, 5))


def noisy_curve(seed, n=60, sigma=0.01, shape=(3, 3)):
    rng = np.random.default_rng(seed)
    p = random_poly_with_zero_set(centered_rect(shape), rng)
    X = sample_zero_set(p, n, rng).points
    return p, X, wrap(X + sigma * rng.standard_normal(X.shape))


def test_trace_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    cfg = IrlsConfig(K55, lam=1.0)
    X = rng.random((8, 2))
    P = weight_matrix(kernel_gram(rng.random((8, 2)), K55).real, 0.3)
    g = trace_gradient(X, P, cfg)
    h = 1e-6
    fd = np.zeros_like(X)
    for i in range(8):
        for d in range(2):
            Xp, Xm = X.copy(), X.copy()
            Xp[i, d] += h
            Xm[i, d] -= h
            fd[i, d] = (trace_objective(Xp, P, cfg) - trace_objective(Xm, P, cfg)) / (2 * h)
    assert np.max(np.abs(g - fd)) <= 1e-4 * np.max(np.abs(fd))


def test_weight_matrix_is_inverse_square_root():
    rng = np.random.default_rng(1)
    K = kernel_gram(rng.random((10, 2)), K55).real
    P = weight_matrix(K, 0.5)
    assert np.allclose(P @ P @ (K + 0.5 * np.eye(10)), np.eye(10), atol=1e-10)
    w = np.linalg.eigvalsh(P)
    assert w.min() >= (np.linalg.eigvalsh(K).max() + 0.5) ** -0.5 * (1 - 1e-12)


def test_surrogate_is_smoothed_nuclear_norm():
    rng = np.random.default_rng(2)
    X = rng.random((12, 2))
    cfg = IrlsConfig(K55)
    s = np.linalg.svd(feature_matrix(X, K55.support), compute_uv=False)
    assert np.isclose(nuclear_norm_surrogate(X, cfg, 0.0), s.sum())
    assert np.isclose(nuclear_norm_surrogate(X, cfg, 0.2), np.sum(np.sqrt(s ** 2 + 0.2)))


def test_surrogate_single_point_and_large_gamma():
    cfg = IrlsConfig(K55)
    assert np.isclose(nuclear_norm_surrogate(np.array([[0.3, 0.1]]), cfg, 2.0), np.sqrt(27.0))
    X = np.random.default_rng(3).random((6, 2))
    big = 1e8
    # N sqrt(gamma) + tr K / (2 sqrt(gamma)) + O(gamma^{-3/2})
    expect = 6 * np.sqrt(big) + 6 * 25 / (2 * np.sqrt(big))
    assert abs(nuclear_norm_surrogate(X, cfg, big) - expect) < 1e-6


def test_surrogate_smaller_on_surface():
    rng = np.random.default_rng(4)
    p = random_poly_with_zero_set(centered_rect((3, 3)), rng)
    on = sample_zero_set(p, 60, rng).points
    off = rng.random((60, 2))
    cfg = IrlsConfig(KernelConfig.shape((7, 7)))
    assert nuclear_norm_surrogate(on, cfg, 0.0) < nuclear_norm_surrogate(off, cfg, 0.0)


def test_clean_data_is_nearly_fixed():
    p, X, _ = noisy_curve(5, n=60, sigma=0.0)
    cfg = IrlsConfig(KernelConfig.shape((7, 7)), lam=1e-9, iterations=2, inner=5)
    out = denoise(PointCloud(X), cfg)
    d = out.points - X
    d -= np.round(d)
    assert np.max(np.abs(d)) <= 1e-6


def test_objective_never_increases():
    _, _, Y = noisy_curve(6, n=80)
    res = irls(Y, IrlsConfig(KernelConfig.shape((7, 7)), lam=1e-3, iterations=6, inner=5))
    obj = [h["objective"] for h in res.history]
    assert len(obj) == 6
    assert all(b <= a * (1 + 1e-12) for a, b in zip(obj, obj[1:]))
    gam = [h["gamma"] for h in res.history]
    assert np.allclose(np.array(gam[:-1]) / np.array(gam[1:]), 1.5)
    assert res.gamma0 > 0


def test_denoising_moves_points_toward_curve():
    p, _, Y = noisy_curve(7, n=200)
    out = denoise(Y, IrlsConfig(KernelConfig.shape((7, 7)), lam=1e-3, iterations=6, inner=10))
    assert np.mean(np.abs(p(out.points))) < 0.75 * np.mean(np.abs(p(Y)))


def test_translation_equivariance():
    _, _, Y = noisy_curve(8, n=40)
    cfg = IrlsConfig(K55, lam=1e-2, iterations=2, inner=4, gamma0=1.0)
    t = np.array([0.3125, 0.75])  # dyadic shift keeps the arithmetic exact-ish
    a = denoise(Y, cfg).points
    b = denoise(wrap(Y + t), cfg).points
    d = b - wrap(a + t)
    d -= np.round(d)
    assert np.max(np.abs(d)) < 1e-9


def test_labels_survive():
    _, _, Y = noisy_curve(9, n=20)
    cloud = PointCloud(Y, np.arange(20) % 2)
    out = denoise(cloud, IrlsConfig(K55, iterations=1, inner=2))
    assert np.array_equal(out.labels, cloud.labels)


def test_three_dimensional_cloud():
    p, _, Y = noisy_curve(10, n=60, shape=(3, 3, 3), sigma=0.005)
    res = irls(Y, IrlsConfig(KernelConfig.shape((5, 5, 5)), lam=1e-3, iterations=3, inner=3))
    assert res.cloud.points.shape == (60, 3)
    obj = [h["objective"] for h in res.history]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(obj, obj[1:]))


@pytest.mark.parametrize(
    "kw",
    [{"lam": 0.0}, {"eta": 1.0}, {"gamma0": -1.0}, {"iterations": 0}, {"inner": 0}, {"step": 0}],
)
def test_config_validation(kw):
    with pytest.raises(DomainError):
        IrlsConfig(K55, **kw)


def test_asymmetric_kernel_rejected():
    with pytest.raises(DomainError):
        IrlsConfig(KernelConfig.rect((0, 0), (2, 2)))


def test_empty_cloud_rejected():
    with pytest.raises(DomainError):
        denoise(np.zeros((0, 2)), IrlsConfig(K55))


def test_divergence_is_reported():
    _, _, Y = noisy_curve(11, n=10)
    with pytest.raises(NonFiniteObjective):
        denoise(Y, IrlsConfig(K55, lam=np.inf))


def test_config_roundtrip_dict():
    cfg = IrlsConfig(K55, lam=0.5)
    again = IrlsConfig(**cfg.to_dict())
    assert again.kernel.support == K55.support and again.lam == 0.5
