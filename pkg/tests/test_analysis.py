import math

import numpy as np
import pytest

from spintomo.analysis import (
    coherent_reference_variance,
    gaussian_fit,
    mean_spin_vector,
    moments,
    power_spectrum,
    squeezing_scan,
)
from spintomo.forward import projection_probabilities
from spintomo.states import (
    DickeState,
    coherent_state,
    dicke_to_spherical,
    maximally_mixed_state,
    oat_squeezed_state,
    spherical_to_dicke,
)

import oracles

rng = np.random.default_rng(31415)


# ---------------------------------------------------------------- power spectrum

def test_spectrum_monopole_of_normalized_state():
    s = maximally_mixed_state(10, kmax=0)
    c = power_spectrum(s)
    assert c[0] == pytest.approx(1.0 / 11.0, rel=1e-12)


def test_spectrum_coherent_halfspin():
    s = coherent_state(1, 0.0, 0.0, 0.0, kmax=1)
    c = power_spectrum(s)
    assert c[1] == pytest.approx(1.0 / 6.0, rel=1e-12)


def test_spectrum_rotation_invariant():
    a = coherent_state(12, 0.9, 0.0, 0.0, kmax=12)
    b = coherent_state(12, 0.9, 2.2, 0.0, kmax=12)
    assert np.allclose(power_spectrum(a), power_spectrum(b), rtol=1e-10)


def test_spectrum_parseval_bookkeeping():
    two_j = 8
    rho = oracles.random_density_matrix(two_j, rng)
    s = dicke_to_spherical(DickeState(two_j, rho), two_j)
    c = power_spectrum(s)
    k = np.arange(two_j + 1)
    assert float((2 * k + 1) @ c) == pytest.approx(float(np.sum(np.abs(s.coeffs) ** 2)),
                                                   rel=1e-12)


# ---------------------------------------------------------------- moments

def test_moments_maximally_mixed():
    two_j = 10
    s = maximally_mixed_state(two_j, kmax=2)
    mean, mean2 = moments(s, 0.7, 1.3)
    j = two_j / 2.0
    assert mean == pytest.approx(0.0, abs=1e-14)
    assert mean2 == pytest.approx(j * (j + 1.0) / 3.0, rel=1e-12)


def test_moments_halfspin_along_z():
    rho = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    s = dicke_to_spherical(DickeState(1, rho), 1)
    mean, _ = moments(s, 0.0, 0.0)
    assert mean == pytest.approx(0.5, rel=1e-12)


def test_moments_match_dicke_oracle():
    two_j = 9
    rho = oracles.random_density_matrix(two_j, rng)
    s = dicke_to_spherical(DickeState(two_j, rho), two_j)
    for _ in range(5):
        theta = float(rng.uniform(0.0, math.pi))
        phi = float(rng.uniform(-math.pi, math.pi))
        got = moments(s, theta, phi)
        want = oracles.dicke_moments(rho, two_j, theta, phi)
        assert got[0] == pytest.approx(want[0], abs=1e-10)
        assert got[1] == pytest.approx(want[1], abs=1e-10)


def test_moments_dicke_state_along_z():
    two_j = 12
    rho = np.zeros((13, 13), dtype=complex)
    rho[9, 9] = 1.0  # two_m = 6
    s = dicke_to_spherical(DickeState(two_j, rho), two_j)
    mean, mean2 = moments(s, 0.0, 0.0)
    assert mean == pytest.approx(3.0, rel=1e-12)
    assert mean2 == pytest.approx(9.0, rel=1e-12)


def test_coherent_perpendicular_variance_from_moments():
    s = coherent_state(40, 0.0, 0.0, 0.0, kmax=2)
    mean, mean2 = moments(s, math.pi / 2.0, 0.3)
    assert mean2 - mean ** 2 == pytest.approx(10.0, rel=1e-10)


# ---------------------------------------------------------------- coherent reference

def test_reference_variance_no_noise_is_half_j():
    for two_j in (2, 40, 1260, 20000):
        assert coherent_reference_variance(two_j, 0.0) == pytest.approx(
            two_j / 4.0, rel=1e-9)


def test_reference_variance_with_noise():
    v = coherent_reference_variance(1260, 11.0)
    assert abs(v - (630.0 + 121.0) / 2.0) < 0.04


def test_reference_variance_asymptotics():
    sigma = 4.0
    for two_j in (2000, 20000):
        v = coherent_reference_variance(two_j, sigma)
        resid = abs(v - two_j / 4.0 - sigma ** 2 / 2.0)
        assert resid < 2.0 * sigma ** 4 / (two_j / 2.0) ** 2


def test_reference_variance_matches_damped_coherent_moments():
    two_j, sigma = 100, 2.5
    s = coherent_state(two_j, 0.0, 0.0, sigma, kmax=4)
    mean, mean2 = moments(s, math.pi / 2.0, 1.0)
    assert mean2 - mean ** 2 == pytest.approx(
        coherent_reference_variance(two_j, sigma), rel=1e-10)


def test_reference_variance_domain():
    with pytest.raises(ValueError):
        coherent_reference_variance(1, 0.0)


# ---------------------------------------------------------------- Gaussian fit

def test_gaussian_fit_exact_recovery():
    m = np.arange(-20, 21, dtype=float)
    p = 0.37 * np.exp(-((m - 1.7) ** 2) / (2.0 * 6.3))
    fit = gaussian_fit(p, m)
    assert fit.amplitude == pytest.approx(0.37, abs=1e-6)
    assert fit.mean == pytest.approx(1.7, abs=1e-6)
    assert fit.variance == pytest.approx(6.3, abs=1e-6)


def test_gaussian_fit_binomial_projection():
    s = coherent_state(40, 0.0, 0.0, 0.0, kmax=40)
    p = projection_probabilities(s, math.pi / 2.0, 0.0)
    m = (2.0 * np.arange(41) - 40) / 2.0
    fit = gaussian_fit(p, m)
    assert abs(fit.variance - 10.0) / 10.0 < 0.03


def test_gaussian_fit_tolerates_negative_lobes():
    m = np.arange(-15, 16, dtype=float)
    clean = np.exp(-(m ** 2) / (2.0 * 4.0))
    lobes = clean - 0.04 * np.exp(-((np.abs(m) - 8.0) ** 2) / 2.0)
    a = gaussian_fit(clean, m)
    b = gaussian_fit(lobes, m)
    assert b is not None
    assert abs(b.variance - a.variance) / a.variance < 0.10


def test_gaussian_fit_failure_modes():
    m = np.arange(-5, 6, dtype=float)
    assert gaussian_fit(np.zeros(11), m) is None      # nothing to fit
    assert gaussian_fit(-np.ones(11), m) is None      # no positive part
    with pytest.raises(ValueError):
        gaussian_fit(np.ones(3))                      # too short


# ---------------------------------------------------------------- squeezing scan

def test_scan_coherent_is_zero_db():
    s = coherent_state(40, 0.0, 0.0, 0.0, kmax=40)
    phis = np.linspace(-math.pi / 2.0, math.pi / 2.0, 25)
    rep = squeezing_scan(s, phis, 0.0, 20.0)
    assert rep.fit_failures == 0
    # the Gaussian fit to a j = 20 binomial carries a ~1% kurtosis bias
    assert abs(rep.squeezing_db) < 0.1
    for _, v_direct, v_fit in rep.variance_curve:
        assert v_direct == pytest.approx(10.0, rel=1e-9)
        assert v_fit == pytest.approx(10.0, rel=0.03)


def test_scan_oat_axes_ninety_degrees_apart():
    s = oat_squeezed_state(40, 0.05, 40)
    phis = np.linspace(-math.pi / 2.0, math.pi / 2.0, 181)
    rep = squeezing_scan(s, phis, 0.0, 20.0)
    assert rep.squeezing_db < -3.0
    vs = np.array([v for _, v, _ in rep.variance_curve])
    phi_min = rep.variance_curve[int(np.argmin(vs))][0]
    phi_max = rep.variance_curve[int(np.argmax(vs))][0]
    sep = abs(phi_min - phi_max) % math.pi
    assert min(sep, math.pi - sep) == pytest.approx(math.pi / 2.0, abs=0.05)
    # matches the Dicke-basis diagonalization oracle
    d = spherical_to_dicke(s)
    phi_oracle, v_oracle = oracles.min_variance_azimuth(d.matrix, 40)
    dphi = abs(rep.phi_s - phi_oracle) % math.pi
    assert min(dphi, math.pi - dphi) < math.radians(2.0)
    assert rep.v_min_fit == pytest.approx(v_oracle, rel=0.15)


def test_scan_equivariance_under_azimuthal_rotation():
    delta = 0.4
    a = oat_squeezed_state(20, 0.08, 20)
    co = a.coeffs.copy()
    for k in range(21):
        for q in range(-k, k + 1):
            co[k, 20 + q] *= np.exp(-1j * q * delta)
    b_state = a.__class__(a.two_j_ref, a.kmax, co)
    phis = np.linspace(-math.pi / 2.0, math.pi / 2.0, 361)
    ra = squeezing_scan(a, phis, 0.0, 10.0)
    rb = squeezing_scan(b_state, phis, 0.0, 10.0)
    shift = (rb.phi_s - ra.phi_s - delta) % math.pi
    assert min(shift, math.pi - shift) < 0.02


def test_scan_noise_subtraction_flag():
    s = coherent_state(8, 0.0, 0.0, 0.0, kmax=8)
    rep = squeezing_scan(s, [0.0, 0.5], 10.0, 4.0)  # noise floor above variance
    assert rep.squeezing_db is None


def test_scan_direct_exceeds_fit_on_noisy_reconstruction():
    # backprojection noise inflates the direct second-moment variance near
    # the squeezing minimum while the Gaussian fit stays close to truth
    from spintomo.forward import NoiseModel, sample_measurements
    from spintomo.reconstruct import ReconstructionConfig, reconstruct

    s = oat_squeezed_state(40, 0.05, 40)
    axes = [(math.pi / 2.0, a * math.pi / 24) for a in range(24)]
    recs = sample_measurements(s, axes, 120, NoiseModel(sigma_n=2.0), seed=20)
    cfg = ReconstructionConfig(kmax=23, mode="in-plane", fold_north=True,
                               noise=NoiseModel(sigma_n=2.0), two_j_ref=40)
    state = reconstruct(recs, cfg)
    phis = np.linspace(-math.pi / 4.0, math.pi / 4.0, 41)
    rep = squeezing_scan(state, phis, 2.0, 20.0)
    i = int(np.argmin([v for _, _, v in rep.variance_curve]))
    _, v_direct, v_fit = rep.variance_curve[i]
    assert v_direct > v_fit


# ---------------------------------------------------------------- mean spin

def test_mean_spin_vector_direction():
    theta0, phi0 = 1.2, -0.8
    s = coherent_state(30, theta0, phi0, 0.0, kmax=30)
    v = mean_spin_vector(s)
    want = 15.0 * np.array([math.sin(theta0) * math.cos(phi0),
                            math.sin(theta0) * math.sin(phi0),
                            math.cos(theta0)])
    assert np.allclose(v, want, atol=1e-9)
