"""Filtered backprojection of partial-wave coefficients from records.

Implements both the full-sphere and in-plane (single great circle of
quantization axes) reconstructions, homogenizing measurement weights,
per-record uncertainty damping, northern-hemisphere folding for states
known to live on one hemisphere, and the direct per-measurement
contribution assembly of the Wigner function.
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .angular import (
    SQRT_4PI,
    cg_tau_table,
    hemi_overlap_matrix,
    legendre_sph_table,
    legendre_table,
    pochhammer_half,
)
from .forward import NoiseModel
from .states import SphericalState, _mirror_negative_q, _number_damping

__all__ = [
    "ReconstructionConfig",
    "compute_weights",
    "damping_factor",
    "fbp_full",
    "fbp_inplane",
    "fold_northern",
    "xi_contribution",
    "xi_assemble",
    "hemisphere_quadrature",
    "apply_uniform_damping",
    "uniform_damping_alpha",
    "reconstruct",
]

_MODES = ("full-sphere", "in-plane")
_EQUATOR_TOL = 1e-6
_GROUP_DECIMALS = 12


@dataclass(frozen=True)
class ReconstructionConfig:
    """Settings for a backprojection run.

    kmax bounds the reconstructed partial waves (in in-plane mode it must
    stay below the number of distinct axes for the discrete orthogonality
    to hold); two_j_ref fixes the reference spin of the output state and
    defaults to the rounded mean of the record spins.
    """

    kmax: int
    mode: str = "in-plane"
    noise: NoiseModel = NoiseModel()
    fold_north: bool = False
    two_j_ref: int | None = None

    def __post_init__(self):
        if self.kmax < 0:
            raise ValueError("kmax must be non-negative")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")


def _record_arrays(records):
    if len(records) == 0:
        raise ValueError("no measurement records")
    theta = np.array([r.theta for r in records])
    phi = np.array([r.phi for r in records])
    weight = np.array([r.weight for r in records])
    two_j = np.array([r.two_j for r in records], dtype=int)
    two_m = np.array([r.two_m for r in records], dtype=int)
    return theta, phi, weight, two_j, two_m


def _require_weights(weight):
    if np.any(np.isnan(weight)):
        raise ValueError("records carry pending weights; run compute_weights first")


def _resolve_two_j_ref(config, two_j):
    if config.two_j_ref is not None:
        return config.two_j_ref
    mean = float(np.mean(two_j))
    parity = int(np.round(np.mean(two_j % 2)))  # majority parity
    ref = int(np.rint((mean - parity) / 2.0)) * 2 + parity
    return max(ref, parity)


def _circle_arc_weights(angles, circumference):
    # Voronoi arcs of points on a circle; angles already folded to the range
    order = np.argsort(angles)
    a = angles[order]
    if a.size == 1:
        return np.ones(1)
    gaps = np.diff(a)
    wrap = circumference - (a[-1] - a[0])
    left = np.concatenate(([wrap], gaps))
    right = np.concatenate((gaps, [wrap]))
    arcs = 0.5 * (left + right)
    out = np.empty_like(arcs)
    out[order] = arcs / circumference
    return out


def _unit_vectors(theta, phi):
    return np.stack([np.sin(theta) * np.cos(phi),
                     np.sin(theta) * np.sin(phi),
                     np.cos(theta)], axis=1)


def _canonical_axis(v):
    # quantization axes are unoriented: fold each direction to a canonical half-space
    w = v.copy()
    flip = (w[:, 2] < -1e-12) \
        | ((np.abs(w[:, 2]) <= 1e-12) & (w[:, 0] < -1e-12)) \
        | ((np.abs(w[:, 2]) <= 1e-12) & (np.abs(w[:, 0]) <= 1e-12) & (w[:, 1] < 0.0))
    w[flip] *= -1.0
    return w


def compute_weights(records, mode, scheme="voronoi"):
    """Assign homogenizing weights c_n (sum 1) to measurement records.

    Weights depend only on the axis layout, never on the outcomes.  The
    "voronoi" scheme gives each distinct axis the share of orientation
    space it covers (arc length on the half-circle in in-plane mode,
    antipodally-folded spherical cell area otherwise) split equally among
    its records; "uniform" sets every weight to 1/M.
    """
    theta, phi, _, _, _ = _record_arrays(records)
    n = len(records)
    if scheme == "uniform":
        return [replace(r, weight=1.0 / n) for r in records]
    if scheme != "voronoi":
        raise ValueError(f"unknown weight scheme {scheme!r}")

    if mode == "in-plane":
        folded = np.round(np.mod(phi, math.pi), _GROUP_DECIMALS) % math.pi
        keys, inverse, counts = np.unique(folded, return_inverse=True, return_counts=True)
        axis_w = _circle_arc_weights(keys, math.pi)
    elif mode == "full-sphere":
        vecs = _canonical_axis(_unit_vectors(theta, phi))
        keys_arr = np.round(vecs, _GROUP_DECIMALS)
        keys, inverse, counts = np.unique(keys_arr, axis=0,
                                          return_inverse=True, return_counts=True)
        if keys.shape[0] == 1:
            raise ValueError("all axes coincide; no area partition exists")
        units = keys / np.linalg.norm(keys, axis=1, keepdims=True)
        svals = np.linalg.svd(units, compute_uv=False)
        if svals[-1] < 1e-9:
            # all axes on one great circle: cells are lunes, area follows arc length
            _, _, vt = np.linalg.svd(units)
            e1, e2 = vt[0], vt[1]
            ang = np.mod(np.arctan2(units @ e2, units @ e1), math.pi)
            axis_w = _circle_arc_weights(ang, math.pi)
        else:
            from scipy.spatial import SphericalVoronoi

            doubled = np.vstack([units, -units])
            sv = SphericalVoronoi(doubled, radius=1.0)
            areas = sv.calculate_areas()
            m = keys.shape[0]
            axis_w = (areas[:m] + areas[m:]) / (4.0 * math.pi)
    else:
        raise ValueError(f"mode must be one of {_MODES}")

    per_record = axis_w[inverse] / counts[inverse]
    per_record = per_record / per_record.sum()
    return [replace(r, weight=float(w)) for r, w in zip(records, per_record)]


def _pointing_damping(noise, kmax):
    k = np.arange(kmax + 1, dtype=float)
    if noise.sigma_omega == 0.0:
        return np.ones(kmax + 1)
    return np.exp(-0.25 * noise.sigma_omega ** 2 * k * (k + 1.0))


def _phase_damping_row(noise, phi, kmax):
    q = np.arange(-kmax, kmax + 1, dtype=float)
    sig = float(noise.azimuth_sigma(phi))
    if sig == 0.0:
        return np.ones(2 * kmax + 1)
    return np.exp(-0.5 * q * q * sig * sig)


def damping_factor(k, q, phi, noise, two_j, mode="full-sphere"):
    """Per-record uncertainty damping applied inside the backprojection sum.

    Product of the number-noise factor exp(-sigma_N^2 k(k+1)/(2j(2j-1))),
    the pointing factor exp(-sigma_Omega^2 k(k+1)/4) and, in in-plane
    mode, the azimuthal phase factor exp(-q^2 sigma_phi(phi)^2 / 2).
    """
    if k < 0 or abs(q) > k:
        raise ValueError(f"invalid wave index (k={k}, q={q})")
    out = float(_number_damping(two_j, noise.sigma_n, k)[k])
    out *= float(_pointing_damping(noise, k)[k])
    if mode == "in-plane":
        out *= float(_phase_damping_row(noise, phi, k)[k + q])
    return out


def _group_records(theta, phi, weight, two_j, two_m):
    # merge records sharing (axis, j, m); returns sorted unique rows + summed weights
    key = np.stack([np.round(theta, _GROUP_DECIMALS), np.round(phi, _GROUP_DECIMALS),
                    two_j.astype(float), two_m.astype(float)], axis=1)
    uniq, inverse = np.unique(key, axis=0, return_inverse=True)
    w = np.zeros(uniq.shape[0])
    np.add.at(w, inverse, weight)
    n = np.zeros(uniq.shape[0], dtype=int)
    np.add.at(n, inverse, 1)
    return uniq[:, 0], uniq[:, 1], w, uniq[:, 2].astype(int), uniq[:, 3].astype(int), n


def _tau_column(two_j_g, two_m_g, kmax):
    # tau_k^{j,m} for k = 0..kmax with k > 2j zeroed; reports skipped k count
    kj = min(kmax, two_j_g)
    col = np.zeros(kmax + 1)
    col[: kj + 1] = cg_tau_table(two_j_g, kj)[:, (two_m_g + two_j_g) // 2]
    return col, kmax - kj


def _pairwise_sum(partials, shape):
    if not partials:
        return np.zeros(shape, dtype=complex)
    return np.sum(np.stack(partials), axis=0)


def _warn_skipped(n_terms, n_records):
    if n_terms:
        warnings.warn(
            f"skipped {n_terms} partial-wave terms on {n_records} records whose "
            "total spin is below the requested kmax", stacklevel=3)


def fbp_full(records, config):
    """Full-sphere filtered backprojection of rho_kq from records.

    rho_kq = (2k+1) sum_n c_n D^k_{q0}(phi_n, theta_n, 0) tau_k^{j_n, m_n}
    with per-record damping.  Records whose spin cannot carry a partial
    wave k contribute nothing to that k (counted and warned about).
    """
    if config.mode != "full-sphere":
        raise ValueError("config.mode must be 'full-sphere'")
    theta, phi, weight, two_j, two_m = _record_arrays(records)
    _require_weights(weight)
    kmax = config.kmax
    two_j_ref = _resolve_two_j_ref(config, two_j)
    if kmax > two_j_ref:
        raise ValueError(f"kmax = {kmax} exceeds two_j_ref = {two_j_ref}")

    g_theta, g_phi, g_w, g_tj, g_tm, g_n = _group_records(theta, phi, weight, two_j, two_m)
    axis_key = np.stack([g_theta, g_phi], axis=1)
    axes, axis_inv = np.unique(axis_key, axis=0, return_inverse=True)
    n_axes = axes.shape[0]

    # per-axis accumulated filtered populations: A[k, a] = sum w tau damp_N
    A = np.zeros((kmax + 1, n_axes))
    skipped_terms = 0
    skipped_records = 0
    for g in range(g_w.size):
        col, nskip = _tau_column(g_tj[g], g_tm[g], kmax)
        if nskip:
            skipped_terms += nskip * g_n[g]
            skipped_records += g_n[g]
        col = col * _number_damping(g_tj[g], config.noise.sigma_n, kmax)
        A[:, axis_inv[g]] += g_w[g] * col
    _warn_skipped(skipped_terms, skipped_records)

    k = np.arange(kmax + 1, dtype=float)
    scale = np.sqrt(4.0 * math.pi / (2.0 * k + 1.0))
    qpos = np.arange(kmax + 1)
    partials = []
    chunk = max(1, int(2.0e6 / ((kmax + 1) * (2 * kmax + 1) + 1)))
    for lo in range(0, n_axes, chunk):
        sl = slice(lo, min(lo + chunk, n_axes))
        th_c = axes[sl, 0]
        ph_c = axes[sl, 1]
        S = legendre_sph_table(kmax, np.cos(th_c))            # (K+1, K+1, c)
        E = np.exp(-1j * qpos[:, None] * ph_c[None, :])       # (K+1, c)
        Dpos = scale[:, None, None] * S * E[None, :, :]       # q >= 0 half
        partials.append(np.einsum("kqa,ka->kq", Dpos, A[:, sl]))
    half = _pairwise_sum(partials, (kmax + 1, kmax + 1))

    coeffs = np.zeros((kmax + 1, 2 * kmax + 1), dtype=complex)
    coeffs[:, kmax:] = (2.0 * k + 1.0)[:, None] * _pointing_damping(config.noise, kmax)[:, None] * half
    coeffs[0, kmax] = coeffs[0, kmax].real
    _mirror_negative_q(coeffs, kmax)
    return SphericalState(two_j_ref, kmax, coeffs)


def fbp_inplane(records, config):
    """In-plane filtered backprojection (all axes on the equator).

    Reconstructs the even-reflection-parity coefficients exactly; k+q odd
    coefficients carry no information in this geometry and are hard
    zeros.  Requires kmax below the number of distinct axis azimuths.
    """
    if config.mode != "in-plane":
        raise ValueError("config.mode must be 'in-plane'")
    theta, phi, weight, two_j, two_m = _record_arrays(records)
    _require_weights(weight)
    if np.abs(theta - math.pi / 2.0).max() > _EQUATOR_TOL:
        raise ValueError("in-plane reconstruction requires all axes on the equator")
    kmax = config.kmax
    two_j_ref = _resolve_two_j_ref(config, two_j)
    if kmax > two_j_ref:
        raise ValueError(f"kmax = {kmax} exceeds two_j_ref = {two_j_ref}")
    n_axes = np.unique(np.round(np.mod(phi, math.pi), _GROUP_DECIMALS) % math.pi).size
    if kmax >= n_axes:
        raise ValueError(
            f"kmax = {kmax} not below the {n_axes} distinct axes; the discrete "
            "half-circle orthogonality only holds for k < A")

    _, g_phi, g_w, g_tj, g_tm, g_n = _group_records(theta, phi, weight, two_j, two_m)

    qs = np.arange(-kmax, kmax + 1)
    qsign = np.where((qs < 0) & (qs % 2 != 0), -1.0, 1.0)
    k = np.arange(kmax + 1, dtype=float)
    scale = np.sqrt(4.0 * math.pi / (2.0 * k + 1.0))
    S0 = legendre_sph_table(kmax, 0.0)                        # (K+1, K+1)
    Dtheta = scale[:, None] * S0[:, np.abs(qs)] * qsign[None, :]

    skipped_terms = 0
    skipped_records = 0
    V = np.zeros((g_w.size, kmax + 1))
    P = np.zeros((g_w.size, 2 * kmax + 1), dtype=complex)
    for g in range(g_w.size):
        col, nskip = _tau_column(g_tj[g], g_tm[g], kmax)
        if nskip:
            skipped_terms += nskip * g_n[g]
            skipped_records += g_n[g]
        V[g] = g_w[g] * col * _number_damping(g_tj[g], config.noise.sigma_n, kmax)
        P[g] = np.exp(-1j * qs * g_phi[g]) * _phase_damping_row(config.noise, g_phi[g], kmax)
    _warn_skipped(skipped_terms, skipped_records)

    partials = []
    chunk = 256
    for lo in range(0, g_w.size, chunk):
        sl = slice(lo, lo + chunk)
        partials.append(np.einsum("gk,gq->kq", V[sl], P[sl]))
    accum = _pairwise_sum(partials, (kmax + 1, 2 * kmax + 1))

    pf = np.zeros((kmax + 1, 2 * kmax + 1))
    for ki in range(kmax + 1):
        for q in range(-ki, ki + 1, 1):
            if (ki + q) % 2 == 0:
                pf[ki, kmax + q] = (pochhammer_half((ki - q + 1) / 2.0)
                                    * pochhammer_half((ki + q + 1) / 2.0) * math.pi)
    coeffs = pf * Dtheta * _pointing_damping(config.noise, kmax)[:, None] * accum
    coeffs[0, kmax] = coeffs[0, kmax].real
    _mirror_negative_q(coeffs, kmax)
    return SphericalState(two_j_ref, kmax, coeffs)


def fold_northern(s):
    """Fold an even-parity reconstruction onto the northern hemisphere.

    For states known to live at z > 0 the true coefficients follow from
    the even-parity ones through the hemispherical overlap integrals;
    the series is truncated at the input kmax.
    """
    kmax = s.kmax
    coeffs = np.zeros_like(s.coeffs)
    for q in range(kmax + 1):
        U = hemi_overlap_matrix(kmax, q)
        coeffs[:, kmax + q] = U @ s.coeffs[:, kmax + q]
    coeffs[0, kmax] = coeffs[0, kmax].real
    _mirror_negative_q(coeffs, kmax)
    return SphericalState(s.two_j_ref, kmax, coeffs)


def xi_contribution(two_j, two_m, x, kmax, damping=None):
    """Single-measurement contribution to W as a function of cos(angle).

    Xi_{jm}(x) = (4 pi)^(-1/2) sum_k (2k+1)^(3/2) tau_k^{j,m} P_k(x),
    truncated at kmax; damping, if given, is a per-k factor array.
    """
    if kmax > two_j:
        raise ValueError(f"kmax = {kmax} exceeds two_j = {two_j}")
    xarr = np.asarray(x, dtype=float)
    tau = cg_tau_table(two_j, kmax)[:, (two_m + two_j) // 2]
    k = np.arange(kmax + 1, dtype=float)
    coef = (2.0 * k + 1.0) ** 1.5 * tau / SQRT_4PI
    if damping is not None:
        coef = coef * np.asarray(damping, dtype=float)
    out = np.tensordot(coef, legendre_table(kmax, xarr), axes=(0, 0))
    return float(out) if out.ndim == 0 else out


def xi_assemble(records, theta, phi, kmax, noise=NoiseModel()):
    """Wigner function assembled directly from per-measurement contributions.

    Equivalent to backprojecting and evaluating, by the addition-theorem
    rearrangement; number and pointing damping can be folded in per k
    (azimuthal phase damping has no q-resolved analogue on this route).
    """
    th = np.asarray(theta, dtype=float)
    ph = np.asarray(phi, dtype=float)
    th, ph = np.broadcast_arrays(th, ph)
    theta_r, phi_r, weight, two_j, two_m = _record_arrays(records)
    _require_weights(weight)
    g_theta, g_phi, g_w, g_tj, g_tm, _ = _group_records(theta_r, phi_r, weight, two_j, two_m)
    pointing = _pointing_damping(noise, kmax)
    out = np.zeros(th.shape)
    for g in range(g_w.size):
        kj = min(kmax, g_tj[g])
        cos_eta = (np.cos(th) * math.cos(g_theta[g])
                   + np.sin(th) * math.sin(g_theta[g]) * np.cos(ph - g_phi[g]))
        cos_eta = np.clip(cos_eta, -1.0, 1.0)
        damp = (_number_damping(g_tj[g], noise.sigma_n, kj) * pointing[: kj + 1])
        out = out + g_w[g] * xi_contribution(g_tj[g], g_tm[g], cos_eta, kj, damp)
    return float(out) if out.ndim == 0 else out


def hemisphere_quadrature(n_theta, n_phi):
    """Product quadrature over the upper hemisphere (weights sum to 2 pi).

    Gauss-Legendre in cos(theta) on [0, 1] crossed with uniform azimuths,
    so band-limited integrands are integrated to machine precision; used
    to drive the backprojection in the infinite-data limit.
    """
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    x = 0.5 * (x + 1.0)
    wx = 0.5 * wx
    order = np.argsort(-x)  # ascending theta
    theta = np.arccos(x[order])
    phi = (np.arange(n_phi) + 0.5) * 2.0 * math.pi / n_phi
    w = np.outer(wx[order], np.full(n_phi, 2.0 * math.pi / n_phi))
    return theta, phi, w


def uniform_damping_alpha(noise, two_j):
    """Exponent scale of the uniform-noise smoothing rho_kq -> rho_kq e^(-a k(k+1))."""
    alpha = 0.25 * noise.sigma_omega ** 2
    if noise.sigma_n > 0.0:
        if two_j < 2:
            raise ValueError("number-noise damping undefined for two_j < 2")
        alpha += noise.sigma_n ** 2 / (two_j * (two_j - 1.0))
    return alpha


def apply_uniform_damping(s, noise, two_j=None):
    """Globally smooth a state as if every record carried the same noise."""
    two_j = s.two_j_ref if two_j is None else two_j
    alpha = uniform_damping_alpha(noise, two_j)
    k = np.arange(s.kmax + 1, dtype=float)
    factor = np.exp(-alpha * k * (k + 1.0))
    return SphericalState(s.two_j_ref, s.kmax, s.coeffs * factor[:, None])


def reconstruct(records, config, weight_scheme="voronoi"):
    """Weight, backproject, and optionally fold: the full inverse pipeline."""
    if weight_scheme != "keep":
        records = compute_weights(records, config.mode, scheme=weight_scheme)
    if config.mode == "in-plane":
        state = fbp_inplane(records, config)
    else:
        state = fbp_full(records, config)
    if config.fold_north:
        state = fold_northern(state)
    return state
