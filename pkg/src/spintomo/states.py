"""Spin-state representations and conversions.

A state enters the pipeline either as a Dicke-basis density matrix
(desk-scale oracle form) or as the complex partial-wave coefficients
rho_kq that define its Wigner function on the Bloch sphere.  This module
holds both containers, the exact conversions between them, generators for
reference states, and Wigner-function evaluation on points and grids.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .angular import (
    cg_t_row,
    cg_tau_table,
    check_spin_label,
    legendre_sph_table,
    rot_elements_axis,
)

__all__ = [
    "SphericalState",
    "DickeState",
    "WignerGrid",
    "dicke_to_spherical",
    "spherical_to_dicke",
    "wigner_eval",
    "wigner_grid",
    "coherent_state",
    "dicke_basis_state",
    "maximally_mixed_state",
    "oat_squeezed_state",
    "grid_theta_weights",
    "sphere_integral",
    "spin_expectation_from_grid",
]

DESK_SCALE_LIMIT = 400  # Dicke-basis paths hold full (2j+1)^2 matrices


@dataclass(frozen=True)
class SphericalState:
    """Partial-wave coefficients rho_kq of a spin state's Wigner function.

    ``coeffs[k, kmax + q]`` holds rho_kq for 0 <= k <= kmax, |q| <= k;
    entries outside |q| <= k are zero.  ``two_j_ref`` is the reference
    total spin (doubled) used wherever j-dependent prefactors are needed;
    ``kmax`` records the truncation and every consumer must respect it.
    States are immutable after construction.
    """

    two_j_ref: int
    kmax: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        check_spin_label(self.two_j_ref, self.two_j_ref % 2)
        if not 0 <= self.kmax <= self.two_j_ref:
            raise ValueError(f"kmax = {self.kmax} outside 0..two_j_ref = {self.two_j_ref}")
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != (self.kmax + 1, 2 * self.kmax + 1):
            raise ValueError(f"coefficient array has shape {coeffs.shape}, "
                             f"expected {(self.kmax + 1, 2 * self.kmax + 1)}")
        coeffs = coeffs.copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    def coeff(self, k, q):
        """Single coefficient rho_kq."""
        if not (0 <= k <= self.kmax and abs(q) <= k):
            raise ValueError(f"(k={k}, q={q}) outside the stored range")
        return complex(self.coeffs[k, self.kmax + q])

    def validate(self, tol=1e-10):
        """Check the reality invariant rho_{k,-q} = (-1)^q conj(rho_kq)."""
        scale = max(1.0, float(np.abs(self.coeffs).max(initial=0.0)))
        if abs(self.coeffs[0, self.kmax].imag) > tol * scale:
            raise ValueError("rho_00 is not real")
        if self.kmax > 0:
            q = np.arange(1, self.kmax + 1)
            sign = np.where(q % 2 == 0, 1.0, -1.0)
            mirrored = sign[None, :] * np.conj(self.coeffs[:, self.kmax + 1:])
            err = np.abs(self.coeffs[:, self.kmax - 1::-1] - mirrored).max(initial=0.0)
            if err > tol * scale:
                raise ValueError(f"reality invariant violated by {err:.3g}")
        k = np.arange(self.kmax + 1)[:, None]
        qq = np.abs(np.arange(-self.kmax, self.kmax + 1))[None, :]
        if np.abs(np.where(qq > k, self.coeffs, 0.0)).max(initial=0.0) > 0.0:
            raise ValueError("nonzero coefficient outside |q| <= k")


@dataclass(frozen=True)
class DickeState:
    """Density matrix rho_mm' in the Dicke basis |j, m>.

    ``matrix[i, i']`` is rho_mm' with two_m = 2*i - two_j (m ascending).
    Hermiticity is required; positivity is deliberately not enforced,
    since backprojection output need not be positive semi-definite.
    """

    two_j: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        check_spin_label(self.two_j, self.two_j % 2)
        mat = np.asarray(self.matrix, dtype=complex)
        dim = self.two_j + 1
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix has shape {mat.shape}, expected {(dim, dim)}")
        scale = max(1.0, float(np.abs(mat).max(initial=0.0)))
        if np.abs(mat - mat.conj().T).max(initial=0.0) > 1e-10 * scale:
            raise ValueError("Dicke matrix is not Hermitian")
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def trace(self):
        return float(np.trace(self.matrix).real)

    def m_values(self):
        """Doubled projections for the matrix rows, ascending."""
        return np.arange(-self.two_j, self.two_j + 1, 2)


@dataclass(frozen=True)
class WignerGrid:
    """Sampled W(theta, phi) on a latitude-longitude grid.

    Nodes sit at cell centers of [0, pi] x [0, 2 pi), so the poles are
    never sampled and quadrature weights need no special-casing there.
    """

    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if theta.size < 2 or phi.size < 2:
            raise ValueError("grid dimensions must be at least 2")
        if values.shape != (theta.size, phi.size):
            raise ValueError(f"values shape {values.shape} does not match grid "
                             f"{(theta.size, phi.size)}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid contains non-finite values")
        for name, arr in (("theta", theta), ("phi", phi), ("values", values)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def _mirror_negative_q(coeffs, kmax):
    # fill the q < 0 half from the q > 0 half so the invariant holds bitwise
    if kmax == 0:
        return
    q = np.arange(1, kmax + 1)
    sign = np.where(q % 2 == 0, 1.0, -1.0)
    coeffs[:, kmax - 1::-1] = sign[None, :] * np.conj(coeffs[:, kmax + 1:])


def dicke_to_spherical(d, kmax):
    """Partial-wave coefficients of a Dicke-basis density matrix.

    Exact inverse of :func:`spherical_to_dicke` when kmax = two_j.
    Desk-scale only: cost grows like kmax^2 * j^2.
    """
    two_j = d.two_j
    if not 0 <= kmax <= two_j:
        raise ValueError(f"kmax = {kmax} outside 0..two_j = {two_j}")
    if two_j > DESK_SCALE_LIMIT:
        raise ValueError(f"two_j = {two_j} beyond desk scale ({DESK_SCALE_LIMIT})")
    coeffs = np.zeros((kmax + 1, 2 * kmax + 1), dtype=complex)
    for k in range(kmax + 1):
        for q in range(k + 1):
            two_m, t = cg_t_row(two_j, k, q)
            i = (two_m + two_j) // 2
            coeffs[k, kmax + q] = np.sum(t * d.matrix[i, i - q])
    coeffs[0, kmax] = coeffs[0, kmax].real
    _mirror_negative_q(coeffs, kmax)
    return SphericalState(two_j, kmax, coeffs)


def spherical_to_dicke(s):
    """Dicke-basis density matrix of a partial-wave state (desk scale)."""
    two_j = s.two_j_ref
    if two_j > DESK_SCALE_LIMIT:
        raise ValueError(f"two_j_ref = {two_j} beyond desk scale ({DESK_SCALE_LIMIT})")
    dim = two_j + 1
    mat = np.zeros((dim, dim), dtype=complex)
    for k in range(min(s.kmax, two_j) + 1):
        for q in range(-k, k + 1):
            rho = s.coeffs[k, s.kmax + q]
            if rho == 0.0:
                continue
            two_m, t = cg_t_row(two_j, k, q)
            i = (two_m + two_j) // 2
            mat[i, i - q] += rho * t
    mat = 0.5 * (mat + mat.conj().T)
    return DickeState(two_j, mat)


def _eval_points(s, theta, phi):
    # full complex partial-wave sum at arbitrary points, chunked over points
    kmax = s.kmax
    th = np.asarray(theta, dtype=float)
    ph = np.asarray(phi, dtype=float)
    th, ph = np.broadcast_arrays(th, ph)
    shape = th.shape
    th = th.ravel()
    ph = ph.ravel()
    out = np.empty(th.size, dtype=complex)
    qs = np.arange(-kmax, kmax + 1)
    qsign = np.where((qs < 0) & (qs % 2 != 0), -1.0, 1.0)
    chunk = max(1, int(4.0e5 / ((kmax + 1) * (2 * kmax + 1) + 1)))
    for lo in range(0, th.size, chunk):
        sl = slice(lo, lo + chunk)
        S = legendre_sph_table(kmax, np.cos(th[sl]))          # (K+1, K+1, n)
        Y = S[:, np.abs(qs), :] * qsign[None, :, None] \
            * np.exp(1j * qs[None, :, None] * ph[sl][None, None, :])
        out[sl] = np.einsum("kq,kqn->n", s.coeffs, Y)
    return out.reshape(shape)


def wigner_eval(s, theta, phi):
    """Wigner function W(theta, phi) of a partial-wave state.

    Accepts scalars or broadcastable arrays.  The full complex sum is
    evaluated and its imaginary part checked against the reality
    invariant before being discarded.
    """
    w = _eval_points(s, theta, phi)
    scale = max(1.0, float(np.sum(np.abs(s.coeffs))))
    worst = float(np.abs(w.imag).max()) if w.size else 0.0
    if worst > 1e-10 * scale:
        raise ValueError(f"imaginary residual {worst:.3g} violates the reality invariant")
    w = w.real
    return float(w) if w.ndim == 0 else w


def _grid_axes(n_theta, n_phi):
    theta = (np.arange(n_theta) + 0.5) * math.pi / n_theta
    phi = (np.arange(n_phi) + 0.5) * 2.0 * math.pi / n_phi
    return theta, phi


def wigner_grid(s, n_theta, n_phi):
    """Sample W on an n_theta x n_phi cell-center grid.

    Associated-Legendre tables are shared across each latitude row, so the
    cost is O(n_theta * (kmax^2 + kmax * n_phi)).
    """
    if n_theta < 2 or n_phi < 2:
        raise ValueError("grid dimensions must be at least 2")
    kmax = s.kmax
    theta, phi = _grid_axes(n_theta, n_phi)
    qs = np.arange(-kmax, kmax + 1)
    qsign = np.where((qs < 0) & (qs % 2 != 0), -1.0, 1.0)
    S = legendre_sph_table(kmax, np.cos(theta))               # (K+1, K+1, nt)
    z = np.einsum("kq,kqt->qt", s.coeffs * qsign[None, :], S[:, np.abs(qs), :])
    E = np.exp(1j * qs[:, None] * phi[None, :])               # (2K+1, np)
    w = z.T @ E
    scale = max(1.0, float(np.sum(np.abs(s.coeffs))))
    if np.abs(w.imag).max(initial=0.0) > 1e-10 * scale:
        raise ValueError("imaginary residual violates the reality invariant")
    return WignerGrid(theta, phi, w.real)


def grid_theta_weights(n_theta):
    """Latitude quadrature weights for the cell-center grid (sum to 2).

    The latitudes theta_i = (i + 1/2) pi / n are Chebyshev points in
    x = cos(theta), so Fejer's first rule applies: the weights integrate
    every polynomial in x up to degree n-1 exactly, which makes sphere
    integrals of band-limited W exact rather than O(1/n^2).
    """
    n = int(n_theta)
    theta = (np.arange(n) + 0.5) * math.pi / n
    m = np.arange(1, n // 2 + 1)
    corr = np.cos(2.0 * np.outer(theta, m)) / (4.0 * m * m - 1.0)[None, :]
    return (2.0 / n) * (1.0 - 2.0 * corr.sum(axis=1))


def sphere_integral(grid):
    """Integral of the gridded function over the full sphere."""
    w_theta = grid_theta_weights(grid.theta.size)
    return float(w_theta @ grid.values.sum(axis=1)) * 2.0 * math.pi / grid.phi.size


def spin_expectation_from_grid(grid, two_j):
    """Angular-momentum vector <S> from the Wigner function's center of mass.

    Returns (Sx, Sy, Sz) in units of hbar, using the proportionality of
    <S> to the first moment of W over the sphere.
    """
    check_spin_label(two_j, two_j % 2)
    j = two_j / 2.0
    pref = math.sqrt(j * (j + 1.0) * (two_j + 1.0) / (4.0 * math.pi))
    w_theta = grid_theta_weights(grid.theta.size)
    dphi = 2.0 * math.pi / grid.phi.size
    sin_t = np.sin(grid.theta)
    cos_t = np.cos(grid.theta)
    row = grid.values * (w_theta)[:, None] * dphi
    sx = float(np.sum(row * np.outer(sin_t, np.cos(grid.phi))))
    sy = float(np.sum(row * np.outer(sin_t, np.sin(grid.phi))))
    sz = float(np.sum(row * cos_t[:, None]))
    return pref * np.array([sx, sy, sz])


def _number_damping(two_j, sigma_n, kmax):
    # exp(-sigma_N^2 k(k+1) / (2j(2j-1))) as a per-k vector
    k = np.arange(kmax + 1, dtype=float)
    if sigma_n == 0.0:
        return np.ones(kmax + 1)
    if two_j < 2:
        raise ValueError("number-noise damping undefined for two_j < 2")
    return np.exp(-sigma_n ** 2 * k * (k + 1.0) / (two_j * (two_j - 1.0)))


def coherent_state(two_j, theta0, phi0, sigma_n=0.0, kmax=None):
    """Coherent spin state pointing along (theta0, phi0).

    With sigma_n > 0 the coefficients carry the number-noise damping of an
    imaging-noise-broadened coherent state.  The pole-form coefficients
    tau_k^{j,j} are rotated to the requested axis with the k-order
    rotation elements.
    """
    check_spin_label(two_j, two_j)
    if sigma_n < 0.0:
        raise ValueError("sigma_n must be non-negative")
    if kmax is None:
        kmax = two_j
    tau = cg_tau_table(two_j, kmax)
    pole = tau[:, two_j] * _number_damping(two_j, sigma_n, kmax)
    D = rot_elements_axis(kmax, theta0, phi0)
    coeffs = D * pole[:, None]
    return SphericalState(two_j, kmax, coeffs)


def dicke_basis_state(two_j, two_m, kmax):
    """Pure Dicke state |j, m><j, m| as partial waves (q = 0 only)."""
    check_spin_label(two_j, two_m)
    tau = cg_tau_table(two_j, kmax)
    coeffs = np.zeros((kmax + 1, 2 * kmax + 1), dtype=complex)
    coeffs[:, kmax] = tau[:, (two_m + two_j) // 2]
    return SphericalState(two_j, kmax, coeffs)


def maximally_mixed_state(two_j, kmax=0):
    """Isotropic state: rho_00 = (2j+1)^(-1/2), all higher waves zero."""
    check_spin_label(two_j, two_j % 2)
    coeffs = np.zeros((kmax + 1, 2 * kmax + 1), dtype=complex)
    coeffs[0, kmax] = 1.0 / math.sqrt(two_j + 1.0)
    return SphericalState(two_j, kmax, coeffs)


def _collective_lowering(two_j):
    # <m|J-|m+1> entries; returns the full J+ matrix (dense, desk scale)
    dim = two_j + 1
    m = (2.0 * np.arange(dim) - two_j) / 2.0
    j = two_j / 2.0
    jp = np.zeros((dim, dim))
    amp = np.sqrt(j * (j + 1.0) - m[:-1] * (m[:-1] + 1.0))
    jp[np.arange(1, dim), np.arange(dim - 1)] = amp
    return jp


def _y_rotation(two_j, angle):
    # exp(-i angle Jy) via eigendecomposition of the Hermitian generator
    jp = _collective_lowering(two_j)
    jy = (jp - jp.T) / 2.0j
    w, v = scipy.linalg.eigh(jy)
    return (v * np.exp(-1j * angle * w)[None, :]) @ v.conj().T


def oat_squeezed_state(two_j, chi, kmax):
    """One-axis-twisted state, mean spin along +z (test fixture).

    Starts from the coherent state along +x, applies the twisting phase
    exp(-i chi m^2) in the z-Dicke basis, rotates the mean spin back to
    +z, and converts to partial waves.  chi = 0 reproduces the coherent
    state at the pole.
    """
    check_spin_label(two_j, two_j)
    if two_j > DESK_SCALE_LIMIT:
        raise ValueError(f"OAT generator is desk-scale only (two_j <= {DESK_SCALE_LIMIT})")
    dim = two_j + 1
    m = (2.0 * np.arange(dim) - two_j) / 2.0
    psi = _y_rotation(two_j, math.pi / 2.0)[:, two_j]    # coherent along +x
    psi = np.exp(-1j * chi * m * m) * psi
    psi = _y_rotation(two_j, -math.pi / 2.0) @ psi
    rho = np.outer(psi, psi.conj())
    return dicke_to_spherical(DickeState(two_j, rho), kmax)
