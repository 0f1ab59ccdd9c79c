"""Forward model: Stern-Gerlach projection probabilities and synthetic data.

The sampler is the round-trip oracle for the reconstructor: it draws
measurement records from a known state with configurable number noise,
axis pointing noise and azimuthal phase noise, deterministically for a
given seed (counter-based per-axis streams, so the result is independent
of execution order).
"""

import math
from dataclasses import dataclass

import numpy as np

from .angular import cg_tau_table, check_spin_label, rot_elements_axis
from .states import DESK_SCALE_LIMIT

__all__ = [
    "NoiseModel",
    "MeasurementRecord",
    "projection_probabilities",
    "sample_measurements",
    "exact_records",
]

_PHASE_MODES = ("none", "constant", "model")
_PHASE_VARIANTS = ("quadratic", "linear")


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian uncertainty parameters of the measurement apparatus.

    sigma_n      atom-number standard deviation (atoms); the total spin and
                 projection each inherit variance sigma_n^2 / 2.
    sigma_omega  quantization-axis pointing uncertainty (radians), defined
                 through the mean squared sine of the pointing error angle.
    phase_mode   azimuthal phase noise: "none", "constant" (fixed
                 sigma_phi), or "model" (amplitude sigma_ph mapped to a
                 phi-dependent sigma).
    phase_variant  "quadratic" applies sigma_ph^2 sin|phi| / sqrt(2) with
                 sigma_ph in radians (the verbatim reading); "linear" is
                 the alternative sigma_ph sin|phi| / sqrt(2).
    """

    sigma_n: float = 0.0
    sigma_omega: float = 0.0
    phase_mode: str = "none"
    sigma_phi: float = 0.0
    sigma_ph: float = 0.0
    phase_variant: str = "quadratic"

    def __post_init__(self):
        for name in ("sigma_n", "sigma_omega", "sigma_phi", "sigma_ph"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and non-negative, got {v}")
        if self.phase_mode not in _PHASE_MODES:
            raise ValueError(f"phase_mode must be one of {_PHASE_MODES}")
        if self.phase_variant not in _PHASE_VARIANTS:
            raise ValueError(f"phase_variant must be one of {_PHASE_VARIANTS}")

    def azimuth_sigma(self, phi):
        """Azimuth-noise standard deviation at quantization-axis azimuth phi."""
        if self.phase_mode == "none":
            return np.zeros_like(np.asarray(phi, dtype=float)) + 0.0
        if self.phase_mode == "constant":
            return np.full_like(np.asarray(phi, dtype=float), self.sigma_phi) + 0.0
        amp = self.sigma_ph ** 2 if self.phase_variant == "quadratic" else self.sigma_ph
        return amp * np.sin(np.abs(np.asarray(phi, dtype=float))) / math.sqrt(2.0)

    @property
    def has_axis_noise(self):
        return self.sigma_omega > 0.0 or (
            self.phase_mode == "constant" and self.sigma_phi > 0.0
        ) or (self.phase_mode == "model" and self.sigma_ph > 0.0)


@dataclass(frozen=True)
class MeasurementRecord:
    """One Stern-Gerlach outcome: axis, weight, total spin, projection.

    weight may be NaN while pending (filled later by the weighting step).
    """

    theta: float
    phi: float
    weight: float
    two_j: int
    two_m: int

    def __post_init__(self):
        check_spin_label(self.two_j, self.two_m)
        if not (0.0 <= self.theta <= math.pi):
            raise ValueError(f"theta = {self.theta} outside [0, pi]")
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")
        if not math.isnan(self.weight) and not (math.isfinite(self.weight)
                                                and self.weight >= 0.0):
            raise ValueError(f"weight must be non-negative or NaN, got {self.weight}")


def projection_probabilities(s, theta, phi):
    """Projection-number distribution p_m along the axis (theta, phi).

    Entries may be negative when s comes from a noisy reconstruction; the
    sum always equals sqrt(2j+1) rho_00 (the trace).
    """
    two_j = s.two_j_ref
    kuse = min(s.kmax, two_j)
    D = rot_elements_axis(kuse, theta, phi)
    block = s.coeffs[: kuse + 1, s.kmax - kuse: s.kmax + kuse + 1]
    z = np.einsum("kq,kq->k", np.conj(D), block)
    scale = max(1.0, float(np.sum(np.abs(block))))
    if np.abs(z.imag).max(initial=0.0) > 1e-10 * scale:
        raise ValueError("imaginary residual violates the reality invariant")
    tau = cg_tau_table(two_j, kuse)
    return tau.T @ z.real


def _axis_frame(theta, phi):
    n = np.array([math.sin(theta) * math.cos(phi),
                  math.sin(theta) * math.sin(phi),
                  math.cos(theta)])
    e1 = np.array([math.cos(theta) * math.cos(phi),
                   math.cos(theta) * math.sin(phi),
                   -math.sin(theta)])
    e2 = np.array([-math.sin(phi), math.cos(phi), 0.0])
    return n, e1, e2


def _sanitized_probabilities(p):
    if p.min(initial=0.0) < -1e-8:
        raise ValueError(f"state is unphysical for sampling: min p_m = {p.min():.3g}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if total <= 0.0:
        raise ValueError("projection probabilities sum to zero")
    return p / total


def sample_measurements(s, axes, shots_per_axis, noise, seed):
    """Draw synthetic measurement records from a state.

    axes is a sequence of (theta, phi) quantization-axis orientations;
    shots_per_axis single measurements are drawn for each.  Per shot the
    total spin is jittered by the number noise (rounded to the nearest
    parity-consistent value), the axis is jittered per the noise model,
    and the outcome is drawn from the probabilities recomputed for the
    jittered axis.  Weights are set to 1/M (replaced later by the
    weighting step).  Deterministic for fixed inputs and seed: each axis
    owns an independent counter-based substream.
    """
    if shots_per_axis < 1:
        raise ValueError("shots_per_axis must be at least 1")
    if len(axes) == 0:
        raise ValueError("at least one axis is required")
    two_j = s.two_j_ref
    if two_j > DESK_SCALE_LIMIT:
        raise ValueError(f"sampler is desk-scale only (two_j <= {DESK_SCALE_LIMIT})")
    if noise.sigma_n > 0.0 and two_j < 2:
        raise ValueError("number noise requires two_j >= 2")

    sigma_j = noise.sigma_n / math.sqrt(2.0)
    weight = 1.0 / (len(axes) * shots_per_axis)
    records = []
    for a, (theta_a, phi_a) in enumerate(axes):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(entropy=int(seed), spawn_key=(a,)))
        )
        sigma_phi_a = float(noise.azimuth_sigma(phi_a))
        if not noise.has_axis_noise:
            p = _sanitized_probabilities(projection_probabilities(s, theta_a, phi_a))
            djs = (np.rint(rng.normal(0.0, sigma_j, size=shots_per_axis)).astype(int)
                   if sigma_j > 0.0 else np.zeros(shots_per_axis, dtype=int))
            idx = rng.choice(p.size, size=shots_per_axis, p=p)
            for dj, i in zip(djs, idx):
                two_m = 2 * int(i) - two_j
                two_j_n = max(two_j + 2 * dj, abs(two_m))
                records.append(MeasurementRecord(theta_a, phi_a, weight, two_j_n, two_m))
            continue
        for _ in range(shots_per_axis):
            dj = int(np.rint(rng.normal(0.0, sigma_j))) if sigma_j > 0.0 else 0
            th, ph = theta_a, phi_a
            if sigma_phi_a > 0.0:
                ph = ph + rng.normal(0.0, sigma_phi_a)
            if noise.sigma_omega > 0.0:
                n, e1, e2 = _axis_frame(th, ph)
                t1, t2 = rng.normal(0.0, noise.sigma_omega / math.sqrt(2.0), size=2)
                v = n + t1 * e1 + t2 * e2
                v /= np.linalg.norm(v)
                th = math.acos(min(1.0, max(-1.0, v[2])))
                ph = math.atan2(v[1], v[0])
            p = _sanitized_probabilities(projection_probabilities(s, th, ph))
            i = int(rng.choice(p.size, p=p))
            two_m = 2 * i - two_j
            two_j_n = max(two_j + 2 * dj, abs(two_m))
            records.append(MeasurementRecord(theta_a, phi_a, weight, two_j_n, two_m))
    return records


def exact_records(s, axes, axis_weights=None):
    """Infinite-data records: one entry per (axis, outcome) weighted by c_a p_m.

    Replaces the sample sum by its expectation; feeding these to the
    backprojection realizes the infinite-data limit on the given axes.
    """
    if axis_weights is None:
        axis_weights = np.full(len(axes), 1.0 / len(axes))
    axis_weights = np.asarray(axis_weights, dtype=float)
    if axis_weights.shape != (len(axes),):
        raise ValueError("axis_weights must match the number of axes")
    two_j = s.two_j_ref
    records = []
    for (theta_a, phi_a), c in zip(axes, axis_weights):
        p = projection_probabilities(s, theta_a, phi_a)
        if p.min(initial=0.0) < -1e-8:
            raise ValueError("state is unphysical: negative probabilities")
        p = np.clip(p, 0.0, None)
        for i, pm in enumerate(p):
            if pm > 0.0:
                records.append(MeasurementRecord(theta_a, phi_a, float(c * pm),
                                                 two_j, 2 * i - two_j))
    return records
