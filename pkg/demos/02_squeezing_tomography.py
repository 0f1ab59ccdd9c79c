#!/usr/bin/env python3
"""Detect spin squeezing from tomographic data alone.

A one-axis-twisted j = 20 state (squeezed well below the j/2 projection
noise of a coherent state) is sampled along equatorial axes, reconstructed
in-plane, and scanned for the minimum-variance azimuth.  The scan reports
the squeezing in dB both from a Gaussian fit to the projection
distributions and from direct second moments, and writes the full
variance-vs-azimuth curve.
"""

import math
import os

import numpy as np

import spintomo as st

OUT = "demo_output"
os.makedirs(OUT, exist_ok=True)

two_j, chi = 40, 0.05
truth = st.oat_squeezed_state(two_j, chi, two_j)
d = st.spherical_to_dicke(truth)
print(f"input: one-axis-twisted state, j = {two_j / 2:.0f}, chi = {chi}")

# what an ideal analysis of the exact state would find
phis = np.linspace(-math.pi / 2.0, math.pi / 2.0, 721)
true_v = []
for phi in phis:
    m1, m2 = st.moments(truth, math.pi / 2.0, phi)
    true_v.append(m2 - m1 ** 2)
true_v = np.array(true_v)
phi_true = phis[int(np.argmin(true_v))]
print(f"exact state: min variance {true_v.min():.3f} at phi = "
      f"{math.degrees(phi_true):.1f} deg "
      f"({10 * math.log10(true_v.min() / (two_j / 4)):+.2f} dB)")

# the tomographic route
axes = [(math.pi / 2.0, a * math.pi / 24.0) for a in range(24)]
records = st.sample_measurements(truth, axes, shots_per_axis=400,
                                 noise=st.NoiseModel(), seed=42)
config = st.ReconstructionConfig(kmax=23, mode="in-plane", fold_north=True,
                                 two_j_ref=two_j)
state = st.reconstruct(records, config)
report = st.squeezing_scan(state, phis, sigma_n=0.0, j_mean=two_j / 2.0)
print(f"tomography:  {report.squeezing_db:+.2f} dB at phi_s = "
      f"{math.degrees(report.phi_s):.1f} deg "
      f"(Gaussian-fit variance {report.v_min_fit:.3f}, V_coh = {report.v_coh})")

with open(f"{OUT}/squeezing_curve.csv", "w") as fh:
    fh.write("phi,v_true,v_direct,v_fit\n")
    for (phi, v_d, v_f), v_t in zip(report.variance_curve, true_v):
        fh.write(f"{phi:.6f},{v_t:.9g},{v_d:.9g},{v_f:.9g}\n")
print(f"wrote {OUT}/squeezing_curve.csv "
      "(true, direct-moment and Gaussian-fit variances per azimuth)")
