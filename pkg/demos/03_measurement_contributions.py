#!/usr/bin/env python3
"""Shapes of single-measurement contributions to the Wigner function.

Each Stern-Gerlach outcome (j, m) adds a ring-shaped contribution that
depends only on the angle between the quantization axis and the point on
the sphere.  Outcomes with |m| close to j carry coarse, coherent-state-
sized features, while m near 0 carries the fine structure; this is why
in-plane (perpendicular) measurements resolve a squeezed state so well.
"""

import os

import numpy as np

from spintomo import xi_contribution

OUT = "demo_output"
os.makedirs(OUT, exist_ok=True)

two_j = 40  # j = 20
x = np.linspace(-1.0, 1.0, 2001)
columns = {}
for two_m in (40, 32, 20, 8, 0):
    xi = xi_contribution(two_j, two_m, x, kmax=two_j)
    columns[two_m] = xi
    crossings = np.count_nonzero(np.diff(np.sign(xi)))
    print(f"m = {two_m / 2:5.1f}: peak {xi.max():8.2f}, "
          f"{crossings:3d} sign changes across the sphere")

peak = columns[32].max()
print(f"\nthe (j=20, m=16) contribution peaks at {peak:.1f}")

with open(f"{OUT}/xi_contributions.csv", "w") as fh:
    fh.write("cos_eta," + ",".join(f"m_{tm / 2:g}" for tm in columns) + "\n")
    for i, xv in enumerate(x):
        fh.write(f"{xv:.6f}," + ",".join(f"{columns[tm][i]:.9g}" for tm in columns) + "\n")
print(f"wrote {OUT}/xi_contributions.csv")
