"""File formats: measurement CSV, coefficient CSV, spectra, grids, PGM.

All angles are stored in radians, all spins as doubled integers, and all
floats with 17 significant digits so that write -> parse round trips are
lossless.  Writes are atomic (temp file then rename).
"""

import math
import os
import tempfile

import numpy as np

from .forward import MeasurementRecord
from .states import SphericalState

__all__ = [
    "MEASUREMENT_HEADER",
    "parse_measurements",
    "write_measurements",
    "write_coefficients",
    "read_coefficients",
    "write_spectrum",
    "write_grid",
    "write_pgm",
    "parse_config",
]

MEASUREMENT_HEADER = "theta,phi,weight,two_j,two_m"
_MAX_REPORTED_ERRORS = 20


def _fmt(x):
    return format(float(x), ".17g")


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class MeasurementFormatError(ValueError):
    """Raised on malformed measurement files, with per-line diagnostics."""


def parse_measurements(path):
    """Read measurement records from CSV.

    Format: header ``theta,phi,weight,two_j,two_m``; angles in radians;
    weight may be empty (pending); ``#`` starts a comment line.  Every
    row is validated against the record invariants; a malformed file
    raises with line-numbered diagnostics and yields no partial output.
    """
    records = []
    errors = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    saw_header = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not saw_header:
            if line != MEASUREMENT_HEADER:
                raise MeasurementFormatError(
                    f"{path}:{lineno}: expected header {MEASUREMENT_HEADER!r}, got {line!r}")
            saw_header = True
            continue
        parts = line.split(",")
        if len(parts) != 5:
            errors.append(f"line {lineno}: expected 5 fields, got {len(parts)}")
            continue
        try:
            theta = float(parts[0])
            phi = float(parts[1])
            weight = math.nan if parts[2].strip() == "" else float(parts[2])
            two_j = int(parts[3])
            two_m = int(parts[4])
            records.append(MeasurementRecord(theta, phi, weight, two_j, two_m))
        except ValueError as exc:
            errors.append(f"line {lineno}: {exc}")
        if len(errors) >= _MAX_REPORTED_ERRORS:
            break
    if not saw_header:
        raise MeasurementFormatError(f"{path}: no header line found")
    if errors:
        raise MeasurementFormatError(f"{path}: " + "; ".join(errors))
    if not records:
        raise MeasurementFormatError(f"{path}: no measurement rows")
    return records


def write_measurements(path, records):
    """Write records as canonical measurement CSV (17 significant digits)."""
    lines = [MEASUREMENT_HEADER]
    for r in records:
        w = "" if math.isnan(r.weight) else _fmt(r.weight)
        lines.append(f"{_fmt(r.theta)},{_fmt(r.phi)},{w},{r.two_j},{r.two_m}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_coefficients(path, state):
    """Write a partial-wave state as CSV ``k,q,re,im``.

    Only q >= 0 rows are stored; the q < 0 half is implied by the
    reality invariant and restored on read.
    """
    lines = [
        f"# two_j_ref = {state.two_j_ref}",
        f"# kmax = {state.kmax}",
        "k,q,re,im",
    ]
    for k in range(state.kmax + 1):
        for q in range(k + 1):
            c = state.coeff(k, q)
            lines.append(f"{k},{q},{_fmt(c.real)},{_fmt(c.imag)}")
    _atomic_write(path, "\n".join(lines) + "\n")


def read_coefficients(path):
    """Read a coefficient CSV back into a SphericalState."""
    two_j_ref = None
    kmax = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh.read().splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    key = key.strip()
                    if key == "two_j_ref":
                        two_j_ref = int(value)
                    elif key == "kmax":
                        kmax = int(value)
                continue
            if line == "k,q,re,im":
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields")
            rows.append((int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])))
    if two_j_ref is None or kmax is None:
        raise ValueError(f"{path}: missing two_j_ref / kmax header comments")
    coeffs = np.zeros((kmax + 1, 2 * kmax + 1), dtype=complex)
    for k, q, re, im in rows:
        if not (0 <= k <= kmax and 0 <= q <= k):
            raise ValueError(f"{path}: coefficient ({k}, {q}) out of range")
        coeffs[k, kmax + q] = re + 1j * im
        if q > 0:
            coeffs[k, kmax - q] = (-1) ** q * (re - 1j * im)
    return SphericalState(two_j_ref, kmax, coeffs)


def write_spectrum(path, c_k):
    """Write an angular power spectrum as CSV ``k,C_k``."""
    lines = ["k,C_k"]
    for k, v in enumerate(np.asarray(c_k, dtype=float)):
        lines.append(f"{k},{_fmt(v)}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_grid(path, grid):
    """Write a Wigner grid as CSV ``theta,phi,W`` (row-major over nodes)."""
    lines = ["theta,phi,W"]
    for i, th in enumerate(grid.theta):
        for l, ph in enumerate(grid.phi):
            lines.append(f"{_fmt(th)},{_fmt(ph)},{_fmt(grid.values[i, l])}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_pgm(path, grid):
    """Render a Wigner grid as plain-text PGM (P2), 16-bit gray.

    Values are mapped affinely from [min W, max W] to 0..65535; the exact
    extrema are recorded in a comment so the map is invertible.
    """
    lo = float(grid.values.min())
    hi = float(grid.values.max())
    if hi > lo:
        pixels = np.rint((grid.values - lo) / (hi - lo) * 65535.0).astype(int)
    else:
        pixels = np.zeros_like(grid.values, dtype=int)
    lines = [
        "P2",
        f"# wmin={_fmt(lo)} wmax={_fmt(hi)}",
        f"{grid.phi.size} {grid.theta.size}",
        "65535",
    ]
    for row in pixels:
        lines.append(" ".join(str(int(v)) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def parse_config(path):
    """Parse a ``key = value`` config file into a string dict.

    Blank lines and ``#`` comments are ignored; values keep their raw
    string form (the CLI performs typed validation, flags win over file
    values).
    """
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh.read().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out
