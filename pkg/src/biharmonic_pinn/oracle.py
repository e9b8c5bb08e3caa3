"""Closed-form reference solutions, field grids and error norms.

Sign conventions follow the problem definitions: the applied pressures enter
as positive stresses (sigma_r = +p on the annulus faces, sigma_y = +q under a
footing).  For the half-space, the body occupies ``y <= 0`` and the loaded
surface is ``y = 0``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularityError
from .model import NAVIER_MODES


@dataclass
class FieldGrid:
    """Named fields sampled on a shared set of coordinates.

    ``coords`` maps coordinate names (``"x"`` or ``"r"``, optionally ``"y"``)
    to arrays of the grid shape; ``fields`` maps field names to arrays of the
    same shape.
    """

    coords: dict
    fields: dict = field(default_factory=dict)
    units: str = ""

    def __post_init__(self):
        self.coords = {k: np.asarray(v, dtype=np.float64) for k, v in self.coords.items()}
        self.fields = {k: np.asarray(v, dtype=np.float64) for k, v in self.fields.items()}
        shape = self.shape
        for name, arr in list(self.coords.items()) + list(self.fields.items()):
            if arr.shape != shape:
                raise ValueError(f"array {name!r} has shape {arr.shape}, grid shape is {shape}")

    @property
    def shape(self):
        return next(iter(self.coords.values())).shape

    def to_csv(self, path=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        names = list(self.coords) + list(self.fields)
        writer.writerow(names)
        cols = [a.ravel() for a in self.coords.values()] + [a.ravel() for a in self.fields.values()]
        for row in zip(*cols):
            writer.writerow([f"{v:.17g}" for v in row])
        text = buf.getvalue()
        if path is not None:
            from .io import atomic_write_text

            atomic_write_text(path, text)
        return text

    @classmethod
    def from_csv(cls, path, coord_names=("x", "y", "r", "theta"), shape=None):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, data = rows[0], np.array(rows[1:], dtype=np.float64)
        coords, fields = {}, {}
        for k, name in enumerate(header):
            col = data[:, k] if shape is None else data[:, k].reshape(shape)
            (coords if name in coord_names else fields)[name] = col
        return cls(coords, fields)


def error_norms(predicted, reference, name=None):
    """``(L_inf, relative L2, pointwise |diff|)`` for one field of two grids."""
    if name is None:
        common = [k for k in predicted.fields if k in reference.fields]
        if len(common) != 1:
            raise ValueError(f"name a field; grids share {common}")
        name = common[0]
    p = predicted.fields[name] if isinstance(predicted, FieldGrid) else np.asarray(predicted)
    r = reference.fields[name] if isinstance(reference, FieldGrid) else np.asarray(reference)
    if p.shape != r.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {r.shape}")
    diff = np.abs(p - r)
    ref_norm = np.linalg.norm(r.ravel())
    l2 = np.linalg.norm(diff.ravel()) / ref_norm if ref_norm > 0 else np.linalg.norm(diff.ravel())
    return float(diff.max()), float(l2), diff


def error_report(predicted, reference):
    out = {}
    for name in predicted.fields:
        if name in reference.fields:
            linf, l2, _ = error_norms(predicted, reference, name)
            out[name] = {"linf": linf, "l2_relative": l2}
    return out


# --- Lame annulus ---------------------------------------------------------

@dataclass(frozen=True)
class LameSolution:
    sigma_r: np.ndarray
    sigma_theta: np.ndarray
    u_r: np.ndarray


def lame_constants(p_i, p_o, r_i, r_o):
    """``(A, B)`` with ``sigma_r = A + B / r^2`` meeting both face pressures."""
    B = (p_i - p_o) / (1.0 / r_i ** 2 - 1.0 / r_o ** 2)
    A = p_i - B / r_i ** 2
    return A, B


def lame_exact(r, material, p_i=1.0, p_o=2.0, r_i=1.0, r_o=2.0):
    r = np.asarray(r, dtype=np.float64)
    tol = 1e-12 * r_o
    if np.any(r < r_i - tol) or np.any(r > r_o + tol):
        raise DomainError(f"radius outside the annulus [{r_i}, {r_o}]")
    A, B = lame_constants(p_i, p_o, r_i, r_o)
    s_r = A + B / r ** 2
    s_t = A - B / r ** 2
    beta = (3.0 - material.kappa) / 4.0
    u_r = r / (2.0 * material.mu) * (s_t - beta * (s_r + s_t))
    return LameSolution(s_r, s_t, u_r)


# --- half-space under strip load ------------------------------------------

def semi_infinite_load_exact(x, y, q):
    """Stresses for pressure ``q`` on the surface segment ``x < 0``.

    Closed-form integral of the point-load kernel; ``y < 0`` inside the body.
    Returns ``(sigma_x, sigma_y, tau_xy)``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(y > 0):
        raise DomainError("point outside the half-space y <= 0")
    if np.any(y == 0):
        raise SingularityError("stresses are evaluated strictly inside the half-space")
    d = -y
    ang = np.arctan(x / d)
    k = x * d / (x * x + d * d)
    s_x = q / math.pi * (0.5 * math.pi - ang + k)
    s_y = q / math.pi * (0.5 * math.pi - ang - k)
    t_xy = -q / math.pi * d * d / (x * x + d * d)
    return s_x, s_y, t_xy


def strip_load_exact(x, y, q, strip=(-1.0, 1.0)):
    """Pressure ``q`` on ``strip = (x1, x2)``: two shifted semi-infinite loads of opposite sign."""
    x1, x2 = strip
    if not x1 < x2:
        raise ValueError("strip must satisfy x1 < x2")
    a = semi_infinite_load_exact(np.asarray(x) - x2, y, q)
    b = semi_infinite_load_exact(np.asarray(x) - x1, y, q)
    return tuple(u - v for u, v in zip(a, b))


def wedge_exact_f(theta):
    """``f(theta)`` of ``phi = q r^2 f`` for a half-plane loaded on ``theta = pi``."""
    theta = np.asarray(theta, dtype=np.float64)
    return (2.0 * theta - np.sin(2.0 * theta)) / (4.0 * math.pi)


def flamant_kernel(t, d):
    """Point-load stresses ``(sigma_x, sigma_y, tau_xy)`` per unit load at horizontal offset ``t``, depth ``d``."""
    den = math.pi * (t * t + d * d) ** 2
    return 2.0 * t * t * d / den, 2.0 * d ** 3 / den, -2.0 * t * d * d / den


# --- plates ---------------------------------------------------------------

def clamped_circular_plate_exact(r, P, D, r_o=1.0):
    """Deflection of a clamped disk under a central point load."""
    r = np.asarray(r, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2log = np.where(r > 0, r * r * np.log(np.where(r > 0, r, 1.0) / r_o), 0.0)
    return P / (16.0 * math.pi * D) * (r_o ** 2 - r * r) + P / (8.0 * math.pi * D) * r2log


def clamped_circular_plate_slope(r, P, D, r_o=1.0):
    r = np.asarray(r, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        rlog = np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0) / r_o), 0.0)
    return P / (4.0 * math.pi * D) * rlog


def circular_plate_coefficients(P, D, r_o=1.0):
    """Exact ``(a1, a2, a3, a4)`` of the radial plate family for the clamped point-load case."""
    a1 = P / (2.0 * math.pi * D)
    # (a1/4) r^2 ln(r/r_o) = (a1/4) r^2 ln r - (a1/4) ln(r_o) r^2
    a2 = P / (4.0 * math.pi * D) - a1 * math.log(r_o)
    a4 = P * r_o ** 2 / (16.0 * math.pi * D)
    return np.array([a1, a2, 0.0, a4])


@dataclass(frozen=True)
class NavierFields:
    w: np.ndarray
    Mx: np.ndarray
    My: np.ndarray
    Mxy: np.ndarray
    Qx: np.ndarray
    Qy: np.ndarray

    def as_dict(self):
        return {k: getattr(self, k) for k in ("w", "Mx", "My", "Mxy", "Qx", "Qy")}


def navier_rectangular_exact(x, y, q0, a, b, D, nu):
    """Simply supported plate under ``q0 sin(pi x/a) sin(pi y/b)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    K = 1.0 / a ** 2 + 1.0 / b ** 2
    sx, cx = np.sin(math.pi * x / a), np.cos(math.pi * x / a)
    sy, cy = np.sin(math.pi * y / b), np.cos(math.pi * y / b)
    m0 = q0 / (math.pi ** 2 * K ** 2)
    return NavierFields(
        w=q0 / (math.pi ** 4 * D * K ** 2) * sx * sy,
        Mx=m0 * (1.0 / a ** 2 + nu / b ** 2) * sx * sy,
        My=m0 * (nu / a ** 2 + 1.0 / b ** 2) * sx * sy,
        Mxy=m0 * (1.0 - nu) / (a * b) * cx * cy,
        Qx=q0 / (math.pi * a * K) * cx * sy,
        Qy=q0 / (math.pi * b * K) * sx * cy,
    )


def sinusoidal_load(x, y, q0, a, b):
    return q0 * np.sin(math.pi * np.asarray(x) / a) * np.sin(math.pi * np.asarray(y) / b)


def navier_coefficient(m, n, q0, a, b, D):
    """Coefficient of ``sin(m pi x/a) sin(n pi y/b)`` in the uniform-load series (odd m, n)."""
    return 16.0 * q0 / (math.pi ** 6 * D * m * n * (m * m / a ** 2 + n * n / b ** 2) ** 2)


def navier_coefficients(q0, a, b, D, modes=NAVIER_MODES):
    return np.array([navier_coefficient(m, n, q0, a, b, D) for m, n in modes])


def navier_uniform_series(x, y, k_max, q0, a, b, D):
    """Uniformly loaded simply supported plate, double sine sum over odd m, n <= k_max."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.zeros(np.broadcast(x, y).shape)
    for m in range(1, k_max + 1, 2):
        sx = np.sin(m * math.pi * x / a)
        for n in range(1, k_max + 1, 2):
            w = w + navier_coefficient(m, n, q0, a, b, D) * sx * np.sin(n * math.pi * y / b)
    return w
