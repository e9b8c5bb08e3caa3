"""Differential operators and constitutive maps for Airy and plate problems.

Jets in polar form use variable 0 for ``r`` and variable 1 for ``theta``;
Cartesian jets use ``x`` then ``y``.  Operators that divide by ``r`` take the
radius explicitly and refuse ``r <= R_MIN`` when the radius is concrete.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Jet, extract_partial, jet_derivative, truncate
from .errors import SingularityError

R_MIN = 1e-8


@dataclass(frozen=True)
class MaterialParams:
    E: float
    nu: float
    plane_condition: str = "plane_stress"
    thickness: float | None = None

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError(f"Young's modulus must be positive, got {self.E}")
        if not -1.0 < self.nu < 0.5:
            raise ValueError(f"Poisson's ratio must lie in (-1, 0.5), got {self.nu}")
        if self.plane_condition not in ("plane_stress", "plane_strain"):
            raise ValueError(f"unknown plane condition {self.plane_condition!r}")
        if self.thickness is not None and not self.thickness > 0:
            raise ValueError("thickness must be positive")

    @classmethod
    def from_shear_modulus(cls, G, nu, **kw):
        return cls(E=2.0 * G * (1.0 + nu), nu=nu, **kw)

    @property
    def mu(self):
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def kappa(self):
        if self.plane_condition == "plane_strain":
            return 3.0 - 4.0 * self.nu
        return (3.0 - self.nu) / (1.0 + self.nu)

    @property
    def D_flex(self):
        if self.thickness is None:
            raise ValueError("flexural rigidity needs a plate thickness")
        return self.E * self.thickness ** 3 / (12.0 * (1.0 - self.nu ** 2))


@dataclass(frozen=True)
class PolarStress:
    r: object
    theta: object
    rtheta: object


@dataclass(frozen=True)
class CartesianStress:
    x: object
    y: object
    xy: object


@dataclass(frozen=True)
class PolarStrain:
    r: object
    theta: object
    rtheta: object


@dataclass(frozen=True)
class PlateResultants:
    Mx: object
    My: object
    Mxy: object
    Qx: object
    Qy: object


def _check_radius(r):
    if ad._is_concrete(r) and np.any(np.asarray(r) <= R_MIN):
        raise SingularityError(f"radius at or below r_min={R_MIN}")


def _need_order(jet, order):
    if jet.order < order:
        raise ValueError(f"operator needs a jet of order >= {order}, got {jet.order}")


def biharmonic_cartesian(u):
    _need_order(u, 4)
    return extract_partial(u, (4, 0)) + 2.0 * extract_partial(u, (2, 2)) + extract_partial(u, (0, 4))


def laplacian_cartesian(u):
    _need_order(u, 2)
    return extract_partial(u, (2, 0)) + extract_partial(u, (0, 2))


def polar_laplacian_jet(u, r):
    """``u_rr + u_r / r + u_thth / r^2`` as a jet two orders lower than ``u``."""
    _need_order(u, 2)
    _check_radius(r)
    order = u.order - 2
    u_r = truncate(jet_derivative(u, 0), order)
    u_rr = jet_derivative(jet_derivative(u, 0), 0)
    u_tt = jet_derivative(jet_derivative(u, 1), 1)
    if order == 0:
        return u_rr + u_r * (1.0 / r) + u_tt * (1.0 / (r * r))
    inv_r = ad.power(ad.jet_variable(r, 0, order, 2), -1.0)
    return u_rr + inv_r * u_r + (inv_r * inv_r) * u_tt


def biharmonic_polar(u, r):
    """Polar Laplacian applied twice, including the 1/r and 1/r^2 cross terms."""
    _need_order(u, 4)
    inner = polar_laplacian_jet(truncate(u, 4), r)
    return polar_laplacian_jet(inner, r).value


def biharmonic_axisymmetric(u, r):
    _need_order(u, 4)
    _check_radius(r)
    d1, d2, d3, d4 = (extract_partial(u, k) for k in (1, 2, 3, 4))
    return d4 + 2.0 * d3 / r - d2 / (r * r) + d1 / (r * r * r)


def circular_plate_ode_residual(w, r, P, D):
    """``r^2 w''' + r w'' - w' - P r / (2 pi D)``; regular at r = 0."""
    _need_order(w, 3)
    return (r * r) * extract_partial(w, 3) + r * extract_partial(w, 2) - extract_partial(w, 1) - P * r / (2.0 * math.pi * D)


def radial_shear_Qr(w, r, D):
    _need_order(w, 3)
    _check_radius(r)
    return D * (extract_partial(w, 3) + extract_partial(w, 2) / r - extract_partial(w, 1) / (r * r))


def wedge_ode_residual(f):
    """``f'''' + 4 f''`` (the positive 1/r^2 factor is dropped)."""
    _need_order(f, 4)
    return extract_partial(f, 4) + 4.0 * extract_partial(f, 2)


def stresses_from_airy(phi, r):
    """Polar stresses from an Airy function jet in ``r`` (nvars=1) or ``(r, theta)``."""
    _need_order(phi, 2)
    _check_radius(r)
    if phi.nvars == 1:
        return PolarStress(extract_partial(phi, 1) / r, extract_partial(phi, 2), 0.0 * phi.value)
    p_r = extract_partial(phi, (1, 0))
    p_t = extract_partial(phi, (0, 1))
    p_tt = extract_partial(phi, (0, 2))
    p_rr = extract_partial(phi, (2, 0))
    p_rt = extract_partial(phi, (1, 1))
    return PolarStress(
        p_r / r + p_tt / (r * r),
        p_rr,
        -p_rt / r + p_t / (r * r),
    )


def stresses_from_airy_cartesian(phi):
    _need_order(phi, 2)
    return CartesianStress(
        extract_partial(phi, (0, 2)),
        extract_partial(phi, (2, 0)),
        -extract_partial(phi, (1, 1)),
    )


def strains_from_stresses(s, m, mu=None, kappa=None):
    mu = m.mu if mu is None else mu
    kappa = m.kappa if kappa is None else kappa
    beta = (3.0 - kappa) / 4.0
    tr = s.r + s.theta
    return PolarStrain(
        (s.r - beta * tr) / (2.0 * mu),
        (s.theta - beta * tr) / (2.0 * mu),
        s.rtheta / (2.0 * mu),
    )


def plate_moments_shears(w, material=None, *, D=None, nu=None):
    """Bending/twisting moments and shear forces of a Kirchhoff plate.

    ``D`` and ``nu`` override the material values (used when they are
    being identified).
    """
    _need_order(w, 3)
    if D is None:
        D = material.D_flex
    if nu is None:
        nu = material.nu
    w_xx = extract_partial(w, (2, 0))
    w_yy = extract_partial(w, (0, 2))
    w_xy = extract_partial(w, (1, 1))
    lap_x = extract_partial(w, (3, 0)) + extract_partial(w, (1, 2))
    lap_y = extract_partial(w, (2, 1)) + extract_partial(w, (0, 3))
    return PlateResultants(
        -D * (w_xx + nu * w_yy),
        -D * (w_yy + nu * w_xx),
        D * (1.0 - nu) * w_xy,
        -D * lap_x,
        -D * lap_y,
    )


def stress_polar_to_cartesian(s, theta):
    xp = ad._ns(theta, s.r, s.theta, s.rtheta)
    c, sn = xp.cos(theta), xp.sin(theta)
    cc, ss, sc = c * c, sn * sn, sn * c
    return CartesianStress(
        s.r * cc + s.theta * ss - 2.0 * s.rtheta * sc,
        s.r * ss + s.theta * cc + 2.0 * s.rtheta * sc,
        (s.r - s.theta) * sc + s.rtheta * (cc - ss),
    )


def polar_equilibrium_residuals(phi, r):
    """Residuals of both polar equilibrium equations for the Airy stresses of ``phi``.

    Needs an order >= 3 jet in ``(r, theta)``.
    """
    _need_order(phi, 3)
    _check_radius(r)
    order = phi.order - 2
    inv_r = ad.power(ad.jet_variable(r, 0, order, 2), -1.0)
    p_r = truncate(jet_derivative(phi, 0), order)
    p_t = truncate(jet_derivative(phi, 1), order)
    p_rr = jet_derivative(jet_derivative(phi, 0), 0)
    p_tt = jet_derivative(jet_derivative(phi, 1), 1)
    p_rt = jet_derivative(jet_derivative(phi, 0), 1)
    s_r = inv_r * p_r + inv_r * inv_r * p_tt
    s_t = p_rr
    s_rt = -(inv_r * p_rt) + inv_r * inv_r * p_t
    d = lambda j, v: extract_partial(j, (1, 0) if v == 0 else (0, 1))
    radial = d(s_r, 0) + d(s_rt, 1) / r + (s_r.value - s_t.value) / r
    hoop = d(s_rt, 0) + d(s_t, 1) / r + 2.0 * s_rt.value / r
    return radial, hoop
