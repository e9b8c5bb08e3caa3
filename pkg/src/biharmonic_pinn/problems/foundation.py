"""Elastic half-space under a uniform strip footing.

Training uses a semi-infinite load in polar coordinates: the body is the
wedge ``theta in [0, pi]`` (``y' = r sin(theta) >= 0``) and the pressure ``q``
acts on the ray ``theta = pi``.  The finite strip field is assembled by
superposing two shifted semi-infinite solutions with opposite signs and
reflecting to the output frame where the body occupies ``y <= 0``.
"""
from __future__ import annotations

import math

import numpy as np

from .. import autodiff as ad
from .. import physics as ph
from ..loss import CompositeLoss, Interval, LossTerm, Wedge, sample
from ..model import DenseNetwork, ParameterSet, WedgeAiry, init_dense
from ..oracle import FieldGrid, strip_load_exact
from .base import ProblemSpec, apply_weights, check_options, jets_2d

VARIANTS = ("wedge_airy", "conjugate", "solo")

DEFAULTS = dict(
    q=1.0,  # kPa
    r_o=5.0,  # m
    r_min_fraction=0.01,
    theta_min=0.0,
    theta_max=math.pi,
    strip=[-1.0, 1.0],
    grid=[100, 100],
    n_theta=100,
    n_boundary=100,
    seed=0,
    hidden=[20] * 6,
    f_hidden=[10] * 4,
    f_model="network",
    weights={},
    eval_x=[-3.0, 3.0],
    eval_y=[-3.0, -0.1],
    eval_shape=[61, 30],
)


def _semi_infinite(stress_fn, x, y, theta):
    """Cartesian stresses (output frame) of one semi-infinite load ending at x = 0."""
    yp = -y
    r = np.hypot(x, yp)
    th = np.arctan2(yp, x)
    s = stress_fn(theta, r.ravel(), th.ravel())
    c = ph.stress_polar_to_cartesian(s, th.ravel())
    # reflection y -> -y keeps the normal stresses and flips the shear
    return c.x.reshape(x.shape), c.y.reshape(x.shape), -c.xy.reshape(x.shape)


def build(variant="wedge_airy", **options):
    if variant not in VARIANTS:
        raise ValueError(f"unknown foundation variant {variant!r}; choose from {VARIANTS}")
    check_options(options, DEFAULTS, "foundation")
    o = {**DEFAULTS, **options}
    q, r_o = float(o["q"]), float(o["r_o"])
    r_min = o["r_min_fraction"] * r_o
    t0, t1 = float(o["theta_min"]), float(o["theta_max"])
    seed = o["seed"]
    bounds = [(r_min, r_o), (t0, t1)]

    if variant == "wedge_airy":
        if o["f_model"] == "network":
            inner = init_dense([1, *o["f_hidden"], 1], seed, input_bounds=[(t0, t1)])
        elif o["f_model"] == "fourier":
            inner = None
        else:
            raise ValueError(f"unknown f_model {o['f_model']!r}")
        wedge = WedgeAiry(q, inner)
        params = ParameterSet(phi=wedge)
        s_phi = params.slices["phi"]

        def phi_jet(theta, r, th):
            return wedge.eval_jet([r, th], theta[s_phi])[0]
    else:
        sizes = [2, *o["hidden"], 1]
        net_phi = init_dense(sizes, seed, input_bounds=bounds, output_scale=q * r_o ** 2 / 4.0)
        comps = {"phi": net_phi}
        if variant == "conjugate":
            comps["psi"] = init_dense(sizes, seed + 1, input_bounds=bounds, output_scale=q)
        params = ParameterSet(**comps)
        s_phi = params.slices["phi"]

        def phi_jet(theta, r, th):
            return net_phi.eval_jet([r, th], theta[s_phi])[0]

    def stresses(theta, X):
        r, th = jets_2d(X, 2)
        return ph.stresses_from_airy(phi_jet(theta, r, th), X[:, 0])

    def sigma_theta_minus(value):
        return lambda theta, X: stresses(theta, X).theta - value

    def sigma_rtheta(theta, X):
        return stresses(theta, X).rtheta

    wedge_dom = Wedge(r_min, r_o, t0, t1)
    terms = []
    if variant == "wedge_airy":
        th_pts = sample(Interval(t0, t1), "uniform-grid", o["n_theta"], seed)

        def domain(theta, X):
            f = wedge.f_jet(ad.jet_variable(X[:, 0], 0, 4, 1), theta[s_phi])
            return ph.wedge_ode_residual(f)

        terms.append(LossTerm("domain", domain, th_pts, 1.0))
        colloc = {"domain": {"theta_points": o["n_theta"], "sampling": "uniform-grid"}}
    else:
        pts = sample(wedge_dom, "uniform-grid", tuple(o["grid"]), seed)
        colloc = {"domain": {"grid": list(o["grid"]), "sampling": "uniform-grid"}}
        if variant == "solo":

            def domain(theta, X):
                r, th = jets_2d(X, 4)
                return X[:, 0] ** 4 * ph.biharmonic_polar(phi_jet(theta, r, th), X[:, 0])

            terms.append(LossTerm("domain", domain, pts, 1.0))
        else:
            net_psi = params["psi"]
            s_psi = params.slices["psi"]

            # both Laplacian residuals are multiplied by r^2 to remove the 1/r^2 scaling
            def harmonic(theta, X):
                r, th = jets_2d(X, 2)
                psi = net_psi.eval_jet([r, th], theta[s_psi])[0]
                return X[:, 0] ** 2 * ph.polar_laplacian_jet(psi, X[:, 0]).value

            def coupling(theta, X):
                r, th = jets_2d(X, 2)
                psi = net_psi.eval_jet([r, th], theta[s_psi])[0]
                lap = ph.polar_laplacian_jet(phi_jet(theta, r, th), X[:, 0]).value
                return X[:, 0] ** 2 * (psi.value - lap)

            terms += [LossTerm("domain_psi", harmonic, pts, 1.0), LossTerm("domain_phi", coupling, pts, 1.0)]

    n_b = o["n_boundary"]
    ray_max = sample(wedge_dom, "uniform-grid", (n_b, 1), seed, boundary="theta_max")
    ray_min = sample(wedge_dom, "uniform-grid", (n_b, 1), seed, boundary="theta_min")
    terms += [
        LossTerm("loaded_normal", sigma_theta_minus(q), ray_max, 100.0),
        LossTerm("free_normal", sigma_theta_minus(0.0), ray_min, 100.0),
        LossTerm("loaded_shear", sigma_rtheta, ray_max, 100.0),
        LossTerm("free_shear", sigma_rtheta, ray_min, 100.0),
    ]
    apply_weights(terms, o["weights"])
    loss = CompositeLoss(terms, params)

    x1, x2 = o["strip"]

    def polar_stress(theta, r, th):
        return stresses(theta, np.column_stack([r, th]))

    def grid(shape):
        xs = np.linspace(*o["eval_x"], shape[0])
        ys = np.linspace(*o["eval_y"], shape[1])
        return np.meshgrid(xs, ys, indexing="ij")

    def predict(theta, shape):
        X, Y = grid(shape)
        theta = np.asarray(theta)
        a = _semi_infinite(polar_stress, X - x2, Y, theta)
        b = _semi_infinite(polar_stress, X - x1, Y, theta)
        names = ("sigma_x", "sigma_y", "tau_xy")
        return FieldGrid({"x": X, "y": Y}, {n: u - v for n, u, v in zip(names, a, b)}, "kPa, m")

    def reference(shape):
        X, Y = grid(shape)
        sx, sy, txy = strip_load_exact(X, Y, q, (x1, x2))
        return FieldGrid({"x": X, "y": Y}, {"sigma_x": sx, "sigma_y": sy, "tau_xy": txy}, "kPa, m")

    return ProblemSpec(
        name="foundation",
        variant=variant,
        params=params,
        loss=loss,
        predict=predict,
        reference=reference,
        eval_shape=tuple(o["eval_shape"]),
        constants=dict(q=q, r_o=r_o, r_min=r_min, theta_min=t0, theta_max=t1, strip=[x1, x2]),
        collocation=colloc,
        notes=[
            "training frame: body y' = r sin(theta) >= 0, load on theta_max; output frame: body y <= 0",
            "solo and conjugate domain residuals are multiplied by r^4 and r^2 respectively",
        ],
    )
