"""Clamped circular plate under a central point load."""
from __future__ import annotations

import math

import numpy as np

from .. import physics as ph
from ..autodiff import extract_partial
from ..loss import CompositeLoss, Interval, LossTerm, CollocationSet, sample
from ..model import ParameterSet, PlateRadial, init_dense
from ..oracle import FieldGrid, clamped_circular_plate_exact, clamped_circular_plate_slope
from .base import ProblemSpec, apply_weights, check_options, jet_1d

VARIANTS = ("dense", "parametric")

DEFAULTS = dict(
    r_o=1.0,  # m
    thickness=0.03,
    E=20.0e9,  # Pa
    nu=0.25,
    P=1.0e5,  # N
    n_points=100,
    sampling="uniform-grid",
    seed=0,
    hidden=[10] * 10,
    output_scale="auto",
    r_min_fraction=0.01,
    center_radius=1e-6,
    weights={},
    eval_points=101,
)


def build(variant="parametric", **options):
    if variant not in VARIANTS:
        raise ValueError(f"unknown circular_plate variant {variant!r}; choose from {VARIANTS}")
    check_options(options, DEFAULTS, "circular_plate")
    o = {**DEFAULTS, **options}
    mat = ph.MaterialParams(o["E"], o["nu"], thickness=o["thickness"])
    D, P, r_o = mat.D_flex, o["P"], o["r_o"]
    w_scale = P * r_o ** 2 / (16.0 * math.pi * D)

    if variant == "dense":
        scale = w_scale if o["output_scale"] == "auto" else float(o["output_scale"])
        net = init_dense([1, *o["hidden"], 1], o["seed"], input_bounds=[(0.0, r_o)], output_scale=scale)
        params = ParameterSet(w=net)
        r_lo = 0.0
    else:
        net = PlateRadial(q=0.0, D=D)
        params = ParameterSet(w=net)
        r_lo = o["r_min_fraction"] * r_o
    sl = params.slices["w"]

    def w_jet(theta, X, order):
        return net.eval_jet([jet_1d(X, order)], theta[sl])[0]

    def domain(theta, X):
        return ph.circular_plate_ode_residual(w_jet(theta, X, 3), X[:, 0], P, D)

    def deriv(k, times_r=False):
        def res(theta, X):
            v = extract_partial(w_jet(theta, X, max(k, 1)), k)
            return X[:, 0] * v if times_r else v

        return res

    def shear(theta, X):
        # divided by D so the term shares the ODE residual's scale (1/m^2)
        Qr = ph.radial_shear_Qr(w_jet(theta, X, 3), X[:, 0], D)
        return (Qr - P / (2.0 * math.pi * X[:, 0])) / D

    dom = Interval(r_lo, r_o)
    pts = sample(dom, o["sampling"], o["n_points"], o["seed"])
    edge = sample(dom, "uniform-grid", 1, boundary="hi")
    terms = [LossTerm("domain", domain, pts, 1.0, batched=True)]
    if variant == "dense":
        terms += [
            LossTerm("slope_center", deriv(1), sample(dom, "uniform-grid", 1, boundary="lo"), 100.0),
            LossTerm("slope_edge", deriv(1), edge, 100.0),
            LossTerm("deflection_edge", deriv(0), edge, 100.0),
        ]
    else:
        # r = 0 is excluded; the centre condition is imposed as r * w'(r) -> 0 at a tiny radius
        centre = CollocationSet(np.array([[o["center_radius"]]]), "center")
        terms += [
            LossTerm("slope_center", deriv(1, times_r=True), centre, 100.0),
            LossTerm("slope_edge", deriv(1), edge, 100.0),
            LossTerm("deflection_edge", deriv(0), edge, 100.0),
            LossTerm("shear", shear, pts, 100.0),
        ]
    apply_weights(terms, o["weights"])
    loss = CompositeLoss(terms, params)

    def grid(shape):
        return np.linspace(r_lo, r_o, shape[0])

    def predict(theta, shape):
        r = grid(shape)
        w = net.eval_jet([jet_1d(r[:, None], 1)], np.asarray(theta)[sl])[0]
        return FieldGrid({"r": r}, {"w": w.value, "slope": extract_partial(w, 1)}, "m")

    def reference(shape):
        r = grid(shape)
        return FieldGrid(
            {"r": r},
            {"w": clamped_circular_plate_exact(r, P, D, r_o), "slope": clamped_circular_plate_slope(r, P, D, r_o)},
            "m",
        )

    return ProblemSpec(
        name="circular_plate",
        variant=variant,
        params=params,
        loss=loss,
        predict=predict,
        reference=reference,
        eval_shape=(o["eval_points"],),
        constants=dict(r_o=r_o, thickness=mat.thickness, E=mat.E, nu=mat.nu, P=P, D=D, w_scale=w_scale),
        collocation={"domain": {"n": o["n_points"], "interval": [r_lo, r_o], "sampling": o["sampling"], "seed": o["seed"]}},
    )
