"""Thick annulus under internal and external pressure (axisymmetric Airy problem)."""
from __future__ import annotations

import numpy as np

from .. import physics as ph
from ..autodiff import extract_partial
from ..loss import CompositeLoss, Interval, LossTerm, sample
from ..model import AiryLame, ParameterSet, init_dense
from ..oracle import FieldGrid, lame_exact
from .base import ProblemSpec, TraceMemo, apply_weights, check_options, jet_1d

VARIANTS = ("dense", "airy_parametric")

DEFAULTS = dict(
    r_i=1.0,
    r_o=2.0,
    p_i=1.0,  # MPa
    p_o=2.0,
    G=1.0e5,  # MPa (100 GPa)
    nu=0.25,
    plane_condition="plane_stress",
    n_points=2000,
    sampling="uniform-grid",
    seed=0,
    hidden=[20, 20, 20, 20, 20],
    weights={},
    eval_points=200,
)


def build(variant="airy_parametric", **options):
    if variant not in VARIANTS:
        raise ValueError(f"unknown lame variant {variant!r}; choose from {VARIANTS}")
    check_options(options, DEFAULTS, "lame")
    o = {**DEFAULTS, **options}
    mat = ph.MaterialParams.from_shear_modulus(o["G"], o["nu"], plane_condition=o["plane_condition"])
    mu, beta = mat.mu, (3.0 - mat.kappa) / 4.0
    r_i, r_o, p_i, p_o = o["r_i"], o["r_o"], o["p_i"], o["p_o"]

    if variant == "airy_parametric":
        airy = AiryLame(mat)
        params = ParameterSet(airy=airy)
        sl = params.slices["airy"]

        def fields(theta, r):
            return airy.eval_jet([r], theta[sl])
    else:
        seed = o["seed"]
        sizes = [1, *o["hidden"], 1]
        net_phi = init_dense(sizes, seed, input_bounds=[(r_i, r_o)])
        # raw network output O(1) maps to displacements of order p / (2 mu)
        net_u = init_dense(sizes, seed + 1, input_bounds=[(r_i, r_o)], output_scale=1.0 / (2.0 * mu))
        params = ParameterSet(phi=net_phi, u_r=net_u)
        s_phi, s_u = params.slices["phi"], params.slices["u_r"]

        def fields(theta, r):
            return [net_phi.eval_jet([r], theta[s_phi])[0], net_u.eval_jet([r], theta[s_u])[0]]

    # the three domain terms share one order-4 evaluation per trace
    memo = TraceMemo()

    def domain_fields(theta, X):
        return memo.get("fields", theta, X, 4, lambda k: fields(theta, jet_1d(X, k)))

    def domain(theta, X):
        phi, _ = domain_fields(theta, X)
        return ph.biharmonic_axisymmetric(phi, X[:, 0])

    def compatibility(theta, X):
        # hoop strain u_r / r from the displacement versus from the stresses, times 2 mu r
        phi, u = domain_fields(theta, X)
        s = ph.stresses_from_airy(phi, X[:, 0])
        return 2.0 * mu * u.value - X[:, 0] * (s.theta - beta * (s.r + s.theta))

    def compatibility_radial(theta, X):
        # radial strain du_r/dr versus the stresses, times 2 mu
        phi, u = domain_fields(theta, X)
        s = ph.stresses_from_airy(phi, X[:, 0])
        return 2.0 * mu * extract_partial(u, 1) - (s.r - beta * (s.r + s.theta))

    def sigma_r_at(p):
        def res(theta, X):
            r = jet_1d(X, 2)
            phi, _ = fields(theta, r)
            return ph.stresses_from_airy(phi, X[:, 0]).r - p

        return res

    dom = Interval(r_i, r_o)
    pts = sample(dom, o["sampling"], o["n_points"], o["seed"])
    terms = [
        LossTerm("domain", domain, pts, 1.0),
        LossTerm("compatibility", compatibility, pts, 1.0),
        LossTerm("compatibility_radial", compatibility_radial, pts, 1.0),
        LossTerm("boundary_inner", sigma_r_at(p_i), sample(dom, "uniform-grid", 1, boundary="lo"), 100.0),
        LossTerm("boundary_outer", sigma_r_at(p_o), sample(dom, "uniform-grid", 1, boundary="hi"), 100.0),
    ]
    apply_weights(terms, o["weights"])
    loss = CompositeLoss(terms, params)

    def predict(theta, shape):
        r = np.linspace(r_i, r_o, shape[0])
        rj = jet_1d(r[:, None], 2)
        phi, u = fields(np.asarray(theta), rj)
        s = ph.stresses_from_airy(phi, r)
        return FieldGrid({"r": r}, {"sigma_r": s.r, "sigma_theta": s.theta, "u_r": u.value}, "MPa, m")

    def reference(shape):
        r = np.linspace(r_i, r_o, shape[0])
        ex = lame_exact(r, mat, p_i, p_o, r_i, r_o)
        return FieldGrid({"r": r}, {"sigma_r": ex.sigma_r, "sigma_theta": ex.sigma_theta, "u_r": ex.u_r}, "MPa, m")

    constants = dict(
        r_i=r_i, r_o=r_o, p_i=p_i, p_o=p_o, G=o["G"], E=mat.E, nu=mat.nu,
        plane_condition=mat.plane_condition, mu=mu, kappa=mat.kappa,
    )
    return ProblemSpec(
        name="lame",
        variant=variant,
        params=params,
        loss=loss,
        predict=predict,
        reference=reference,
        eval_shape=(o["eval_points"],),
        constants=constants,
        collocation={"domain": {"n": o["n_points"], "sampling": o["sampling"], "seed": o["seed"]}},
        notes=[
            "compatibility: 2*mu*u_r - r*(sigma_theta - (3-kappa)/4*(sigma_r+sigma_theta)), in MPa*m",
            "compatibility_radial: 2*mu*du_r/dr - (sigma_r - (3-kappa)/4*(sigma_r+sigma_theta)), in MPa",
        ],
    )
