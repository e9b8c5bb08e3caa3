"""Simply supported rectangular plate: data-driven solve, (nu, D) identification, Navier coefficient fit."""
from __future__ import annotations

import math

import jax.numpy as jnp
import numpy as np

from .. import physics as ph
from ..autodiff import extract_partial
from ..loss import CollocationSet, CompositeLoss, LossTerm, Rectangle, data_fit_term, sample
from ..model import NAVIER_MODES, IdentifiableConstants, NavierSine, ParameterSet, init_dense
from ..oracle import FieldGrid, navier_coefficients, navier_rectangular_exact, navier_uniform_series
from .base import ProblemSpec, TraceMemo, apply_weights, check_options, jets_2d

MODES = ("solve", "identify", "navier_parametric")
FIELDS = ("w", "Mx", "My", "Mxy", "Qx", "Qy")

DEFAULTS = dict(
    a=200.0,  # cm
    b=300.0,
    thickness=1.0,
    q0=0.01,  # kgf/cm^2
    E=2.06e6,  # kgf/cm^2
    nu=0.25,
    grid=[30, 30],
    navier_grid=[60, 60],
    seed=0,
    hidden=[20] * 5,
    nu_init=0.3,
    D_init=1.0e5,
    weights={},
    eval_shape=[31, 31],
    series_terms=49,
)


def build(mode="solve", **options):
    if mode not in MODES:
        raise ValueError(f"unknown rectangular_plate mode {mode!r}; choose from {MODES}")
    check_options(options, DEFAULTS, "rectangular_plate")
    o = {**DEFAULTS, **options}
    a, b, q0 = float(o["a"]), float(o["b"]), float(o["q0"])
    mat = ph.MaterialParams(o["E"], o["nu"], thickness=o["thickness"])
    D_true, nu_true = mat.D_flex, mat.nu
    rect = Rectangle(0.0, a, 0.0, b)
    if mode == "navier_parametric":
        return _navier(o, a, b, q0, D_true, nu_true, rect)

    pts = sample(rect, "uniform-grid", tuple(o["grid"]), o["seed"])
    X, Y = pts.points[:, 0], pts.points[:, 1]
    exact = navier_rectangular_exact(X, Y, q0, a, b, D_true, nu_true).as_dict()
    scales = {k: float(np.max(np.abs(v))) for k, v in exact.items()}

    nets = {
        k: init_dense([2, *o["hidden"], 1], o["seed"] + i, input_bounds=[(0.0, a), (0.0, b)], output_scale=scales[k])
        for i, k in enumerate(FIELDS)
    }
    comps = dict(nets)
    if mode == "identify":
        comps["constants"] = IdentifiableConstants({"nu": o["nu_init"], "D": o["D_init"]}, {"D": "log"})
    params = ParameterSet(**comps)

    def consts(theta):
        if mode == "identify":
            c = params["constants"].decode(theta[params.slices["constants"]])
            return c["D"], c["nu"]
        return D_true, nu_true

    # pde and consistency terms share the w pass (order 4, requested first by pde)
    memo = TraceMemo()

    def net_jet(name, theta, X, order):
        def compute(k):
            x, y = jets_2d(X, k)
            return nets[name].eval_jet([x, y], theta[params.slices[name]])[0]

        return memo.get(name, theta, X, order, compute)

    def field_fn(name):
        return lambda theta, P: net_jet(name, theta, P, 1).value

    def load(P):
        return q0 * jnp.sin(math.pi * P[:, 0] / a) * jnp.sin(math.pi * P[:, 1] / b)

    def pde(theta, P):
        D, _ = consts(theta)
        return D * ph.biharmonic_cartesian(net_jet("w", theta, P, 4)) - load(P)

    def consistency(which):
        def res(theta, P):
            D, nu = consts(theta)
            w = net_jet("w", theta, P, 2)
            w_xx, w_yy = extract_partial(w, (2, 0)), extract_partial(w, (0, 2))
            M = net_jet(which, theta, P, 1).value
            if which == "Mx":
                return M + D * (w_xx + nu * w_yy)
            if which == "My":
                return M + D * (w_yy + nu * w_xx)
            return M - D * (1.0 - nu) * extract_partial(w, (1, 1))

        return res

    # weights 1/scale^2 make every term dimensionless and O(1) at initialisation
    terms = [data_fit_term(f"data_{k}", field_fn(k), pts, exact[k], 1.0 / scales[k] ** 2) for k in FIELDS]
    terms.append(LossTerm("pde", pde, pts, 1.0 / q0 ** 2, batched=True))
    for k in ("Mx", "My", "Mxy"):
        terms.append(LossTerm(f"consistency_{k}", consistency(k), pts, 1.0 / scales[k] ** 2, batched=True))
    apply_weights(terms, o["weights"])
    loss = CompositeLoss(terms, params)

    def grid(shape):
        return np.meshgrid(np.linspace(0, a, shape[0]), np.linspace(0, b, shape[1]), indexing="ij")

    def predict(theta, shape):
        Xg, Yg = grid(shape)
        P = np.column_stack([Xg.ravel(), Yg.ravel()])
        theta = np.asarray(theta)
        out = {k: field_fn(k)(theta, P).reshape(Xg.shape) for k in FIELDS}
        return FieldGrid({"x": Xg, "y": Yg}, out, "kgf, cm")

    def reference(shape):
        Xg, Yg = grid(shape)
        return FieldGrid({"x": Xg, "y": Yg}, navier_rectangular_exact(Xg, Yg, q0, a, b, D_true, nu_true).as_dict(), "kgf, cm")

    identified = None
    if mode == "identify":

        def identified(theta):
            D, nu = consts(np.asarray(theta))
            return {"nu": float(nu), "D": float(D), "nu_true": nu_true, "D_true": D_true}

    return ProblemSpec(
        name="rectangular_plate",
        variant=mode,
        params=params,
        loss=loss,
        predict=predict,
        reference=reference,
        eval_shape=tuple(o["eval_shape"]),
        constants=dict(a=a, b=b, thickness=mat.thickness, q0=q0, E=mat.E, nu=nu_true, D=D_true, field_scales=scales),
        collocation={"domain": {"grid": list(o["grid"]), "sampling": "uniform-grid"}},
        identified=identified,
    )


def _navier(o, a, b, q0, D, nu, rect):
    model = NavierSine(a, b, NAVIER_MODES)
    params = ParameterSet(w=model)
    sl = params.slices["w"]

    def w_jet(theta, P, order):
        x, y = jets_2d(P, order)
        return model.eval_jet([x, y], theta[sl])[0]

    def pde(theta, P):
        # D * biharmonic(w) - q0, in load units
        return D * ph.biharmonic_cartesian(w_jet(theta, P, 4)) - q0

    def deflection(theta, P):
        return w_jet(theta, P, 1).value

    def moment(axis):
        def res(theta, P):
            r = ph.plate_moments_shears(w_jet(theta, P, 3), D=D, nu=nu)
            return (r.Mx if axis == "x" else r.My) / D

        return res

    pts = sample(rect, "uniform-grid", tuple(o["navier_grid"]), o["seed"])
    n_e = o["navier_grid"][0]
    edges_x = [sample(rect, "uniform-grid", (n_e, n_e), boundary=e) for e in ("x0", "x1")]
    edges_y = [sample(rect, "uniform-grid", (n_e, n_e), boundary=e) for e in ("y0", "y1")]
    ex = CollocationSet(np.vstack([e.points for e in edges_x]), "edges_x")
    ey = CollocationSet(np.vstack([e.points for e in edges_y]), "edges_y")
    allb = CollocationSet(np.vstack([ex.points, ey.points]), "edges")
    terms = [
        LossTerm("pde", pde, pts, 1.0 / q0 ** 2),
        LossTerm("edge_deflection", deflection, allb, 100.0),
        LossTerm("edge_moment_x", moment("x"), ex, 100.0),
        LossTerm("edge_moment_y", moment("y"), ey, 100.0),
    ]
    apply_weights(terms, o["weights"])
    loss = CompositeLoss(terms, params)
    analytical = navier_coefficients(q0, a, b, D, NAVIER_MODES)

    def grid(shape):
        return np.meshgrid(np.linspace(0, a, shape[0]), np.linspace(0, b, shape[1]), indexing="ij")

    def predict(theta, shape):
        Xg, Yg = grid(shape)
        P = np.column_stack([Xg.ravel(), Yg.ravel()])
        w = w_jet(np.asarray(theta), P, 1).value.reshape(Xg.shape)
        return FieldGrid({"x": Xg, "y": Yg}, {"w": w}, "kgf, cm")

    def reference(shape):
        Xg, Yg = grid(shape)
        return FieldGrid({"x": Xg, "y": Yg}, {"w": navier_uniform_series(Xg, Yg, o["series_terms"], q0, a, b, D)}, "kgf, cm")

    def identified(theta):
        theta = np.asarray(theta)[sl]
        return {
            "modes": [list(m) for m in NAVIER_MODES],
            "coefficients": theta.tolist(),
            "analytical": analytical.tolist(),
            "ratios": (theta / theta[0]).tolist(),
            "analytical_ratios": (analytical / analytical[0]).tolist(),
        }

    return ProblemSpec(
        name="rectangular_plate",
        variant="navier_parametric",
        params=params,
        loss=loss,
        predict=predict,
        reference=reference,
        eval_shape=tuple(o["eval_shape"]),
        constants=dict(a=a, b=b, q0=q0, D=D, nu=nu, load="uniform"),
        collocation={"domain": {"grid": list(o["navier_grid"]), "sampling": "uniform-grid"}},
        identified=identified,
        notes=["the sine modes satisfy the simply supported edge conditions identically; the PDE term fixes the coefficients"],
    )
