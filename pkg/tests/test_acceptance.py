"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict that the ``conftest`` summary hook
prints after the run.  The training criteria run the shipped configs
through the CLI entry point, so they double as smoke tests of ``solve run``.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from biharmonic_pinn import autodiff as ad
from biharmonic_pinn import cli, oracle
from biharmonic_pinn import physics as ph
from biharmonic_pinn.optimize import TrainHistory

from jet_oracles import (
    all_multi,
    close,
    composition_jet,
    composition_partial,
    polynomial_jet,
    polynomial_partial,
    random_composition,
    random_polynomial,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
VERDICTS = {}


def verdict(n, ok, detail):
    VERDICTS[n] = (bool(ok), detail)
    assert ok, f"criterion {n}: {detail}"


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    """Run each shipped config at most once per session; returns a loader."""
    root = tmp_path_factory.mktemp("acceptance")
    cache = {}

    def get(name):
        if name not in cache:
            t0 = time.perf_counter()
            code, out = cli.run(CONFIGS / f"{name}.toml", root / name)
            assert code == cli.EXIT_OK, f"{name} exited with {code}"
            cache[name] = Run(out, time.perf_counter() - t0)
        return cache[name]

    return get


class Run:
    def __init__(self, out, seconds):
        self.out = out
        self.seconds = seconds
        self.history = TrainHistory.from_csv(out / "history.csv")
        self.errors = json.loads((out / "errors.json").read_text())
        self.params = json.loads((out / "params.json").read_text())

    def field(self, name):
        return self.errors["fields"][name]


# 1. jets against symbolic and finite-difference oracles

def test_criterion_1_autodiff_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    cases = failures = 0
    worst = ""
    for _ in range(300):
        poly = random_polynomial(rng)
        x0, y0 = rng.uniform(-1.5, 1.5, size=2)
        jet = polynomial_jet(poly, x0, y0)
        for i, j in all_multi():
            want = polynomial_partial(poly, x0, y0, i, j)
            if not close(float(ad.extract_partial(jet, (i, j))), want, 1e-12, 1e-12):
                failures += 1
                worst = f"poly {(i, j)} at {(x0, y0)}"
        cases += 1
    for _ in range(200):
        x0, y0 = rng.uniform(-1, 1, size=2)
        expr = random_composition(rng, x0, y0)
        jet = composition_jet(expr, x0, y0)
        for i, j in all_multi():
            want = composition_partial(expr, x0, y0, i, j, dps=20)
            if not close(float(ad.extract_partial(jet, (i, j))), want, 1e-4, 1e-8):
                failures += 1
                worst = f"composition {(i, j)} at {(x0, y0)}"
        cases += 1
    dt = time.perf_counter() - t0
    verdict(1, failures == 0 and cases >= 500 and dt < 10,
            f"{cases} cases, {failures} mismatches {worst}, {dt:.1f}s")


# 2. operator annihilation

def test_criterion_2_annihilation():
    t0 = time.perf_counter()
    r0 = np.linspace(0.1, 5.0, 200)
    r = ad.jet_variable(r0, 0, 4, 1)
    kernel = {"log r": ad.log(r), "r^2 log r": r * r * ad.log(r), "r^2": r * r,
              "1": ad.Jet.constant(np.ones_like(r0), 4, 1)}
    worst = {k: float(np.max(np.abs(ph.biharmonic_axisymmetric(u, r0)))) for k, u in kernel.items()}
    r4 = ph.biharmonic_axisymmetric(r * r * r * r, r0)
    r4_err = float(np.max(np.abs(np.asarray(r4) - 64.0)))

    th = ad.jet_variable(np.linspace(0, math.pi, 200), 0, 4, 1)
    wedge = {"1": th * 0.0 + 1.0, "theta": th, "sin 2t": ad.sin(th * 2.0), "cos 2t": ad.cos(th * 2.0)}
    wedge_worst = {k: float(np.max(np.abs(ph.wedge_ode_residual(f)))) for k, f in wedge.items()}

    a, b, q0, D, nu = 200.0, 300.0, 0.01, 183111.0, 0.25
    rng = np.random.default_rng(0)
    X, Y = rng.uniform(0, a, 200), rng.uniform(0, b, 200)
    x, y = ad.jet_variable(X, 0, 4, 2), ad.jet_variable(Y, 1, 4, 2)
    K = 1 / a ** 2 + 1 / b ** 2
    w = ad.sin(x * (math.pi / a)) * ad.sin(y * (math.pi / b)) * (q0 / (math.pi ** 4 * D * K ** 2))
    assert np.allclose(w.value, oracle.navier_rectangular_exact(X, Y, q0, a, b, D, nu).w, rtol=1e-12)
    q = oracle.sinusoidal_load(X, Y, q0, a, b)
    plate_err = float(np.max(np.abs(D * np.asarray(ph.biharmonic_cartesian(w)) - q)) / q0)
    dt = time.perf_counter() - t0

    ok = (max(worst.values()) <= 1e-10 and r4_err <= 1e-9 and max(wedge_worst.values()) <= 1e-10
          and plate_err <= 1e-9 and dt < 5)
    verdict(2, ok, f"radial {max(worst.values()):.1e}, r^4 {r4_err:.1e}, wedge {max(wedge_worst.values()):.1e}, "
                   f"plate {plate_err:.1e} (rel q0), {dt:.1f}s")


# 3. Lame annulus

@pytest.mark.slow
def test_criterion_3_lame(runs):
    airy, dense = runs("lame_airy"), runs("lame_dense")
    a_err, d_err = airy.field("sigma_r")["linf"], dense.field("sigma_r")["linf"]
    ok = (airy.history.final_normalized <= 1e-10 and a_err <= 1e-4 and airy.seconds < 60
          and len(dense.history.rows) - 1 == 10000 and d_err <= 5e-2 and dense.seconds < 15 * 60
          and airy.seconds < dense.seconds)
    verdict(3, ok, f"airy L/L0 {airy.history.final_normalized:.1e}, |ds_r| {a_err:.1e} MPa in {airy.seconds:.0f}s; "
                   f"dense |ds_r| {d_err:.1e} MPa in {dense.seconds:.0f}s")


# 4. strip footing

@pytest.mark.slow
def test_criterion_4_foundation(runs):
    wedge = runs("foundation_wedge_airy")
    sy = wedge.field("sigma_y")["l2_relative"]
    iters = len(wedge.history.rows) - 1
    wedge_ok = sy <= 0.02 and wedge.history.final_normalized <= 1e-8 and iters <= 1000 and wedge.seconds < 300

    conj, solo = runs("foundation_conjugate"), runs("foundation_solo")
    monotone = all(np.all(np.diff(h.losses) <= 0) for h in (conj.history, solo.history))
    n = int(min(conj.history.epochs[-1], solo.history.epochs[-1]))
    lc = conj.history.normalized[conj.history.epochs <= n][-1]
    ls = solo.history.normalized[solo.history.epochs <= n][-1]
    verdict(4, wedge_ok and monotone and lc < ls,
            f"wedge sigma_y L2rel {sy:.2e}, L/L0 {wedge.history.final_normalized:.1e}, {iters} it, {wedge.seconds:.0f}s; "
            f"monotone={monotone}, at epoch {n} conjugate {lc:.2e} vs solo {ls:.2e}")


# 5. clamped circular plate

@pytest.mark.slow
def test_criterion_5_circular_plate(runs):
    par, dense = runs("circular_parametric"), runs("circular_dense")
    w_err_mm = par.field("w")["linf"] * 1000.0
    rel = dense.field("w")["l2_relative"]
    ok = (par.history.final_normalized <= 1e-13 and w_err_mm <= 1e-6 and par.seconds < 300
          and rel <= 1e-4 and dense.seconds < 20 * 60)
    verdict(5, ok, f"parametric L/L0 {par.history.final_normalized:.1e}, |dw| {w_err_mm:.1e} mm in {par.seconds:.0f}s; "
                   f"dense rel {rel:.1e} in {dense.seconds:.0f}s")


# 6. rectangular plate identification

@pytest.mark.slow
def test_criterion_6_identify(runs):
    run = runs("rect_identify")
    ident = run.params["identified"]
    nu_err = abs(ident["nu"] - 0.25) / 0.25
    D_ref = 183111.0
    D_err = abs(ident["D"] - D_ref) / D_ref
    reach = run.history.epochs_to_reach(1e-5)
    # "within 200 epochs, order of magnitude"
    ok = nu_err <= 5e-3 and D_err <= 5e-3 and reach is not None and reach <= 2000 and run.seconds < 600
    verdict(6, ok, f"nu {ident['nu']:.5f} ({nu_err:.2%}), D {ident['D']:.0f} ({D_err:.2%}), "
                   f"1e-5 at epoch {reach}, {run.seconds:.0f}s")


# 7. Navier parametric plate

@pytest.mark.slow
def test_criterion_7_navier(runs):
    run = runs("rect_navier")
    got = np.asarray(run.params["theta"])
    exact = oracle.navier_coefficients(0.01, 200.0, 300.0, 183111.0)
    dev = (got[1:4] / got[0]) / (exact[1:4] / exact[0]) - 1.0
    ok = np.all(np.abs(dev) <= 0.01) and run.seconds < 300
    verdict(7, ok, "ratio deviations " + ", ".join(f"{d:+.2%}" for d in dev) + f", {run.seconds:.0f}s")


# 8. determinism

@pytest.mark.slow
def test_criterion_8_determinism(tmp_path):
    def strip_time(path):
        h = TrainHistory.from_csv(path)
        return h.to_csv(include_time=False)

    same = []
    for name in ("lame_airy", "circular_parametric", "rect_navier"):
        outs = [cli.run(CONFIGS / f"{name}.toml", tmp_path / f"{name}_{k}")[1] for k in range(2)]
        same.append(strip_time(outs[0] / "history.csv") == strip_time(outs[1] / "history.csv")
                    and (outs[0] / "params.json").read_bytes() == (outs[1] / "params.json").read_bytes())
    verdict(8, all(same), f"{sum(same)}/{len(same)} configs byte-identical")
