import jax.numpy as jnp
import numpy as np
import pytest

from biharmonic_pinn import autodiff as ad
from biharmonic_pinn.errors import NumericError
from biharmonic_pinn.loss import CollocationSet, CompositeLoss, Interval, LossTerm, Rectangle, sample
from biharmonic_pinn.model import IdentifiableConstants, NavierSine, ParameterSet, init_dense
from biharmonic_pinn.optimize import AdamConfig, QuasiNewtonConfig, TrainHistory, train_adam, train_quasi_newton

ONE = CollocationSet(np.zeros((1, 1)))


def constants(**init):
    return ParameterSet(c=IdentifiableConstants(init))


def rosenbrock():
    params = constants(x=-1.2, y=1.0)
    return CompositeLoss([
        LossTerm("a", lambda th, X: 1.0 - th[0] + 0.0 * X[:, 0], ONE),
        LossTerm("b", lambda th, X: 10.0 * (th[1] - th[0] ** 2) + 0.0 * X[:, 0], ONE),
    ], params)


def bowl(target, weight=1.0):
    params = constants(**{f"p{k}": 0.0 for k in range(len(target))})
    t = jnp.asarray(target)
    # n residuals scaled by sqrt(n): their mean square is the squared norm
    pts = CollocationSet(np.arange(len(target), dtype=float)[:, None])
    n = len(target)
    return CompositeLoss([LossTerm("bowl", lambda th, X: (th - t) * jnp.sqrt(n) + 0.0 * X[:, 0], pts, weight)], params)


def navier_least_squares():
    model = NavierSine(200.0, 300.0)
    params = ParameterSet(w=model)
    pts = sample(Rectangle(0, 200, 0, 300), "uniform-grid", (12, 12))
    X = pts.points
    target = np.exp(-((X[:, 0] - 90) ** 2 / 4000 + (X[:, 1] - 160) ** 2 / 9000))

    def res(th, Xb):
        x = ad.jet_variable(Xb[:, 0], 0, 1, 2)
        y = ad.jet_variable(Xb[:, 1], 1, 1, 2)
        return model.eval_jet([x, y], th)[0].value - Xb[:, 2]

    loss = CompositeLoss([LossTerm("fit", res, pts, targets=target)], params)
    basis = np.column_stack([
        np.sin(m * np.pi * X[:, 0] / 200) * np.sin(n * np.pi * X[:, 1] / 300) for m, n in model.modes
    ])
    exact = np.linalg.lstsq(basis, target, rcond=None)[0]
    return loss, exact


class TestConfigs:
    def test_adam_validation(self):
        with pytest.raises(ValueError):
            AdamConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            AdamConfig(epochs=0)

    def test_qn_validation(self):
        for c1, c2 in [(0.0, 0.9), (0.5, 0.4), (1e-4, 1.0)]:
            with pytest.raises(ValueError):
                QuasiNewtonConfig(c1=c1, c2=c2)
        with pytest.raises(ValueError):
            QuasiNewtonConfig(memory="sometimes")


class TestAdam:
    def test_bowl(self):
        target = np.array([0.5, -1.0, 2.0])
        loss = bowl(target)
        hist = train_adam(loss, AdamConfig(learning_rate=0.1, epochs=500))
        assert np.max(np.abs(loss.params.get() - target)) <= 1e-3
        assert hist.status == "max_epochs" and len(hist.rows) == 501
        assert hist.normalized[0] == pytest.approx(1.0, abs=1e-12)

    def test_zero_weights_leave_params(self):
        loss = bowl(np.array([1.0, 2.0]), weight=0.0)
        before = loss.params.get()
        train_adam(loss, AdamConfig(learning_rate=0.1, epochs=20))
        assert np.array_equal(loss.params.get(), before)

    def test_deterministic_minibatch(self):
        def run():
            net = init_dense([1, 8, 1], 3)
            params = ParameterSet(net=net)
            pts = sample(Interval(0, 1), "uniform-random", 40, seed=1)

            def res(th, X):
                return net.eval_jet([ad.jet_variable(X[:, 0], 0, 1, 1)], th)[0].value - jnp.sin(3 * X[:, 0])

            loss = CompositeLoss([LossTerm("fit", res, pts, batched=True)], params)
            hist = train_adam(loss, AdamConfig(learning_rate=1e-2, epochs=15, batch_size=8, seed=4))
            return hist.to_csv(include_time=False), params.get()

        (h1, p1), (h2, p2) = run(), run()
        assert h1 == h2 and np.array_equal(p1, p2)

    def test_non_finite_keeps_history(self):
        # the first step overshoots into log of a negative number
        params = constants(x=1.0)
        loss = CompositeLoss([LossTerm("blow", lambda th, X: jnp.log(th[0]) + 10.0 + 0.0 * X[:, 0], ONE)], params)
        with pytest.raises(NumericError) as info:
            train_adam(loss, AdamConfig(learning_rate=50.0, epochs=100))
        h = info.value.history
        assert h.status == "nonfinite" and len(h.rows) >= 1


class TestQuasiNewton:
    def test_rosenbrock(self):
        loss = rosenbrock()
        hist = train_quasi_newton(loss, QuasiNewtonConfig(max_iterations=200))
        assert np.max(np.abs(loss.params.get() - 1.0)) <= 1e-8
        assert len(hist.rows) - 1 < 100

    def test_rosenbrock_limited(self):
        loss = rosenbrock()
        train_quasi_newton(loss, QuasiNewtonConfig(max_iterations=300, memory="limited"))
        assert np.max(np.abs(loss.params.get() - 1.0)) <= 1e-8

    def test_monotone_and_time(self):
        hist = train_quasi_newton(rosenbrock(), QuasiNewtonConfig(max_iterations=50))
        assert np.all(np.diff(hist.losses) <= 0)
        assert np.all(np.diff(hist.times) >= 0)
        assert np.all(np.diff(hist.epochs) > 0)

    def test_linear_least_squares(self):
        loss, exact = navier_least_squares()
        hist = train_quasi_newton(loss, QuasiNewtonConfig(max_iterations=100))
        got = loss.params.get()
        assert np.allclose(got, exact, rtol=1e-8, atol=1e-10 * np.max(np.abs(exact)))
        assert len(hist.rows) - 1 <= 9 + 15

    def test_already_converged(self):
        target = np.array([0.25, 4.0])
        loss = bowl(target)
        loss.params.set(target)
        hist = train_quasi_newton(loss, QuasiNewtonConfig())
        assert len(hist.rows) - 1 <= 1
        assert np.allclose(loss.params.get(), target, atol=1e-12)
        assert hist.status in ("gtol", "zero_loss")


class TestHistory:
    def test_strict_epochs(self):
        h = TrainHistory(["a"])
        h.record(0, 0.0, 2.0, [2.0])
        with pytest.raises(ValueError):
            h.record(0, 0.1, 1.0, [1.0])

    def test_normalisation_and_reach(self):
        h = TrainHistory()
        for e, v in enumerate([4.0, 1.0, 1e-6, 1e-7]):
            h.record(e, 0.1 * e, v)
        assert h.normalized[0] == 1.0
        assert h.epochs_to_reach(1e-6) == 2
        assert h.epochs_to_reach(1e-12) is None
        with pytest.raises(NumericError):
            TrainHistory().record(0, 0.0, float("nan"))

    def test_extend(self):
        a, b = TrainHistory(["t"]), TrainHistory(["t"])
        for e, v in enumerate([8.0, 4.0]):
            a.record(e, e * 1.0, v, [v])
        for e, v in enumerate([4.0, 2.0, 1.0]):
            b.record(e, e * 0.5, v, [v])
        b.status = "gtol"
        a.extend(b)
        assert a.epochs.tolist() == [0, 1, 2, 3]
        assert a.normalized.tolist() == [1.0, 0.5, 0.25, 0.125]
        assert a.status == "gtol"

    def test_csv(self, tmp_path):
        h = TrainHistory(["domain", "bc"])
        h.record(0, 0.0, 3.0, [1.0, 2.0])
        h.record(1, 0.123456789, 1.0 / 3.0, [0.1, 1.0 / 3.0 - 0.1])
        path = tmp_path / "history.csv"
        text = h.to_csv(path)
        assert text.splitlines()[0] == "epoch,time_s,loss,loss_normalized,term:domain,term:bc"
        assert "0.33333333333333331" in text
        back = TrainHistory.from_csv(path)
        assert back.rows == h.rows and back.term_names == h.term_names
        assert "time_s" not in h.to_csv(include_time=False)
