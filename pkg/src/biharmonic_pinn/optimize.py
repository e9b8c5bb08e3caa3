"""Adam and (L-)BFGS training loops with per-epoch loss history."""
from __future__ import annotations

import io
import logging
import time
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import line_search

from .errors import NumericError
from .io import atomic_write_text

log = logging.getLogger(__name__)


@dataclass
class AdamConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 1000
    batch_size: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class QuasiNewtonConfig:
    max_iterations: int = 1000
    gradient_tolerance: float = 1e-12
    c1: float = 1e-4
    c2: float = 0.9
    memory: str = "auto"  # "full", "limited" or "auto"
    history_size: int = 20
    limited_threshold: int = 2000
    line_search_maxiter: int = 30

    def __post_init__(self):
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.memory not in ("auto", "full", "limited"):
            raise ValueError(f"unknown memory mode {self.memory!r}")


@dataclass
class TrainHistory:
    term_names: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    status: str = "running"
    L0: float | None = None

    def record(self, epoch, wall_time, loss, per_term=None):
        if self.rows and epoch <= self.rows[-1][0]:
            raise ValueError("epochs must be strictly increasing")
        if self.L0 is None:
            if not loss >= 0:
                raise NumericError(f"initial loss must be finite and >= 0, got {loss}")
            self.L0 = float(loss)
        terms = [] if per_term is None else [float(v) for v in per_term]
        self.rows.append((int(epoch), float(wall_time), float(loss), self._norm(loss), terms))

    def _norm(self, loss):
        # a zero initial loss (all weights zero) leaves the column unnormalised
        return float(loss) / self.L0 if self.L0 > 0 else float(loss)

    @property
    def epochs(self):
        return np.array([r[0] for r in self.rows])

    @property
    def times(self):
        return np.array([r[1] for r in self.rows])

    @property
    def losses(self):
        return np.array([r[2] for r in self.rows])

    @property
    def normalized(self):
        return np.array([r[3] for r in self.rows])

    @property
    def final_normalized(self):
        return self.rows[-1][3]

    def epochs_to_reach(self, level):
        hit = np.flatnonzero(self.normalized <= level)
        return int(self.epochs[hit[0]]) if hit.size else None

    def extend(self, other):
        """Append ``other`` (e.g. a BFGS stage after Adam), renumbering epochs and normalising to this L0."""
        if not self.rows:
            self.term_names = list(other.term_names)
            self.L0 = other.L0
            self.rows = list(other.rows)
            self.status = other.status
            return self
        e0, t0 = self.rows[-1][0], self.rows[-1][1]
        for k, (e, t, loss, _, terms) in enumerate(other.rows):
            if k == 0:
                continue
            self.rows.append((e0 + e, t0 + t, loss, self._norm(loss), terms))
        self.status = other.status
        return self

    def to_csv(self, path=None, include_time=True):
        buf = io.StringIO()
        head = ["epoch"] + (["time_s"] if include_time else []) + ["loss", "loss_normalized"]
        head += [f"term:{n}" for n in self.term_names]
        buf.write(",".join(head) + "\n")
        for e, t, loss, norm, terms in self.rows:
            vals = [str(e)] + ([f"{t:.17g}"] if include_time else []) + [f"{loss:.17g}", f"{norm:.17g}"]
            vals += [f"{v:.17g}" for v in terms]
            buf.write(",".join(vals) + "\n")
        text = buf.getvalue()
        if path is not None:
            atomic_write_text(path, text)
        return text

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        head = lines[0].split(",")
        names = [h[5:] for h in head if h.startswith("term:")]
        h = cls(term_names=names, status="loaded")
        has_time = "time_s" in head
        for ln in lines[1:]:
            parts = ln.split(",")
            e = int(parts[0])
            k = 1
            t = float(parts[k]) if has_time else 0.0
            k += has_time
            loss, norm = float(parts[k]), float(parts[k + 1])
            terms = [float(v) for v in parts[k + 2:]]
            if h.L0 is None:
                h.L0 = loss / norm if norm else loss
            h.rows.append((e, t, loss, norm, terms))
        return h


def train_adam(loss, cfg, theta=None):
    """Adam with bias-corrected moments; one history row per epoch.

    Parameters are written back to ``loss.params`` when training ends.  A
    non-finite loss raises :class:`NumericError` whose ``history`` attribute
    holds the rows recorded so far.
    """
    params = loss.params
    theta = np.array(params.get() if theta is None else theta, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    hist = TrainHistory(term_names=loss.names)
    t_start = time.perf_counter()
    f0, per0 = loss.value(theta)
    if not np.isfinite(f0):
        loss.check_finite(theta)
    hist.record(0, 0.0, f0, loss.weights * per0)
    loss.L0 = hist.L0
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    step = 0
    b1, b2 = cfg.beta1, cfg.beta2
    for epoch in range(1, cfg.epochs + 1):
        for datas in loss.epoch_batches(rng, cfg.batch_size):
            f, g, _ = loss.value_and_grad(theta, datas)
            if not np.isfinite(f) or not np.all(np.isfinite(g)):
                hist.status = "nonfinite"
                err = NumericError(f"non-finite loss at epoch {epoch}")
                err.history = hist
                raise err
            step += 1
            m = b1 * m + (1.0 - b1) * g
            v = b2 * v + (1.0 - b2) * g * g
            mhat = m / (1.0 - b1 ** step)
            vhat = v / (1.0 - b2 ** step)
            theta = theta - cfg.learning_rate * mhat / (np.sqrt(vhat) + cfg.eps)
        f, per = loss.value(theta)
        if not np.isfinite(f):
            hist.status = "nonfinite"
            err = NumericError(f"non-finite loss after epoch {epoch}")
            err.history = hist
            raise err
        hist.record(epoch, time.perf_counter() - t_start, f, loss.weights * per)
    params.set(theta)
    hist.status = "max_epochs"
    return hist


class _Cached:
    """Memoise value-and-gradient at the most recent few points (line search re-queries them)."""

    def __init__(self, loss):
        self.loss = loss
        self.cache = deque(maxlen=4)
        self.nfev = 0

    def __call__(self, x):
        for xc, out in self.cache:
            if np.array_equal(xc, x):
                return out
        f, g, per = self.loss.value_and_grad(x)
        self.nfev += 1
        out = (f, g, per)
        self.cache.append((np.array(x, copy=True), out))
        return out

    def f(self, x):
        return self(x)[0]

    def g(self, x):
        return self(x)[1]


def _two_loop(g, S, Y, gamma):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(S), reversed(Y)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        q -= a * y
        alphas.append((rho, a))
    r = gamma * q
    for (s, y), (rho, a) in zip(zip(S, Y), reversed(alphas)):
        b = rho * np.dot(y, r)
        r += s * (a - b)
    return r


def train_quasi_newton(loss, cfg, theta=None):
    """Full-batch BFGS (or L-BFGS for large parameter counts) with a strong-Wolfe line search.

    One history row per accepted iteration.  ``history.status`` is one of
    ``"gtol"``, ``"max_iterations"``, ``"line_search_failed"`` or ``"zero_loss"``;
    on line-search failure the best iterate so far is kept.
    """
    params = loss.params
    x = np.array(params.get() if theta is None else theta, dtype=np.float64)
    n = x.size
    limited = cfg.memory == "limited" or (cfg.memory == "auto" and n > cfg.limited_threshold)
    fun = _Cached(loss)
    hist = TrainHistory(term_names=loss.names)
    t_start = time.perf_counter()
    f, g, per = fun(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        loss.check_finite(x)
        raise NumericError("non-finite initial gradient")
    hist.record(0, 0.0, f, loss.weights * per)
    loss.L0 = hist.L0
    H = None if limited else np.eye(n)
    S, Y = deque(maxlen=cfg.history_size), deque(maxlen=cfg.history_size)
    gamma = 1.0
    old_old_f = f + np.linalg.norm(g) / 2.0
    status = "max_iterations"
    for it in range(1, cfg.max_iterations + 1):
        if np.max(np.abs(g)) <= cfg.gradient_tolerance:
            status = "gtol"
            break
        if f == 0.0:
            status = "zero_loss"
            break
        ls = None
        for attempt in range(2):
            if limited:
                p = -_two_loop(g, S, Y, gamma) if S else -g
            else:
                p = -H @ g
            if np.dot(p, g) >= 0:
                p = -g
            # failures are reported through the status flag instead
            with np.errstate(all="ignore"), warnings.catch_warnings():
                warnings.filterwarnings("ignore", message=".*line search", category=RuntimeWarning)
                ls = line_search(
                    fun.f, fun.g, x, p, gfk=g, old_fval=f, old_old_fval=old_old_f,
                    c1=cfg.c1, c2=cfg.c2, maxiter=cfg.line_search_maxiter,
                )
            if ls[0] is not None:
                break
            # restart from a scaled steepest-descent model once
            if limited:
                S.clear()
                Y.clear()
                gamma = 1.0
            else:
                H = np.eye(n)
            old_old_f = f + np.linalg.norm(g) / 2.0
        alpha = ls[0]
        if alpha is None:
            status = "line_search_failed"
            break
        s = alpha * p
        x_new = x + s
        f_new, g_new, per_new = fun(x_new)
        y = g_new - g
        sy = float(np.dot(s, y))
        if sy > 1e-300:
            if limited:
                S.append(s)
                Y.append(y)
                gamma = sy / float(np.dot(y, y))
            else:
                if it == 1:
                    H = np.eye(n) * (sy / float(np.dot(y, y)))
                rho = 1.0 / sy
                Hy = H @ y
                H = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + (rho * rho * float(y @ Hy) + rho) * np.outer(s, s)
        old_old_f = f
        x, f, g = x_new, f_new, g_new
        hist.record(it, time.perf_counter() - t_start, f, loss.weights * per_new)
    params.set(x)
    hist.status = status
    log.info("quasi-newton stopped: %s after %d iterations (%d evaluations)", status, len(hist.rows) - 1, fun.nfev)
    return hist
