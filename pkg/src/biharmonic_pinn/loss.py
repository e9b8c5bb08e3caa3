"""Collocation sampling and weighted mean-squared residual losses."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import jax
import jax.numpy as jnp
import numpy as np

from .errors import DomainError, NumericError


# --- domains ---------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float


@dataclass(frozen=True)
class Rectangle:
    x0: float
    x1: float
    y0: float
    y1: float


@dataclass(frozen=True)
class Wedge:
    """Polar sector ``r in [r_min, r_max]``, ``theta in [theta_min, theta_max]``; points are ``(r, theta)``."""

    r_min: float
    r_max: float
    theta_min: float = 0.0
    theta_max: float = math.pi


@dataclass(frozen=True)
class HalfDisk:
    """Cartesian half-disk of radius ``radius`` on the side ``y >= 0``; points are ``(x, y)``."""

    radius: float


@dataclass
class CollocationSet:
    points: np.ndarray
    tag: str = "domain"
    sampling: str = "uniform-grid"
    seed: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        self.points = pts

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


def _grid_1d(lo, hi, n):
    if n == 1:
        return np.array([lo])
    return np.linspace(lo, hi, n)


def _lexi_grid(a, b):
    A, B = np.meshgrid(a, b, indexing="ij")
    return np.column_stack([A.ravel(), B.ravel()])


def sample(domain, strategy="uniform-grid", n=100, seed=0, boundary=None, tag=None):
    """Reproducible collocation points.

    ``n`` is a count for 1D domains and random sampling, or ``(n1, n2)`` for
    2D grids.  ``boundary`` restricts the set to one edge: ``"lo"``/``"hi"``
    for intervals, ``"x0"``/``"x1"``/``"y0"``/``"y1"`` for rectangles,
    ``"theta_min"``/``"theta_max"`` for wedges and ``"surface"`` for half-disks.
    Boundary points sit exactly on the edge coordinate.
    """
    if strategy not in ("uniform-grid", "uniform-random"):
        raise ValueError(f"unknown sampling strategy {strategy!r}")
    counts = tuple(n) if isinstance(n, (tuple, list)) else (n,)
    if min(counts) < 1:
        raise ValueError("need at least one point")
    rng = np.random.default_rng(seed)
    tag = tag or (boundary if boundary else "domain")

    def line(lo, hi, k):
        if strategy == "uniform-grid":
            return _grid_1d(lo, hi, k)
        return rng.uniform(lo, hi, size=k)

    if isinstance(domain, Interval):
        if not domain.hi >= domain.lo:
            raise DomainError("empty interval")
        if boundary == "lo":
            pts = np.full(counts[0], domain.lo)
        elif boundary == "hi":
            pts = np.full(counts[0], domain.hi)
        elif boundary is None:
            pts = line(domain.lo, domain.hi, counts[0])
        else:
            raise ValueError(f"unknown interval boundary {boundary!r}")
        return CollocationSet(pts[:, None], tag, strategy, seed)

    if isinstance(domain, Rectangle):
        if not (domain.x1 > domain.x0 and domain.y1 > domain.y0):
            raise DomainError("empty rectangle")
        nx, ny = counts if len(counts) == 2 else (counts[0], counts[0])
        if boundary is None:
            if strategy == "uniform-grid":
                pts = _lexi_grid(line(domain.x0, domain.x1, nx), line(domain.y0, domain.y1, ny))
            else:
                pts = np.column_stack([rng.uniform(domain.x0, domain.x1, nx), rng.uniform(domain.y0, domain.y1, nx)])
        elif boundary in ("x0", "x1"):
            xv = getattr(domain, boundary)
            ys = line(domain.y0, domain.y1, ny)
            pts = np.column_stack([np.full_like(ys, xv), ys])
        elif boundary in ("y0", "y1"):
            yv = getattr(domain, boundary)
            xs = line(domain.x0, domain.x1, nx)
            pts = np.column_stack([xs, np.full_like(xs, yv)])
        else:
            raise ValueError(f"unknown rectangle boundary {boundary!r}")
        return CollocationSet(pts, tag, strategy, seed)

    if isinstance(domain, Wedge):
        if not (domain.r_max > domain.r_min >= 0 and domain.theta_max > domain.theta_min):
            raise DomainError("empty wedge")
        nr, nt = counts if len(counts) == 2 else (counts[0], counts[0])
        rs = line(domain.r_min, domain.r_max, nr)
        if boundary is None:
            if strategy == "uniform-grid":
                pts = _lexi_grid(rs, line(domain.theta_min, domain.theta_max, nt))
            else:
                pts = np.column_stack([rs, rng.uniform(domain.theta_min, domain.theta_max, nr)])
        elif boundary in ("theta_min", "theta_max"):
            tv = getattr(domain, boundary)
            pts = np.column_stack([rs, np.full_like(rs, tv)])
        else:
            raise ValueError(f"unknown wedge boundary {boundary!r}")
        return CollocationSet(pts, tag, strategy, seed)

    if isinstance(domain, HalfDisk):
        R = domain.radius
        if not R > 0:
            raise DomainError("empty half-disk")
        nx, ny = counts if len(counts) == 2 else (counts[0], counts[0])
        if boundary is None:
            if strategy == "uniform-grid":
                pts = _lexi_grid(line(-R, R, nx), line(0.0, R, ny))
            else:
                pts = np.column_stack([rng.uniform(-R, R, 4 * nx), rng.uniform(0.0, R, 4 * nx)])
            pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= R * (1 + 1e-12)]
            if strategy == "uniform-random":
                pts = pts[:nx]
        elif boundary == "surface":
            xs = line(-R, R, nx)
            pts = np.column_stack([xs, np.zeros_like(xs)])
        else:
            raise ValueError(f"unknown half-disk boundary {boundary!r}")
        return CollocationSet(pts, tag, strategy, seed)

    raise ValueError(f"unsupported domain {domain!r}")


# --- loss terms --------------------------------------------------------------

@dataclass
class LossTerm:
    """``weight * mean(residual(theta, data)**2)``.

    ``data`` rows are the collocation coordinates, optionally followed by
    target columns (see :func:`data_fit_term`).  ``batched`` terms are
    subsampled per optimizer step; the others always use all rows.
    """

    name: str
    residual: object
    collocation: CollocationSet
    weight: float = 1.0
    batched: bool = False
    targets: np.ndarray | None = None

    def __post_init__(self):
        if not (np.isfinite(self.weight) and self.weight >= 0):
            raise ValueError(f"loss weight must be finite and >= 0, got {self.weight}")
        if self.targets is not None:
            t = np.asarray(self.targets, dtype=np.float64)
            if t.ndim == 1:
                t = t[:, None]
            if t.shape[0] != len(self.collocation):
                raise ValueError(
                    f"{t.shape[0]} targets for {len(self.collocation)} collocation points in term {self.name!r}"
                )
            self.targets = t

    @property
    def data(self):
        if self.targets is None:
            return self.collocation.points
        return np.hstack([self.collocation.points, self.targets])


def data_fit_term(name, field_fn, collocation, targets, weight=1.0, batched=True):
    """Supervised term ``mean((field - target)^2)``; ``field_fn(theta, points)`` gives the model field."""
    d = collocation.dim

    def residual(theta, X):
        return field_fn(theta, X[:, :d]) - X[:, d]

    return LossTerm(name, residual, collocation, weight, batched, targets)


class CompositeLoss:
    """Sum of weighted loss terms over a shared flat parameter vector."""

    def __init__(self, terms, params=None):
        names = [t.name for t in terms]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate loss term names: {names}")
        self.terms = list(terms)
        self.params = params
        self.L0 = None
        self._vg = jax.jit(jax.value_and_grad(self._total, has_aux=True))
        self._val = jax.jit(self._total)
        self._res = None
        # terms on the same collocation set see one traced array, so XLA can
        # merge the model evaluations they have in common
        keys, self._slot = [], []
        for t in self.terms:
            key = (id(t.collocation), t.batched) if t.targets is None else ("own", t.name)
            if key not in keys:
                keys.append(key)
            self._slot.append(keys.index(key))
        self._first = [self._slot.index(k) for k in range(len(keys))]

    @property
    def names(self):
        return [t.name for t in self.terms]

    @property
    def weights(self):
        return np.array([t.weight for t in self.terms], dtype=np.float64)

    def set_weight(self, name, weight):
        for t in self.terms:
            if t.name == name:
                t.weight = float(weight)
                return
        raise KeyError(name)

    def _total(self, theta, weights, unique):
        per = jnp.stack([jnp.mean(t.residual(theta, unique[k]) ** 2) for t, k in zip(self.terms, self._slot)])
        return jnp.sum(weights * per), per

    def _unique(self, datas):
        return tuple(datas[i] for i in self._first)

    def full_data(self):
        return tuple(jnp.asarray(t.data) for t in self.terms)

    def batch_data(self, rng, batch_size):
        """Full data for unbatched terms, a random subset of ``batch_size`` rows for batched ones."""
        out = []
        for t in self.terms:
            X = t.data
            if t.batched and batch_size is not None and batch_size < X.shape[0]:
                X = X[rng.choice(X.shape[0], size=batch_size, replace=False)]
            out.append(jnp.asarray(X))
        return tuple(out)

    def epoch_batches(self, rng, batch_size):
        """One pass over the batched rows in shuffled order; returns a list of data tuples."""
        sizes = [t.data.shape[0] for t in self.terms if t.batched]
        if batch_size is None or not sizes or batch_size >= max(sizes):
            return [self.full_data()]
        n = max(sizes)
        perm = rng.permutation(n)
        batches = []
        for start in range(0, n, batch_size):
            idx = perm[start:start + batch_size]
            datas = []
            for t in self.terms:
                X = t.data
                if t.batched:
                    X = X[idx % X.shape[0]]
                datas.append(jnp.asarray(X))
            batches.append(tuple(datas))
        return batches

    def value_and_grad(self, theta, datas=None):
        datas = self.full_data() if datas is None else datas
        (total, per), grad = self._vg(jnp.asarray(theta), jnp.asarray(self.weights), self._unique(datas))
        return float(total), np.asarray(grad), np.asarray(per)

    def value(self, theta, datas=None):
        datas = self.full_data() if datas is None else datas
        total, per = self._val(jnp.asarray(theta), jnp.asarray(self.weights), self._unique(datas))
        return float(total), np.asarray(per)

    def evaluate(self, theta=None):
        """``(total, {term: weighted value})`` on the full collocation sets."""
        if theta is None:
            theta = self.params.get()
        total, per = self.value(theta)
        w = self.weights
        terms = {t.name: float(w[k] * per[k]) for k, t in enumerate(self.terms)}
        if not np.isfinite(total):
            self.check_finite(theta)
        return total, terms

    def residuals(self, theta, name):
        t = next(t for t in self.terms if t.name == name)
        return np.asarray(t.residual(jnp.asarray(theta), jnp.asarray(t.data)))

    def check_finite(self, theta):
        for t in self.terms:
            r = self.residuals(theta, t.name)
            bad = np.flatnonzero(~np.isfinite(r))
            if bad.size:
                i = int(bad[0])
                raise NumericError(
                    f"non-finite residual in term {t.name!r} at point {t.collocation.points[i % len(t.collocation)].tolist()}",
                    term=t.name,
                    index=i,
                )
        raise NumericError("non-finite loss")
