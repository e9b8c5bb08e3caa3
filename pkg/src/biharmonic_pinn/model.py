"""Field approximators: dense tanh networks and analytically derived bases.

Every model owns a flat float64 parameter vector ``params`` and evaluates
jet-valued outputs through ``eval_jet(inputs, params=None)``.  Passing
``params`` explicitly keeps evaluation a pure function of the parameters,
which is what ``jax.grad`` differentiates in :func:`param_gradient`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jax
import jax.numpy as jnp
import numpy as np

from . import autodiff as ad
from .autodiff import Jet, _ns
from .errors import NumericError


class DenseNetwork:
    """Fully connected network: tanh hidden layers, linear output layer.

    ``input_bounds`` (one ``(lo, hi)`` pair per input) maps each coordinate
    affinely onto [-1, 1] before the first layer; ``output_scale`` multiplies
    the linear output.  Both are fixed, not trained.
    """

    def __init__(self, layer_sizes, params, input_bounds=None, output_scale=1.0):
        self.layer_sizes = tuple(int(n) for n in layer_sizes)
        self.params = np.asarray(params, dtype=np.float64)
        if self.params.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {self.params.shape}")
        self.input_bounds = None if input_bounds is None else [tuple(map(float, b)) for b in input_bounds]
        if self.input_bounds is not None and len(self.input_bounds) != self.n_inputs:
            raise ValueError("input_bounds must give one (lo, hi) pair per input")
        self.output_scale = float(output_scale)

    @property
    def n_inputs(self):
        return self.layer_sizes[0]

    @property
    def n_outputs(self):
        return self.layer_sizes[-1]

    @property
    def n_params(self):
        return count_dense_params(self.layer_sizes)

    def unflatten(self, flat):
        layers = []
        pos = 0
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            W = flat[pos:pos + n_in * n_out].reshape(n_out, n_in)
            pos += n_in * n_out
            b = flat[pos:pos + n_out]
            pos += n_out
            layers.append((W, b))
        return layers

    @staticmethod
    def flatten(layers):
        xp = _ns(*[w for wb in layers for w in wb])
        return xp.concatenate([xp.concatenate([W.ravel(), b.ravel()]) for W, b in layers])

    def eval_jet(self, inputs, params=None):
        if len(inputs) != self.n_inputs:
            raise ValueError(f"network expects {self.n_inputs} inputs, got {len(inputs)}")
        p = self.params if params is None else params
        order, nvars = inputs[0].order, inputs[0].nvars
        for j in inputs[1:]:
            if j.order != order or j.nvars != nvars:
                raise ValueError("all input jets must share order and nvars")
        xp = _ns(p, *[j.coeffs for j in inputs])
        cols = []
        for k, j in enumerate(inputs):
            c = j.coeffs
            if self.input_bounds is not None:
                lo, hi = self.input_bounds[k]
                s = 2.0 / (hi - lo)
                c = c * s
                c = xp.concatenate([(c[0] - lo * s - 1.0)[None], c[1:]])
            cols.append(c)
        # hidden state as per-slot rows of shape (width, *batch)
        rows = [xp.stack([c[k] for c in cols]) for k in range(cols[0].shape[0])]
        layers = self.unflatten(p)
        for li, (W, b) in enumerate(layers):
            rows = [xp.tensordot(W, h, axes=1) for h in rows]
            rows[0] = rows[0] + b.reshape(b.shape + (1,) * (rows[0].ndim - 1))
            if li < len(layers) - 1:
                rows = ad._tanh_rows(rows, order, nvars, xp)
        rows = [h * self.output_scale for h in rows]
        return [Jet(xp.stack([h[k] for h in rows]), order, nvars) for k in range(self.n_outputs)]

    def __call__(self, *coords, params=None):
        """Plain (order-0) evaluation at arrays of coordinates."""
        jets = [Jet.constant(c, 0, 1) for c in coords]
        out = self.eval_jet(jets, params)
        return out[0].value if len(out) == 1 else [o.value for o in out]

    def describe(self):
        return {
            "kind": "dense",
            "layer_sizes": list(self.layer_sizes),
            "activation": "tanh",
            "input_bounds": self.input_bounds,
            "output_scale": self.output_scale,
            "n_params": self.n_params,
        }


def count_dense_params(layer_sizes):
    return sum((n_in + 1) * n_out for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]))


def init_dense(layer_sizes, seed, input_bounds=None, output_scale=1.0):
    """Glorot-uniform weights, zero biases; same seed gives identical parameters."""
    layer_sizes = [int(n) for n in layer_sizes]
    if len(layer_sizes) < 2:
        raise ValueError("layer_sizes needs at least an input and an output size")
    if min(layer_sizes) < 1:
        raise ValueError(f"zero-width layer in {layer_sizes}")
    rng = np.random.default_rng(seed)
    layers = []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = math.sqrt(6.0 / (n_in + n_out))
        W = rng.uniform(-limit, limit, size=(n_out, n_in))
        layers.append((W, np.zeros(n_out)))
    flat = DenseNetwork.flatten(layers)
    return DenseNetwork(layer_sizes, flat, input_bounds, output_scale)


class AiryLame:
    """Axisymmetric Airy family ``phi = a1 ln r + a2 r^2 ln r + a3 r^2 + a4``.

    Outputs ``(phi, u_r)``.  The displacement shares the same coefficients and
    is the integral of the radial strain of the corresponding stress field,

        u_r = 1/(2 mu) * (-a1/r + (2 - 4 beta)(a2 r ln r + a3 r) - a2 r),

    with ``beta = (3 - kappa)/4``.  The ``a2`` term is the one that violates
    single-valued displacement, so the compatibility residual pins it to zero.
    """

    n_inputs = 1
    n_outputs = 2

    def __init__(self, material, params=None):
        self.material = material
        self.params = np.zeros(4) if params is None else np.asarray(params, dtype=np.float64)

    @property
    def n_params(self):
        return 4

    def basis(self, r):
        lr = ad.log(r)
        r2 = r * r
        return [lr, r2 * lr, r2, Jet.constant(_ns(r.coeffs).ones_like(r.value), r.order, r.nvars)]

    def eval_jet(self, inputs, params=None):
        (r,) = inputs
        a = self.params if params is None else params
        lr = ad.log(r)
        r2 = r * r
        phi = a[0] * lr + a[1] * (r2 * lr) + a[2] * r2 + a[3]
        mu = self.material.mu
        beta = (3.0 - self.material.kappa) / 4.0
        rlr = r * lr
        u = (-a[0] / r + (2.0 - 4.0 * beta) * (a[1] * rlr + a[2] * r) - a[1] * r) * (1.0 / (2.0 * mu))
        return [phi, u]

    def describe(self):
        return {"kind": "airy_lame", "n_params": 4}


class PlateRadial:
    """Axisymmetric plate deflection

        w = -q r^4 / (64 D) + a1 r^2 (ln r - 1)/4 + a2 r^2 / 4 + a3 ln r + a4.
    """

    n_inputs = 1
    n_outputs = 1

    def __init__(self, q, D, params=None):
        self.q = float(q)
        self.D = float(D)
        self.params = np.zeros(4) if params is None else np.asarray(params, dtype=np.float64)

    @property
    def n_params(self):
        return 4

    def homogeneous_terms(self, r):
        lr = ad.log(r)
        r2 = r * r
        one = Jet.constant(_ns(r.coeffs).ones_like(r.value), r.order, r.nvars)
        return [0.25 * r2 * (lr - 1.0), 0.25 * r2, lr, one]

    def particular(self, r):
        return r ** 4 * (-self.q / (64.0 * self.D))

    def eval_jet(self, inputs, params=None):
        (r,) = inputs
        a = self.params if params is None else params
        terms = self.homogeneous_terms(r)
        w = terms[0] * a[0] + terms[1] * a[1] + terms[2] * a[2] + terms[3] * a[3]
        if self.q != 0.0:
            w = w + self.particular(r)
        return [w]

    def describe(self):
        return {"kind": "plate_radial", "q": self.q, "D": self.D, "n_params": 4}


NAVIER_MODES = ((1, 1), (1, 3), (1, 5), (3, 1), (3, 3), (3, 5), (5, 1), (5, 3), (5, 5))


class NavierSine:
    """Double sine series ``w = sum_k a_k sin(m_k pi x / a) sin(n_k pi y / b)``."""

    n_inputs = 2
    n_outputs = 1

    def __init__(self, a, b, modes=NAVIER_MODES, params=None):
        self.a = float(a)
        self.b = float(b)
        self.modes = tuple(tuple(m) for m in modes)
        self.params = np.zeros(len(self.modes)) if params is None else np.asarray(params, dtype=np.float64)

    @property
    def n_params(self):
        return len(self.modes)

    def basis(self, x, y):
        sx = {m: ad.sin(x * (m * math.pi / self.a)) for m in {m for m, _ in self.modes}}
        sy = {n: ad.sin(y * (n * math.pi / self.b)) for n in {n for _, n in self.modes}}
        return [sx[m] * sy[n] for m, n in self.modes]

    def eval_jet(self, inputs, params=None):
        x, y = inputs
        a = self.params if params is None else params
        terms = self.basis(x, y)
        w = terms[0] * a[0]
        for k in range(1, len(terms)):
            w = w + terms[k] * a[k]
        return [w]

    def describe(self):
        return {"kind": "navier_sine", "a": self.a, "b": self.b, "modes": [list(m) for m in self.modes]}


class WedgeAiry:
    """Half-space Airy function ``phi(r, theta) = q r^2 f(theta)``.

    ``f`` is either a nested 1-input dense network of theta (``inner``) or,
    with ``inner=None``, the closed family ``c0 + c1 theta + c2 sin 2theta
    + c3 cos 2theta``.
    """

    n_inputs = 2
    n_outputs = 1

    def __init__(self, q, inner=None, params=None):
        self.q = float(q)
        self.inner = inner
        if params is None:
            params = inner.params.copy() if inner is not None else np.zeros(4)
        self.params = np.asarray(params, dtype=np.float64)

    @property
    def n_params(self):
        return self.inner.n_params if self.inner is not None else 4

    def f_jet(self, theta, params=None):
        p = self.params if params is None else params
        if self.inner is not None:
            return self.inner.eval_jet([theta], p)[0]
        return p[0] + theta * p[1] + ad.sin(theta * 2.0) * p[2] + ad.cos(theta * 2.0) * p[3]

    def eval_jet(self, inputs, params=None):
        r, theta = inputs
        return [(r * r) * self.f_jet(theta, params) * self.q]

    def describe(self):
        inner = self.inner.describe() if self.inner is not None else {"kind": "fourier_wedge"}
        return {"kind": "wedge_airy", "q": self.q, "f": inner}


@dataclass
class IdentifiableConstants:
    """Named scalars trained alongside the fields.

    ``transforms`` maps a name to ``"identity"`` or ``"log"``; a log-transformed
    constant is stored as its logarithm and always decodes to a positive value.
    """

    initial: dict
    transforms: dict = field(default_factory=dict)

    def __post_init__(self):
        self.names = list(self.initial)
        raw = []
        for name in self.names:
            v = float(self.initial[name])
            t = self.transforms.get(name, "identity")
            if t == "log":
                if v <= 0:
                    raise ValueError(f"log-transformed constant {name} needs a positive initial value")
                raw.append(math.log(v))
            elif t == "identity":
                raw.append(v)
            else:
                raise ValueError(f"unknown transform {t!r}")
        self.params = np.array(raw)

    @property
    def n_params(self):
        return len(self.names)

    def decode(self, params=None):
        p = self.params if params is None else params
        xp = _ns(p)
        out = {}
        for k, name in enumerate(self.names):
            out[name] = xp.exp(p[k]) if self.transforms.get(name, "identity") == "log" else p[k]
        return out

    def describe(self):
        return {"kind": "constants", "initial": dict(self.initial), "transforms": dict(self.transforms)}


class ParameterSet:
    """Several models sharing one flat parameter vector, in insertion order."""

    def __init__(self, **components):
        self.components = dict(components)
        self.slices = {}
        pos = 0
        for name, comp in self.components.items():
            self.slices[name] = slice(pos, pos + comp.n_params)
            pos += comp.n_params
        self.size = pos

    def __getitem__(self, name):
        return self.components[name]

    def get(self):
        if not self.components:
            return np.zeros(0)
        return np.concatenate([np.asarray(c.params, dtype=np.float64) for c in self.components.values()])

    def set(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.size,):
            raise ValueError(f"expected {self.size} parameters, got {theta.shape}")
        for name, comp in self.components.items():
            comp.params = theta[self.slices[name]].copy()
            if isinstance(comp, WedgeAiry) and comp.inner is not None:
                comp.inner.params = comp.params

    def split(self, theta):
        return {name: theta[s] for name, s in self.slices.items()}

    def describe(self):
        return {name: comp.describe() for name, comp in self.components.items()}


def param_gradient(loss_eval, theta):
    """Gradient of a scalar loss closure ``loss_eval(theta)`` by reverse mode.

    ``loss_eval`` may return either a scalar or ``(scalar, per_term)`` where
    ``per_term`` maps term names to values; the latter lets a non-finite loss
    be traced to the offending term.
    """
    theta = jnp.asarray(theta, dtype=jnp.float64)

    def scalar(t):
        out = loss_eval(t)
        if isinstance(out, tuple):
            return out[0], out[1]
        return out, {}

    (value, terms), grad = jax.value_and_grad(scalar, has_aux=True)(theta)
    if not np.isfinite(float(value)):
        bad = [k for k, v in terms.items() if not np.isfinite(float(v))]
        raise NumericError(f"non-finite loss (terms: {bad or 'unknown'})", term=bad[0] if bad else None)
    grad = np.asarray(grad)
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient", index=int(np.flatnonzero(~np.isfinite(grad))[0]))
    return grad


def save_params(path, theta):
    """Write a flat parameter vector as ``.json`` (list of floats) or ``.npy``."""
    path = Path(path)
    theta = np.asarray(theta, dtype=np.float64)
    if path.suffix == ".npy":
        np.save(path, theta)
    else:
        path.write_text(json.dumps([float(v) for v in theta]))


def load_params(path):
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path)
    return np.array(json.loads(path.read_text()), dtype=np.float64)
