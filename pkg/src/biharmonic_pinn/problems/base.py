"""Shared plumbing for benchmark definitions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import autodiff as ad
from ..loss import CompositeLoss
from ..model import ParameterSet
from ..oracle import FieldGrid, error_report


@dataclass
class ProblemSpec:
    """One configured benchmark variant.

    ``predict(theta, shape)`` and ``reference(shape)`` return :class:`FieldGrid`
    objects on the same evaluation grid; ``identified(theta)`` (optional)
    returns named physical constants recovered by training.
    """

    name: str
    variant: str
    params: ParameterSet
    loss: CompositeLoss
    predict: Callable
    reference: Callable
    eval_shape: tuple
    constants: dict = field(default_factory=dict)
    collocation: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    identified: Callable | None = None
    notes: list = field(default_factory=list)

    def predicted_grid(self, theta=None, shape=None):
        theta = self.params.get() if theta is None else np.asarray(theta)
        return self.predict(theta, shape or self.eval_shape)

    def reference_grid(self, shape=None):
        return self.reference(shape or self.eval_shape)

    def errors(self, theta=None, shape=None):
        return error_report(self.predicted_grid(theta, shape), self.reference_grid(shape))

    def to_json(self):
        return {
            "problem": self.name,
            "variant": self.variant,
            "constants": self.constants,
            "architecture": self.params.describe(),
            "n_params": self.params.size,
            "loss_terms": [
                {
                    "name": t.name,
                    "weight": t.weight,
                    "points": len(t.collocation),
                    "sampling": t.collocation.sampling,
                    "seed": t.collocation.seed,
                    "batched": t.batched,
                }
                for t in self.loss.terms
            ],
            "collocation": self.collocation,
            "optimizer": self.optimizer,
            "eval_shape": list(self.eval_shape),
            "notes": self.notes,
        }


class TraceMemo:
    """Share model evaluations between loss terms within one trace.

    Terms on the same collocation set receive the same traced array from
    :class:`CompositeLoss`, so keying on object identity lets them reuse one
    network pass.  A cached jet of higher order serves lower-order requests.
    """

    def __init__(self):
        self._entries = {}

    def get(self, key, theta, X, order, compute):
        hit = self._entries.get(key)
        if hit is not None and hit[0] is theta and hit[1] is X and hit[2] >= order:
            return hit[3]
        out = compute(order)
        self._entries[key] = (theta, X, order, out)
        return out


def jet_1d(X, order):
    return ad.jet_variable(X[:, 0], 0, order, 1)


def jets_2d(X, order):
    return ad.jet_variable(X[:, 0], 0, order, 2), ad.jet_variable(X[:, 1], 1, order, 2)


def apply_weights(terms, overrides):
    """Replace default term weights with any ``{name: weight}`` overrides; unknown names are an error."""
    names = {t.name for t in terms}
    unknown = set(overrides) - names
    if unknown:
        raise ValueError(f"weight override for unknown loss terms {sorted(unknown)}; known: {sorted(names)}")
    for t in terms:
        if t.name in overrides:
            w = float(overrides[t.name])
            if not (np.isfinite(w) and w >= 0):
                raise ValueError(f"loss weight must be finite and >= 0, got {w}")
            t.weight = w
    return terms


def check_options(options, allowed, where):
    unknown = set(options) - set(allowed)
    if unknown:
        raise ValueError(f"unknown options for {where}: {sorted(unknown)}")


def grid_1d(lo, hi, n):
    return FieldGrid({"r": np.linspace(lo, hi, n)})
