"""Benchmark registry: ``build_problem(name, variant, **options)``."""
from __future__ import annotations

from . import circular_plate, foundation, lame, rectangular_plate
from .base import ProblemSpec

REGISTRY = {
    "lame": (lame.build, lame.VARIANTS),
    "foundation": (foundation.build, foundation.VARIANTS),
    "circular_plate": (circular_plate.build, circular_plate.VARIANTS),
    "rectangular_plate": (rectangular_plate.build, rectangular_plate.MODES),
}


def build_problem(name, variant, **options) -> ProblemSpec:
    if name not in REGISTRY:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(REGISTRY)}")
    build, variants = REGISTRY[name]
    if variant not in variants:
        raise ValueError(f"unknown variant {variant!r} for {name}; choose from {variants}")
    return build(variant, **options)


__all__ = ["REGISTRY", "ProblemSpec", "build_problem"]
