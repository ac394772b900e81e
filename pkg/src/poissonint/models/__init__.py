"""Concrete Poisson systems with exact subflows, registered by name."""
from __future__ import annotations

from typing import Callable

from .charged_particle import build_example1 as _cp1, build_example2 as _cp2
from .gyrocenter import build_gyro_example1 as _gy1, build_gyro_example2 as _gy2


def _cp_ex2(split: str = "4-way", **kw):
    system, four, six = _cp2(**kw)
    if split == "4-way":
        return system, four
    if split == "6-way":
        return system, six
    raise ValueError(f"cp-ex2 split must be '4-way' or '6-way', got {split!r}")


def _sanity_oscillator():
    """Canonical oscillator H = (p^2 + q^2)/2 whose only subflow is the exact rotation.

    Not a model from the experiments; any splitting method built on it is the
    exact flow, which makes it the zero-energy-error sanity case.
    """
    import math

    import numpy as np

    from ..core import PoissonSystem, ScalarField, canonical_structure
    from ..splitting import SplitSystem, SubFlow

    def h(z):
        z = np.asarray(z, dtype=float)
        return 0.5 * (z[0] ** 2 + z[1] ** 2)

    ham = ScalarField(h, lambda z: np.array([z[0], z[1]], dtype=float), vectorized=True)
    system = PoissonSystem(2, canonical_structure(1), ham, "sanity-oscillator",
                           lambda z: np.array([-z[1], z[0]]))

    def rotate(t, z):
        c, s = math.cos(t), math.sin(t)
        return (c * z[0] - s * z[1], s * z[0] + c * z[1])

    return system, SplitSystem(system, [SubFlow(rotate, "H=(p^2+q^2)/2", ham)], "sanity-oscillator")


MODEL_BUILDERS: dict[str, Callable] = {
    "cp-ex1": _cp1,
    "cp-ex2": _cp_ex2,
    "gy-ex1": _gy1,
    "gy-ex2": _gy2,
    "sanity-oscillator": _sanity_oscillator,
}

EXAMPLE_MODELS = ("cp-ex1", "cp-ex2", "gy-ex1", "gy-ex2")


def build_model(name: str, **params):
    """Return (PoissonSystem, SplitSystem) for a registered model name."""
    try:
        builder = MODEL_BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODEL_BUILDERS)}") from None
    return builder(**params)
