import math

import numpy as np
import pytest

from poissonint.core import PoissonSystem, ScalarField, StructureMatrixField, canonical_structure
from poissonint.splitting import SplitSystem, SubFlow


def pendulum_split():
    """H = p^2/2 - cos q on z = (q, p); two exact shear subflows."""
    kin = ScalarField(lambda z: 0.5 * z[1] ** 2, lambda z: np.array([0.0, z[1]]))
    pot = ScalarField(lambda z: -math.cos(z[0]), lambda z: np.array([math.sin(z[0]), 0.0]))
    H = ScalarField(lambda z: kin(z) + pot(z), lambda z: kin.grad(z) + pot.grad(z))
    # canonical_structure orders (p, q) with R = [[0, -I], [I, 0]]; use q, p with the usual sign
    R = StructureMatrixField(2, lambda z: np.array([[0.0, 1.0], [-1.0, 0.0]]),
                             [[None, frozenset()], [frozenset(), None]])
    sys = PoissonSystem(2, R, H, "pendulum")
    flows = [SubFlow(lambda t, z: (z[0] + t * z[1], z[1]), "T", kin),
             SubFlow(lambda t, z: (z[0], z[1] - t * math.sin(z[0])), "V", pot)]
    return sys, SplitSystem(sys, flows, "pendulum")


def lotka_volterra():
    """R = [[0, xy], [-xy, 0]], H = x - ln x + y - ln y."""
    R = StructureMatrixField(2, lambda z: np.array([[0.0, z[0] * z[1]], [-z[0] * z[1], 0.0]]),
                             [[None, frozenset({0, 1})], [frozenset({0, 1}), None]])
    h1 = ScalarField(lambda z: z[0] - math.log(z[0]), lambda z: np.array([1.0 - 1.0 / z[0], 0.0]))
    h2 = ScalarField(lambda z: z[1] - math.log(z[1]), lambda z: np.array([0.0, 1.0 - 1.0 / z[1]]))
    H = ScalarField(lambda z: h1(z) + h2(z), lambda z: h1.grad(z) + h2.grad(z))
    return PoissonSystem(2, R, H, "lotka-volterra"), h1, h2


@pytest.fixture
def pendulum():
    return pendulum_split()


# PASS/FAIL lines from test_acceptance, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
