import math

import numpy as np
import pytest
from scipy import optimize
from scipy.integrate import solve_ivp

from poissonint.core import (check_jacobi_identity, check_poisson_map, check_skew_symmetry, probe_points,
                             structure_times_gradient)
from poissonint.errors import DegenerateStructure, DegenerateSubflow, NonMonotone
from poissonint.experiments import curl_residual
from poissonint.models.gyrocenter import (EXAMPLE1_Z0, EXAMPLE2_Z0, build_gyro_example1, build_gyro_example2,
                                          gyro_example1_definition, gyro_example2_definition, gyro_structure,
                                          real_cbrt, solve_monotone_cubic)
from poissonint.splitting import integrate, make_integrator, strang_step

Z1 = np.array(EXAMPLE1_Z0, dtype=float)
Z2 = np.array(EXAMPLE2_Z0, dtype=float)


def piece_oracle(system, piece, z0, t):
    sol = solve_ivp(lambda _, z: system.structure(z) @ piece.grad(z), (0, t), z0, method="DOP853",
                    rtol=1e-12, atol=1e-12)
    return sol.y[:, -1]


@pytest.fixture(scope="module")
def ex1():
    return build_gyro_example1()


@pytest.fixture(scope="module")
def ex2():
    return build_gyro_example2()


def test_example1_values():
    g = gyro_example1_definition()
    assert g.hamiltonian(Z1) == pytest.approx(4986.0, rel=1e-14)
    assert np.allclose(g.B(Z1[:3]), [3600 / math.sqrt(2), 3600 / math.sqrt(2), 0.0])
    assert g.denominator(Z1) == pytest.approx(3600.0, rel=1e-14)


def test_example2_values():
    g = gyro_example2_definition()
    assert g.hamiltonian(Z2) == pytest.approx(4451.3, rel=1e-14)
    assert np.allclose(g.B(Z2[:3]), [0.0, 0.0, 1300.0])


@pytest.mark.parametrize("make,center", [(gyro_example1_definition, Z1), (gyro_example2_definition, Z2)])
def test_structure_inverts_k(make, center):
    g = make()
    for z in probe_points(5, center, 5.0, 10):
        R = gyro_structure(g, z)
        assert np.max(np.abs(R @ g.k_matrix(z) - np.eye(4))) < 1e-10
        assert check_skew_symmetry(g.as_poisson_system().structure, z) <= 1e-13


@pytest.mark.parametrize("make,center", [(gyro_example1_definition, Z1), (gyro_example2_definition, Z2)])
def test_jacobi_and_curl(make, center):
    g = make()
    sys = g.as_poisson_system()
    for z in probe_points(6, center, 5.0, 5):
        scale = np.max(np.abs(sys.structure(z)))
        assert check_jacobi_identity(sys.structure, z) <= 1e-6 * max(1.0, scale)
        assert curl_residual(g, z[:3]) < 1e-6


def test_example1_denominator_is_z_squared():
    g = gyro_example1_definition()
    for z in probe_points(2, Z1, 20.0, 10):
        assert g.denominator(z) == pytest.approx(z[2] ** 2, rel=1e-10)


def test_closed_vector_fields_match_product():
    for g, z in ((gyro_example1_definition(), Z1), (gyro_example2_definition(), Z2)):
        sys = g.as_poisson_system()
        assert np.allclose(sys.vector_field(z), structure_times_gradient(sys, z), rtol=1e-12, atol=1e-12)


def test_degenerate_structure_raises():
    g = gyro_example1_definition()
    with pytest.raises(DegenerateStructure):
        g.structure_matrix(np.array([1.0, 2.0, 0.0, 1.0]))
    g2 = gyro_example2_definition()
    with pytest.raises(DegenerateStructure):
        g2.structure_matrix(np.array([0.0, 0.0, 1.0, 1.0]))


def test_example1_h1_closed_form(ex1):
    _, split = ex1
    z = split.subflows[0](0.25, Z1)
    assert z[2] == pytest.approx((216000 + 3 * math.sqrt(2) * 10 * 0.25) ** (1 / 3), rel=1e-14)
    assert z[2] == pytest.approx(60.0009820, abs=1e-6)
    assert z[3] == pytest.approx(70 - math.sqrt(2) * 70 * 0.25, rel=1e-14)
    assert z[0] == 30.0 and z[1] == 40.0


def test_example1_h2_matches_oracle(ex1):
    sys, split = ex1
    sub = split.subflows[1]
    z = sub(0.25, Z1)
    assert z[2] == 60.0 and z[3] == 70.0
    assert np.allclose(z, piece_oracle(sys, sub.piece, Z1, 0.25), rtol=1e-9)


def test_real_cbrt_odd():
    assert real_cbrt(-27.0) == pytest.approx(-3.0)
    assert real_cbrt(8.0) == pytest.approx(2.0)


def test_example1_subflow_crossing_zero_raises(ex1):
    _, split = ex1
    # 3 sqrt2 (y - x) t + z^3 = 0 at t = 1/(3 sqrt2) for (x, y, z) = (1, 0, 1)
    with pytest.raises(DegenerateStructure):
        split.subflows[0](1.0 / (3 * math.sqrt(2)), [1.0, 0.0, 1.0, 0.0])


def test_example2_cubic_root():
    # 15 y + y^3/180 = 0.0001 + 300 + 8000/180
    y = solve_monotone_cubic(15.0, 1.0 / 180.0, 20.0, 1e-4)
    oracle = optimize.brentq(lambda s: 15 * s + s ** 3 / 180 - (1e-4 + 300 + 8000 / 180), 19.0, 21.0,
                             xtol=1e-15)
    assert y == pytest.approx(oracle, rel=1e-13)
    assert y == pytest.approx(20.0000047, abs=1e-6)
    assert solve_monotone_cubic(15.0, 1.0 / 180.0, 20.0, 0.0) == 20.0


@pytest.mark.parametrize("c1, c3, y0, rhs", [
    (15.0, 1.0 / 180.0, 20.0, 1e-4),
    (-0.5, -1.0 / 6.0, 1.0, 3e-3),       # decreasing cubic
    (2.0, 0.0, -1.0, 0.5),               # linear
    (0.0, 3.0, 2.0, -40.0),              # pure cube, root crosses zero
    (1e-8, 1e4, 0.3, 1e3),               # cubic term dominates
    (1e6, 1e-9, -5.0, 1e-12),            # increment far below |y0|
])
def test_cubic_matches_brentq(c1, c3, y0, rhs):
    target = c1 * y0 + c3 * y0 ** 3 + rhs
    oracle = optimize.brentq(lambda s: c1 * s + c3 * s ** 3 - target, -100.0, 100.0, xtol=1e-15, rtol=1e-15)
    y = solve_monotone_cubic(c1, c3, y0, rhs)
    assert y == pytest.approx(oracle, rel=1e-13, abs=1e-15)
    d = y - y0
    assert d * (c1 + c3 * (3 * y0 * y0 + 3 * y0 * d + d * d)) == pytest.approx(rhs, rel=1e-8)


def test_cubic_non_monotone_and_degenerate(ex2):
    with pytest.raises(NonMonotone):
        solve_monotone_cubic(1.0, -1.0, 0.0, 1.0)
    _, split = ex2
    with pytest.raises(DegenerateSubflow):
        split.subflows[0](0.1, [0.0, 1.0, 1.0, 1.0])
    with pytest.raises(DegenerateSubflow):
        split.subflows[1](0.1, [1.0, 0.0, 1.0, 1.0])


def test_example2_h1_slope_at_zero(ex2):
    sys, split = ex2
    sub = split.subflows[0]
    t = 1e-3
    dy = (sub(t, Z2)[1] - sub(-t, Z2)[1]) / (2 * t)
    expected = 0.001 / (30 / 2 + 20 ** 2 / (2 * 30))
    assert dy == pytest.approx(expected, rel=1e-8)
    assert (sys.structure(Z2) @ sub.piece.grad(Z2))[1] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("k", range(4))
def test_example2_subflows_match_oracle_and_conserve_piece(ex2, k):
    sys, split = ex2
    sub = split.subflows[k]
    z = sub(0.3, Z2)
    assert np.allclose(z, piece_oracle(sys, sub.piece, Z2, 0.3), rtol=1e-9)
    assert sub.piece(z) == pytest.approx(sub.piece(Z2), rel=1e-12)


def test_example2_pieces_sum(ex2):
    _, split = ex2
    assert split.pieces_sum_residual(probe_points(4, Z2, 5.0, 10)) < 1e-12


@pytest.mark.parametrize("build,z0", [(build_gyro_example1, Z1), (build_gyro_example2, Z2)])
def test_subflows_are_poisson_maps(build, z0):
    sys, split = build()
    for sub in split.subflows:
        assert check_poisson_map(lambda z: sub(0.1, z), sys.structure, z0) <= 1e-6


def test_strang_time_symmetry(ex1):
    _, split = ex1
    back = strang_step(split, 0.25, strang_step(split, -0.25, Z1))
    assert np.allclose(back, Z1, atol=1e-10)


def test_example2_first_and_second_order():
    sys, split = build_gyro_example2()
    T = 2.0
    ref = solve_ivp(lambda _, z: sys.vector_field(z), (0, T), Z2, method="DOP853", rtol=1e-13, atol=1e-10).y[:, -1]
    for name, order in (("1stEPI", 1), ("2ndEPI", 2)):
        errs = [np.max(np.abs(integrate(make_integrator(name, split), Z2, T / n, n).final_state - ref))
                for n in (40, 80, 160)]
        slope = math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2])
        assert all(abs(s - order) < 0.3 for s in slope)


def test_bad_constants_rejected():
    with pytest.raises(ValueError):
        gyro_example2_definition(a=0.0)
