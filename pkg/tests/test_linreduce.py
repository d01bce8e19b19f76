"""Linear reduction: recursion values, Toeplitz identity, remainders, reports."""

from fractions import Fraction

import pytest

from slowvary.algebra import Ring
from slowvary.crosssec import CrossField
from slowvary.exact import ExactScalar
from slowvary.grammar import parse_expr, print_expr
from slowvary.linreduce import (assemble_toeplitz, emit_slow_pde,
                                next_nonzero_coefficient, reduce_linear,
                                remainder_terms)
from slowvary.problems import builtin


def scalar_a(red):
    return [red.A[n][0][0] for n in range(red.order + 1)]


# ------------------------------------------------------------ heat exchanger

def test_heat_exchanger_n4_coefficients():
    red = reduce_linear(builtin("heat-exchanger-linear"), 4)
    a = scalar_a(red)
    assert [print_expr(e) for e in a] == ["0", "0", "1", "0", "-1"]


def test_heat_exchanger_blocks_match_generalised_eigenvectors():
    red = reduce_linear(builtin("heat-exchanger-linear"), 4)
    ring = red.ring
    # V1 = (0,1), V2 = 0, V3 = (0,-1), V4 = 0 (the paper's choice, c-components 1)
    assert red.V[1] == [CrossField.findim(red.problem.space, (ring.zero(), ring.one()))]
    assert red.V[2][0].is_zero()
    assert red.V[3] == [CrossField.findim(red.problem.space, (ring.zero(), -ring.one()))]
    assert red.V[4][0].is_zero()


def test_heat_exchanger_a6_matches_dispersion_series():
    # lambda_slow(k) = -k^2 - k^4 - 2k^6 - ... so A5 = 0 and A6 = 2
    red = reduce_linear(builtin("heat-exchanger-linear"), 6)
    a = scalar_a(red)
    assert a[5].is_zero()
    assert a[6] == 2


def test_prefix_stability():
    p = builtin("heat-exchanger-linear")
    r3 = reduce_linear(p, 3)
    r4 = reduce_linear(p, 4)
    for n in range(4):
        lhs = r3.A[n][0][0]
        rhs = r4.A[n][0][0].convert(r3.ring)
        assert lhs == rhs


# ------------------------------------------------------------------- shear

def test_shear_n3_coefficients_exact():
    red = reduce_linear(builtin("shear-dispersion"), 3)
    ring = red.ring
    pe = ring.var("Pe")
    a = scalar_a(red)
    assert a[1] == -pe
    assert a[2] == ring.one() + pe ** 2 * Fraction(2, 105)
    assert a[3] == pe ** 3 * Fraction(4, 17325)


def test_shear_v1_v2_termwise():
    red = reduce_linear(builtin("shear-dispersion"), 3)
    ring = red.ring
    pe = ring.var("Pe")
    space = red.problem.space
    v1 = CrossField.channel(space, (pe * Fraction(-7, 120), ring.zero(),
                                    pe * Fraction(1, 4), ring.zero(),
                                    pe * Fraction(-1, 8)))
    assert red.V[1][0] == v1
    pe2 = pe ** 2
    v2 = CrossField.channel(space, (
        pe2 * Fraction(-29, 201600), ring.zero(),
        pe2 * Fraction(-17, 3360), ring.zero(),
        pe2 * Fraction(17, 960), ring.zero(),
        pe2 * Fraction(-7, 480), ring.zero(),
        pe2 * Fraction(3, 896)))
    assert red.V[2][0] == v2


def test_shear_a2_at_zero_peclet_is_molecular_diffusion():
    p = builtin("shear-dispersion").with_params({"Pe": Fraction(0)})
    red = reduce_linear(p, 2)
    assert scalar_a(red)[2] == 1


def test_shear_numeric_peclet():
    p = builtin("shear-dispersion").with_params({"Pe": Fraction(2)})
    red = reduce_linear(p, 2)
    assert scalar_a(red)[2] == 1 + Fraction(2, 105) * 4


# ----------------------------------------------------------- Swift-Hohenberg

def test_swift_hohenberg_n4_matrices():
    red = reduce_linear(builtin("swift-hohenberg-linear"), 4)
    ring = red.ring

    def mat(n):
        return [[red.A[n][i][j] for j in range(2)] for i in range(2)]

    for n in (0, 1):
        assert all(e.is_zero() for row in mat(n) for e in row)
    a2 = mat(2)
    assert a2[0][0] == 4 and a2[1][1] == 4
    assert a2[0][1].is_zero() and a2[1][0].is_zero()
    a3 = mat(3)
    assert a3[0][0] == ring.scalar(ExactScalar(0, -4))
    assert a3[1][1] == ring.scalar(ExactScalar(0, 4))
    a4 = mat(4)
    assert a4[0][0] == -1 and a4[1][1] == -1
    # every generalised eigenvector block beyond V0 vanishes
    for n in range(1, 5):
        assert all(v.is_zero() for v in red.V[n])


# ---------------------------------------------------------------- remainders

def test_remainders_second_order_stack_shear():
    n = 3
    p = builtin("shear-dispersion")
    rs = remainder_terms(p, n)
    ring = rs[0].data[0].ring
    u1 = ring.var("u3x")
    u2 = ring.var("u3xx")
    for k in range(n - 1):
        assert rs[k].is_zero()
    # r_{N-1} = (N+1) L2 u_Nx = 4 u3x
    assert rs[n - 1].data[0] == 4 * u1
    # r_N = (N+1) L1 u_Nx + (N+1)(N+2)/2 L2 u_Nxx = -4 w(y) u3x + 10 u3xx
    pe = ring.var("Pe")
    want0 = pe * Fraction(-3, 2) * 4 * u1 + 10 * u2
    assert rs[n].data[0] == want0
    assert rs[n].data[2] == pe * Fraction(3, 2) * 4 * u1


def test_remainders_heat_exchanger_first_order_stack():
    n = 4
    rs = remainder_terms(builtin("heat-exchanger-linear"), n)
    ring = rs[0].data[0].ring
    for k in range(n):
        assert rs[k].is_zero()
    assert rs[n].data[0] == 5 * ring.var("d4x")
    assert rs[n].data[1] == 5 * ring.var("c4x")


def test_remainders_l0_only_stack():
    import slowvary.problems as problems
    from slowvary.crosssec import OperatorStack
    p = builtin("heat-exchanger-linear")
    orig = p.build_stack

    def l0_only(ring):
        return OperatorStack(orig(ring).ops[:1])

    p.build_stack = l0_only
    rs = remainder_terms(p, 3)
    assert all(r.is_zero() for r in rs)


# ------------------------------------------------------------------ Toeplitz

def test_assemble_toeplitz_identity_and_shapes():
    red = reduce_linear(builtin("heat-exchanger-linear"), 2)
    cv, ca = assemble_toeplitz(red)
    assert len(cv) == 3 and len(cv[0]) == 3
    assert ca[0][2] is red.A[2]
    assert all(e.is_zero() for row in ca[1][0] for e in row)


def test_toeplitz_shear_top_row():
    red = reduce_linear(builtin("shear-dispersion"), 3)
    cv, ca = assemble_toeplitz(red)
    ring = red.ring
    pe = ring.var("Pe")
    top = [ca[0][c][0][0] for c in range(4)]
    assert top[0].is_zero()
    assert top[1] == -pe
    assert top[2] == ring.one() + pe ** 2 * Fraction(2, 105)
    assert top[3] == pe ** 3 * Fraction(4, 17325)


def test_toeplitz_n0():
    red = reduce_linear(builtin("heat-exchanger-linear"), 0)
    cv, ca = assemble_toeplitz(red)
    assert len(cv) == 1
    assert cv[0][0] is red.V[0]
    assert ca[0][0] is red.A[0]


# -------------------------------------------------------------------- reports

def test_emit_slow_pde_heat_exchanger():
    red = reduce_linear(builtin("heat-exchanger-linear"), 4)
    rep = emit_slow_pde(red)
    assert rep.pde[0] == "dc/dt = c_xx - c_xxxx + coupling"
    assert ("A2", "1") in rep.coefficients
    assert ("A4", "-1") in rep.coefficients
    assert any("O(d^6 u/dx^6)" in note for note in rep.notes)


def test_emit_slow_pde_shear():
    red = reduce_linear(builtin("shear-dispersion"), 3)
    rep = emit_slow_pde(red, classify=False)
    assert rep.pde[0] == ("dc/dt = -Pe*c_x + (1 + 2/105*Pe^2)*c_xx "
                          "+ 4/17325*Pe^3*c_xxx + coupling")


def test_emit_slow_pde_swift_hohenberg():
    red = reduce_linear(builtin("swift-hohenberg-linear"), 4)
    rep = emit_slow_pde(red)
    assert rep.pde[0] == "dcp/dt = 4*cp_xx - 4i*cp_xxx - cp_xxxx + coupling"
    assert rep.pde[1] == "dcm/dt = 4*cm_xx + 4i*cm_xxx - cm_xxxx + coupling"
    assert any("exact" in n for n in rep.notes)


def test_next_nonzero_coefficient():
    assert next_nonzero_coefficient(builtin("heat-exchanger-linear"), 4) == 6
    assert next_nonzero_coefficient(builtin("swift-hohenberg-linear"), 4) is None
