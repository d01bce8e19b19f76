"""Cross-sectional spaces: pairings, operators, solves, spectral checks."""

from fractions import Fraction

import pytest

from slowvary.algebra import Ring
from slowvary.crosssec import (CrossField, LinvError, SpectralError, apply_op,
                               greens_solve, inner, linv_solve, spectral_check)
from slowvary.exact import ExactScalar
from slowvary.grammar import parse_expr
from slowvary.problems import builtin


def he_setup():
    p = builtin("heat-exchanger-linear")
    ring = Ring(["w_c", "w_d"], tt=["w_c", "w_d"])
    return p, ring, p.build_stack(ring), p.build_spectral(ring)


def shear_setup():
    p = builtin("shear-dispersion")
    ring = Ring([("Pe", 1), "u3x"], tt=["u3x"])
    return p, ring, p.build_stack(ring), p.build_spectral(ring)


def sh_setup(name="swift-hohenberg-linear"):
    p = builtin(name)
    ring = Ring(["w"], tt=["w"])
    return p, ring, p.build_stack(ring), p.build_spectral(ring)


# ---------------------------------------------------------------- pairings

def test_channel_inner_products():
    p, ring, stack, sd = shear_setup()
    one = CrossField.channel(p.space, (ring.one(),))
    ysq = CrossField.channel(p.space, (ring.zero(), ring.zero(), ring.one()))
    assert inner(p.space, [one], [one], ring)[0][0] == 1
    assert inner(p.space, [one], [ysq], ring)[0][0] == Fraction(1, 3)


def test_fourier_inner_conjugates_left():
    p, ring, stack, sd = sh_setup()
    ep = CrossField.fourier(p.space, {1: ring.one()})
    em = CrossField.fourier(p.space, {-1: ring.one()})
    assert inner(p.space, [ep], [ep], ring)[0][0] == 1
    assert inner(p.space, [ep], [em], ring)[0][0] == 0
    g = inner(p.space, sd.z0, sd.v0, ring)
    assert g[0][0] == 1 and g[1][1] == 1 and g[0][1] == 0 and g[1][0] == 0


def test_findim_inner_dot():
    p, ring, stack, sd = he_setup()
    v = CrossField.findim(p.space, (ring.one(), ring.one() * 2))
    assert inner(p.space, sd.z0, [v], ring)[0][0] == 1


# ---------------------------------------------------------------- apply_op

def test_heat_exchanger_l0():
    p, ring, stack, sd = he_setup()
    v = CrossField.findim(p.space, (ring.zero(), ring.one()))
    out = apply_op(stack.ops[0], v)
    assert out.data[0].is_zero()
    assert out.data[1] == -ring.one()


def test_shear_l1_is_minus_velocity():
    p, ring, stack, sd = shear_setup()
    one = CrossField.channel(p.space, (ring.one(),))
    out = apply_op(stack.ops[1], one)
    pe = ring.var("Pe")
    assert out.data[0] == pe * Fraction(-3, 2)
    assert out.data[1].is_zero()
    assert out.data[2] == pe * Fraction(3, 2)


def test_sh_l0_eigenvalues():
    p, ring, stack, sd = sh_setup()
    for k in range(-3, 4):
        ek = CrossField.fourier(p.space, {k: ring.one()})
        out = apply_op(stack.ops[0], ek)
        lam = ExactScalar(-Fraction((1 - k * k) ** 2))
        assert out.mode(k, ring) == ring.scalar(lam)


def test_channel_degree_cap_overflow():
    p, ring, stack, sd = shear_setup()
    with pytest.raises(Exception):
        CrossField.channel(p.space, tuple([ring.one()] * (p.space.degree_cap + 2)))


# -------------------------------------------------------------------- linv

def test_linv_channel_shear_v1():
    p, ring, stack, sd = shear_setup()
    pe = ring.var("Pe")
    rhs = CrossField.channel(p.space, (pe * Fraction(1, 2), ring.zero(),
                                       pe * Fraction(-3, 2)))
    v = linv_solve(p.space, stack, sd, rhs, ExactScalar(0), ring)
    want = (pe * Fraction(-7, 120), ring.zero(), pe * Fraction(1, 4),
            ring.zero(), pe * Fraction(-1, 8))
    assert v == CrossField.channel(p.space, want)


def test_linv_findim_heat_exchanger():
    p, ring, stack, sd = he_setup()
    rhs = CrossField.findim(p.space, (ring.zero(), -ring.one()))
    v = linv_solve(p.space, stack, sd, rhs, ExactScalar(0), ring)
    assert v == CrossField.findim(p.space, (ring.zero(), ring.one()))


def test_linv_fourier_coupling_mode_zero():
    p, ring, stack, sd = sh_setup()
    rhs = CrossField.fourier(p.space, {0: ring.var("w")})
    v = linv_solve(p.space, stack, sd, rhs, ExactScalar(0), ring)
    assert v.mode(0, ring) == ring.var("w").conv(-1)


def test_linv_slow_static_unsolvable():
    p, ring, stack, sd = he_setup()
    rhs = CrossField.findim(p.space, (ring.one(), ring.zero()))
    with pytest.raises(LinvError):
        linv_solve(p.space, stack, sd, rhs, ExactScalar(0), ring)


def test_linv_slow_coupling_gets_atoms():
    p, ring, stack, sd = sh_setup()
    rhs = CrossField.fourier(p.space, {1: ring.var("w")})
    v = linv_solve(p.space, stack, sd, rhs, ExactScalar(0), ring, verify=False)
    assert v.mode(1, ring) == ring.var("w").conv(-1)


def test_linv_channel_requires_zero_mean():
    p, ring, stack, sd = shear_setup()
    rhs = CrossField.channel(p.space, (ring.one(),))
    with pytest.raises(LinvError):
        linv_solve(p.space, stack, sd, rhs, ExactScalar(0), ring)


def test_linv_channel_neumann_and_orthogonality_hold():
    p, ring, stack, sd = shear_setup()
    # a zero-mean polynomial right-hand side: y^4 - 1/5
    rhs = CrossField.channel(p.space, (ring.scalar(Fraction(-1, 5)), ring.zero(),
                                       ring.zero(), ring.zero(), ring.one()))
    v = linv_solve(p.space, stack, sd, rhs, ExactScalar(0), ring)
    dv_at = lambda y: sum(c * Fraction(pw * y ** (pw - 1)) for pw, c in
                          enumerate(v.data) if pw)
    assert dv_at(1).is_zero() and dv_at(-1).is_zero()
    assert inner(p.space, sd.z0, [v], ring)[0][0].is_zero()


def test_greens_solve_matches_convolution():
    p, ring, stack, sd = he_setup()
    res = CrossField.findim(p.space, (ring.zero(), ring.var("w_c") * 5))
    out = greens_solve(p.space, stack, sd, res, ring)
    assert out.data[1] == 5 * ring.var("w_c").conv(-1)
    # static content divides by |rate|
    res2 = CrossField.findim(p.space, (ring.zero(), ring.one() * 3))
    assert greens_solve(p.space, stack, sd, res2, ring).data[1] == ring.one() * 3


def test_greens_solve_rejects_slow_content():
    p, ring, stack, sd = he_setup()
    res = CrossField.findim(p.space, (ring.one(), ring.zero()))
    with pytest.raises(LinvError):
        greens_solve(p.space, stack, sd, res, ring)


# ----------------------------------------------------------- spectral_check

def test_spectral_check_heat_exchanger():
    p, ring, stack, sd = he_setup()
    rep = spectral_check(p.space, stack, sd, 4, ring)
    assert rep.ok
    assert any("-1" in line for line in rep.lines)


def test_spectral_check_shear():
    p, ring, stack, sd = shear_setup()
    assert spectral_check(p.space, stack, sd, 3, ring).ok


def test_spectral_check_swift_hohenberg():
    p, ring, stack, sd = sh_setup()
    rep = spectral_check(p.space, stack, sd, 4, ring)
    assert rep.ok
    rates = [line for line in rep.lines if "stable eigenvalue" in line]
    assert any("harmonic 0" in line and "-1 " in line for line in rates)


def test_spectral_check_detects_broken_eigendata():
    p, ring, stack, sd = he_setup()
    sd.a0 = [[ExactScalar(1)]]
    with pytest.raises(SpectralError):
        spectral_check(p.space, stack, sd, 4, ring)


# ----------------------------------------------------- channel self-adjoint

def test_channel_dyy_self_adjoint_on_neumann_fields():
    p, ring, stack, sd = shear_setup()
    # Neumann family: v' = y^m (1 - y^2); v = y^(m+1)/(m+1) - y^(m+3)/(m+3)
    def neumann(m):
        coeffs = [ring.zero()] * (m + 4)
        coeffs[m + 1] = ring.scalar(Fraction(1, m + 1))
        coeffs[m + 3] = ring.scalar(Fraction(-1, m + 3))
        return CrossField.channel(p.space, tuple(coeffs))

    dyy = stack.ops[0]
    for mz in range(0, 4):
        for mv in range(0, 4):
            z, v = neumann(mz), neumann(mv)
            lhs = inner(p.space, [apply_op(dyy, z)], [v], ring)[0][0]
            rhs = inner(p.space, [z], [apply_op(dyy, v)], ring)[0][0]
            assert lhs == rhs
