"""Nonlinear slow-manifold constructions.

Two routes compute the same manifold and cross-validate each other:

* the *direct* route iterates the per-Taylor-coefficient residual
  equations: each pass wraps the stable-equation residual in the history
  convolution (manifold update) and divides the slow-equation residual
  by its amplitude weight (evolution update), coefficient by coefficient,
  until every residual vanishes in the truncated ring;

* the *generating* route packages the local derivatives into a
  polynomial in the artificial variable xi (d/dxi standing in for d/dx)
  and iterates the generating-polynomial equation
      d/dt u~ = sum_ell L_ell d^ell/dxi^ell u~ + f(u~, du~/dxi, ...) + r[u]
  under the combined truncation small^p xi^q => 0 when p + q >= bound.
  Resonant (slow-mode) residual content updates the evolution; the rest
  updates the manifold through the stable convolution solve.

The amplitude grading counts the n-th local derivative as order n + 1
and coupling symbols as order N + 1; the bifurcation parameter r (where
present) is second order.  FiniteDim generating fields are unweighted
with an explicit counter small^(graded order - 1) per multinomial term;
Fourier fields carry one counter per amplitude factor.  These are the
two bookkeeping conventions the shipped results are pinned against.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from math import comb, factorial

from .algebra import DependencyTable, HistoryExpr, Ring
from .crosssec import (CrossField, _constant_of, _require_diagonal, apply_op,
                       greens_solve, mul_fields, spectral_check)
from .errors import ConstructionError, ValidationError
from .grammar import print_expr
from .problems import MultinomialAST, ProblemSpec, graded_degree
from .report import ModelReport

ITERATION_CAP = 99


@dataclass
class SlowManifold:
    problem: ProblemSpec
    order: int
    style: str                 # "direct" | "generating"
    ring: Ring
    manifold: dict             # name -> HistoryExpr | CrossField
    evolution: dict            # amplitude name -> HistoryExpr
    bound: int
    grading: str
    iterations: int = 0
    residual_log: list = dc_field(default_factory=list)
    slow: tuple = ()
    stable: tuple = ()


@dataclass
class CouplingTerm:
    """The r[u] remainder: binom-weighted operator images of derivatives
    of the highest resolved Taylor coefficient, tagged with the
    nonlinear order that absorbs everything beyond."""
    order: int
    value: object              # tuple of HistoryExpr (FiniteDim) or CrossField
    nonlinear_tag: str


def _classify_components(stack, m):
    slow, stable, rates = [], [], {}
    _require_diagonal(stack.ops[0], m)
    for i in range(m):
        lam = _constant_of(stack.ops[0].entries[i][i])
        if lam == 0:
            slow.append(i)
        else:
            if not lam.is_real() or lam.re >= 0:
                raise ValidationError(f"component {i} rate {lam} is not stable")
            stable.append(i)
            rates[i] = lam.re
    return tuple(slow), tuple(stable), rates


def _nonlinearity(problem):
    if problem.nonlinearity is None:
        return tuple(MultinomialAST(()) for _ in problem.field_names)
    return problem.nonlinearity


def _nl_order(problem):
    if problem.nonlinearity is None:
        return 2
    fields = set(problem.field_names)
    degs = [graded_degree(t, fields, problem.params)
            for ast in problem.nonlinearity for t in ast.terms]
    return min(degs) if degs else 2


def _stack_lmax(problem):
    probe = Ring([p for p in problem.symbolic_params()])
    return len(problem.build_stack(probe).ops) - 1


def _chain(base, length):
    return tuple([base] + [base + "_" + "x" * k for k in range(1, length + 1)])


# ===================================================================== direct

def reduce_nonlinear_direct(problem: ProblemSpec, order: int,
                            error_offset: int = None) -> SlowManifold:
    """Per-coefficient construction for FiniteDim problems: arrays of
    manifold entries d_n(c) and evolutions g_n, iterated to zero residual."""
    if problem.space.kind != "findim":
        raise ValidationError("the per-coefficient construction supports "
                              "FiniteDim cross-sections only")
    p_off = problem.error_offset if error_offset is None else error_offset
    bound = order + p_off + 1
    m = problem.space.m
    lmax = _stack_lmax(problem)
    names = problem.coupling_names(order, max_deriv=max(lmax, 1))
    coupling = sorted(set(names.values()))
    coeff_names = [f"{problem.field_names[i]}{n}"
                   for n in range(order + 1) for i in range(m)]
    ring = Ring([("small", 1)] + list(problem.symbolic_params())
                + coeff_names + coupling,
                tt=coupling, bound=bound, xi=None)
    stack = problem.build_stack(ring)
    slow, stable, rates = _classify_components(stack, m)
    sd = problem.build_spectral(ring)
    spectral_check(problem.space, stack, sd, order, ring)
    fasts = _nonlinearity(problem)
    small = ring.var("small")
    fields = problem.field_names

    dmap = {(n, i): ring.zero() for n in range(order + 1) for i in stable}
    g0 = {(n, i): ring.zero() for n in range(order + 1) for i in slow}

    def value(i, n):
        """n-th local derivative of component i: weighted slow symbol,
        current manifold entry, or weighted coupling symbol beyond N."""
        if n <= order:
            if i in stable:
                return dmap[(n, i)]
            return small ** (n + 1) * ring.var(f"{fields[i]}{n}")
        k = n - order
        if (i, k) not in names:
            return ring.zero()  # beyond the resolved coupling derivatives
        return small ** (order + 1) * ring.var(names[(i, k)])

    def nonlinear_coeff(term, n):
        """n-th local derivative of one multinomial term (Leibniz)."""
        factor_list = []
        params = ring.one()
        for sym, dx, power in term.factors:
            if sym in problem.params:
                w = problem.params[sym]
                params = params * (small ** w * problem.param_expr(ring, sym)) ** power
            else:
                factor_list.extend([(fields.index(sym), dx)] * power)
        total = ring.zero()
        for split in _compositions(n, len(factor_list)):
            prod = ring.scalar(term.coef) * params * _multinomial(n, split)
            for (i, dx), k in zip(factor_list, split):
                prod = prod * value(i, dx + k)
                if prod.is_zero():
                    break
            total = total + prod
        return total

    def coupling_rhs(n, i):
        acc = ring.zero()
        for k in range(1, lmax + 1):
            ell = k + order - n
            if ell < 1 or ell > lmax:
                continue
            row = stack.ops[ell].entries[i]
            for j in range(m):
                if not row[j].is_zero():
                    w = small ** (order + 1) * ring.var(names[(j, k)])
                    acc = acc + row[j] * w * comb(k + order, order)
        return acc

    def rhs(n, i):
        acc = ring.zero()
        for ell in range(len(stack.ops)):
            if n + ell > order:
                break
            row = stack.ops[ell].entries[i]
            for j in range(m):
                if not row[j].is_zero():
                    acc = acc + row[j] * value(j, n + ell)
        for term in fasts[i].terms:
            acc = acc + nonlinear_coeff(term, n)
        return acc + coupling_rhs(n, i)

    def deps():
        rules = {f"{fields[i]}{n}": g0[(n, i)]
                 for n in range(order + 1) for i in slow}
        return DependencyTable(ring, rules)

    sm = SlowManifold(problem, order, "direct", ring, {}, {}, bound,
                      grading=f"c_n ~ ||u||^(n+1), coupling ~ ||u||^{order + 1}, "
                              f"absolute errors O(||u||^{bound})",
                      slow=slow, stable=stable)
    for iteration in range(1, ITERATION_CAP + 1):
        clean = True
        touched = 0
        for n in range(order + 1):
            table = deps()
            for i in stable:
                resd = -dmap[(n, i)].ddt(table) + rhs(n, i)
                if not resd.is_zero():
                    clean = False
                    touched += len(resd.terms)
                    dmap[(n, i)] = dmap[(n, i)] + resd.conv(rates[i])
            table = deps()
            for i in slow:
                resc = -(small ** (n + 1)) * g0[(n, i)] + rhs(n, i)
                if not resc.is_zero():
                    clean = False
                    touched += len(resc.terms)
                    g0[(n, i)] = g0[(n, i)] + resc.div_power("small", n + 1)
        sm.iterations = iteration
        sm.residual_log.append(f"pass {iteration}: updated terms {touched}")
        if clean:
            break
    else:
        raise ConstructionError(f"no convergence in {ITERATION_CAP} passes")

    for n in range(order + 1):
        for i in stable:
            sm.manifold[f"{fields[i]}{n}"] = dmap[(n, i)]
        for i in slow:
            sm.evolution[f"{fields[i]}{n}"] = g0[(n, i)]
    return sm


def _compositions(n, parts):
    if parts == 0:
        if n == 0:
            yield ()
        return
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


def _multinomial(n, split):
    out = factorial(n)
    for k in split:
        out //= factorial(k)
    return Fraction(out)


# ================================================================== coupling

def assemble_coupling(problem: ProblemSpec, order: int, modes: int = None
                      ) -> CouplingTerm:
    """The r[u] remainder in generating form."""
    tag = f"O(||u||^{order + _nl_order(problem)} + xi^{order + _nl_order(problem)})"
    if problem.space.kind == "fourier":
        cap = problem.coupling_cap if modes is None else modes
        ring, _chains, names, stack = _fourier_ring(problem, order, cap)
        return CouplingTerm(order, _fourier_coupling(problem, ring, names,
                                                     stack, order), tag)
    if problem.space.kind == "findim":
        ring, _chain_names, names, stack = _findim_ring(problem, order)
        return CouplingTerm(order, _findim_coupling(problem, ring, names,
                                                    stack, order), tag)
    raise ValidationError("no coupling assembly for channel problems")


# ----------------------------------------------------- FiniteDim, B.4 style

def _findim_ring(problem, order, error_offset=None):
    p_off = problem.error_offset if error_offset is None else error_offset
    bound = order + p_off
    lmax = _stack_lmax(problem)
    names = problem.coupling_names(order, max_deriv=max(lmax, 1))
    coupling = sorted(set(names.values()))
    chain = _chain("tc", bound + 2)
    ring = Ring([("small", 1), ("xi", 1)] + list(problem.symbolic_params())
                + list(chain) + coupling,
                tt=coupling, chains=[chain], bound=bound)
    stack = problem.build_stack(ring)
    return ring, chain, names, stack


def _findim_coupling(problem, ring, names, stack, order):
    """Relative-style r[u]: small^(N-n) xi^n/n! binom(n+ell,N) L_ell u^(k)."""
    m = problem.space.m
    lmax = len(stack.ops) - 1
    small, xi = ring.var("small"), ring.var("xi")
    vec = [ring.zero() for _ in range(m)]
    for ell in range(1, lmax + 1):
        op = stack.ops[ell]
        for n in range(max(order - ell + 1, 0), order + 1):
            k = n + ell - order
            u = [ring.var(names[(j, k)]) for j in range(m)]
            factor = (small ** (order - n)) * (xi ** n) \
                * Fraction(comb(n + ell, order), factorial(n))
            for i in range(m):
                acc = ring.zero()
                for j in range(m):
                    if not op.entries[i][j].is_zero():
                        acc = acc + op.entries[i][j] * u[j]
                vec[i] = vec[i] + acc * factor
    return tuple(vec)


def _generating_findim(problem, order, error_offset=None):
    ring, chain, names, stack = _findim_ring(problem, order, error_offset)
    bound = ring.bound
    m = problem.space.m
    slow, stable, rates = _classify_components(stack, m)
    if len(slow) != 1 or len(stable) != 1:
        raise ValidationError("the generating construction expects one slow "
                              "and one stable component")
    i_s, i_d = slow[0], stable[0]
    sd = problem.build_spectral(ring)
    spectral_check(problem.space, stack, sd, order, ring)
    fasts = _nonlinearity(problem)
    small = ring.var("small")
    coupling_vec = _findim_coupling(problem, ring, names, stack, order)
    fields = set(problem.field_names)

    def f_value(i, state):
        acc = ring.zero()
        for term in fasts[i].terms:
            deg = graded_degree(term, fields, problem.params)
            prod = ring.scalar(term.coef) * small ** (deg - 1)
            for sym, dx, power in term.factors:
                if sym in problem.params:
                    prod = prod * problem.param_expr(ring, sym) ** power
                else:
                    j = problem.field_names.index(sym)
                    prod = prod * state[j].diff("xi", dx) ** power
                if prod.is_zero():
                    break
            acc = acc + prod
        return acc

    def rhs(i, state):
        acc = ring.zero()
        for ell in range(len(stack.ops)):
            row = stack.ops[ell].entries[i]
            for j in range(m):
                if not row[j].is_zero():
                    acc = acc + row[j] * (small ** ell) * state[j].diff("xi", ell)
        return acc + f_value(i, state) + coupling_vec[i]

    tc = ring.var("tc")
    td = ring.zero()
    sm = SlowManifold(problem, order, "generating", ring, {}, {}, bound,
                      grading="relative counter: each field factor and each "
                              f"d/dxi one order; residuals O(small^{bound} "
                              f"+ xi^{bound})",
                      slow=slow, stable=stable)
    for iteration in range(1, ITERATION_CAP + 1):
        state = [None] * m
        state[i_s] = tc
        state[i_d] = td
        dcdt = rhs(i_s, state)
        table = DependencyTable(ring, {"tc": dcdt})
        resd = -td.ddt(table) + rhs(i_d, state)
        sm.iterations = iteration
        sm.residual_log.append(f"pass {iteration}: residual terms {len(resd.terms)}")
        if resd.is_zero():
            break
        td = td + resd.conv(rates[i_d])
    else:
        raise ConstructionError(f"no convergence in {ITERATION_CAP} passes")

    state = [None] * m
    state[i_s] = tc
    state[i_d] = td
    sm.manifold["td"] = td
    sm.evolution["tc"] = rhs(i_s, state)
    return sm


# -------------------------------------------------- PeriodicFourier, C style

AMP_NAMES = ("cp", "cm")


def _fourier_ring(problem, order, cap, error_offset=None):
    p_off = problem.error_offset if error_offset is None else error_offset
    bound = order + p_off
    lmax = _stack_lmax(problem)
    names = problem.coupling_names(order, max_deriv=max(lmax, 1))
    names = {(mode, k): v for (mode, k), v in names.items() if abs(mode) <= cap}
    coupling = sorted(set(names.values()))
    chains = [_chain(a, bound + 2) for a in AMP_NAMES]
    ring = Ring([("small", 1), ("xi", 1)] + list(problem.symbolic_params())
                + [n for ch in chains for n in ch] + coupling,
                tt=coupling, chains=chains, bound=bound)
    stack = problem.build_stack(ring)
    return ring, chains, names, stack


def _fourier_coupling(problem, ring, names, stack, order):
    """Absolute-style r[u]: xi^n/n!/small^n binom(n+ell,N) L_ell u_N^(k),
    the coupling field carrying small^(N+1)."""
    space = problem.space
    lmax = len(stack.ops) - 1
    small, xi = ring.var("small"), ring.var("xi")
    cap = max(abs(mode) for (mode, _k) in names)
    total = CrossField.zero(space, ring)
    for ell in range(1, lmax + 1):
        for n in range(max(order - ell + 1, 0), order + 1):
            k = n + ell - order
            u = CrossField.fourier(space, {mode: ring.var(names[(mode, k)])
                                           for mode in range(-cap, cap + 1)})
            img = apply_op(stack.ops[ell], u)
            factor = (small ** (order + 1)).div_power("small", n) * (xi ** n) \
                * Fraction(comb(n + ell, order), factorial(n))
            total = total + img.map_entries(lambda e: e * factor)
    return total


def _generating_fourier(problem, order, error_offset=None):
    cap = problem.coupling_cap
    ring, chains, names, stack = _fourier_ring(problem, order, cap, error_offset)
    bound = ring.bound
    space = problem.space
    sd = problem.build_spectral(ring)
    spectral_check(problem.space, stack, sd, order, ring)
    slow_modes = sorted((next(iter(v.data)) for v in sd.v0), reverse=True)
    amp_of_mode = dict(zip(slow_modes, AMP_NAMES))
    fasts = _nonlinearity(problem)
    small = ring.var("small")
    ru = _fourier_coupling(problem, ring, names, stack, order)
    if len(fasts) != 1:
        raise ValidationError("Fourier problems carry a single field")

    def f_value(tu):
        acc = CrossField.zero(space, ring)
        for term in fasts[0].terms:
            coef = ring.scalar(term.coef)
            prod = None
            for sym, dx, power in term.factors:
                if sym in problem.params:
                    w = problem.params[sym]
                    coef = coef * (small ** w * problem.param_expr(ring, sym)) ** power
                else:
                    base = tu.map_entries(lambda e, d=dx: e.diff("xi", d) * small ** d)
                    for _ in range(power):
                        prod = base if prod is None else mul_fields(prod, base)
            if prod is None:
                raise ValidationError("nonlinearity term with no field factor")
            acc = acc + prod.map_entries(lambda e: e * coef)
        return acc

    def rhs(tu):
        acc = None
        for ell in range(len(stack.ops)):
            img = apply_op(stack.ops[ell],
                           tu.map_entries(lambda e, l=ell: e.diff("xi", l) * small ** l))
            acc = img if acc is None else acc + img
        return acc + f_value(tu) + ru

    tu = CrossField.fourier(space, {mode: small * ring.var(amp_of_mode[mode])
                                    for mode in slow_modes})
    g = {a: ring.zero() for a in AMP_NAMES}
    sm = SlowManifold(problem, order, "generating", ring, {}, {}, bound,
                      grading="amplitude counter on the field (one per factor), "
                              f"r second order; residuals O(small^{bound} "
                              f"+ xi^{bound})",
                      slow=tuple(slow_modes), stable=())
    for iteration in range(1, ITERATION_CAP + 1):
        table = DependencyTable(ring, dict(g))
        resu = tu.ddt(table).map_entries(lambda e: -e) + rhs(tu)
        nterms = sum(len(e.terms) for e in resu.data.values())
        sm.iterations = iteration
        sm.residual_log.append(f"pass {iteration}: residual terms {nterms}")
        if all(e.is_zero() for e in resu.data.values()):
            break
        rest = dict(resu.data)
        for mode in slow_modes:
            gd = rest.pop(mode, ring.zero())
            if not gd.is_zero():
                g[amp_of_mode[mode]] = g[amp_of_mode[mode]] + gd.div_power("small", 1)
        tu = tu + greens_solve(space, stack, sd, CrossField.fourier(space, rest), ring)
    else:
        raise ConstructionError(f"no convergence in {ITERATION_CAP} passes")

    sm.manifold["tu"] = tu
    for a in AMP_NAMES:
        sm.evolution[a] = g[a]
    return sm


def reduce_nonlinear(problem: ProblemSpec, order: int,
                     error_offset: int = None) -> SlowManifold:
    """Generating-polynomial construction; dispatches on the cross-section."""
    if problem.space.kind == "findim":
        return _generating_findim(problem, order, error_offset)
    if problem.space.kind == "fourier":
        return _generating_fourier(problem, order, error_offset)
    raise ValidationError("nonlinear channel constructions are outside the "
                          "supported problem class")


# ================================================== extraction and comparison

def extract_taylor(sm: SlowManifold):
    """Taylor-coefficient form of a generating FiniteDim result: substitute
    tc -> sum_j xi^j/j! c_j, read off small^(n+1) n! [xi^n] per entry.

    Returns (ring, manifold dict, evolution dict) in the direct
    construction's weighted labelling, truncated to its absolute bound."""
    if sm.style != "generating" or sm.problem.space.kind != "findim":
        raise ConstructionError("extraction applies to generating FiniteDim results")
    problem, order = sm.problem, sm.order
    lmax = _stack_lmax(problem)
    names = problem.coupling_names(order, max_deriv=max(lmax, 1))
    coupling = sorted(set(names.values()))
    slow_field = problem.field_names[sm.slow[0]]
    stable_field = problem.field_names[sm.stable[0]]
    cvars = [f"{slow_field}{n}" for n in range(order + 1)]
    chain = _chain("tc", sm.bound + 2)
    # unbounded carrier ring holding both chain and coefficient symbols
    carrier = Ring([("small", 1), ("xi", 1)] + list(problem.symbolic_params())
                   + cvars + coupling + list(chain), tt=coupling)
    xi = carrier.var("xi")
    small = carrier.var("small")
    repls = []
    for k in range(len(chain)):
        acc = carrier.zero()
        for j in range(k, order + 1):
            acc = acc + carrier.var(cvars[j]) * xi ** (j - k) \
                * Fraction(1, factorial(j - k))
        repls.append(acc)
    cmp_ring = Ring([("small", 1), ("xi", 1)] + list(problem.symbolic_params())
                    + cvars + coupling, tt=coupling)
    bound_abs = order + _nl_order(problem) + 1

    def extract(e, label_field):
        moved = e.convert(carrier)
        for k, name in enumerate(chain):
            if moved.max_power(name):
                moved = moved.subs(name, repls[k])
        moved = moved.convert(cmp_ring)
        out = {}
        for n in range(order + 1):
            coeff = moved.coeff_of("xi", n) \
                * cmp_ring.var("small") ** (n + 1) * factorial(n)
            out[f"{label_field}{n}"] = coeff.truncate(bound_abs)
        return out

    manifold = extract(sm.manifold["td"], stable_field)
    evolution = extract(sm.evolution["tc"], slow_field)
    return cmp_ring, manifold, evolution


def extract_taylor_compare(sm_gen: SlowManifold, sm_direct: SlowManifold):
    """Termwise exact difference of the two constructions; empty on
    agreement.  The direct evolutions are re-weighted by small^(n+1) to
    match the extracted absolute form."""
    if sm_gen.order != sm_direct.order:
        raise ConstructionError("constructions are at different orders")
    cmp_ring, man, evo = extract_taylor(sm_gen)
    small = cmp_ring.var("small")
    bound_abs = sm_direct.bound
    diffs = []
    for label, gen_e in man.items():
        direct_e = sm_direct.manifold[label].convert(cmp_ring)
        d = (gen_e - direct_e).truncate(bound_abs)
        if not d.is_zero():
            diffs.append((label, d))
    for label, gen_e in evo.items():
        n = int(label[len(label.rstrip("0123456789")):])
        direct_e = sm_direct.evolution[label].convert(cmp_ring) * small ** (n + 1)
        d = (gen_e - direct_e).truncate(bound_abs)
        if not d.is_zero():
            diffs.append((label, d))
    return diffs


# ============================================================ station display

def station_forms(sm: SlowManifold):
    """Manifold and evolution with the order counter stripped (small -> 1)
    and Taylor symbols kept: the displayed forms of the construction.

    Returns (ring, manifold dict, evolution dict); generating results are
    extracted to Taylor form first so both routes share a labelling."""
    problem, order = sm.problem, sm.order
    if sm.style == "generating" and problem.space.kind == "findim":
        src_ring, man, evo = extract_taylor(sm)
        items = list(man.items()) + list(evo.items())
    elif problem.space.kind == "findim":
        src_ring = sm.ring
        items = list(sm.manifold.items()) + list(sm.evolution.items())
        man, evo = sm.manifold, sm.evolution
    else:
        return _station_forms_fourier(sm)
    lmax = _stack_lmax(problem)
    coupling = sorted(set(problem.coupling_names(order,
                                                 max_deriv=max(lmax, 1)).values()))
    coeffs = [f"{f}{n}" for n in range(order + 1) for f in problem.field_names]
    disp = Ring([("small", 0)] + list(problem.symbolic_params())
                + coeffs + coupling, tt=coupling, xi=None)
    out_ring = Ring(list(problem.symbolic_params()) + coeffs + coupling,
                    tt=coupling, xi=None)

    def strip(e):
        moved = e.convert(disp)
        return moved.subs("small", disp.one()).convert(out_ring)

    man_out = {k: strip(v) for k, v in man.items()}
    evo_out = {k: strip(v) for k, v in evo.items()}
    return out_ring, man_out, evo_out


def _station_forms_fourier(sm: SlowManifold):
    problem, order = sm.problem, sm.order
    lmax = _stack_lmax(problem)
    coupling = sorted(set(problem.coupling_names(order,
                                                 max_deriv=max(lmax, 1)).values()))
    chains = [_chain(a, sm.bound + 2) for a in AMP_NAMES]
    allchain = [n for ch in chains for n in ch]
    disp = Ring([("small", 0)] + list(problem.symbolic_params())
                + allchain + coupling, tt=coupling, xi=None)
    out_ring = Ring(list(problem.symbolic_params()) + allchain + coupling,
                    tt=coupling, xi=None)

    def strip(e):
        moved = e.coeff_of("xi", 0).convert(disp)
        return moved.subs("small", disp.one()).convert(out_ring)

    tu = sm.manifold["tu"]
    man_out = {f"mode{k:+d}": strip(v) for k, v in sorted(tu.data.items(),
                                                          reverse=True)}
    man_out = {k: v for k, v in man_out.items() if not v.is_zero()}
    evo_out = {a: strip(sm.evolution[a]) for a in AMP_NAMES}
    return out_ring, man_out, evo_out


# ======================================================================= emit

def _deriv_rename(field, order, upto):
    return {f"{field}{n}": (field if n == 0 else field + "_" + "x" * n)
            for n in range(upto + 1)}


def emit_model(sm: SlowManifold) -> ModelReport:
    """Model PDE, manifold field, and coupling-error terms at the station
    (xi = 0; local coefficients become x-derivatives), with order tags."""
    problem, order = sm.problem, sm.order
    p = _nl_order(problem)
    rep = ModelReport(problem=problem.name, order=order, grading=sm.grading)
    rep.transient_tag = (f"O(||u||^{order + p + 1}) + O(e^(-gamma*t)), "
                         "gamma in (alpha, beta)")
    ring, man, evo = station_forms(sm)
    if problem.space.kind == "findim":
        slow_field = problem.field_names[sm.slow[0]]
        stable_field = problem.field_names[sm.stable[0]]
        rename = _deriv_rename(slow_field, order, order)
        lmax = _stack_lmax(problem)
        coupling = sorted(set(problem.coupling_names(
            order, max_deriv=max(lmax, 1)).values()))
        disp = Ring(list(problem.symbolic_params())
                    + list(rename.values()) + coupling, tt=coupling, xi=None)
        evo0 = evo[f"{slow_field}0"].convert(disp, rename=rename)
        man0 = man[f"{stable_field}0"].convert(disp, rename=rename)
        rep.pde.append(f"d{slow_field}/dt = {print_expr(evo0)}")
        rep.manifold.append((stable_field, print_expr(man0)))
        rep.evolution.append((f"d{slow_field}/dt", print_expr(evo0)))
        for label, e in ((stable_field, man0), (f"d{slow_field}/dt", evo0)):
            _static, hist = e.split_static()
            if not hist.is_zero():
                rep.coupling_error.append(f"{label}: {print_expr(hist)}")
    else:
        rename = {}
        for a in AMP_NAMES:
            rename.update(_deriv_rename_chain(a, sm.bound + 2))
        parts = []
        for label, e in man.items():
            parts.append(f"({print_expr(e)})*e^({label[4:]}iy)")
            rep.manifold.append((label, print_expr(e)))
        rep.pde.append("u = " + " + ".join(parts))
        for a in AMP_NAMES:
            e = evo[a]
            rep.pde.append(f"d{a}/dt = {print_expr(e)}")
            rep.evolution.append((f"d{a}/dt", print_expr(e)))
            _static, hist = e.split_static()
            if not hist.is_zero():
                rep.coupling_error.append(f"d{a}/dt: {print_expr(hist)}")
        for label, e in man.items():
            _static, hist = e.split_static()
            if not hist.is_zero():
                rep.coupling_error.append(f"{label}: {print_expr(hist)}")
    rep.iteration_log = list(sm.residual_log)
    return rep


def _deriv_rename_chain(base, upto):
    out = {}
    for k, name in enumerate(_chain(base, upto)):
        out[name] = base if k == 0 else base + "_" + "x" * k
    return out
