"""Linear slowly-varying reduction.

Recursively builds the slow-subspace coefficients A_n and generalised
eigenvector blocks V_n:

    A_n = sum_{k=1..n} <Z0, L_k V_{n-k}>
    L0 V_n - V_n A0 = -sum_k L_k V_{n-k} + sum_k V_{n-k} A_k,  <Z0,V_n> = 0

then assembles the block upper-triangular Toeplitz pair (cV, cA) and
verifies L cV = cV cA exactly.  The reduced model is
d/dt c = sum_n A_n d^n c/dx^n, with remainder terms r_n collecting the
inter-station coupling through derivatives of the highest resolved
Taylor coefficient.
"""

from __future__ import annotations

from math import comb

from .algebra import Ring
from .crosssec import (CrossField, OperatorStack, apply_op, inner, linv_solve,
                       spectral_check)
from .errors import ConstructionError
from .exact import ExactScalar
from .grammar import print_expr
from .problems import ProblemSpec
from .report import ModelReport


class LinearReduction:
    """Coefficients A_0..A_N, blocks V_0..V_N and remainder descriptions."""

    def __init__(self, problem, order, ring, stack, sd, a_mats, v_rows, remainders):
        self.problem = problem
        self.order = order
        self.ring = ring
        self.stack = stack
        self.spectral = sd
        self.A = a_mats          # list of m x m [[HistoryExpr]]
        self.V = v_rows          # list of rows, each a list of m CrossFields
        self.remainders = remainders

    @property
    def m(self):
        return self.spectral.m


def _working_ring(problem: ProblemSpec, order: int):
    probe = Ring([(p, 1) for p in problem.symbolic_params()])
    lmax = len(problem.build_stack(probe).ops) - 1
    names = problem.coupling_names(order, max_deriv=max(lmax, 1))
    coupling = sorted(set(names.values()))
    ring = Ring([(p, 1) for p in problem.symbolic_params()] + coupling, tt=coupling)
    return ring, names, lmax


def reduce_linear(problem: ProblemSpec, order: int) -> LinearReduction:
    """Run the recursion to the requested order, verifying each step."""
    ring, names, lmax = _working_ring(problem, order)
    stack = problem.build_stack(ring)
    sd = problem.build_spectral(ring)
    spectral_check(problem.space, stack, sd, order, ring)
    _require_diagonal_a0(sd)

    m = sd.m
    a_mats = [[[ring.scalar(sd.a0[i][j]) for j in range(m)] for i in range(m)]]
    v_rows = [list(sd.v0)]
    for n in range(1, order + 1):
        acc = None
        rhs = None
        for k in range(1, n + 1):
            op = stack.op(k)
            if op is None:
                continue
            img = [apply_op(op, v) for v in v_rows[n - k]]
            g = inner(problem.space, sd.z0, img, ring)
            acc = g if acc is None else _mat_add(acc, g)
            neg = [(-f) for f in img]
            rhs = neg if rhs is None else _row_add(rhs, neg)
        if acc is None:
            acc = [[ring.zero()] * m for _ in range(m)]
            rhs = [CrossField.zero(problem.space, ring) for _ in range(m)]
        a_mats.append(acc)
        for k in range(1, n + 1):
            rhs = _row_add(rhs, _row_times_mat(v_rows[n - k], a_mats[k]))
        vn = []
        for j in range(m):
            shift = sd.a0[j][j]
            v = linv_solve(problem.space, stack, sd, rhs[j], shift, ring)
            resid = apply_op(stack.ops[0], v) - v.scale(ring.scalar(shift)) - rhs[j]
            if not resid.is_zero():
                raise ConstructionError(f"recursion residual nonzero at n={n}")
            vn.append(v)
        v_rows.append(vn)
    remainders = remainder_terms(problem, order, ring=ring, stack=stack, names=names)
    return LinearReduction(problem, order, ring, stack, sd, a_mats, v_rows, remainders)


def _require_diagonal_a0(sd):
    for i in range(sd.m):
        for j in range(sd.m):
            if i != j and sd.a0[i][j] != 0:
                raise ConstructionError("solves require a diagonal A0")


def _mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _row_add(a, b):
    return [x + y for x, y in zip(a, b)]


def _row_times_mat(vrow, amat):
    m = len(vrow)
    out = []
    for j in range(m):
        acc = None
        for i in range(m):
            t = vrow[i].scale(amat[i][j])
            acc = t if acc is None else acc + t
        out.append(acc)
    return out


# --------------------------------------------------------------- remainders

def remainder_terms(problem: ProblemSpec, order: int, ring=None, stack=None,
                    names=None):
    """r_n = sum_{k>=1} binom(k+N, N) L_{k+N-n} u_N^(k), truncated by the
    stack length; one CrossField per n with opaque coupling symbols."""
    if ring is None:
        ring, names, _lmax = _working_ring(problem, order)
        stack = problem.build_stack(ring)
    lmax = len(stack.ops) - 1
    out = []
    for n in range(order + 1):
        acc = CrossField.zero(problem.space, ring)
        for k in range(1, lmax + 1):
            ell = k + order - n
            if ell < 1:
                continue
            op = stack.op(ell)
            if op is None:
                continue
            u = _coupling_field(problem, ring, names, order, k)
            acc = acc + apply_op(op, u).scale(ring.scalar(comb(k + order, order)))
        out.append(acc)
    return out


def _coupling_field(problem, ring, names, order, k):
    space = problem.space
    if space.kind == "findim":
        return CrossField.findim(space, tuple(ring.var(names[(i, k)])
                                              for i in range(space.m)))
    if space.kind == "fourier":
        return CrossField.fourier(space, {mode: ring.var(names[(mode, k)])
                                          for mode in range(-problem.coupling_cap,
                                                            problem.coupling_cap + 1)})
    return CrossField.channel(space, (ring.var(names[(0, k)]),))


# ------------------------------------------------------------ block Toeplitz

def assemble_toeplitz(red: LinearReduction, stack: OperatorStack = None):
    """Block upper-triangular Toeplitz pair (cV, cA); verifies L cV = cV cA."""
    stack = stack or red.stack
    n1 = red.order + 1
    ring = red.ring
    space = red.problem.space
    zero_field = CrossField.zero(space, ring)
    zero_mat = [[ring.zero()] * red.m for _ in range(red.m)]
    cv = [[red.V[c - r] if c >= r else [zero_field] * red.m for c in range(n1)]
          for r in range(n1)]
    ca = [[red.A[c - r] if c >= r else zero_mat for c in range(n1)]
          for r in range(n1)]
    # L cV = cV cA, block (r, c): sum_k L_k V_{d-k} vs sum_j V_j A_{d-j}, d = c-r
    for d in range(n1):
        lhs = None
        for k in range(0, d + 1):
            op = stack.op(k)
            if op is None:
                continue
            img = [apply_op(op, v) for v in red.V[d - k]]
            lhs = img if lhs is None else _row_add(lhs, img)
        rhs = None
        for j in range(0, d + 1):
            t = _row_times_mat(red.V[j], red.A[d - j])
            rhs = t if rhs is None else _row_add(rhs, t)
        for a, b in zip(lhs, rhs):
            if not (a - b).is_zero():
                raise ConstructionError(
                    f"block Toeplitz identity L cV = cV cA fails at offset {d}")
    return cv, ca


# ------------------------------------------------------------------ reports

def _fmt_matrix(mat):
    if len(mat) == 1:
        return print_expr(mat[0][0])
    rows = ",".join("[" + ",".join(print_expr(e) for e in row) + "]" for row in mat)
    return f"[{rows}]"


def _dxname(fieldname, n):
    return fieldname if n == 0 else fieldname + "_" + "x" * n


def model_component_names(m: int):
    if m == 1:
        return ["c"]
    if m == 2:
        return ["cp", "cm"]
    return [f"c{j}" for j in range(m)]


def pde_line(name, pairs, tail=""):
    """'dc/dt = ...' from (coefficient-string, derivative-name) pairs."""
    body = ""
    for coef, dx in pairs:
        if coef == "1":
            piece, sign = dx, "+"
        elif coef == "-1":
            piece, sign = dx, "-"
        elif coef.startswith("-") and "+" not in coef and " - " not in coef:
            piece, sign = f"{coef[1:]}*{dx}", "-"
        elif "+" in coef or " - " in coef:
            piece, sign = f"({coef})*{dx}", "+"
        else:
            piece, sign = f"{coef}*{dx}", "+"
        if not body:
            body = piece if sign == "+" else f"-{piece}"
        else:
            body += f" {sign} {piece}"
    if not body:
        body = "0"
    return f"d{name}/dt = {body}{tail}"


def next_nonzero_coefficient(problem: ProblemSpec, order: int, cap: int = 3):
    """Smallest M > order with A_M != 0, or None up to order+cap; the
    resolved-order truncation error of the model is O(d^M u/dx^M)."""
    ext = reduce_linear(problem, order + cap)
    for mm in range(order + 1, order + cap + 1):
        if any(not e.is_zero() for row in ext.A[mm] for e in row):
            return mm
    return None


def emit_slow_pde(red: LinearReduction, classify: bool = True) -> ModelReport:
    """d/dt c = sum_n A_n d^n c/dx^n with exact coefficients and the
    symbolic error classification."""
    problem = red.problem
    rep = ModelReport(problem=problem.name, order=red.order,
                      grading="linear (no amplitude grading)")
    m = red.m
    comp = model_component_names(m)
    for i in range(m):
        pairs = []
        for n in range(red.order + 1):
            for j in range(m):
                e = red.A[n][i][j]
                if not e.is_zero():
                    pairs.append((print_expr(e), _dxname(comp[j], n)))
        rep.pde.append(pde_line(comp[i], pairs, tail=" + coupling"))
    for n in range(red.order + 1):
        rep.coefficients.append((f"A{n}", _fmt_matrix(red.A[n])))
    lmax = len(red.stack.ops) - 1
    names = problem.coupling_names(red.order, max_deriv=max(lmax, 1))
    shown = sorted(set(names.values()))
    rep.coupling_error.append(
        "remainder r_n = sum_k binom(k+N,N) L_(k+N-n) u_N^(k); "
        f"coupling symbols: {', '.join(shown)}")
    for n, r in enumerate(red.remainders):
        if not r.is_zero():
            rep.coupling_error.append(f"r{n} = {_fmt_field(r)}")
    if classify:
        mm = next_nonzero_coefficient(problem, red.order)
        if mm is None:
            rep.notes.append(
                "no resolved-order truncation error found up to "
                f"A{red.order + 3}; model symbol exact to that order, coupling only")
        else:
            rep.notes.append(
                f"leading resolved-order truncation error O(d^{mm} u/dx^{mm}) "
                f"(first dropped coefficient A{mm})")
    return rep


def _fmt_field(f: CrossField) -> str:
    if f.space.kind == "findim":
        return "(" + ", ".join(print_expr(e) for e in f.data) + ")"
    if f.space.kind == "channel":
        parts = []
        for p, e in enumerate(f.data):
            if e.is_zero():
                continue
            s = print_expr(e)
            parts.append(s if p == 0 else f"({s})*y^{p}")
        return " + ".join(parts) if parts else "0"
    parts = []
    for k in sorted(f.data):
        parts.append(f"({print_expr(f.data[k])})*e^({k}iy)")
    return " + ".join(parts) if parts else "0"
