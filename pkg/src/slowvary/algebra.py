"""Graded polynomials and the history-convolution calculus.

Variables live in a shared :class:`Ring` (the registry).  Each variable
carries an integer order-weight; when the ring has a truncation bound B,
every operation drops terms whose total weighted order reaches B.  This
is the combined rule  small^p * xi^q => 0  when p+q >= B  used by all
truncated constructions (the `small` order counter and the generating
variable `xi` both carry weight 1, everything else weight 0).

Time dependence enters in two ways:

* *amplitude* variables evolve through a :class:`DependencyTable`
  (d/dt c0 -> g0 and so on);
* *coupling* variables (flagged ``tt``) depend on the fast time only and
  may be wrapped in exponential history convolutions
  Z[f; mu] = integral_0^t e^{mu(t-s)} f(s) ds  with mu < 0.

Convolutions normalize by the rewrite rules

    Z[1; mu]            ->  1/|mu|
    Z[Z[f; nu]; mu]     ->  -sign(mu) (Z[f; mu] - Z[f; nu]) / (mu - nu)
                            when mu*nu > 0 and mu != nu
    Z[Z[f; mu]; mu]     kept as the canonical equal-rate form

and   d/dt Z[f; mu] = f + mu Z[f; mu]   for mu < 0.
"""

from __future__ import annotations

from fractions import Fraction

from .exact import ExactScalar, ONE, ZERO


class AlgebraError(ValueError):
    pass


_RESERVED = {"i", "Z"}


class Ring:
    """Variable registry: names, integer order-weights, coupling flags,
    xi-differentiation chains, and an optional truncation bound."""

    __slots__ = ("names", "weights", "bound", "xi", "_index", "_tt",
                 "_chain_next", "_chain_base", "_zero", "_one")

    def __init__(self, variables, tt=(), chains=(), bound=None, xi="xi"):
        names = []
        weights = []
        for v in variables:
            if isinstance(v, tuple):
                name, w = v
            else:
                name, w = v, 0
            if name in _RESERVED:
                raise AlgebraError(f"variable name {name!r} is reserved")
            if name in names:
                raise AlgebraError(f"duplicate variable {name!r}")
            names.append(name)
            weights.append(int(w))
        self.names = tuple(names)
        self.weights = tuple(weights)
        self._index = {n: k for k, n in enumerate(self.names)}
        for t in tt:
            if t not in self._index:
                raise AlgebraError(f"unknown coupling variable {t!r}")
        self._tt = frozenset(self._index[t] for t in tt)
        self.bound = bound
        self.xi = self._index.get(xi)
        # chains: sequences of names linked by d/dxi, e.g. ("tc","tc_x","tc_xx")
        self._chain_next = {}
        self._chain_base = {}
        for chain in chains:
            idxs = [self._index[n] for n in chain]
            for a, b in zip(idxs, idxs[1:]):
                self._chain_next[a] = b
            for k, a in enumerate(idxs):
                self._chain_base[a] = (idxs[0], k)
        nvars = len(self.names)
        self._zero = HistoryExpr(self, {})
        self._one = HistoryExpr(self, {((0,) * nvars, ()): ONE})

    # -- construction helpers -------------------------------------------
    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise AlgebraError(f"unknown variable {name!r}") from None

    def zero(self) -> "HistoryExpr":
        return self._zero

    def one(self) -> "HistoryExpr":
        return self._one

    def scalar(self, c) -> "HistoryExpr":
        c = ExactScalar.coerce(c)
        if not c:
            return self._zero
        return HistoryExpr(self, {((0,) * len(self.names), ()): c})

    def var(self, name: str, power: int = 1) -> "HistoryExpr":
        i = self.index(name)
        mono = tuple(power if k == i else 0 for k in range(len(self.names)))
        key = (mono, ())
        if self.bound is not None and self.mono_order(mono) >= self.bound:
            return self._zero
        return HistoryExpr(self, {key: ONE})

    def monomial(self, powers: dict, coef=ONE, atoms=()) -> "HistoryExpr":
        mono = [0] * len(self.names)
        for n, p in powers.items():
            mono[self.index(n)] = p
        return HistoryExpr(self, {(tuple(mono), tuple(sorted(atoms, key=_atom_key))):
                                  ExactScalar.coerce(coef)})

    def is_tt(self, i: int) -> bool:
        return i in self._tt

    def mono_order(self, mono) -> int:
        w = self.weights
        return sum(e * w[k] for k, e in enumerate(mono) if e)

    def atom(self, core, mu) -> "HistoryAtom":
        if isinstance(core, str):
            self.index(core)  # must exist
        return HistoryAtom(core, mu)


class HistoryAtom:
    """One exponential history convolution Z[core; mu], mu < 0.

    ``core`` is a coupling-symbol name or a nested HistoryAtom; after
    normalization nested atoms share a single rate (equal-rate chains
    are the canonical form, unequal same-sign rates rewrite away).
    """

    __slots__ = ("core", "mu")

    def __init__(self, core, mu):
        mu = Fraction(mu)
        if mu >= 0:
            raise AlgebraError(f"history rate must be negative, got {mu}")
        if not isinstance(core, (str, HistoryAtom)):
            raise AlgebraError("atom core must be a coupling symbol or a nested atom")
        self.core = core
        self.mu = mu

    @property
    def depth(self) -> int:
        d, c = 1, self.core
        while isinstance(c, HistoryAtom):
            d += 1
            c = c.core
        return d

    @property
    def base_symbol(self) -> str:
        c = self.core
        while isinstance(c, HistoryAtom):
            c = c.core
        return c

    def __eq__(self, other):
        return (isinstance(other, HistoryAtom) and self.mu == other.mu
                and self.core == other.core)

    def __hash__(self):
        return hash((self.core, self.mu))

    def __repr__(self):
        return f"Z[{self.core!r};{self.mu}]"


def _atom_key(a: HistoryAtom):
    rates = []
    c = a
    while isinstance(c, HistoryAtom):
        rates.append((c.mu.numerator, c.mu.denominator))
        c = c.core
    return (len(rates), c, tuple(rates))


def _normalize_nest(inner: HistoryAtom, mu: Fraction):
    """Appendix-style rewrite of Z[inner; mu]; returns [(atom, coeff)]."""
    nu = inner.mu
    if mu == nu:
        return [(HistoryAtom(inner, mu), ONE)]
    if mu * nu > 0:
        # -sign(mu) * (Z[r; mu] - Z[r; nu]) / (mu - nu), r the inner content
        sign = Fraction(1) if mu > 0 else Fraction(-1)
        fac = ExactScalar(-sign / (mu - nu))
        out = []
        for atom, c in _wrap_core(inner.core, mu):
            out.append((atom, c * fac))
        out.append((inner, fac * ExactScalar(-1)))
        return out
    # mixed sign: (Z[r; mu] + Z[r; nu]) / |mu - nu|; unreachable while
    # construction enforces mu < 0, kept for rule completeness
    fac = ExactScalar(Fraction(1) / abs(mu - nu))
    out = [(atom, c * fac) for atom, c in _wrap_core(inner.core, mu)]
    out.append((inner, fac))
    return out


def _wrap_core(core, mu: Fraction):
    """Z[core; mu] for a core that is a symbol or an atom, normalized."""
    if isinstance(core, HistoryAtom):
        return _normalize_nest(core, mu)
    return [(HistoryAtom(core, mu), ONE)]


class DependencyTable:
    """Time-derivative substitutions d/dt(symbol) -> expression.

    Chain variables (xi-derivatives of a base amplitude) resolve through
    the base entry: d/dt tc_xx = d^2/dxi^2 (d/dt tc).  A bare coupling
    variable with no entry is an error, never silently zero.
    """

    __slots__ = ("ring", "rules")

    def __init__(self, ring: Ring, rules: dict):
        self.ring = ring
        self.rules = {}
        for name, expr in rules.items():
            ring.index(name)
            self.rules[name] = expr

    def derivative_of(self, i: int):
        """d/dt of variable index i, or None when the variable is constant."""
        ring = self.ring
        name = ring.names[i]
        if name in self.rules:
            return self.rules[name]
        if i in ring._chain_base:
            base, k = ring._chain_base[i]
            base_name = ring.names[base]
            if base_name in self.rules:
                if ring.xi is None:
                    raise AlgebraError("chain differentiation needs a xi variable")
                return self.rules[base_name].diff(ring.names[ring.xi], k)
        if ring.is_tt(i):
            raise AlgebraError(
                f"d/dt of bare coupling symbol {name!r} requested; "
                "coupling symbols are only differentiated inside history atoms")
        return None


class HistoryExpr:
    """Linear combination of (monomial x product of history atoms) terms.

    A GradedPoly is a HistoryExpr with no atoms and no coupling content;
    the alias below keeps signatures honest.  Instances are immutable and
    always normalized: no zero coefficients, atoms canonically sorted,
    terms at or above the ring bound dropped.
    """

    __slots__ = ("ring", "terms")

    def __init__(self, ring: Ring, terms: dict):
        self.ring = ring
        self.terms = terms

    # -- normalized constructor ------------------------------------------
    @staticmethod
    def _make(ring: Ring, acc: dict) -> "HistoryExpr":
        bound = ring.bound
        out = {}
        for key, c in acc.items():
            if not c:
                continue
            if bound is not None and ring.mono_order(key[0]) >= bound:
                continue
            out[key] = c
        return HistoryExpr(ring, out)

    # -- basics ------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_poly(self) -> bool:
        """True when there is no history content (a GradedPoly)."""
        tt = self.ring._tt
        for (mono, atoms) in self.terms:
            if atoms or any(mono[i] for i in tt):
                return False
        return True

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, ExactScalar)):
            other = self.ring.scalar(other)
        if not isinstance(other, HistoryExpr):
            return NotImplemented
        return self.ring is other.ring and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def _check_ring(self, other):
        if self.ring is not other.ring:
            raise AlgebraError("operands live in different variable registries")

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, Fraction, ExactScalar)):
            other = self.ring.scalar(other)
        self._check_ring(other)
        acc = dict(self.terms)
        for key, c in other.terms.items():
            s = acc.get(key)
            acc[key] = c if s is None else s + c
        return HistoryExpr._make(self.ring, acc)

    __radd__ = __add__

    def __neg__(self):
        return HistoryExpr(self.ring, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, ExactScalar)):
            other = self.ring.scalar(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, ExactScalar)):
            c = ExactScalar.coerce(other)
            if not c:
                return self.ring.zero()
            return HistoryExpr(self.ring, {k: v * c for k, v in self.terms.items()})
        self._check_ring(other)
        ring = self.ring
        bound = ring.bound
        orders = None
        if bound is not None:
            orders = ([ (k, ring.mono_order(k[0])) for k in self.terms ],
                      [ (k, ring.mono_order(k[0])) for k in other.terms ])
        acc = {}
        if orders is None:
            items_a = [(k, 0) for k in self.terms]
            items_b = [(k, 0) for k in other.terms]
        else:
            items_a, items_b = orders
        for (mono_a, atoms_a), oa in items_a:
            ca = self.terms[(mono_a, atoms_a)]
            for (mono_b, atoms_b), ob in items_b:
                if bound is not None and oa + ob >= bound:
                    continue
                cb = other.terms[(mono_b, atoms_b)]
                mono = tuple(x + y for x, y in zip(mono_a, mono_b))
                if atoms_a and atoms_b:
                    atoms = tuple(sorted(atoms_a + atoms_b, key=_atom_key))
                else:
                    atoms = atoms_a or atoms_b
                key = (mono, atoms)
                c = ca * cb
                s = acc.get(key)
                acc[key] = c if s is None else s + c
        return HistoryExpr._make(ring, acc)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise AlgebraError("negative powers are not polynomial")
        out = self.ring.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    # -- calculus -------------------------------------------------------------
    def diff(self, var: str, n: int = 1) -> "HistoryExpr":
        """Formal partial derivative; atoms are constants w.r.t. ring variables.

        Differentiating by the ring's xi variable additionally advances
        chain variables (d/dxi tc = tc_x)."""
        e = self
        for _ in range(n):
            e = e._diff_once(var)
        return e

    def _diff_once(self, var: str) -> "HistoryExpr":
        ring = self.ring
        i = ring.index(var)
        chain = ring._chain_next if (ring.xi is not None and i == ring.xi) else {}
        acc = {}
        for (mono, atoms), c in self.terms.items():
            if mono[i]:
                m = list(mono)
                e = m[i]
                m[i] -= 1
                key = (tuple(m), atoms)
                add = c * e
                s = acc.get(key)
                acc[key] = add if s is None else s + add
            if chain:
                for j, succ in chain.items():
                    if mono[j]:
                        m = list(mono)
                        e = m[j]
                        m[j] -= 1
                        m[succ] += 1
                        key = (tuple(m), atoms)
                        add = c * e
                        s = acc.get(key)
                        acc[key] = add if s is None else s + add
        return HistoryExpr._make(ring, acc)

    def ddt(self, deps: DependencyTable) -> "HistoryExpr":
        """Time derivative by the product rule.

        d/dt Z[f; mu] = f + mu Z[f; mu]; amplitude variables go through
        the dependency table; constants differentiate to zero; a bare
        coupling symbol is an error.
        """
        ring = self.ring
        if deps.ring is not ring:
            raise AlgebraError("dependency table built for a different registry")
        total = ring.zero()
        for (mono, atoms), c in self.terms.items():
            # variable factors
            for i, e in enumerate(mono):
                if not e:
                    continue
                dv = deps.derivative_of(i)
                if dv is None:
                    continue
                m = list(mono)
                m[i] -= 1
                rest = HistoryExpr._make(ring, {(tuple(m), atoms): c * e})
                total = total + rest * dv
            # atom factors
            for pos in range(len(atoms)):
                datom = _atom_ddt(ring, atoms[pos])
                rest_atoms = atoms[:pos] + atoms[pos + 1:]
                rest = HistoryExpr._make(ring, {(mono, rest_atoms): c})
                total = total + rest * datom
        return total

    def conv(self, mu) -> "HistoryExpr":
        """Wrap in the history convolution Z[.; mu], mu < 0, and normalize.

        Static content passes through divided by |mu| (the Z[1;mu] rule);
        a single coupling factor becomes an atom; a single existing atom
        nests and rewrites.  Nonlinear history content (several coupling
        factors in one term) is not representable and raises.
        """
        mu = Fraction(mu)
        if mu >= 0:
            raise AlgebraError(f"convolution rate must be negative, got {mu}")
        ring = self.ring
        inv = ExactScalar(Fraction(1) / abs(mu))
        acc = {}

        def put(key, c):
            s = acc.get(key)
            acc[key] = c if s is None else s + c

        for (mono, atoms), c in self.terms.items():
            tt_pos = [i for i in ring._tt if mono[i]]
            n_tt = sum(mono[i] for i in tt_pos)
            if n_tt + len(atoms) == 0:
                put((mono, ()), c * inv)
            elif n_tt == 1 and not atoms:
                i = tt_pos[0]
                m = list(mono)
                m[i] -= 1
                atom = HistoryAtom(ring.names[i], mu)
                put((tuple(m), (atom,)), c)
            elif n_tt == 0 and len(atoms) == 1:
                for atom, k in _normalize_nest(atoms[0], mu):
                    put((mono, (atom,)), c * k)
            else:
                raise AlgebraError(
                    "cannot convolve nonlinear history content "
                    f"(term has {n_tt} coupling factors and {len(atoms)} atoms)")
        return HistoryExpr._make(ring, acc)

    def truncate(self, bound: int) -> "HistoryExpr":
        """Drop terms whose total weighted order reaches the bound."""
        ring = self.ring
        out = {k: c for k, c in self.terms.items()
               if ring.mono_order(k[0]) < bound}
        return HistoryExpr(ring, out)

    # -- structure -------------------------------------------------------------
    def conj(self) -> "HistoryExpr":
        """Conjugate coefficients (variables and atoms are real)."""
        return HistoryExpr(self.ring, {k: c.conj() for k, c in self.terms.items()})

    def coeff_of(self, var: str, power: int) -> "HistoryExpr":
        """Terms carrying var^power exactly, with that factor removed."""
        i = self.ring.index(var)
        acc = {}
        for (mono, atoms), c in self.terms.items():
            if mono[i] == power:
                m = list(mono)
                m[i] = 0
                acc[(tuple(m), atoms)] = c
        return HistoryExpr(self.ring, acc)

    def max_power(self, var: str) -> int:
        i = self.ring.index(var)
        return max((mono[i] for (mono, _a) in self.terms), default=0)

    def subs(self, var: str, repl) -> "HistoryExpr":
        """Substitute an expression (same ring) for a variable."""
        if isinstance(repl, (int, Fraction, ExactScalar)):
            repl = self.ring.scalar(repl)
        self._check_ring(repl)
        ring = self.ring
        i = ring.index(var)
        pows = {0: ring.one()}

        def power(e):
            if e not in pows:
                pows[e] = power(e - 1) * repl
            return pows[e]

        total = ring.zero()
        for (mono, atoms), c in self.terms.items():
            m = list(mono)
            e = m[i]
            m[i] = 0
            base = HistoryExpr._make(ring, {(tuple(m), atoms): c})
            total = total + (base * power(e) if e else base)
        return total

    def div_power(self, var: str, k: int) -> "HistoryExpr":
        """Exact division by var^k; raises if any term lacks the factor."""
        if k == 0:
            return self
        i = self.ring.index(var)
        acc = {}
        for (mono, atoms), c in self.terms.items():
            if mono[i] < k:
                raise AlgebraError(
                    f"term not divisible by {var}^{k} (grading violation)")
            m = list(mono)
            m[i] -= k
            acc[(tuple(m), atoms)] = c
        return HistoryExpr(self.ring, acc)

    def split_static(self):
        """(static part, history part): history = atoms or coupling factors."""
        ring = self.ring
        stat, hist = {}, {}
        for key, c in self.terms.items():
            mono, atoms = key
            if atoms or any(mono[i] for i in ring._tt):
                hist[key] = c
            else:
                stat[key] = c
        return HistoryExpr(ring, stat), HistoryExpr(ring, hist)

    def map_coeff(self, fn) -> "HistoryExpr":
        acc = {}
        for k, c in self.terms.items():
            v = fn(c)
            if v:
                acc[k] = v
        return HistoryExpr(self.ring, acc)

    def convert(self, ring: Ring, rename=None) -> "HistoryExpr":
        """Move to another registry, matching variables by name.

        Variables may be renamed; a variable with nonzero exponent that
        the target lacks is an error.  Atoms carry over unchanged (their
        core symbols must exist in the target).
        """
        rename = rename or {}
        src = self.ring
        mapping = {}
        for k, name in enumerate(src.names):
            tgt = rename.get(name, name)
            mapping[k] = ring._index.get(tgt)
        acc = {}
        for (mono, atoms), c in self.terms.items():
            m = [0] * len(ring.names)
            for k, e in enumerate(mono):
                if not e:
                    continue
                j = mapping[k]
                if j is None:
                    raise AlgebraError(
                        f"variable {src.names[k]!r} missing from target registry")
                m[j] += e
            new_atoms = tuple(sorted((_convert_atom(a, ring, rename) for a in atoms),
                                     key=_atom_key))
            key = (tuple(m), new_atoms)
            s = acc.get(key)
            acc[key] = c if s is None else s + c
        return HistoryExpr._make(ring, acc)

    def weighted_order_min(self):
        """Smallest total weighted order over the terms (None when zero)."""
        ring = self.ring
        return min((ring.mono_order(m) for (m, _a) in self.terms), default=None)

    # -- display ---------------------------------------------------------------
    def __str__(self):
        from .grammar import print_expr
        return print_expr(self)

    def __repr__(self):
        return f"<expr {self}>"


def _convert_atom(a: HistoryAtom, ring: Ring, rename) -> HistoryAtom:
    core = a.core
    if isinstance(core, HistoryAtom):
        return HistoryAtom(_convert_atom(core, ring, rename), a.mu)
    name = rename.get(core, core)
    ring.index(name)
    return HistoryAtom(name, a.mu)


def _atom_ddt(ring: Ring, atom: HistoryAtom) -> HistoryExpr:
    """d/dt Z[f; mu] = f + mu Z[f; mu] (mu < 0)."""
    core = atom.core
    if isinstance(core, HistoryAtom):
        f = HistoryExpr._make(ring, {((0,) * len(ring.names), (core,)): ONE})
    else:
        f = ring.var(core)
    mu = ExactScalar(atom.mu)
    zterm = HistoryExpr._make(ring, {((0,) * len(ring.names), (atom,)): mu})
    return f + zterm


# A GradedPoly is a HistoryExpr whose terms carry no history content;
# see HistoryExpr.is_poly().
GradedPoly = HistoryExpr
