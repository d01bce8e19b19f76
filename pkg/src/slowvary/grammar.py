"""Canonical expression serialization: deterministic printing and parsing.

Grammar (whitespace insignificant):

    expr     := ['-'] term (('+'|'-') term)*
    term     := factor ('*' factor)*
    factor   := rational ['i'] | 'i' | variable ['^' int]
              | 'Z' '[' expr ';' rational ']' ['^' int]
              | '(' expr ')'
    rational := int ['/' int]

Complex coefficients with both parts print parenthesized, e.g. (1+2i).
Printing is canonical: terms sorted by (weighted order, monomial, atoms),
coefficient of magnitude one omitted before variable factors, exponent 1
omitted.  parse(print(e)) reproduces e bit-exactly.
"""

from __future__ import annotations

from fractions import Fraction

from .exact import ExactScalar, ONE, I
from .algebra import AlgebraError, HistoryAtom, HistoryExpr, Ring, _atom_key


# ---------------------------------------------------------------- printing

def _rat_str(q: Fraction) -> str:
    return str(q)


def _scalar_body(c: ExactScalar):
    """(sign, magnitude string or None).  None means magnitude one."""
    if c.is_real():
        sign = "-" if c.re < 0 else "+"
        mag = abs(c.re)
        return sign, (None if mag == 1 else _rat_str(mag))
    if not c.re:
        sign = "-" if c.im < 0 else "+"
        mag = abs(c.im)
        return sign, ("i" if mag == 1 else _rat_str(mag) + "i")
    im = c.im
    if im > 0:
        istr = "i" if im == 1 else _rat_str(im) + "i"
        return "+", f"({_rat_str(c.re)}+{istr})"
    istr = "i" if im == -1 else _rat_str(-im) + "i"
    return "+", f"({_rat_str(c.re)}-{istr})"


def _atom_str(a: HistoryAtom) -> str:
    core = _atom_str(a.core) if isinstance(a.core, HistoryAtom) else a.core
    return f"Z[{core};{_rat_str(a.mu)}]"


def _term_key(ring: Ring, key):
    # weighted order ascending, then total degree ascending (atoms count
    # their nesting depth), then leading variables first, atoms last
    mono, atoms = key
    degree = sum(mono) + sum(a.depth for a in atoms)
    return (ring.mono_order(mono), degree, tuple(-x for x in mono),
            tuple(_atom_key(a) for a in atoms))


def print_expr(e: HistoryExpr) -> str:
    if not e.terms:
        return "0"
    ring = e.ring
    chunks = []
    for (mono, atoms), c in sorted(e.terms.items(), key=lambda kv: _term_key(ring, kv[0])):
        factors = []
        for k, exp in enumerate(mono):
            if exp == 1:
                factors.append(ring.names[k])
            elif exp:
                factors.append(f"{ring.names[k]}^{exp}")
        pos = 0
        while pos < len(atoms):
            run = 1
            while pos + run < len(atoms) and atoms[pos + run] == atoms[pos]:
                run += 1
            s = _atom_str(atoms[pos])
            factors.append(s if run == 1 else f"{s}^{run}")
            pos += run
        sign, mag = _scalar_body(c)
        if mag is not None:
            factors.insert(0, mag)
        if not factors:
            factors = ["1"]
        chunks.append((sign, "*".join(factors)))
    out = []
    for k, (sign, body) in enumerate(chunks):
        if k == 0:
            out.append(("-" if sign == "-" else "") + body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


# ----------------------------------------------------------------- parsing

class ParseError(ValueError):
    def __init__(self, message, pos):
        super().__init__(f"{message} (offset {pos})")
        self.pos = pos


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.items = []
        pos = 0
        n = len(text)
        while pos < n:
            ch = text[pos]
            if ch.isspace():
                pos += 1
                continue
            if ch.isdigit():
                j = pos
                while j < n and text[j].isdigit():
                    j += 1
                self.items.append(("num", text[pos:j], pos))
                pos = j
                continue
            if ch.isalpha() or ch == "_":
                j = pos
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.items.append(("ident", text[pos:j], pos))
                pos = j
                continue
            if ch in "+-*^()[];/":
                self.items.append((ch, ch, pos))
                pos += 1
                continue
            raise ParseError(f"unexpected character {ch!r}", pos)
        self.items.append(("end", "", n))
        self.k = 0

    def peek(self):
        return self.items[self.k]

    def next(self):
        tok = self.items[self.k]
        self.k += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return tok


def _parse_rational(toks: _Tokens) -> Fraction:
    neg = False
    if toks.peek()[0] == "-":
        toks.next()
        neg = True
    tok = toks.expect("num")
    p = int(tok[1])
    q = 1
    if toks.peek()[0] == "/":
        toks.next()
        q = int(toks.expect("num")[1])
    r = Fraction(p, q)
    return -r if neg else r


def _parse_factor(ring: Ring, toks: _Tokens) -> HistoryExpr:
    kind, text, pos = toks.peek()
    if kind == "num":
        r = _parse_rational(toks)
        k2, t2, _p = toks.peek()
        if k2 == "ident" and t2 == "i":
            toks.next()
            return ring.scalar(ExactScalar(0, r))
        return ring.scalar(r)
    if kind == "ident" and text == "i":
        toks.next()
        return ring.scalar(I)
    if kind == "ident" and text == "Z":
        toks.next()
        toks.expect("[")
        inner = _parse_expr(ring, toks)
        toks.expect(";")
        mu = _parse_rational(toks)
        toks.expect("]")
        atom = _atom_from_expr(ring, inner, mu, pos)
        e = HistoryExpr._make(ring, {((0,) * len(ring.names), (atom,)): ONE})
        return _maybe_pow(e, toks)
    if kind == "ident":
        toks.next()
        e = ring.var(text)
        return _maybe_pow(e, toks)
    if kind == "(":
        toks.next()
        e = _parse_expr(ring, toks)
        toks.expect(")")
        return e
    raise ParseError(f"expected a factor, found {text!r}", pos)


def _maybe_pow(e: HistoryExpr, toks: _Tokens) -> HistoryExpr:
    if toks.peek()[0] == "^":
        toks.next()
        n = int(toks.expect("num")[1])
        return e ** n
    return e


def _atom_from_expr(ring: Ring, inner: HistoryExpr, mu, pos) -> HistoryAtom:
    if len(inner.terms) != 1:
        raise ParseError("atom content must be a coupling symbol or nested atom", pos)
    (mono, atoms), c = next(iter(inner.terms.items()))
    if c != ONE:
        raise ParseError("atom content must carry coefficient one", pos)
    nz = [k for k, e in enumerate(mono) if e]
    if atoms == () and len(nz) == 1 and mono[nz[0]] == 1 and ring.is_tt(nz[0]):
        return HistoryAtom(ring.names[nz[0]], mu)
    if not nz and len(atoms) == 1:
        return HistoryAtom(atoms[0], mu)
    raise ParseError("atom content must be a coupling symbol or nested atom", pos)


def _parse_term(ring: Ring, toks: _Tokens) -> HistoryExpr:
    e = _parse_factor(ring, toks)
    while toks.peek()[0] == "*":
        toks.next()
        e = e * _parse_factor(ring, toks)
    return e


def _parse_expr(ring: Ring, toks: _Tokens) -> HistoryExpr:
    negate = False
    if toks.peek()[0] == "-":
        toks.next()
        negate = True
    e = _parse_term(ring, toks)
    if negate:
        e = -e
    while toks.peek()[0] in "+-":
        op = toks.next()[0]
        t = _parse_term(ring, toks)
        e = e + t if op == "+" else e - t
    return e


def parse_expr(ring: Ring, text: str) -> HistoryExpr:
    """Parse canonical expression text over the given registry."""
    try:
        toks = _Tokens(text)
        e = _parse_expr(ring, toks)
        tok = toks.peek()
        if tok[0] != "end":
            raise ParseError(f"trailing input {tok[1]!r}", tok[2])
        return e
    except AlgebraError as err:
        raise ParseError(str(err), toks.peek()[2]) from err
