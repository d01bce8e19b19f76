"""Cross-sectional function spaces, operators and the stable-complement solves.

Three space variants cover the shipped problems:

* :class:`FiniteDim`   -- m-component vectors (heat exchanger);
* :class:`NeumannChannel` -- polynomials in y on [-1,1] with no-flux
  boundary conditions (shear dispersion);
* :class:`PeriodicFourier` -- trigonometric polynomials e^{iky}
  (Swift--Hohenberg embedding).

Fields carry :class:`~slowvary.algebra.HistoryExpr` entries so coupling
symbols and their history convolutions flow through every solve.

Two solve conventions are provided, both verified in-line:

* :func:`linv_solve` -- the steady Sylvester solve
  L0 v - v a = rhs with <Z0, v> = 0 used by the linear recursion;
  time-dependent (coupling) content follows the causal convolution
  form v = Z[rhs; rate] instead.
* :func:`greens_solve` -- the iteration update used by the slow-manifold
  constructions: each stable eigencomponent of a residual is wrapped in
  Z[.; rate], which reduces to division by |rate| for static content.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import HistoryExpr, Ring
from .exact import ExactScalar, I, ONE, ZERO
from .errors import ConstructionError, ValidationError


class CrossSectionError(ConstructionError):
    pass


class LinvError(ConstructionError):
    pass


class SpectralError(ValidationError):
    pass


# ------------------------------------------------------------------ spaces

@dataclass(frozen=True)
class FiniteDim:
    """m coupled scalar components; pairing is the plain dot product."""
    m: int
    names: tuple = ()
    kind = "findim"


@dataclass(frozen=True)
class NeumannChannel:
    """Polynomials in y on [-1,1]; pairing (1/2) int_{-1}^{1} z v dy."""
    degree_cap: int
    kind = "channel"


@dataclass(frozen=True)
class PeriodicFourier:
    """Trig polynomials sum_k a_k e^{iky}; pairing conjugates the left
    argument: (1/2pi) int conj(z) v dy = sum_k conj(z_k) v_k."""
    harmonic_cap: int
    kind = "fourier"


# ------------------------------------------------------------------ fields

class CrossField:
    """Element of a cross-sectional space with HistoryExpr entries."""

    __slots__ = ("space", "data")

    def __init__(self, space, data):
        self.space = space
        if space.kind == "findim":
            data = tuple(data)
            if len(data) != space.m:
                raise CrossSectionError(f"expected {space.m} components")
        elif space.kind == "channel":
            data = tuple(data)
            if len(data) > space.degree_cap + 1:
                raise CrossSectionError(
                    f"y-degree {len(data) - 1} exceeds cap {space.degree_cap}")
        elif space.kind == "fourier":
            data = {k: v for k, v in data.items() if not v.is_zero()}
            for k in data:
                if abs(k) > space.harmonic_cap:
                    raise CrossSectionError(
                        f"harmonic {k} exceeds cap {space.harmonic_cap}")
        self.data = data

    # -- constructors ----------------------------------------------------
    @staticmethod
    def zero(space, ring: Ring) -> "CrossField":
        if space.kind == "findim":
            return CrossField(space, (ring.zero(),) * space.m)
        if space.kind == "channel":
            return CrossField(space, (ring.zero(),))
        return CrossField(space, {})

    @staticmethod
    def findim(space, entries) -> "CrossField":
        return CrossField(space, tuple(entries))

    @staticmethod
    def channel(space, coeffs) -> "CrossField":
        return CrossField(space, tuple(coeffs))

    @staticmethod
    def fourier(space, modes: dict) -> "CrossField":
        return CrossField(space, dict(modes))

    # -- linear structure --------------------------------------------------
    def _check(self, other):
        if self.space != other.space:
            raise CrossSectionError("cross-section variants do not match")

    def map_entries(self, fn) -> "CrossField":
        if self.space.kind == "fourier":
            return CrossField(self.space, {k: fn(v) for k, v in self.data.items()})
        return CrossField(self.space, tuple(fn(v) for v in self.data))

    def __add__(self, other):
        self._check(other)
        if self.space.kind == "fourier":
            out = dict(self.data)
            for k, v in other.data.items():
                out[k] = out[k] + v if k in out else v
            return CrossField(self.space, out)
        a, b = self.data, other.data
        if len(a) < len(b):
            a, b = b, a
        merged = list(a)
        for k, v in enumerate(b):
            merged[k] = merged[k] + v
        return CrossField(self.space, tuple(merged))

    def __neg__(self):
        return self.map_entries(lambda e: -e)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor) -> "CrossField":
        return self.map_entries(lambda e: e * factor)

    def is_zero(self) -> bool:
        if self.space.kind == "fourier":
            return all(v.is_zero() for v in self.data.values())
        return all(v.is_zero() for v in self.data)

    def __eq__(self, other):
        if not isinstance(other, CrossField) or self.space != other.space:
            return NotImplemented
        return (self - other).is_zero()

    # -- entrywise calculus --------------------------------------------------
    def ddt(self, deps) -> "CrossField":
        return self.map_entries(lambda e: e.ddt(deps))

    def truncate(self, bound) -> "CrossField":
        return self.map_entries(lambda e: e.truncate(bound))

    def mode(self, k, ring: Ring) -> HistoryExpr:
        if self.space.kind != "fourier":
            raise CrossSectionError("mode access needs a Fourier field")
        return self.data.get(k, ring.zero())

    def entry(self, k) -> HistoryExpr:
        return self.data[k]

    def __repr__(self):
        if self.space.kind == "fourier":
            body = ", ".join(f"e^{k}iy: {v}" for k, v in sorted(self.data.items()))
        else:
            body = ", ".join(str(v) for v in self.data)
        return f"<field {body}>"


def mul_fields(a: CrossField, b: CrossField) -> CrossField:
    """Pointwise product (same variant); used by nonlinearities."""
    a._check(b)
    space = a.space
    if space.kind == "findim":
        return CrossField(space, tuple(x * y for x, y in zip(a.data, b.data)))
    if space.kind == "channel":
        out = [None] * (len(a.data) + len(b.data) - 1)
        for i, x in enumerate(a.data):
            for j, y in enumerate(b.data):
                p = x * y
                out[i + j] = p if out[i + j] is None else out[i + j] + p
        return CrossField(space, tuple(out))
    out = {}
    for ka, x in a.data.items():
        for kb, y in b.data.items():
            p = x * y
            if p.is_zero():
                continue
            k = ka + kb
            out[k] = out[k] + p if k in out else p
    return CrossField(space, out)


# ---------------------------------------------------------------- operators

@dataclass(frozen=True)
class MatrixOp:
    """FiniteDim operator: m x m matrix of GradedPoly entries."""
    entries: tuple  # tuple of rows, each a tuple of HistoryExpr


@dataclass(frozen=True)
class ChannelOp:
    """Sum of (polynomial in y) * d/dy^j terms acting on channel fields."""
    terms: tuple  # tuple of (ypoly: tuple[HistoryExpr], j: int)


@dataclass(frozen=True)
class FourierOp:
    """Polynomial in d/dy: on mode e^{iky} multiplies by sum_j c_j (ik)^j."""
    dy_coeffs: tuple  # tuple[ExactScalar]

    def multiplier(self, k: int) -> ExactScalar:
        ik = ExactScalar(0, Fraction(k))
        out = ZERO
        p = ONE
        for c in self.dy_coeffs:
            out = out + c * p
            p = p * ik
        return out


@dataclass(frozen=True)
class OperatorStack:
    """The operator list L0..L_ellmax of one problem."""
    ops: tuple

    def __len__(self):
        return len(self.ops)

    def op(self, ell: int):
        return self.ops[ell] if ell < len(self.ops) else None


def apply_op(op, v: CrossField) -> CrossField:
    """Exact image of one operator; degree caps raise rather than truncate."""
    space = v.space
    if isinstance(op, MatrixOp):
        if space.kind != "findim" or len(op.entries) != space.m:
            raise CrossSectionError("operator and field variants do not match")
        rows = []
        for i in range(space.m):
            acc = None
            for j in range(space.m):
                t = op.entries[i][j] * v.data[j]
                acc = t if acc is None else acc + t
            rows.append(acc)
        return CrossField(space, tuple(rows))
    if isinstance(op, ChannelOp):
        if space.kind != "channel":
            raise CrossSectionError("operator and field variants do not match")
        total = None
        for ypoly, j in op.terms:
            coeffs = list(v.data)
            for _ in range(j):  # d/dy on coefficient lists
                coeffs = [coeffs[p] * p for p in range(1, len(coeffs))] or []
            if not coeffs:
                continue
            out = [None] * (len(coeffs) + len(ypoly) - 1)
            for p, c in enumerate(coeffs):
                for q, w in enumerate(ypoly):
                    t = c * w
                    out[p + q] = t if out[p + q] is None else out[p + q] + t
            f = CrossField(space, tuple(x if x is not None else coeffs[0].ring.zero()
                                        for x in out))
            total = f if total is None else total + f
        if total is None:
            ring = v.data[0].ring
            return CrossField.zero(space, ring)
        return total
    if isinstance(op, FourierOp):
        if space.kind != "fourier":
            raise CrossSectionError("operator and field variants do not match")
        return CrossField(space, {k: c * op.multiplier(k) for k, c in v.data.items()})
    raise CrossSectionError(f"unknown operator type {type(op).__name__}")


# ------------------------------------------------------------ inner products

def inner(space, zrow, vrow, ring: Ring):
    """Matrix of pairings <z_i, v_j> per the space's inner product."""
    out = []
    for z in zrow:
        row = []
        for v in vrow:
            z._check(v)
            row.append(_pair(space, z, v, ring))
        out.append(row)
    return out


def _pair(space, z: CrossField, v: CrossField, ring: Ring) -> HistoryExpr:
    if space.kind == "findim":
        acc = ring.zero()
        for a, b in zip(z.data, v.data):
            acc = acc + a * b
        return acc
    if space.kind == "channel":
        acc = ring.zero()
        for p, a in enumerate(z.data):
            for q, b in enumerate(v.data):
                if (p + q) % 2 == 0:
                    acc = acc + (a * b) * Fraction(1, p + q + 1)
        return acc
    acc = ring.zero()
    for k, a in z.data.items():
        b = v.data.get(k)
        if b is not None:
            acc = acc + a.conj() * b
    return acc


# ------------------------------------------------------------- spectral data

@dataclass
class SpectralData:
    """Slow eigendata: L0 V0 = V0 A0, <Z0, V0> = I, gap beta > N alpha."""
    v0: list            # m CrossFields
    z0: list            # m CrossFields
    a0: list            # m x m ExactScalar
    alpha: Fraction
    beta: Fraction
    stable_note: str = ""

    @property
    def m(self) -> int:
        return len(self.v0)


@dataclass
class SpectralReport:
    ok: bool
    lines: list = field(default_factory=list)

    def __str__(self):
        return "\n".join(self.lines)


# rational bound safely below pi^2/4, used to sanity-check channel gaps
_CHANNEL_BETA_CAP = Fraction(12, 5)


def spectral_check(space, stack: OperatorStack, sd: SpectralData, order: int,
                   ring: Ring) -> SpectralReport:
    """Verify the eigendata identities exactly and the spectral gap."""
    lines = []
    m = sd.m
    l0 = stack.ops[0]
    for j in range(m):
        img = apply_op(l0, sd.v0[j])
        acc = None
        for i in range(m):
            t = sd.v0[i].scale(ring.scalar(sd.a0[i][j]))
            acc = t if acc is None else acc + t
        if not (img - acc).is_zero():
            raise SpectralError(f"L0 V0 != V0 A0 in column {j}")
    lines.append("L0 V0 = V0 A0 exactly")
    gram = inner(space, sd.z0, sd.v0, ring)
    for i in range(m):
        for j in range(m):
            want = 1 if i == j else 0
            if gram[i][j] != want:
                raise SpectralError(f"<Z0,V0>[{i}][{j}] = {gram[i][j]}, want {want}")
    lines.append("<Z0, V0> = I exactly")
    if not sd.beta > order * sd.alpha:
        raise SpectralError(
            f"spectral gap violated: beta={sd.beta} <= {order}*alpha={order * sd.alpha}")
    lines.append(f"gap: beta={sd.beta} > N*alpha={order * sd.alpha} (N={order})")
    for lam, label in stable_rates(space, stack, sd):
        lines.append(f"stable eigenvalue {lam} ({label})")
    if sd.stable_note:
        lines.append(sd.stable_note)
    if space.kind == "channel" and sd.beta > _CHANNEL_BETA_CAP:
        raise SpectralError(
            f"declared channel gap beta={sd.beta} exceeds the rational bound "
            f"{_CHANNEL_BETA_CAP} below pi^2/4")
    return SpectralReport(True, lines)


def stable_rates(space, stack: OperatorStack, sd: SpectralData):
    """(rate, label) for each stable eigencomponent a solve may use."""
    l0 = stack.ops[0]
    out = []
    if space.kind == "findim":
        _require_diagonal(l0, space.m)
        for i in range(space.m):
            lam = l0.entries[i][i]
            c = _constant_of(lam)
            if c != 0:
                name = space.names[i] if space.names else f"component {i}"
                out.append((c.re, name))
    elif space.kind == "fourier":
        slow = _slow_modes(sd)
        for k in range(-space.harmonic_cap, space.harmonic_cap + 1):
            if k in slow:
                continue
            lam = l0.multiplier(k)
            if not lam.is_real():
                raise SpectralError(f"complex stable rate at harmonic {k}")
            out.append((lam.re, f"harmonic {k}"))
    return out


def _require_diagonal(op: MatrixOp, m: int):
    for i in range(m):
        for j in range(m):
            if i != j and not op.entries[i][j].is_zero():
                raise SpectralError("FiniteDim solves require a diagonal L0")


def _constant_of(e: HistoryExpr) -> ExactScalar:
    total = ZERO
    for (mono, atoms), c in e.terms.items():
        if atoms or any(mono):
            raise SpectralError("eigenvalue entries must be constants")
        total = total + c
    return total


def _slow_modes(sd: SpectralData):
    """Fourier slow modes read off the mode-pure V0 columns."""
    slow = set()
    for v in sd.v0:
        ks = list(v.data.keys())
        if len(ks) != 1:
            raise SpectralError("Fourier V0 columns must be single modes")
        slow.add(ks[0])
    return slow


# ----------------------------------------------------------------- solves

def linv_solve(space, stack: OperatorStack, sd: SpectralData, rhs: CrossField,
               shift: ExactScalar, ring: Ring, verify: bool = True) -> CrossField:
    """Solve L0 v - v*shift = rhs with <Z0, v> = 0 (static content);
    coupling content returns the causal convolution Z[.; rate] instead.

    The static Sylvester identity and the orthogonality are re-verified
    on every solve; the convolution branch is verified through the
    d/dt Z identity by construction (see algebra.conv).
    """
    l0 = stack.ops[0]
    if not shift.is_real():
        raise LinvError("only real diagonal shifts are supported")
    out = _linv_dispatch(space, l0, sd, rhs, shift, ring)
    if verify:
        static_v, _ = _split_field(out)
        img = apply_op(l0, static_v) - static_v.scale(ring.scalar(shift))
        static_rhs, _ = _split_field(rhs)
        if not (img - static_rhs).is_zero():
            raise LinvError("linv postcondition violated: L0 v - v a != rhs")
        gram = inner(space, sd.z0, [static_v], ring)
        for row in gram:
            if not row[0].is_zero():
                raise LinvError("linv postcondition violated: <Z0, v> != 0")
        if space.kind == "channel":
            _check_neumann(out)
    return out


def _linv_dispatch(space, l0, sd, rhs, shift, ring):
    if space.kind == "findim":
        _require_diagonal(l0, space.m)
        comps = []
        for i in range(space.m):
            lam = _constant_of(l0.entries[i][i]) - shift
            static, hist = rhs.data[i].split_static()
            if lam == 0:
                if not static.is_zero():
                    raise LinvError(
                        f"unsolvable: nonzero slow-part residual in component {i}")
                comps.append(hist.conv(-1) if not hist.is_zero() else ring.zero())
            else:
                if not lam.is_real() or lam.re >= 0:
                    raise LinvError(f"stable rate {lam} is not negative real")
                v = static * (ONE / lam)
                if not hist.is_zero():
                    v = v + hist.conv(lam.re)
                comps.append(v)
        return CrossField(space, tuple(comps))

    if space.kind == "channel":
        if shift != ZERO:
            raise LinvError("channel solves support zero shift only")
        if len(l0.terms) != 1 or l0.terms[0][1] != 2 or \
                list(l0.terms[0][0]) != [ring.one()]:
            raise LinvError("channel solves require L0 = d^2/dy^2")
        static, hist = _split_field(rhs)
        if not hist.is_zero():
            raise LinvError("time-dependent content in a channel solve "
                            "is outside the supported problem class")
        mean = _pair(space, CrossField(space, (ring.one(),)), rhs, ring)
        if not mean.is_zero():
            raise LinvError("unsolvable: channel right-hand side has nonzero mean")
        # first antiderivative, fixed by Neumann at y = -1
        a = [ring.zero()] + [rhs.data[p] * Fraction(1, p + 1)
                             for p in range(len(rhs.data))]
        c1 = ring.zero()
        for p, coef in enumerate(a):
            c1 = c1 - coef * Fraction((-1) ** p)
        a[0] = c1
        v = [ring.zero()] + [a[p] * Fraction(1, p + 1) for p in range(len(a))]
        vf = CrossField(space, tuple(v))
        mean_v = _pair(space, CrossField(space, (ring.one(),)), vf, ring)
        v[0] = -mean_v
        return CrossField(space, tuple(v))

    # fourier
    slow = _slow_modes(sd)
    out = {}
    for k, e in rhs.data.items():
        static, hist = e.split_static()
        if k in slow:
            if not static.is_zero():
                raise LinvError(f"unsolvable: static slow-mode residual at k={k}")
            if not hist.is_zero():
                out[k] = hist.conv(-1)
            continue
        lam = l0.multiplier(k) - shift
        if not lam.is_real() or lam.re >= 0:
            raise LinvError(f"stable rate {lam} at harmonic {k} is not negative real")
        v = static * (ONE / lam)
        if not hist.is_zero():
            v = v + hist.conv(lam.re)
        if not v.is_zero():
            out[k] = v
    return CrossField(space, out)


def greens_solve(space, stack: OperatorStack, sd: SpectralData,
                 res: CrossField, ring: Ring) -> CrossField:
    """Iteration update: wrap each stable eigencomponent of a residual in
    Z[.; rate] (static parts become division by |rate|).  Slow residual
    content must already have been moved to the evolution."""
    l0 = stack.ops[0]
    if space.kind == "findim":
        _require_diagonal(l0, space.m)
        comps = []
        for i in range(space.m):
            e = res.data[i]
            lam = _constant_of(l0.entries[i][i])
            if lam == 0:
                if not e.is_zero():
                    raise LinvError("slow residual content reached greens_solve")
                comps.append(ring.zero())
            else:
                comps.append(e.conv(lam.re) if not e.is_zero() else ring.zero())
        return CrossField(space, tuple(comps))
    if space.kind == "fourier":
        slow = _slow_modes(sd)
        out = {}
        for k, e in res.data.items():
            if k in slow:
                if not e.is_zero():
                    raise LinvError("slow residual content reached greens_solve")
                continue
            lam = l0.multiplier(k)
            if not lam.is_real() or lam.re >= 0:
                raise LinvError(f"stable rate {lam} at harmonic {k} is not negative real")
            out[k] = e.conv(lam.re)
        return CrossField(space, out)
    raise LinvError("nonlinear channel constructions are outside the "
                    "supported problem class")


def _split_field(f: CrossField):
    if f.space.kind == "fourier":
        stat, hist = {}, {}
        for k, e in f.data.items():
            s, h = e.split_static()
            stat[k] = s
            hist[k] = h
        return CrossField(f.space, stat), CrossField(f.space, hist)
    pairs = [e.split_static() for e in f.data]
    return (CrossField(f.space, tuple(p[0] for p in pairs)),
            CrossField(f.space, tuple(p[1] for p in pairs)))


def _check_neumann(v: CrossField):
    """d/dy v = 0 at y = +-1, exactly."""
    ring = v.data[0].ring if v.data else None
    if ring is None:
        return
    at_plus = ring.zero()
    at_minus = ring.zero()
    for p, c in enumerate(v.data):
        if p == 0:
            continue
        at_plus = at_plus + c * p
        at_minus = at_minus + c * Fraction(p * (-1) ** (p - 1))
    if not at_plus.is_zero() or not at_minus.is_zero():
        raise LinvError("channel solve violates the Neumann condition")
