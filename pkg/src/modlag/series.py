"""Truncated power series in the step size h.

An ``HSeries`` stores coefficients for h^0 .. h^order; arithmetic between
two series truncates at the smaller order.  Coefficients are ``Scalar`` or
``Vec`` normal forms from :mod:`modlag.expr` and must not contain the
symbol h themselves.  ``series_of_scalar`` converts an expression with
explicit h factors (possibly with negative exponents, as long as they
cancel) into a series, and the ``compose_*`` functions substitute series
for vector symbols inside expressions, Taylor-expanding opaque derivative
tensors around the shifted base point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .expr import (
    DotA,
    Jet,
    LApp,
    Q,
    SApp,
    SAtom,
    Scalar,
    Sym,
    SumAtom,
    SZERO,
    SONE,
    Term,
    VApp,
    VAtom,
    Vec,
    VSym,
    VZERO,
    dt_s,
    dt_v,
    lapp,
    sadd,
    sdot,
    smul,
    sneg,
    snum,
    spow,
    sscale,
    ssym,
    uapp,
    vadd,
    vatom,
    vjet,
    vneg,
    vscale,
)


@dataclass(frozen=True)
class HSeries:
    order: int
    coeffs: tuple  # length order + 1, all Scalar or all Vec

    def __post_init__(self):
        if len(self.coeffs) != self.order + 1:
            raise ValueError("coefficient count must be order + 1")

    @property
    def is_vector(self) -> bool:
        return any(isinstance(c, Vec) for c in self.coeffs)

    def _zero(self):
        return VZERO if self.is_vector else SZERO

    def coeff(self, i: int):
        return self.coeffs[i] if 0 <= i <= self.order else self._zero()


def szero_series(order: int) -> HSeries:
    return HSeries(order, (SZERO,) * (order + 1))


def vzero_series(order: int) -> HSeries:
    return HSeries(order, (VZERO,) * (order + 1))


def hconst(c, order: int) -> HSeries:
    zero = VZERO if isinstance(c, Vec) else SZERO
    return HSeries(order, (c,) + (zero,) * order)


def truncate(s: HSeries, k: int) -> HSeries:
    if k >= s.order:
        return s
    return HSeries(k, s.coeffs[: k + 1])


def hadd(*ss: HSeries) -> HSeries:
    order = min(s.order for s in ss)
    vector = any(s.is_vector for s in ss)
    add = vadd if vector else sadd
    return HSeries(order, tuple(add(*[s.coeffs[i] for s in ss])
                                for i in range(order + 1)))


def hneg(s: HSeries) -> HSeries:
    op = vneg if s.is_vector else sneg
    return HSeries(s.order, tuple(op(c) for c in s.coeffs))


def hsub(a: HSeries, b: HSeries) -> HSeries:
    return hadd(a, hneg(b))


def hscale(q, s: HSeries) -> HSeries:
    """Multiply by an exact rational constant."""
    if s.is_vector:
        return HSeries(s.order, tuple(vscale(snum(q), c) for c in s.coeffs))
    return HSeries(s.order, tuple(sscale(q, c) for c in s.coeffs))


def hscale_expr(e: Scalar, s: HSeries) -> HSeries:
    """Multiply by an h-free scalar expression."""
    op = (lambda c: vscale(e, c)) if s.is_vector else (lambda c: smul(e, c))
    return HSeries(s.order, tuple(op(c) for c in s.coeffs))


def hmul(a: HSeries, b: HSeries) -> HSeries:
    """Product of two scalar series."""
    order = min(a.order, b.order)
    return HSeries(order, tuple(
        sadd(*[smul(a.coeffs[i], b.coeffs[k - i]) for i in range(k + 1)])
        for k in range(order + 1)))


def hdot(a: HSeries, b: HSeries) -> HSeries:
    """Inner product of two vector series."""
    order = min(a.order, b.order)
    return HSeries(order, tuple(
        sadd(*[sdot(a.coeffs[i], b.coeffs[k - i]) for i in range(k + 1)])
        for k in range(order + 1)))


def hvscale(s: HSeries, v: HSeries) -> HSeries:
    """Scalar series times vector series."""
    order = min(s.order, v.order)
    return HSeries(order, tuple(
        vadd(*[vscale(s.coeffs[i], v.coeffs[k - i]) for i in range(k + 1)])
        for k in range(order + 1)))


def mul_h_power(s: HSeries, m: int, order: int | None = None) -> HSeries:
    """Multiply by h**m; m may be negative if the low coefficients vanish."""
    if order is None:
        order = s.order + m
    zero = s._zero()
    if m < 0:
        for i in range(min(-m, s.order + 1)):
            if s.coeffs[i] != zero:
                raise ValueError("negative h power does not cancel")
    coeffs = []
    for k in range(order + 1):
        i = k - m
        if i < 0:
            coeffs.append(zero)
        elif i <= s.order:
            coeffs.append(s.coeffs[i])
        else:
            raise ValueError("series too short for requested order")
    return HSeries(order, tuple(coeffs))


def dt_series(s: HSeries) -> HSeries:
    """Total time derivative, coefficient by coefficient."""
    op = dt_v if s.is_vector else dt_s
    return HSeries(s.order, tuple(op(c) for c in s.coeffs))


def taylor_shift(alpha, order: int) -> HSeries:
    """Series of x(t + alpha h) in jet variables: sum (alpha^i/i!) h^i x^(i)."""
    alpha = Q(alpha)
    coeffs = []
    fact = 1
    for i in range(order + 1):
        if i > 0:
            fact *= i
        coeffs.append(vscale(snum(alpha ** i / fact), vjet(i)))
    return HSeries(order, tuple(coeffs))


def series_equal(a: HSeries, b: HSeries, order: int | None = None) -> bool:
    if order is None:
        order = min(a.order, b.order)
    return all(a.coeff(i) == b.coeff(i) for i in range(order + 1))


def scalar_of_series(s: HSeries) -> Scalar:
    """Collapse a scalar series back to a single expression in h."""
    if s.is_vector:
        raise TypeError("expected a scalar series")
    h = ssym("h")
    return sadd(*[smul(spow(h, Q(i)), c) for i, c in enumerate(s.coeffs)])


def vec_of_series(s: HSeries) -> Vec:
    """Collapse a vector series back to a single expression in h."""
    h = ssym("h")
    return vadd(*[vscale(spow(h, Q(i)), c) for i, c in enumerate(s.coeffs)]) \
        if s.coeffs else VZERO


# ---------------------------------------------------------------------------
# composition
#
# Internally a "dseries" is a dict {h power: coefficient}; powers may be
# negative during intermediate steps (discrete Lagrangians contain 1/h)
# but must have cancelled by the time a series is returned.

def _nonzero(c):
    return bool(c.items if isinstance(c, Vec) else c.terms)


def _dclean(d):
    return {k: c for k, c in d.items() if _nonzero(c)}


def _dadd(*ds):
    out = {}
    for d in ds:
        for k, c in d.items():
            if k in out:
                out[k] = vadd(out[k], c) if isinstance(c, Vec) else sadd(out[k], c)
            else:
                out[k] = c
    return _dclean(out)


def _dmul(a, b, order):
    out = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = ka + kb
            if k > order:
                continue
            c = smul(ca, cb)
            out[k] = sadd(out[k], c) if k in out else c
    return _dclean(out)


def _dvscale(a, v, order):
    out = {}
    for ka, ca in a.items():
        for kb, cb in v.items():
            k = ka + kb
            if k > order:
                continue
            c = vscale(ca, cb)
            out[k] = vadd(out[k], c) if k in out else c
    return _dclean(out)


def _ddot(u, v, order):
    out = {}
    for ka, ca in u.items():
        for kb, cb in v.items():
            k = ka + kb
            if k > order:
                continue
            c = sdot(ca, cb)
            out[k] = sadd(out[k], c) if k in out else c
    return _dclean(out)


def _dpow(d, e: Fraction, order: int):
    """d**e truncated at h**order.  For non-integer or negative exponents
    the lowest-order part is factored out and the binomial series used."""
    if not d:
        if e > 0:
            return {}
        raise ZeroDivisionError("inverse of a zero series")
    if e == 0:
        return {0: SONE}
    if e.denominator == 1 and e > 0:
        out = {0: SONE}
        for _ in range(int(e)):
            out = _dmul(out, d, order)
        return out
    lo = min(d)
    if (lo * e).denominator != 1:
        raise ValueError("fractional leading h power in series composition")
    shift = int(lo * e)
    c0 = d[lo]
    if isinstance(c0, Vec):
        raise TypeError("cannot raise a vector series to a power")
    head = spow(c0, e)
    inv0 = spow(c0, Q(-1))
    # d = h^lo c0 (1 + u) with u starting at relative power >= 1
    u = {k - lo: smul(inv0, c) for k, c in d.items() if k != lo}
    ord_rel = order - shift
    out = {0: head}
    upow = {0: SONE}
    binom = Q(1)
    m = 1
    while u and m * min(u) <= ord_rel:
        binom = binom * (e - (m - 1)) / m
        upow = _dmul(upow, u, ord_rel)
        if not upow:
            break
        out = _dadd(out, {k: smul(sscale(binom, head), c) for k, c in upow.items()})
        m += 1
    return {k + shift: c for k, c in out.items() if k + shift <= order}


def _sym_scalar(a: Sym) -> Scalar:
    return Scalar((Term(Q(1), ((a, Q(1)),)),))


class _Composer:
    """Substitute h-series for vector atoms inside normal forms.

    Every method takes the truncation order explicitly: a term with
    explicit negative h powers (discrete Lagrangians contain 1/h) needs
    its remaining factors expanded with correspondingly more headroom.
    """

    def __init__(self, sub: Mapping[VAtom, HSeries]):
        self.sub = sub

    def scalar(self, s: Scalar, order: int):
        parts = []
        for t in s.terms:
            shift = 0
            rest = []
            for a, e in t.factors:
                if isinstance(a, Sym) and a.name == "h":
                    if e.denominator != 1:
                        raise ValueError("fractional power of h")
                    shift += int(e)
                else:
                    rest.append((a, e))
            eff = order - shift
            d = {0: snum(t.coeff)}
            for a, e in rest:
                if eff < 0:
                    d = {}
                    break
                d = _dmul(d, _dpow(self.satom(a, eff), e, eff), eff)
            parts.append({k + shift: c for k, c in d.items() if k + shift <= order})
        return _dadd(*parts) if parts else {}

    def vector(self, v: Vec, order: int):
        parts = []
        for s, a in v.items:
            ds = self.scalar(s, order)
            if not ds:
                continue
            # negative h powers in the coefficient need headroom in the atom
            lo = min(min(ds), 0)
            parts.append(_dvscale(ds, self.vatom(a, order - lo), order))
        return _dadd(*parts) if parts else {}

    def vatom(self, a: VAtom, order: int):
        if a in self.sub:
            ser = self.sub[a]
            if ser.order < order:
                raise ValueError(
                    f"substituted series for {a} has order {ser.order}, "
                    f"need {order}")
            return _dclean(dict(enumerate(ser.coeffs[: order + 1])))
        if isinstance(a, (Jet, VSym)):
            return {0: vatom(a)}
        if isinstance(a, LApp):
            return {k: lapp(a.map, c) for k, c in self.vatom(a.arg, order).items()}
        if isinstance(a, VApp):
            return self.app(a.fun, a.order, a.base, a.args, order)
        raise TypeError(a)

    def satom(self, a: SAtom, order: int):
        if isinstance(a, Sym):
            return {0: _sym_scalar(a)}
        if isinstance(a, DotA):
            return _ddot(self.vatom(a.a, order), self.vatom(a.b, order), order)
        if isinstance(a, SApp):
            return self.app(a.fun, a.order, a.base, a.args, order)
        if isinstance(a, SumAtom):
            return self.scalar(a.base, order)
        raise TypeError(a)

    def app(self, fun: str, k: int, base: Vec, args, order: int):
        """Compose a U^(k) application: Taylor-expand around the order-zero
        part of the substituted base, and expand multilinearly in the
        substituted arguments."""
        dbase = self.vector(base, order)
        dargs = [self.vatom(x, order) for x in args]
        base0 = dbase.get(0, VZERO)
        delta = {i: c for i, c in dbase.items() if i != 0}
        if any(i < 0 for i in delta):
            raise ValueError("negative h power in a derivative-symbol base")
        out = {}
        m = 0
        fact = 1
        while True:
            d = self._multilinear(fun, k + m, base0, dargs + [delta] * m, order)
            if fact != 1:
                d = {p: (vscale(snum(Q(1, fact)), c) if isinstance(c, Vec)
                         else sscale(Q(1, fact), c)) for p, c in d.items()}
            out = _dadd(out, d)
            m += 1
            fact *= m
            if not delta or m * min(delta) > order:
                break
        return out

    @staticmethod
    def _multilinear(fun, k, base0, dargs, order):
        """U^(k)(base0; series args...) expanded term by term."""
        results = {}

        def rec(idx, power, picked):
            if power > order:
                return
            if idx == len(dargs):
                val = uapp(fun, k, picked, base=base0)
                if power in results:
                    results[power] = (vadd(results[power], val)
                                      if isinstance(val, Vec)
                                      else sadd(results[power], val))
                else:
                    results[power] = val
                return
            for p, c in dargs[idx].items():
                rec(idx + 1, power + p, picked + [c])

        rec(0, 0, [])
        return _dclean(results)


def _to_series(d, order: int, vector: bool) -> HSeries:
    neg = sorted(k for k in d if k < 0)
    if neg:
        raise ValueError(f"series has uncancelled negative h powers: {neg}")
    zero = VZERO if vector else SZERO
    return HSeries(order, tuple(d.get(k, zero) for k in range(order + 1)))


def compose_scalar(s: Scalar, sub: Mapping[VAtom, HSeries], order: int) -> HSeries:
    return _to_series(_Composer(sub).scalar(s, order), order, vector=False)


def compose_vector(v: Vec, sub: Mapping[VAtom, HSeries], order: int) -> HSeries:
    return _to_series(_Composer(sub).vector(v, order), order, vector=True)


def series_of_scalar(s: Scalar, order: int) -> HSeries:
    """Split an expression with explicit h factors into an h-series."""
    return compose_scalar(s, {}, order)


def series_of_vector(v: Vec, order: int) -> HSeries:
    return compose_vector(v, {}, order)


def compose_series(s: HSeries, sub: Mapping[VAtom, HSeries],
                   order: int | None = None) -> HSeries:
    """Substitute series for vector atoms inside each coefficient of s."""
    if order is None:
        order = s.order
    order = min(order, s.order)
    vector = s.is_vector
    compose = compose_vector if vector else compose_scalar
    acc = vzero_series(order) if vector else szero_series(order)
    for i in range(order + 1):
        ci = s.coeffs[i]
        if _nonzero(ci):
            acc = hadd(acc, mul_h_power(compose(ci, sub, order - i), i, order))
    return acc
