"""Exact symbolic kernel for vector-valued mechanics expressions.

Everything is kept in a canonical normal form with exact rational
coefficients:

* a ``Scalar`` is a sum of terms, each term a rational coefficient times a
  multiset of scalar atoms raised to rational exponents;
* a ``Vec`` is a linear combination of vector atoms with ``Scalar``
  coefficients.

Vector atoms are jet variables x, xd, xdd, ... (``Jet``), free vector
symbols (``VSym``), applications of opaque linear maps (``LApp``) and
partial applications of opaque derivative tensors U^(k) (``VApp``).
Scalar atoms are scalar symbols, inner products of vector atoms, full
applications of U^(k), and opaque sub-sums kept as a base for non-integer
powers.  Multilinearity of dot products, linear maps and derivative
tensors is expanded eagerly, so structural equality of normal forms is a
decidable (and reliable) zero test for the identities handled here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Union

Q = Fraction


# ---------------------------------------------------------------------------
# linear-map registry

@dataclass(frozen=True)
class MapInfo:
    symmetry: str = "general"   # "sym" | "antisym" | "general"
    inverse: str | None = None


# Default maps used by the anisotropic-oscillator example.  `register_map`
# may extend this at runtime; entries are never removed.
_MAPS: dict[str, MapInfo] = {
    "M": MapInfo("sym", inverse="Minv"),
    "Minv": MapInfo("sym", inverse="M"),
    "A": MapInfo("sym"),
    "Jp": MapInfo("sym"),
    "Jm": MapInfo("antisym"),
}


def register_map(name: str, symmetry: str = "general", inverse: str | None = None) -> None:
    if symmetry not in ("sym", "antisym", "general"):
        raise ValueError(f"unknown symmetry {symmetry!r}")
    _MAPS[name] = MapInfo(symmetry, inverse)
    if inverse is not None and inverse not in _MAPS:
        _MAPS[inverse] = MapInfo(symmetry, name)


def map_info(name: str) -> MapInfo:
    try:
        return _MAPS[name]
    except KeyError:
        raise KeyError(f"linear map {name!r} is not registered") from None


def known_maps() -> tuple[str, ...]:
    return tuple(_MAPS)


# ---------------------------------------------------------------------------
# atoms

@dataclass(frozen=True)
class Sym:
    """Scalar symbol (h, free parameters)."""
    name: str


@dataclass(frozen=True)
class Jet:
    """Jet variable: order 0 is x, 1 is xd, and so on."""
    order: int


@dataclass(frozen=True)
class VSym:
    """Free vector symbol (momentum p, mesh points, fresh unknowns)."""
    name: str


@dataclass(frozen=True)
class LApp:
    """Opaque linear map applied to a vector atom."""
    map: str
    arg: "VAtom"


@dataclass(frozen=True)
class VApp:
    """U^(order) applied to order-1 vector atoms: a vector (one free slot)."""
    fun: str
    order: int
    base: "Vec"
    args: tuple


@dataclass(frozen=True)
class DotA:
    """Inner product of two vector atoms, argument order canonical."""
    a: "VAtom"
    b: "VAtom"


@dataclass(frozen=True)
class SApp:
    """U^(order) applied to order vector atoms: a scalar."""
    fun: str
    order: int
    base: "Vec"
    args: tuple


@dataclass(frozen=True)
class SumAtom:
    """A scalar sum kept opaque as the base of a non-expandable power."""
    base: "Scalar"


VAtom = Union[Jet, VSym, LApp, VApp]
SAtom = Union[Sym, DotA, SApp, SumAtom]


@dataclass(frozen=True)
class Term:
    coeff: Fraction
    factors: tuple  # ((SAtom, Fraction exponent), ...) sorted


@dataclass(frozen=True)
class Scalar:
    terms: tuple  # (Term, ...) sorted by factor key


@dataclass(frozen=True)
class Vec:
    items: tuple  # ((Scalar, VAtom), ...) sorted by atom key


# ---------------------------------------------------------------------------
# ordering keys (used for canonical sorting and deterministic printing)

def _qkey(q: Fraction):
    return (q.numerator, q.denominator)


@lru_cache(maxsize=None)
def _vkey(a: VAtom):
    if isinstance(a, Jet):
        return (0, a.order)
    if isinstance(a, VSym):
        return (1, a.name)
    if isinstance(a, LApp):
        return (2, a.map, _vkey(a.arg))
    if isinstance(a, VApp):
        return (3, a.fun, a.order, _veckey(a.base), tuple(_vkey(x) for x in a.args))
    raise TypeError(a)


@lru_cache(maxsize=None)
def _skey(a: SAtom):
    if isinstance(a, Sym):
        return (0, a.name)
    if isinstance(a, DotA):
        return (1, _vkey(a.a), _vkey(a.b))
    if isinstance(a, SApp):
        return (2, a.fun, a.order, _veckey(a.base), tuple(_vkey(x) for x in a.args))
    if isinstance(a, SumAtom):
        return (3, _scalkey(a.base))
    raise TypeError(a)


@lru_cache(maxsize=None)
def _termkey(t: Term):
    return tuple((_skey(a), _qkey(e)) for a, e in t.factors)


@lru_cache(maxsize=None)
def _scalkey(s: Scalar):
    return tuple((_termkey(t), _qkey(t.coeff)) for t in s.terms)


@lru_cache(maxsize=None)
def _veckey(v: Vec):
    return tuple((_vkey(a), _scalkey(s)) for s, a in v.items)


# ---------------------------------------------------------------------------
# scalar constructors

SZERO = Scalar(())
SONE = Scalar((Term(Q(1), ()),))
VZERO = Vec(())


def snum(q) -> Scalar:
    q = Q(q)
    if q == 0:
        return SZERO
    return Scalar((Term(q, ()),))


def ssym(name: str) -> Scalar:
    return Scalar((Term(Q(1), ((Sym(name), Q(1)),)),))


def _merge_factors(fa, fb):
    """Merge two sorted factor tuples, adding exponents."""
    out = {}
    for a, e in fa:
        out[a] = out.get(a, Q(0)) + e
    for a, e in fb:
        out[a] = out.get(a, Q(0)) + e
    return tuple(sorted(((a, e) for a, e in out.items() if e != 0),
                        key=lambda fe: _skey(fe[0])))


def _build(termdict) -> Scalar:
    terms = [Term(c, f) for f, c in termdict.items() if c != 0]
    terms.sort(key=_termkey)
    return Scalar(tuple(terms))


def sadd(*ss: Scalar) -> Scalar:
    acc: dict = {}
    for s in ss:
        for t in s.terms:
            acc[t.factors] = acc.get(t.factors, Q(0)) + t.coeff
    return _build(acc)


def sneg(s: Scalar) -> Scalar:
    return Scalar(tuple(Term(-t.coeff, t.factors) for t in s.terms))


def ssub(a: Scalar, b: Scalar) -> Scalar:
    return sadd(a, sneg(b))


def _expand_term(coeff: Fraction, factors) -> Scalar:
    """Expand any SumAtom factor with a positive integer exponent."""
    for i, (a, e) in enumerate(factors):
        if isinstance(a, SumAtom) and e.denominator == 1 and e > 0:
            rest = Scalar((Term(coeff, factors[:i] + factors[i + 1:]),))
            p = spow_int(a.base, int(e))
            return smul(rest, p)
    return Scalar((Term(coeff, factors),))


def smul(*ss: Scalar) -> Scalar:
    if not ss:
        return SONE
    acc = ss[0]
    for s in ss[1:]:
        out: dict = {}
        pending = []
        for ta in acc.terms:
            for tb in s.terms:
                f = _merge_factors(ta.factors, tb.factors)
                c = ta.coeff * tb.coeff
                if any(isinstance(a, SumAtom) and e.denominator == 1 and e > 0
                       for a, e in f):
                    pending.append(_expand_term(c, f))
                else:
                    out[f] = out.get(f, Q(0)) + c
        acc = sadd(_build(out), *pending)
    return acc


def sscale(q, s: Scalar) -> Scalar:
    q = Q(q)
    if q == 0:
        return SZERO
    return Scalar(tuple(Term(q * t.coeff, t.factors) for t in s.terms))


def spow_int(s: Scalar, n: int) -> Scalar:
    if n < 0:
        return spow(s, Q(n))
    out = SONE
    for _ in range(n):
        out = smul(out, s)
    return out


def _frac_root(q: Fraction, e: Fraction) -> Fraction | None:
    """q**e as an exact Fraction, or None if not exact."""
    if e.denominator == 1:
        return q ** int(e) if q != 0 else (Q(0) if e > 0 else None)
    if q <= 0:
        return None

    def root(n: int, r: int) -> int | None:
        k = round(n ** (1.0 / r))
        for c in (k - 1, k, k + 1):
            if c > 0 and c ** r == n:
                return c
        return None

    rn = root(q.numerator, e.denominator)
    rd = root(q.denominator, e.denominator)
    if rn is None or rd is None:
        return None
    return Q(rn, rd) ** e.numerator


def spow(s: Scalar, e) -> Scalar:
    e = Q(e)
    if e == 0:
        return SONE
    if e == 1:
        return s
    if e.denominator == 1 and e > 0:
        return spow_int(s, int(e))
    if not s.terms:
        raise ZeroDivisionError("0 raised to a non-positive power")
    if len(s.terms) == 1:
        t = s.terms[0]
        c = _frac_root(t.coeff, e)
        if c is not None:
            f = tuple(sorted(((a, ee * e) for a, ee in t.factors),
                             key=lambda fe: _skey(fe[0])))
            return Scalar((Term(c, f),))
    return Scalar((Term(Q(1), ((SumAtom(s), e),)),))


def sinv(s: Scalar) -> Scalar:
    return spow(s, Q(-1))


def is_const(s: Scalar) -> bool:
    return not s.terms or (len(s.terms) == 1 and not s.terms[0].factors)


def const_value(s: Scalar) -> Fraction:
    if not s.terms:
        return Q(0)
    if len(s.terms) == 1 and not s.terms[0].factors:
        return s.terms[0].coeff
    raise ValueError(f"not a constant: {s}")


# ---------------------------------------------------------------------------
# vector constructors

def vatom(a: VAtom) -> Vec:
    return Vec(((SONE, a),))


def vjet(k: int) -> Vec:
    return vatom(Jet(k))


def vsym(name: str) -> Vec:
    return vatom(VSym(name))


def _vbuild(itemdict) -> Vec:
    items = [(s, a) for a, s in itemdict.items() if s.terms]
    items.sort(key=lambda sa: _vkey(sa[1]))
    return Vec(tuple(items))


def vadd(*vs: Vec) -> Vec:
    acc: dict = {}
    for v in vs:
        for s, a in v.items:
            acc[a] = sadd(acc[a], s) if a in acc else s
    return _vbuild(acc)


def vneg(v: Vec) -> Vec:
    return Vec(tuple((sneg(s), a) for s, a in v.items))


def vsub(a: Vec, b: Vec) -> Vec:
    return vadd(a, vneg(b))


def vscale(s: Scalar, v: Vec) -> Vec:
    if not s.terms:
        return VZERO
    acc: dict = {}
    for c, a in v.items:
        sc = smul(s, c)
        if sc.terms:
            acc[a] = sadd(acc[a], sc) if a in acc else sc
    return _vbuild(acc)


def vnum(q, v: Vec) -> Vec:
    return vscale(snum(q), v)


def lapp(name: str, v: Vec) -> Vec:
    info = map_info(name)
    acc: dict = {}
    for s, a in v.items:
        # collapse a map applied to its declared inverse (and vice versa)
        if isinstance(a, LApp) and a.map == info.inverse:
            na = a.arg
        else:
            na = LApp(name, a)
        acc[na] = sadd(acc[na], s) if na in acc else s
    return _vbuild(acc)


def _dota(a: VAtom, b: VAtom) -> Scalar:
    """Canonical scalar for <a, b>.

    A full application U^(k)(a_1, ..., a_k) and the dot product of a
    partial application with the remaining argument denote the same
    scalar, so we normalize: whenever one side is a partial tensor
    application whose stored arguments are not all <= the other side in
    the canonical order, the application is re-folded so that the peeled
    argument is always the maximal atom of the full argument multiset.
    """
    if isinstance(a, VApp) and a.args:
        atoms = sorted(a.args + (b,), key=_vkey)
        if atoms[-1] != b:
            return _dota(VApp(a.fun, a.order, a.base, tuple(atoms[:-1])), atoms[-1])
    if isinstance(b, VApp) and b.args:
        atoms = sorted(b.args + (a,), key=_vkey)
        if atoms[-1] != a:
            return _dota(VApp(b.fun, b.order, b.base, tuple(atoms[:-1])), atoms[-1])
    if _vkey(a) > _vkey(b):
        a, b = b, a
    return Scalar((Term(Q(1), ((DotA(a, b), Q(1)),)),))


def sdot(u: Vec, v: Vec) -> Scalar:
    parts = []
    for su, au in u.items:
        for sv, av in v.items:
            parts.append(smul(su, sv, _dota(au, av)))
    return sadd(*parts) if parts else SZERO


def snorm2(v: Vec) -> Scalar:
    return sdot(v, v)


X = vjet(0)


def uapp(fun: str, order: int, args: Iterable[Vec], base: Vec = X):
    """U^(order) applied to vector arguments.

    With ``order`` arguments the result is a Scalar; with ``order - 1``
    arguments one slot stays free and the result is a Vec.  The tensor is
    symmetric, so arguments are sorted canonically.
    """
    args = list(args)
    if len(args) == order:
        scalar_result = True
    elif len(args) == order - 1:
        scalar_result = False
    else:
        raise ValueError(f"U^({order}) takes {order} or {order - 1} arguments, got {len(args)}")

    combos = [(SONE, ())]
    for arg in args:
        combos = [(smul(s, sa), atoms + (aa,))
                  for s, atoms in combos for sa, aa in arg.items]

    if scalar_result:
        if order == 0:
            atom = SApp(fun, 0, base, ())
            parts = [smul(s, Scalar((Term(Q(1), ((atom, Q(1)),)),)))
                     for s, _ in combos]
            return sadd(*parts) if parts else SZERO
        # full applications with arguments are normalized to dot products
        parts = []
        for s, atoms in combos:
            atoms = sorted(atoms, key=_vkey)
            va = VApp(fun, order, base, tuple(atoms[:-1]))
            parts.append(smul(s, _dota(va, atoms[-1])))
        return sadd(*parts) if parts else SZERO
    acc: dict = {}
    for s, atoms in combos:
        a = VApp(fun, order, base, tuple(sorted(atoms, key=_vkey)))
        acc[a] = sadd(acc[a], s) if a in acc else s
    return _vbuild(acc)


# ---------------------------------------------------------------------------
# structural queries

def scalar_atoms(s: Scalar):
    for t in s.terms:
        for a, _ in t.factors:
            yield a


def _vatom_max_jet(a: VAtom) -> int:
    if isinstance(a, Jet):
        return a.order
    if isinstance(a, VSym):
        return -1
    if isinstance(a, LApp):
        return _vatom_max_jet(a.arg)
    if isinstance(a, VApp):
        m = max_jet_vec(a.base)
        for x in a.args:
            m = max(m, _vatom_max_jet(x))
        return m
    raise TypeError(a)


def _satom_max_jet(a: SAtom) -> int:
    if isinstance(a, Sym):
        return -1
    if isinstance(a, DotA):
        return max(_vatom_max_jet(a.a), _vatom_max_jet(a.b))
    if isinstance(a, SApp):
        m = max_jet_vec(a.base)
        for x in a.args:
            m = max(m, _vatom_max_jet(x))
        return m
    if isinstance(a, SumAtom):
        return max_jet(a.base)
    raise TypeError(a)


def max_jet(s: Scalar) -> int:
    """Highest jet order occurring in s (-1 if none)."""
    m = -1
    for a in scalar_atoms(s):
        m = max(m, _satom_max_jet(a))
    return m


def max_jet_vec(v: Vec) -> int:
    m = -1
    for s, a in v.items:
        m = max(m, max_jet(s), _vatom_max_jet(a))
    return m


def contains_vatom(obj, target: VAtom) -> bool:
    if isinstance(obj, Scalar):
        return any(_satom_contains(a, target) for a in scalar_atoms(obj))
    if isinstance(obj, Vec):
        return any(contains_vatom(s, target) or _vatom_contains(a, target)
                   for s, a in obj.items)
    raise TypeError(obj)


def _vatom_contains(a: VAtom, target: VAtom) -> bool:
    if a == target:
        return True
    if isinstance(a, LApp):
        return _vatom_contains(a.arg, target)
    if isinstance(a, VApp):
        return contains_vatom(a.base, target) or any(_vatom_contains(x, target) for x in a.args)
    return False


def _satom_contains(a: SAtom, target: VAtom) -> bool:
    if isinstance(a, Sym):
        return False
    if isinstance(a, DotA):
        return _vatom_contains(a.a, target) or _vatom_contains(a.b, target)
    if isinstance(a, SApp):
        return contains_vatom(a.base, target) or any(_vatom_contains(x, target) for x in a.args)
    if isinstance(a, SumAtom):
        return contains_vatom(a.base, target)
    raise TypeError(a)


def contains_sym(s: Scalar, name: str) -> bool:
    def satom(a):
        if isinstance(a, Sym):
            return a.name == name
        if isinstance(a, SumAtom):
            return contains_sym(a.base, name)
        return False
    return any(satom(a) for a in scalar_atoms(s))


# ---------------------------------------------------------------------------
# substitution

def subst_s(s: Scalar, vmap: Mapping[VAtom, Vec], smap: Mapping[str, Scalar] | None = None) -> Scalar:
    parts = [SZERO]
    for t in s.terms:
        prod = snum(t.coeff)
        for a, e in t.factors:
            prod = smul(prod, spow(_subst_satom(a, vmap, smap), e))
        parts.append(prod)
    return sadd(*parts)


def subst_v(v: Vec, vmap: Mapping[VAtom, Vec], smap: Mapping[str, Scalar] | None = None) -> Vec:
    parts = [VZERO]
    for s, a in v.items:
        parts.append(vscale(subst_s(s, vmap, smap), _subst_vatom(a, vmap, smap)))
    return vadd(*parts)


def _subst_vatom(a: VAtom, vmap, smap) -> Vec:
    if a in vmap:
        return vmap[a]
    if isinstance(a, (Jet, VSym)):
        return vatom(a)
    if isinstance(a, LApp):
        return lapp(a.map, _subst_vatom(a.arg, vmap, smap))
    if isinstance(a, VApp):
        return uapp(a.fun, a.order,
                    [_subst_vatom(x, vmap, smap) for x in a.args],
                    base=subst_v(a.base, vmap, smap))
    raise TypeError(a)


def _subst_satom(a: SAtom, vmap, smap) -> Scalar:
    if isinstance(a, Sym):
        if smap and a.name in smap:
            return smap[a.name]
        return Scalar((Term(Q(1), ((a, Q(1)),)),))
    if isinstance(a, DotA):
        return sdot(_subst_vatom(a.a, vmap, smap), _subst_vatom(a.b, vmap, smap))
    if isinstance(a, SApp):
        return uapp(a.fun, a.order,
                    [_subst_vatom(x, vmap, smap) for x in a.args],
                    base=subst_v(a.base, vmap, smap))
    if isinstance(a, SumAtom):
        return subst_s(a.base, vmap, smap)
    raise TypeError(a)


# ---------------------------------------------------------------------------
# differentiation
#
# grad_s(s, var) is the gradient of a scalar with respect to a vector
# variable (a Jet or VSym atom).  _jacT(a, var, cot) is the transposed
# Jacobian of a vector atom applied to a cotangent vector.

def grad_s(s: Scalar, var: VAtom) -> Vec:
    parts = [VZERO]
    for t in s.terms:
        for i, (a, e) in enumerate(t.factors):
            others = t.factors[:i] + t.factors[i + 1:]
            if e != 1:
                others = others + ((a, e - 1),)
            rest = Scalar((Term(t.coeff * e, _merge_factors(others, ())),))
            g = _grad_satom(a, var)
            if g.items:
                parts.append(vscale(rest, g))
    return vadd(*parts)


def _grad_satom(a: SAtom, var: VAtom) -> Vec:
    if isinstance(a, Sym):
        return VZERO
    if isinstance(a, DotA):
        return vadd(_jacT(a.a, var, vatom(a.b)), _jacT(a.b, var, vatom(a.a)))
    if isinstance(a, SApp):
        out = _jacT_vec(a.base, var, uapp(a.fun, a.order + 1, [vatom(x) for x in a.args], base=a.base))
        for j, x in enumerate(a.args):
            others = [vatom(y) for k, y in enumerate(a.args) if k != j]
            out = vadd(out, _jacT(x, var, uapp(a.fun, a.order, others, base=a.base)))
        return out
    if isinstance(a, SumAtom):
        return grad_s(a.base, var)
    raise TypeError(a)


def _jacT(a: VAtom, var: VAtom, cot: Vec) -> Vec:
    """(d a / d var)^T cot for a vector atom a."""
    if isinstance(a, (Jet, VSym)):
        return cot if a == var else VZERO
    if isinstance(a, LApp):
        info = map_info(a.map)
        if info.symmetry == "sym":
            tcot = lapp(a.map, cot)
        elif info.symmetry == "antisym":
            tcot = vneg(lapp(a.map, cot))
        else:
            tname = a.map + "_T"
            if tname not in _MAPS:
                register_map(tname, "general")
            tcot = lapp(tname, cot)
        return _jacT(a.arg, var, tcot)
    if isinstance(a, VApp):
        # <a, cot> = U^(order)(args..., cot); differentiate through base and args.
        out = _jacT_vec(a.base, var,
                        uapp(a.fun, a.order + 1, [vatom(x) for x in a.args] + [cot], base=a.base))
        for j, x in enumerate(a.args):
            others = [vatom(y) for k, y in enumerate(a.args) if k != j] + [cot]
            out = vadd(out, _jacT(x, var, uapp(a.fun, a.order, others, base=a.base)))
        return out
    raise TypeError(a)


def _jacT_vec(v: Vec, var: VAtom, cot: Vec) -> Vec:
    parts = [VZERO]
    for s, a in v.items:
        parts.append(vscale(s, _jacT(a, var, cot)))
        g = grad_s(s, var)
        if g.items:
            parts.append(vscale(sdot(vatom(a), cot), g))
    return vadd(*parts)


# forward-mode directional derivatives ---------------------------------------

def jvp_s(s: Scalar, dirs: Mapping[VAtom, Vec]) -> Scalar:
    """Directional derivative of a scalar: each variable a moves along dirs[a]."""
    parts = [SZERO]
    for t in s.terms:
        for i, (a, e) in enumerate(t.factors):
            others = t.factors[:i] + t.factors[i + 1:]
            if e != 1:
                others = others + ((a, e - 1),)
            rest = Scalar((Term(t.coeff * e, _merge_factors(others, ())),))
            d = _jvp_satom(a, dirs)
            if d.terms:
                parts.append(smul(rest, d))
    return sadd(*parts)


def jvp_v(v: Vec, dirs: Mapping[VAtom, Vec]) -> Vec:
    parts = [VZERO]
    for s, a in v.items:
        ds = jvp_s(s, dirs)
        if ds.terms:
            parts.append(vscale(ds, vatom(a)))
        da = _jvp_vatom(a, dirs)
        if da.items:
            parts.append(vscale(s, da))
    return vadd(*parts)


def _jvp_vatom(a: VAtom, dirs) -> Vec:
    if isinstance(a, (Jet, VSym)):
        return dirs.get(a, VZERO)
    if isinstance(a, LApp):
        return lapp(a.map, _jvp_vatom(a.arg, dirs))
    if isinstance(a, VApp):
        dbase = jvp_v(a.base, dirs)
        out = VZERO
        if dbase.items:
            out = uapp(a.fun, a.order + 1, [vatom(x) for x in a.args] + [dbase], base=a.base)
        for j, x in enumerate(a.args):
            dx = _jvp_vatom(x, dirs)
            if dx.items:
                others = [vatom(y) if k != j else dx for k, y in enumerate(a.args)]
                out = vadd(out, uapp(a.fun, a.order, others, base=a.base))
        return out
    raise TypeError(a)


def _jvp_satom(a: SAtom, dirs) -> Scalar:
    if isinstance(a, Sym):
        return SZERO
    if isinstance(a, DotA):
        return sadd(sdot(_jvp_vatom(a.a, dirs), vatom(a.b)),
                    sdot(vatom(a.a), _jvp_vatom(a.b, dirs)))
    if isinstance(a, SApp):
        dbase = jvp_v(a.base, dirs)
        out = SZERO
        if dbase.items:
            out = uapp(a.fun, a.order + 1, [vatom(x) for x in a.args] + [dbase], base=a.base)
        for j, x in enumerate(a.args):
            dx = _jvp_vatom(x, dirs)
            if dx.items:
                others = [vatom(y) if k != j else dx for k, y in enumerate(a.args)]
                out = sadd(out, uapp(a.fun, a.order, others, base=a.base))
        return out
    if isinstance(a, SumAtom):
        return jvp_s(a.base, dirs)
    raise TypeError(a)


# ---------------------------------------------------------------------------
# total time derivative on jet expressions

def _dt_dirs(maxorder: int) -> dict:
    return {Jet(k): vjet(k + 1) for k in range(maxorder + 1)}


def dt_s(s: Scalar) -> Scalar:
    m = max_jet(s)
    return jvp_s(s, _dt_dirs(m)) if m >= 0 else SZERO


def dt_v(v: Vec) -> Vec:
    m = max_jet_vec(v)
    return jvp_v(v, _dt_dirs(m)) if m >= 0 else VZERO


# ---------------------------------------------------------------------------
# concrete potentials: replace opaque U^(k) by derivatives of a given scalar

class ConcretePotential:
    """Derivative tensors of an explicit potential expression in x = Jet(0)."""

    def __init__(self, fun: str, expr: Scalar):
        self.fun = fun
        self.expr = expr
        self._tensors: dict[int, Scalar] = {0: expr}
        self._grads: dict[int, Vec] = {}

    def _csyms(self, k: int):
        return [VSym(f"_c{self.fun}{i}") for i in range(k)]

    def _tensor(self, k: int) -> Scalar:
        """U^(k)(x; c_0, ..., c_{k-1}) as a scalar in x and fresh constants."""
        while k not in self._tensors:
            m = max(self._tensors)
            c = VSym(f"_c{self.fun}{m}")
            self._tensors[m + 1] = sdot(grad_s(self._tensors[m], Jet(0)), vatom(c))
        return self._tensors[k]

    def _grad_tensor(self, k: int) -> Vec:
        """U^(k)(x; c_0, ..., c_{k-2}, .) as a vector."""
        if k not in self._grads:
            self._grads[k] = grad_s(self._tensor(k - 1), Jet(0))
        return self._grads[k]

    def scalar(self, k: int, args: list, base: Vec) -> Scalar:
        sub = {c: a for c, a in zip(self._csyms(k), args)}
        sub[Jet(0)] = base
        return subst_s(self._tensor(k), sub)

    def vector(self, k: int, args: list, base: Vec) -> Vec:
        sub = {c: a for c, a in zip(self._csyms(k - 1), args)}
        sub[Jet(0)] = base
        return subst_v(self._grad_tensor(k), sub)


def instantiate_s(s: Scalar, pot: ConcretePotential) -> Scalar:
    parts = [SZERO]
    for t in s.terms:
        prod = snum(t.coeff)
        for a, e in t.factors:
            prod = smul(prod, spow(_inst_satom(a, pot), e))
        parts.append(prod)
    return sadd(*parts)


def instantiate_v(v: Vec, pot: ConcretePotential) -> Vec:
    parts = [VZERO]
    for s, a in v.items:
        parts.append(vscale(instantiate_s(s, pot), _inst_vatom(a, pot)))
    return vadd(*parts)


def _inst_vatom(a: VAtom, pot) -> Vec:
    if isinstance(a, (Jet, VSym)):
        return vatom(a)
    if isinstance(a, LApp):
        return lapp(a.map, _inst_vatom(a.arg, pot))
    if isinstance(a, VApp):
        args = [_inst_vatom(x, pot) for x in a.args]
        base = instantiate_v(a.base, pot)
        if a.fun == pot.fun:
            return pot.vector(a.order, args, base)
        return uapp(a.fun, a.order, args, base=base)
    raise TypeError(a)


def _inst_satom(a: SAtom, pot) -> Scalar:
    if isinstance(a, Sym):
        return Scalar((Term(Q(1), ((a, Q(1)),)),))
    if isinstance(a, DotA):
        return sdot(_inst_vatom(a.a, pot), _inst_vatom(a.b, pot))
    if isinstance(a, SApp):
        args = [_inst_vatom(x, pot) for x in a.args]
        base = instantiate_v(a.base, pot)
        if a.fun == pot.fun:
            return pot.scalar(a.order, args, base)
        return uapp(a.fun, a.order, args, base=base)
    if isinstance(a, SumAtom):
        return instantiate_s(a.base, pot)
    raise TypeError(a)


# ---------------------------------------------------------------------------
# numerical evaluation

def jet_name(k: int) -> str:
    if k == 0:
        return "x"
    if k == 1:
        return "xd"
    if k == 2:
        return "xdd"
    return f"xd{k}"


def parse_jet_name(name: str) -> int | None:
    if name == "x":
        return 0
    if name == "xd":
        return 1
    if name == "xdd":
        return 2
    if name.startswith("xd") and name[2:].isdigit():
        return int(name[2:])
    return None


class EvalError(KeyError):
    pass


def eval_s(s: Scalar, env: Mapping) -> float:
    total = 0.0
    for t in s.terms:
        val = float(t.coeff)
        for a, e in t.factors:
            val *= _eval_satom(a, env) ** float(e)
        total += val
    return total


def eval_v(v: Vec, env: Mapping):
    import numpy as np
    total = None
    for s, a in v.items:
        part = eval_s(s, env) * np.asarray(_eval_vatom(a, env), dtype=float)
        total = part if total is None else total + part
    if total is None:
        raise EvalError("cannot evaluate the zero vector without a dimension")
    return total


def _eval_vatom(a: VAtom, env):
    import numpy as np
    if isinstance(a, Jet):
        name = jet_name(a.order)
        if name not in env:
            raise EvalError(f"unbound jet variable {name}")
        return np.atleast_1d(np.asarray(env[name], dtype=float))
    if isinstance(a, VSym):
        if a.name not in env:
            raise EvalError(f"unbound vector symbol {a.name}")
        return np.atleast_1d(np.asarray(env[a.name], dtype=float))
    if isinstance(a, LApp):
        if a.map not in env:
            raise EvalError(f"unbound linear map {a.map}")
        return np.asarray(env[a.map], dtype=float) @ _eval_vatom(a.arg, env)
    if isinstance(a, VApp):
        fn = env.get(a.fun)
        if fn is None:
            raise EvalError(f"unbound derivative symbol {a.fun}")
        base = eval_v(a.base, env)
        return np.asarray(fn(a.order, base, *[_eval_vatom(x, env) for x in a.args]), dtype=float)
    raise TypeError(a)


def _eval_satom(a: SAtom, env) -> float:
    import numpy as np
    if isinstance(a, Sym):
        if a.name not in env:
            raise EvalError(f"unbound scalar symbol {a.name}")
        return float(env[a.name])
    if isinstance(a, DotA):
        return float(np.dot(_eval_vatom(a.a, env), _eval_vatom(a.b, env)))
    if isinstance(a, SApp):
        fn = env.get(a.fun)
        if fn is None:
            raise EvalError(f"unbound derivative symbol {a.fun}")
        base = eval_v(a.base, env)
        return float(fn(a.order, base, *[_eval_vatom(x, env) for x in a.args]))
    if isinstance(a, SumAtom):
        return eval_s(a.base, env)
    raise TypeError(a)
