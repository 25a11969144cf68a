"""Expression text grammar: deterministic printer and recursive-descent parser.

Syntax
------
* symbols: ``x``, ``xd``, ``xdd``, ``xd3``, ... (jet variables), ``h``,
  free scalar names; vector symbol names must be declared to the parser.
* ``dot(a, b)``, ``norm2(a)``, ``inv(a)``, ``pow(a, p/q)``.
* ``U(k)``, ``U(k; a1, ..., am)``, ``U(k; a1, ..., am; base)``: the k-th
  derivative tensor of the opaque potential U, applied to m vector
  arguments (m = k gives a scalar, m = k-1 a vector with one free slot);
  the optional third segment shifts the base point away from x.
* registered linear maps apply as ``M(a)``, ``Jp(a)``, ...
* rational literals ``p/q`` (plain division of integer literals).

Printing is canonical (follows the normal-form ordering), and
``parse(print(e))`` returns a structurally equal expression.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .expr import (
    DotA,
    Jet,
    LApp,
    Q,
    SApp,
    Scalar,
    SumAtom,
    Sym,
    VApp,
    VAtom,
    Vec,
    VSym,
    _MAPS,
    const_value,
    is_const,
    jet_name,
    lapp,
    parse_jet_name,
    sadd,
    sdot,
    smul,
    sneg,
    snorm2,
    snum,
    spow,
    ssym,
    uapp,
    vadd,
    vatom,
    vjet,
    vneg,
    vscale,
    vsym,
)

X_BASE = vjet(0)


# ---------------------------------------------------------------------------
# printer

def _frac_str(q: Fraction) -> str:
    return str(q)


def _vatom_str(a: VAtom) -> str:
    if isinstance(a, Jet):
        return jet_name(a.order)
    if isinstance(a, VSym):
        return a.name
    if isinstance(a, LApp):
        return f"{a.map}({_vatom_str(a.arg)})"
    if isinstance(a, VApp):
        return _app_str(a.fun, a.order, a.base, a.args)
    raise TypeError(a)


def _app_str(fun: str, order: int, base: Vec, args) -> str:
    parts = [str(order)]
    argstr = ", ".join(_vatom_str(x) for x in args)
    if args or base != X_BASE:
        parts.append(argstr)
    if base != X_BASE:
        parts.append(print_vec(base))
    return f"{fun}({'; '.join(parts)})"


def _satom_str(a) -> str:
    if isinstance(a, Sym):
        return a.name
    if isinstance(a, DotA):
        if a.a == a.b:
            return f"norm2({_vatom_str(a.a)})"
        return f"dot({_vatom_str(a.a)}, {_vatom_str(a.b)})"
    if isinstance(a, SApp):
        return _app_str(a.fun, a.order, a.base, a.args)
    if isinstance(a, SumAtom):
        return f"({print_scalar(a.base)})"
    raise TypeError(a)


def _factor_str(a, e: Fraction) -> str:
    if e == 1:
        return _satom_str(a)
    return f"pow({_satom_str(a)}, {_frac_str(e)})"


def _term_body(t) -> str:
    """Term without sign: |coeff| and factors."""
    c = abs(t.coeff)
    facs = [_factor_str(a, e) for a, e in t.factors]
    if not facs:
        return _frac_str(c)
    if c != 1:
        facs.insert(0, _frac_str(c))
    return "*".join(facs)


def print_scalar(s: Scalar) -> str:
    if not s.terms:
        return "0"
    out = []
    for i, t in enumerate(s.terms):
        body = _term_body(t)
        if i == 0:
            out.append(body if t.coeff > 0 else f"-{body}")
        else:
            out.append(f"+ {body}" if t.coeff > 0 else f"- {body}")
    return " ".join(out)


def print_vec(v: Vec) -> str:
    if not v.items:
        return "0"
    out = []
    for i, (s, a) in enumerate(v.items):
        astr = _vatom_str(a)
        if is_const(s):
            c = const_value(s)
            body = astr if abs(c) == 1 else f"{_frac_str(abs(c))}*{astr}"
            neg = c < 0
        else:
            body = f"({print_scalar(s)})*{astr}"
            neg = False
        if i == 0:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f"- {body}" if neg else f"+ {body}")
    return " ".join(out)


def print_expr(e) -> str:
    return print_vec(e) if isinstance(e, Vec) else print_scalar(e)


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(.))")


class ParseError(ValueError):
    pass


class _Parser:
    def __init__(self, text: str, vector_names=()):
        self.text = text
        self.toks = self._tokenize(text)
        self.pos = 0
        self.vector_names = set(vector_names)

    @staticmethod
    def _tokenize(text):
        toks = []
        i = 0
        while i < len(text):
            m = _TOKEN.match(text, i)
            if not m or m.end() == i:
                break
            i = m.end()
            if m.group(1):
                toks.append(("num", int(m.group(1))))
            elif m.group(2):
                toks.append(("name", m.group(2)))
            else:
                ch = m.group(3)
                if not ch.isspace():
                    toks.append((ch, ch))
        toks.append(("end", None))
        return toks

    def peek(self):
        return self.toks[self.pos][0]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind):
        t = self.next()
        if t[0] != kind:
            raise ParseError(f"expected {kind!r}, got {t[1]!r} in {self.text!r}")
        return t

    # values are ('s', Scalar) or ('v', Vec)
    def expr(self):
        val = self.term()
        while self.peek() in ("+", "-"):
            op = self.next()[0]
            rhs = self.term()
            val = self._add(val, rhs if op == "+" else self._neg(rhs))
        return val

    def term(self):
        val = self.unary()
        while self.peek() in ("*", "/"):
            op = self.next()[0]
            rhs = self.unary()
            if op == "/":
                if rhs[0] != "s":
                    raise ParseError("division by a vector")
                rhs = ("s", spow(rhs[1], Q(-1)))
            val = self._mul(val, rhs)
        return val

    def unary(self):
        if self.peek() == "-":
            self.next()
            return self._neg(self.unary())
        if self.peek() == "+":
            self.next()
            return self.unary()
        return self.primary()

    def primary(self):
        kind, val = self.next()
        if kind == "num":
            return ("s", snum(val))
        if kind == "(":
            v = self.expr()
            self.expect(")")
            return v
        if kind == "name":
            if self.peek() == "(":
                return self.call(val)
            return self.atom(val)
        raise ParseError(f"unexpected token {val!r} in {self.text!r}")

    def atom(self, name):
        k = parse_jet_name(name)
        if k is not None:
            return ("v", vjet(k))
        if name in self.vector_names:
            return ("v", vsym(name))
        return ("s", ssym(name))

    def call(self, name):
        self.expect("(")
        if name == "dot":
            a = self._vec(self.expr())
            self.expect(",")
            b = self._vec(self.expr())
            self.expect(")")
            return ("s", sdot(a, b))
        if name == "norm2":
            a = self._vec(self.expr())
            self.expect(")")
            return ("s", snorm2(a))
        if name == "inv":
            a = self._scal(self.expr())
            self.expect(")")
            return ("s", spow(a, Q(-1)))
        if name == "pow":
            a = self._scal(self.expr())
            self.expect(",")
            e = self._scal(self.expr())
            self.expect(")")
            if not is_const(e):
                raise ParseError("pow exponent must be a rational constant")
            return ("s", spow(a, const_value(e)))
        if name in _MAPS:
            a = self._vec(self.expr())
            self.expect(")")
            return ("v", lapp(name, a))
        # tensor application: name(order[; args][; base])
        t = self.next()
        if t[0] != "num":
            raise ParseError(f"unknown function {name!r}")
        order = t[1]
        args = []
        base = X_BASE
        if self.peek() == ";":
            self.next()
            if self.peek() not in (";", ")"):
                args.append(self._vec(self.expr()))
                while self.peek() == ",":
                    self.next()
                    args.append(self._vec(self.expr()))
            if self.peek() == ";":
                self.next()
                base = self._vec(self.expr())
        self.expect(")")
        res = uapp(name, order, args, base=base)
        return ("v", res) if isinstance(res, Vec) else ("s", res)

    @staticmethod
    def _vec(v):
        if v[0] != "v":
            raise ParseError("expected a vector expression")
        return v[1]

    @staticmethod
    def _scal(v):
        if v[0] != "s":
            raise ParseError("expected a scalar expression")
        return v[1]

    @staticmethod
    def _neg(v):
        return (v[0], sneg(v[1]) if v[0] == "s" else vneg(v[1]))

    @staticmethod
    def _add(a, b):
        if a[0] != b[0]:
            raise ParseError("cannot add a scalar and a vector")
        return (a[0], sadd(a[1], b[1]) if a[0] == "s" else vadd(a[1], b[1]))

    @staticmethod
    def _mul(a, b):
        if a[0] == "s" and b[0] == "s":
            return ("s", smul(a[1], b[1]))
        if a[0] == "s":
            return ("v", vscale(a[1], b[1]))
        if b[0] == "s":
            return ("v", vscale(b[1], a[1]))
        raise ParseError("use dot(a, b) for vector products")


def parse(text: str, vector_names=()):
    """Parse expression text; returns a Scalar or a Vec."""
    p = _Parser(text, vector_names)
    kind, val = p.expr()
    if p.peek() != "end":
        raise ParseError(f"trailing input in {text!r}")
    return val


def parse_scalar(text: str, vector_names=()) -> Scalar:
    v = parse(text, vector_names)
    if isinstance(v, Vec):
        raise ParseError(f"expected a scalar expression: {text!r}")
    return v


def parse_vec(text: str, vector_names=()) -> Vec:
    v = parse(text, vector_names)
    if isinstance(v, Scalar):
        raise ParseError(f"expected a vector expression: {text!r}")
    return v
