"""Formula syntax trees, the ASCII parser and the minimal-parenthesis printer.

Surface syntax: ``0 1 p<k> ! <> [] & + -> <->``.  Binding strength from
tightest to loosest: the unary operators, ``&``, ``+``, ``->``, ``<->``.
``&``, ``+`` and ``<->`` group to the left, ``->`` groups to the right.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ModlatError, ParseError


class Formula:
    """Base class of all syntax tree nodes."""

    __slots__ = ()

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(Formula):
    value: int  # 0 or 1


@dataclass(frozen=True)
class Var(Formula):
    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("variable index must be >= 1")


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class Dia(Formula):
    child: Formula


@dataclass(frozen=True)
class Box(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


ZERO = Const(0)
ONE = Const(1)

UNARY = (Not, Dia, Box)
BINARY = (And, Or, Imp, Iff)

_PREC = {Iff: 1, Imp: 2, Or: 3, And: 4}
_SYMBOL = {And: "&", Or: "+", Imp: "->", Iff: "<->", Not: "!", Dia: "<>", Box: "[]"}


def conj(parts):
    """Left-nested conjunction of a non-empty sequence (1 when empty)."""
    parts = list(parts)
    if not parts:
        return ONE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts):
    """Left-nested disjunction of a sequence (0 when empty)."""
    parts = list(parts)
    if not parts:
        return ZERO
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


# --- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(<->)|(->)|(<>)|(\[\])|(p\d+)|([01!&+()]))")


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        tok = m.group(m.lastindex)
        start = m.start(m.lastindex)
        if tok.startswith("p") and int(tok[1:]) == 0:
            raise ParseError("variable index 0 is not allowed", start)
        tokens.append((tok, start))
        pos = m.end()
    tokens.append(("<eof>", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, what):
        tok, pos = self.tokens[self.i]
        found = "end of input" if tok == "<eof>" else repr(tok)
        raise ParseError(f"expected {what}, found {found}", pos)

    def formula(self):
        left = self.imp()
        while self.peek() == "<->":
            self.take()
            left = Iff(left, self.imp())
        return left

    def imp(self):
        left = self.disj()
        if self.peek() == "->":
            self.take()
            return Imp(left, self.imp())
        return left

    def disj(self):
        left = self.conj()
        while self.peek() == "+":
            self.take()
            left = Or(left, self.conj())
        return left

    def conj(self):
        left = self.unary()
        while self.peek() == "&":
            self.take()
            left = And(left, self.unary())
        return left

    def unary(self):
        # iterative over prefix chains, so long !!!!p1 strings cannot blow the stack
        ops = []
        while self.peek() in ("!", "<>", "[]"):
            ops.append(self.take()[0])
        node = self.atom()
        for op in reversed(ops):
            node = {"!": Not, "<>": Dia, "[]": Box}[op](node)
        return node

    def atom(self):
        tok = self.peek()
        if tok == "0":
            self.take()
            return ZERO
        if tok == "1":
            self.take()
            return ONE
        if tok.startswith("p") and tok != "<eof>":
            self.take()
            return Var(int(tok[1:]))
        if tok == "(":
            self.take()
            node = self.formula()
            if self.peek() != ")":
                self.fail("')'")
            self.take()
            return node
        self.fail("a formula")


def parse(text):
    """Parse ASCII text into a Formula; raises ParseError with a position."""
    p = _Parser(text)
    node = p.formula()
    if p.peek() != "<eof>":
        p.fail("an operator or end of input")
    return node


# --- printing ----------------------------------------------------------------

def _prec(f):
    return _PREC.get(type(f), 5)


def to_text(f):
    """Print with the fewest parentheses that still parse back to ``f``."""
    out = []
    _emit(f, out)
    return "".join(out)


def _wrap(f, out, needed):
    if needed:
        out.append("(")
        _emit(f, out)
        out.append(")")
    else:
        _emit(f, out)


def _emit(f, out):
    t = type(f)
    if t is Const:
        out.append(str(f.value))
    elif t is Var:
        out.append(f"p{f.index}")
    elif t in UNARY:
        out.append(_SYMBOL[t])
        _wrap(f.child, out, _prec(f.child) < 5)
    elif t in (And, Or, Iff):
        # left-grouping chains: flatten the left spine iteratively
        p = _PREC[t]
        rights = []
        node = f
        while type(node) is t:
            rights.append(node.right)
            node = node.left
        _wrap(node, out, _prec(node) < p)
        for r in reversed(rights):
            out.append(f" {_SYMBOL[t]} ")
            _wrap(r, out, _prec(r) <= p)
    elif t is Imp:
        _wrap(f.left, out, _prec(f.left) <= 2)
        out.append(" -> ")
        _wrap(f.right, out, _prec(f.right) < 2)
    else:
        raise TypeError(f"not a formula: {f!r}")


# --- queries -----------------------------------------------------------------

def modal_degree(f):
    """Deepest nesting of <> and [] in ``f``."""
    memo = {}

    def deg(g):
        key = id(g)
        if key in memo:
            return memo[key]
        t = type(g)
        if t is Const or t is Var:
            r = 0
        elif t is Not:
            r = deg(g.child)
        elif t is Dia or t is Box:
            r = deg(g.child) + 1
        else:
            r = max(deg(g.left), deg(g.right))
        memo[key] = r
        return r

    return _with_spines(f, deg)


def max_var(f):
    """Largest variable index occurring in ``f`` (0 if none)."""
    best = 0
    stack = [f]
    seen = set()
    while stack:
        g = stack.pop()
        if id(g) in seen:
            continue
        seen.add(id(g))
        t = type(g)
        if t is Var:
            best = max(best, g.index)
        elif t in UNARY:
            stack.append(g.child)
        elif t in BINARY:
            stack.append(g.left)
            stack.append(g.right)
    return best


def _with_spines(f, fn):
    # Evaluate long left spines bottom-up first so recursion depth stays small.
    spine = []
    node = f
    while type(node) in BINARY:
        spine.append(node)
        node = node.left
    for n in reversed(spine):
        fn(n.left)
    return fn(f)


def bool_eval(f, assignment):
    """Classical truth value of a modality-free formula.

    ``assignment`` is a sequence of truth values for p1, p2, ...
    """
    if modal_degree(f) > 0:
        raise ModlatError("bool_eval needs a formula without modal operators")
    if max_var(f) > len(assignment):
        raise ModlatError("assignment does not cover every variable")

    def ev(g):
        t = type(g)
        if t is Const:
            return bool(g.value)
        if t is Var:
            return bool(assignment[g.index - 1])
        if t is Not:
            return not ev(g.child)
        if t is And:
            return ev(g.left) and ev(g.right)
        if t is Or:
            return ev(g.left) or ev(g.right)
        if t is Imp:
            return (not ev(g.left)) or ev(g.right)
        return ev(g.left) == ev(g.right)

    return ev(f)


def substitute_vars(f, mapping):
    """Replace each ``Var(i)`` by ``mapping[i]``; shared subtrees stay shared."""
    memo = {}

    def go(g):
        key = id(g)
        if key in memo:
            return memo[key]
        t = type(g)
        if t is Var:
            r = mapping.get(g.index, g)
        elif t is Const:
            r = g
        elif t in UNARY:
            r = t(go(g.child))
        else:
            r = t(go(g.left), go(g.right))
        memo[key] = r
        return r

    return _with_spines(f, go)
