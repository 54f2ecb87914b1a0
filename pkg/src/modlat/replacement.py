"""Uniform replacements (URs) and extended URs (XURs).

A UR is given by an 8-bit table ``eta`` over (e, <>e, <>!e), row 4a+2b+c.
An XUR is given by a 32-bit table ``eta5`` over (e, <>1, <>e, <>!e, <>0),
row 16e+8o+4b+2c+z.  The XUR row index coincides with the E[1,1] minterm
index of the same atom values, so ``eta5`` is also the E[1,1] minmatrix of
the level-1 formula chi(p1).

Internally every UR is handled through its XUR embedding.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import formula as fm
from .context import (Context, Minmatrix, Minterm, _indices, _level_sizes, ancestor_array,
                      normalize)
from .errors import ModlatError, NotPrimeError

E11 = Context(1, 1)
E01 = Context(0, 1)
P1 = fm.Var(1)
IDENTITY_ETA = 0xCC
IDENTITY_ETA5 = 0xF0F0F0F0
LABELS = ("W", "D", "C", "V")
# (<>1, <>0) states of each primary label
LABEL_STATES = {"W": (1, 1), "D": (1, 0), "C": (0, 1), "V": (0, 0)}


def embed_eta(eta):
    """eta5 of the XUR that ignores its <>1 and <>0 inputs."""
    out = 0
    for r in range(32):
        a, b, c = (r >> 4) & 1, (r >> 2) & 1, (r >> 1) & 1
        if (eta >> (4 * a + 2 * b + c)) & 1:
            out |= 1 << r
    return out


def restrict_eta5(eta5):
    """The 8-bit eta of a UR-shaped eta5, or None if it reads <>1 or <>0."""
    eta = 0
    for row in range(8):
        a, b, c = row >> 2, (row >> 1) & 1, row & 1
        eta |= ((eta5 >> (16 * a + 4 * b + 2 * c)) & 1) << row
    return eta if embed_eta(eta) == eta5 else None


@lru_cache(maxsize=None)
def _table_program(table, n):
    """Shannon expansion of an n-argument truth table as a nested-tuple program.

    Leaves are 0, 1 or an argument position; the first argument is the most
    significant table bit.
    """
    def build(tab, k):
        width = 1 << (n - k)
        full = (1 << width) - 1
        if tab == 0:
            return (fm.ZERO,)
        if tab == full:
            return (fm.ONE,)
        half = width // 2
        ones = (1 << half) - 1
        lo = tab & ones
        hi = tab >> half
        x = ("arg", k)
        if lo == hi:
            return build(lo, k + 1)
        f_hi = build(hi, k + 1)
        f_lo = build(lo, k + 1)
        if hi == 0:
            return _and_prog(("not", x), f_lo)
        if lo == 0:
            return _and_prog(x, f_hi)
        if hi == ones:
            return (fm.Or, x, f_lo)
        if lo == ones:
            return (fm.Or, ("not", x), f_hi)
        if lo == ones ^ hi:
            return (fm.Iff, x, f_hi)
        return (fm.Or, _and_prog(x, f_hi), _and_prog(("not", x), f_lo))

    return build(table, 0)


def _and_prog(x, f):
    return x if f == (fm.ONE,) else (fm.And, x, f)


def _run_program(prog, args, negs):
    head = prog[0]
    if head == "arg":
        return args[prog[1]]
    if head == "not":
        return negs[prog[1][1]]
    if len(prog) == 1:
        return head
    return head(_run_program(prog[1], args, negs), _run_program(prog[2], args, negs))


def _table_formula(table, args):
    """Formula of a truth table over ``args`` (first argument = most significant)."""
    negs = [fm.Not(a) for a in args]
    return _run_program(_table_program(table, len(args)), args, negs)


@dataclass(frozen=True)
class ExtendedUR:
    eta5: int

    def __post_init__(self):
        if not 0 <= self.eta5 < 1 << 32:
            raise ModlatError("eta5 must be a 32-bit value")

    def formula(self, e=P1):
        """chi(e) = eta5(e, <>1, <>e, <>!e, <>0); ``e`` is shared, not copied."""
        args = [e, fm.Dia(fm.ONE), fm.Dia(e), fm.Dia(fm.Not(e)), fm.Dia(fm.ZERO)]
        return _table_formula(self.eta5, args)

    def as_ur(self):
        eta = restrict_eta5(self.eta5)
        return None if eta is None else UniformReplacement(eta)

    def __str__(self):
        return f"0x{self.eta5:08x}"


@dataclass(frozen=True)
class UniformReplacement:
    eta: int

    def __post_init__(self):
        if not 0 <= self.eta < 256:
            raise ModlatError("eta must be an 8-bit value")

    def formula(self, e=P1):
        """rho(e) = eta(e, <>e, <>!e)."""
        return _table_formula(self.eta, [e, fm.Dia(e), fm.Dia(fm.Not(e))])

    @property
    def eta5(self):
        return embed_eta(self.eta)

    def as_xur(self):
        return ExtendedUR(self.eta5)

    def __str__(self):
        return f"0x{self.eta:02x}"


def ur_from_formula(f):
    """The UR whose level-1 formula (in e = p1) is ``f``."""
    x = xur_from_formula(f)
    r = x.as_ur()
    if r is None:
        raise ModlatError("formula depends on <>1 or <>0; it is an XUR, not a UR")
    return r


def xur_from_formula(f):
    if isinstance(f, str):
        f = fm.parse(f)
    if fm.max_var(f) > 1 or fm.modal_degree(f) > 1:
        raise ModlatError("a replacement formula uses only p1 and modal degree <= 1")
    return ExtendedUR(normalize(f, E11).bits)


# --- syntactic application ------------------------------------------------------

def _replace(f, make):
    memo = {}

    def go(g):
        key = id(g)
        if key in memo:
            return memo[key]
        t = type(g)
        if t is fm.Const or t is fm.Var:
            r = g
        elif t is fm.Not:
            c = go(g.child)
            r = g if c is g.child else fm.Not(c)
        elif t is fm.Dia:
            r = make(go(g.child))
        elif t is fm.Box:
            r = fm.Not(make(fm.Not(go(g.child))))
        else:
            a, b = go(g.left), go(g.right)
            # untouched subtrees are shared, not copied
            r = g if a is g.left and b is g.right else t(a, b)
        memo[key] = r
        return r

    spine = []
    node = f
    while type(node) in fm.BINARY:
        spine.append(node)
        node = node.left
    for n in reversed(spine):
        go(n.left)
    return go(f)


def ur_apply(f, r):
    """f * rho: every <>psi becomes rho(psi * rho); []psi becomes !rho(!(psi * rho))."""
    if isinstance(f, str):
        f = fm.parse(f)
    return _replace(f, lambda psi: r.formula(psi))


def xur_apply(f, x):
    if isinstance(f, str):
        f = fm.parse(f)
    return _replace(f, lambda psi: x.formula(psi))


def ur_compose(r, s):
    """rho rho' = rho(e) * rho', normalized in E[1,1]."""
    m = normalize(ur_apply(r.formula(P1), s), E11)
    eta = restrict_eta5(m.bits)
    if eta is None:
        raise ModlatError("composition left the UR family")  # cannot happen for URs
    return UniformReplacement(eta)


def xur_compose(x, y):
    return ExtendedUR(normalize(xur_apply(x.formula(P1), y), E11).bits)


# --- action on E[1,1] as a map of atom values ----------------------------------------

def _bit(word, r):
    return (word >> r) & 1


@lru_cache(maxsize=None)
def action_map(eta5):
    """F with (phi * chi) = {nu : F[nu] in phi} for every phi of E[1,1] in p1.

    F[nu] collects the values at nu of chi(p1)'s images of the atoms
    p1, <>1, <>p1, <>!p1, <>0, i.e. of p1, chi(1), chi(p1), chi(!p1), chi(0).
    Read straight from the table: <>!1 is <>0 and <>!0 is <>1 at this level.
    """
    out = []
    for r in range(32):
        e, o, b, c, z = (r >> 4) & 1, (r >> 3) & 1, (r >> 2) & 1, (r >> 1) & 1, r & 1
        one = _bit(eta5, 16 + 8 * o + 4 * o + 2 * z + z)
        zero = _bit(eta5, 8 * o + 4 * z + 2 * o + z)
        ce = _bit(eta5, 16 * e + 8 * o + 4 * b + 2 * c + z)
        cn = _bit(eta5, 16 * (1 - e) + 8 * o + 4 * c + 2 * b + z)
        out.append(16 * e + 8 * one + 4 * ce + 2 * cn + zero)
    return tuple(out)


def action_map_symbolic(x):
    """Same map as :func:`action_map`, obtained by normalizing chi(1), chi(p1), chi(!p1), chi(0)."""
    parts = [normalize(x.formula(a), E11).bits for a in (fm.ONE, P1, fm.Not(P1), fm.ZERO)]
    out = []
    for r in range(32):
        e = (r >> 4) & 1
        one, ce, cn, zero = (_bit(p, r) for p in parts)
        out.append(16 * e + 8 * one + 4 * ce + 2 * cn + zero)
    return tuple(out)


def compose_fast(eta5_x, eta5_y):
    """eta5 of x y using the pullback along y's action map."""
    fmap = action_map(eta5_y)
    out = 0
    for r in range(32):
        out |= _bit(eta5_x, fmap[r]) << r
    return out


def maps_minterms_bijectively(eta5):
    fmap = action_map(eta5)
    return len(set(fmap)) == 32


def inverse_eta5(eta5):
    """eta5 of the two-sided inverse, or None when the action map is not a bijection."""
    fmap = action_map(eta5)
    if len(set(fmap)) != 32:
        return None
    inv = [0] * 32
    for r, s in enumerate(fmap):
        inv[s] = r
    # the inverse's table is the <>e coordinate of the inverse action map
    out = 0
    for r in range(32):
        out |= ((inv[r] >> 2) & 1) << r
    return out


def xur_is_prime(x):
    """Two-sided inverse exists; confirmed by symbolic composition."""
    inv = inverse_eta5(x.eta5)
    if inv is None:
        return False
    y = ExtendedUR(inv)
    return (xur_compose(x, y).eta5 == IDENTITY_ETA5
            and xur_compose(y, x).eta5 == IDENTITY_ETA5)


@lru_cache(maxsize=1)
def _ur_inverse_table():
    """For each of the 256 URs, the eta of a two-sided inverse among URs, or None.

    Uses the composition table built from action maps; each hit is then
    confirmed with symbolic composition.
    """
    etas5 = [embed_eta(e) for e in range(256)]
    maps = np.array([action_map(x) for x in etas5], dtype=np.int64)        # 256 x 32
    bits = np.array([[(x >> r) & 1 for r in range(32)] for x in etas5], dtype=np.uint8)
    ident = np.array([(IDENTITY_ETA5 >> r) & 1 for r in range(32)], dtype=np.uint8)
    # comp[r, s, :] = bits[r][maps[s]]
    comp = bits[:, maps]                                                    # 256 x 256 x 32
    is_id = np.all(comp == ident, axis=2)
    out = []
    for r in range(256):
        inv = None
        for s in np.flatnonzero(is_id[r] & is_id[:, r]):
            ur, us = UniformReplacement(r), UniformReplacement(int(s))
            if ur_compose(ur, us).eta == IDENTITY_ETA and ur_compose(us, ur).eta == IDENTITY_ETA:
                inv = int(s)
                break
        out.append(inv)
    return tuple(out)


def ur_is_prime(r):
    return _ur_inverse_table()[r.eta] is not None


def ur_inverse(r):
    inv = _ur_inverse_table()[r.eta]
    if inv is None:
        raise NotPrimeError(f"UR {r} has no inverse")
    return UniformReplacement(inv)


def prime_urs():
    return [UniformReplacement(e) for e, inv in enumerate(_ur_inverse_table()) if inv is not None]


# --- the 24 primes in conventional order ----------------------------------------------

def _prime_names():
    """Formula texts of the primes in the conventional order, with their dual forms.

    Each group of six starts from one of <>e, !<>e, <>!e, !<>!e (call it X)
    and uses the other diamond Y: X, X<->e, X<->e+Y, X<->e+!Y, X<->!e+Y, X<->!e+!Y.
    The dual form spells out !rho(!e) with [].
    """
    groups = [
        ("<>e", "[]e", "<>!e", "![]!e"),
        ("!<>e", "![]e", "<>!e", "![]!e"),
        ("<>!e", "[]!e", "<>e", "![]e"),
        ("!<>!e", "![]!e", "<>e", "![]e"),
    ]

    def neg(t):
        return t[1:] if t.startswith("!") else "!" + t

    out = []
    for x, xd, y, yd in groups:
        out.append((x, xd))
        out.append((f"{x} <-> e", f"{xd} <-> !e"))
        out.append((f"{x} <-> e + {y}", f"{xd} <-> !e + {yd}"))
        out.append((f"{x} <-> e + {neg(y)}", f"{xd} <-> !e + {neg(yd)}"))
        out.append((f"{x} <-> !e + {y}", f"{xd} <-> e + {yd}"))
        out.append((f"{x} <-> !e + {neg(y)}", f"{xd} <-> e + {neg(yd)}"))
    return out


def _with_e(text, e="p1"):
    return text.replace("e", e)


@dataclass(frozen=True)
class PrimeRow:
    index: int
    text: str
    dual_text: str
    ur: UniformReplacement
    image: tuple
    inverse: int


@lru_cache(maxsize=1)
def prime_table():
    """The 24 prime URs with their axiom permutations and inverse indices."""
    names = _prime_names()
    urs = [ur_from_formula(_with_e(t)) for t, _ in names]
    by_eta = {u.eta: i for i, u in enumerate(urs)}
    if len(by_eta) != 24 or set(by_eta) != {u.eta for u in prime_urs()}:
        raise ModlatError("conventional names do not cover the prime URs")
    rows = []
    for i, ((text, dual), u) in enumerate(zip(names, urs)):
        rows.append(PrimeRow(i, text, dual, u, axiom_permutation(u),
                             by_eta[ur_inverse(u).eta]))
    return tuple(rows)


def prime_index(r):
    """Conventional index of a prime UR, or None."""
    for row in prime_table():
        if row.ur == r:
            return row.index
    return None


def rho(i):
    return prime_table()[i].ur


# --- S4 correspondent ---------------------------------------------------------------

def label_formula(label):
    one, zero = LABEL_STATES[label]
    a = fm.Dia(fm.ONE)
    b = fm.Dia(fm.ZERO)
    return fm.And(a if one else fm.Not(a), b if zero else fm.Not(b))


def label_index(label):
    """E[0,1] minterm index of a primary label (index = 2*<>1 + <>0)."""
    one, zero = LABEL_STATES[label]
    return 2 * one + zero


def axiom_action(r):
    """Minmatrix in E[0,1] of (label formula) * r for each primary label."""
    return {lab: normalize(ur_apply(label_formula(lab), r), E01) for lab in LABELS}


def axiom_permutation(r):
    """Images of (W, D, C, V) as label names; None entries when not a single minterm."""
    names = {label_index(lab): lab for lab in LABELS}
    out = []
    for lab, m in axiom_action(r).items():
        idx = m.indices()
        out.append(names[idx[0]] if len(idx) == 1 else None)
    return tuple(out)


def table3_products(r):
    """rho(e)rho(!e), rho(e)!rho(!e), !rho(e)rho(!e), !rho(e)!rho(!e) with e = p1, in E[1,1]."""
    a = r.formula(P1)
    b = r.formula(fm.Not(P1))
    na, nb = fm.Not(a), fm.Not(b)
    return tuple(normalize(fm.And(x, y), E11) for x, y in ((a, b), (a, nb), (na, b), (na, nb)))


def pattern_signs(m):
    """If m = e s1<>e s2<>!e + !e s3<>e s4<>!e, return ((s1,s2),(s3,s4)), else None."""
    out = []
    for e in (1, 0):
        cells = set()
        for idx in m.indices():
            if idx >> 4 == e:
                cells.add(((idx >> 2) & 1, (idx >> 1) & 1))
        expect = set()
        if len(cells) != 1:
            return None
        (s1, s2), = cells
        for o in (0, 1):
            for z in (0, 1):
                expect.add(16 * e + 8 * o + 4 * s1 + 2 * s2 + z)
        have = {i for i in m.indices() if i >> 4 == e}
        if have != expect:
            return None
        out.append((s1, s2))
    return tuple(out)


# --- semantic action on minmatrices ----------------------------------------------------

@lru_cache(maxsize=32)
def _pullback(v, d, eta5):
    """Phi with (m * chi) = {nu : Phi[nu] in m} on E[v,d]; None for level 0 (identity)."""
    if d == 0:
        return None
    idx = _indices(v, d)
    m_prev, _ = _level_sizes(v, d - 1)
    _, f = _level_sizes(v, d)
    full_prev = (1 << m_prev) - 1
    prev = _pullback(v, d - 1, eta5)
    thetas = np.arange(f, dtype=np.int64)
    if prev is None:
        images = thetas
    else:
        images = np.zeros_like(thetas)             # theta * chi = preimage of theta
        for mu in range(m_prev):
            images |= ((thetas >> int(prev[mu])) & 1) << mu
    anc = idx >> f if d == 1 else ancestor_array(v, d, d - 1)
    one = (idx >> full_prev) & 1
    zero = idx & 1
    table = np.array([(eta5 >> r) & 1 for r in range(32)], dtype=np.int64)
    states = np.zeros_like(idx)
    for theta in range(f):
        tp = int(images[theta])
        t = (tp >> anc) & 1
        b = (idx >> tp) & 1
        c = (idx >> (full_prev ^ tp)) & 1
        states |= table[16 * t + 8 * one + 4 * b + 2 * c + zero] << theta
    return ((idx >> f) << f) | states


def replace_image(m, x):
    """Minmatrix of (formula of m) * x for a UR or XUR ``x``, without building formulas."""
    phi = _pullback(m.ctx.v, m.ctx.d, x.eta5)
    if phi is None:
        return m
    return Minmatrix.from_array(m.ctx, m.to_array()[phi])


# --- fast path for prime URs ---------------------------------------------------------------

@lru_cache(maxsize=256)
def _solve_table(eta):
    """solve[t][s1][s2] = b such that eta(t,b,c)=s1 and eta(!t,c,b)=s2 has the unique solution (b,c)."""
    out = np.full((2, 2, 2), -1, dtype=np.int64)
    for t in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                s1 = (eta >> (4 * t + 2 * b + c)) & 1
                s2 = (eta >> (4 * (1 - t) + 2 * c + b)) & 1
                if out[t, s1, s2] != -1:
                    raise NotPrimeError(f"UR 0x{eta:02x} is not prime")
                out[t, s1, s2] = b
    return out


@lru_cache(maxsize=64)
def ur_permutation(v, d, eta):
    """Array p with p[mu] = mu * rho for a prime UR, over all minterms of E[v,d].

    Works factor pair by factor pair: with the ancestor one level down and
    the state pair of (<>phi, <>!phi) in mu known, each prime admits exactly
    one state pair for (<>phi', <>!phi') in the image, phi' = phi * rho.
    """
    solve = _solve_table(eta)
    idx = _indices(v, d)
    if d == 0:
        return idx
    m_prev, _ = _level_sizes(v, d - 1)
    _, f = _level_sizes(v, d)
    full_prev = (1 << m_prev) - 1
    prefix = idx >> f
    thetas = np.arange(f, dtype=np.int64)
    if d == 1:
        anc_img = prefix
        images = thetas
    else:
        prev = ur_permutation(v, d - 1, eta)
        anc_img = prev[ancestor_array(v, d, d - 1)]
        images = np.zeros_like(thetas)
        for mu in range(m_prev):
            images |= ((thetas >> mu) & 1) << int(prev[mu])
    # moved[:, psi] = state in mu of the factor whose image is psi
    moved = np.zeros((len(idx), f), dtype=np.int64)
    for theta in range(f):
        moved[:, int(images[theta])] = (idx >> theta) & 1
    states = np.zeros_like(idx)
    for psi in range(f):
        t = (psi >> anc_img) & 1
        b = solve[t, moved[:, psi], moved[:, full_prev ^ psi]]
        states |= b << psi
    return (prefix << f) | states


def ur_apply_minterm(mu, r):
    """The single minterm mu * rho for a prime UR (fast path)."""
    ctx = mu.ctx
    if not ur_is_prime(r):
        raise NotPrimeError(f"UR {r} is not prime")
    if ctx.d == 0:
        return mu
    solve = _solve_table(r.eta)
    v, d = ctx.v, ctx.d
    m_prev, _ = _level_sizes(v, d - 1)
    f = ctx.factor_count
    full_prev = (1 << m_prev) - 1
    prefix = mu.prefix
    states = mu.states
    if d == 1:
        a = prefix
        images = list(range(f))
    else:
        prev = ur_permutation(v, d - 1, r.eta)
        a = int(prev[int(ancestor_array(v, d, d - 1)[mu.index])])
        images = [0] * f
        for theta in range(f):
            img = 0
            for i in range(m_prev):
                if (theta >> i) & 1:
                    img |= 1 << int(prev[i])
            images[theta] = img
    moved = [0] * f
    for theta in range(f):
        moved[images[theta]] = (states >> theta) & 1
    out = 0
    for psi in range(f):
        t = (psi >> a) & 1
        out |= int(solve[t, moved[psi], moved[full_prev ^ psi]]) << psi
    return Minterm(ctx, (prefix << f) | out)


def ur_image(m, r):
    """Set image of a minmatrix under a prime UR via the fast path."""
    perm = ur_permutation(m.ctx.v, m.ctx.d, r.eta)
    arr = m.to_array()
    out = np.zeros_like(arr)
    out[perm[arr]] = True
    return Minmatrix.from_array(m.ctx, out)


def orbit_image_is_orbit_union(ctx, r):
    """Whether every prime orbit is sent by r (prime or not) to a union of complete orbits."""
    from .substitution import is_orbit_complete, orbits
    for orb in orbits(ctx):
        if not is_orbit_complete(replace_image(orb.as_minmatrix(), r)):
            return False
    return True
