"""Level-0 uniform substitutions and the prime-substitution group action."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import formula as fm
from .context import (Context, Minmatrix, _indices, _level_sizes, normalize, var_mask,
                      level0_minterm_formula)
from .errors import ContextError, EnumerationBoundError, ModlatError, NotPrimeError

MAX_ENUM_V = 2


def table_of(f, v):
    """Truth table (2^v-bit int) of a modality-free formula."""
    if fm.modal_degree(f) > 0:
        raise ModlatError("substitution components must be modality-free")
    return normalize(f, Context(v, 0)).bits


def formula_of_table(table, v):
    """A short level-0 formula with the given truth table."""
    full = (1 << (1 << v)) - 1
    if table == 0:
        return fm.ZERO
    if table == full:
        return fm.ONE
    for i in range(1, v + 1):
        mask = var_mask(v, 0, i)
        if table == mask:
            return fm.Var(i)
        if table == full ^ mask:
            return fm.Not(fm.Var(i))
    return fm.disj(level0_minterm_formula(v, a) for a in range(1 << v) if (table >> a) & 1)


@dataclass(frozen=True)
class Substitution:
    """sigma: p_i -> sigma_i, each component a truth table over p1..pv."""

    v: int
    tables: tuple

    def __post_init__(self):
        if len(self.tables) != self.v:
            raise ModlatError("a substitution needs exactly v components")
        full = (1 << (1 << self.v)) - 1
        for t in self.tables:
            if not 0 <= t <= full:
                raise ModlatError("component truth table out of range")

    @classmethod
    def identity(cls, v):
        return cls(v, tuple(var_mask(v, 0, i) for i in range(1, v + 1)))

    @classmethod
    def from_formulas(cls, formulas, v=None):
        formulas = list(formulas)
        if v is None:
            v = len(formulas)
        if len(formulas) != v:
            raise ModlatError("a substitution needs exactly v components")
        for f in formulas:
            if fm.max_var(f) > v:
                raise ModlatError(f"component uses p{fm.max_var(f)} beyond v={v}")
        return cls(v, tuple(table_of(f, v) for f in formulas))

    @classmethod
    def parse(cls, text, v=None):
        """Parse ``p1:=<formula>; p2:=<formula>``; unlisted variables map to themselves."""
        given = {}
        for part in text.split(";"):
            part = part.strip()
            if not part:
                continue
            if ":=" not in part:
                raise ModlatError(f"substitution entry {part!r} lacks ':='")
            lhs, rhs = part.split(":=", 1)
            lhs = lhs.strip()
            if not (lhs.startswith("p") and lhs[1:].isdigit() and int(lhs[1:]) >= 1):
                raise ModlatError(f"bad substituted variable {lhs!r}")
            given[int(lhs[1:])] = fm.parse(rhs)
        if v is None:
            v = max([0, *given, *(fm.max_var(f) for f in given.values())])
        if given and max(given) > v:
            raise ModlatError(f"p{max(given)} is beyond v={v}")
        comps = [given.get(i, fm.Var(i)) for i in range(1, v + 1)]
        return cls.from_formulas(comps, v)

    @classmethod
    def from_permutation(cls, perm):
        """The prime substitution whose level-0 map sends minterm a to perm[a]."""
        n = len(perm)
        v = n.bit_length() - 1
        if 1 << v != n:
            raise ModlatError("permutation length must be a power of two")
        tables = []
        for i in range(1, v + 1):
            t = 0
            for a in range(n):
                if (perm[a] >> (v - i)) & 1:
                    t |= 1 << a
            tables.append(t)
        return cls(v, tuple(tables))

    def formulas(self):
        return [formula_of_table(t, self.v) for t in self.tables]

    def level0_map(self):
        """g(a) = (sigma_1(a), ..., sigma_v(a)) as a tuple over level-0 minterms."""
        v = self.v
        out = []
        for a in range(1 << v):
            b = 0
            for i, t in enumerate(self.tables, start=1):
                b |= ((t >> a) & 1) << (v - i)
            out.append(b)
        return tuple(out)

    def is_prime(self):
        g = self.level0_map()
        return len(set(g)) == len(g)

    def __str__(self):
        return "; ".join(f"p{i}:={fm.to_text(f)}" for i, f in enumerate(self.formulas(), 1))


def is_prime(s):
    return s.is_prime()


def subst_apply(f, s):
    """Syntactic substitution of every p_i by the i-th component."""
    if fm.max_var(f) > s.v:
        raise ModlatError(f"formula uses p{fm.max_var(f)} beyond v={s.v}")
    return fm.substitute_vars(f, dict(enumerate(s.formulas(), start=1)))


def subst_compose(s, t):
    """(st)_i = s_i with t substituted inside, so f o (st) = (f o s) o t."""
    if s.v != t.v:
        raise ModlatError("composed substitutions must share v")
    g_t = t.level0_map()
    tables = []
    for ts in s.tables:
        out = 0
        for a, b in enumerate(g_t):
            out |= ((ts >> b) & 1) << a
        tables.append(out)
    return Substitution(s.v, tuple(tables))


def all_substitutions(v):
    """Every level-0 substitution for v variables: (2^(2^v))^v of them."""
    n = 1 << (1 << v)
    for tables in itertools.product(range(n), repeat=v):
        yield Substitution(v, tables)


def prime_substitutions(v):
    """The prime substitutions, one per permutation of level-0 minterms."""
    for perm in itertools.permutations(range(1 << v)):
        yield Substitution.from_permutation(perm)


# --- action on minterms ----------------------------------------------------------

def _formula_images(perm_prev, m_prev):
    """Set image of every formula of the previous level under a minterm permutation."""
    thetas = np.arange(1 << m_prev, dtype=np.int64)
    out = np.zeros_like(thetas)
    for mu in range(m_prev):
        out |= ((thetas >> mu) & 1) << int(perm_prev[mu])
    return out


def _formula_preimages(h_prev, m_prev):
    """Preimage of every formula of the previous level under a minterm map."""
    thetas = np.arange(1 << m_prev, dtype=np.int64)
    out = np.zeros_like(thetas)
    for mu in range(m_prev):
        out |= ((thetas >> int(h_prev[mu])) & 1) << mu
    return out


@lru_cache(maxsize=64)
def _induced(v, tables, d):
    s = Substitution(v, tables)
    g = s.level0_map()
    perm = np.empty(1 << v, dtype=np.int64)
    perm[list(g)] = np.arange(1 << v)           # a point e goes to g^-1(e)
    base = perm
    for k in range(1, d + 1):
        m_prev, _ = _level_sizes(v, k - 1)
        _, f = _level_sizes(v, k)
        images = _formula_images(perm, m_prev)
        idx = _indices(v, k)
        states = np.zeros_like(idx)
        for theta in range(f):
            states |= ((idx >> theta) & 1) << int(images[theta])
        perm = (base[idx >> f] << f) | states
    return perm


def induced_permutation(s, ctx):
    """Array p with p[mu] = index of mu o s, for a prime substitution s."""
    if s.v != ctx.v:
        raise ContextError("substitution and context disagree on v")
    if not s.is_prime():
        raise NotPrimeError(f"substitution {s} is not prime")
    return _induced(s.v, s.tables, ctx.d)


def pullback_map(s, ctx):
    """Array H with (m o s) = {nu : H[nu] in m} for any level-0 substitution s.

    H[nu] is the minterm whose atoms take the values that the substituted
    atoms take at nu.
    """
    if s.v != ctx.v:
        raise ContextError("substitution and context disagree on v")
    v = s.v
    h = np.array(s.level0_map(), dtype=np.int64)
    for k in range(1, ctx.d + 1):
        m_prev, _ = _level_sizes(v, k - 1)
        _, f = _level_sizes(v, k)
        pre = _formula_preimages(h, m_prev)
        idx = _indices(v, k)
        states = np.zeros_like(idx)
        for theta in range(f):
            states |= ((idx >> int(pre[theta])) & 1) << theta
        g = np.array(s.level0_map(), dtype=np.int64)
        h = (g[idx >> f] << f) | states
    return h


def subst_image(m, s):
    """The minmatrix of (formula of m) o s."""
    arr = m.to_array()
    return Minmatrix.from_array(m.ctx, arr[pullback_map(s, m.ctx)])


def permute(m, perm):
    """Set image of a minmatrix under a minterm permutation array."""
    arr = m.to_array()
    out = np.zeros_like(arr)
    out[perm[arr]] = True
    return Minmatrix.from_array(m.ctx, out)


# --- orbits ---------------------------------------------------------------------------

def _generators(v):
    n = 1 << v
    if n < 2:
        return []
    gens = [tuple([1, 0] + list(range(2, n)))]
    if n > 2:
        gens.append(tuple(list(range(1, n)) + [0]))
    return [Substitution.from_permutation(p) for p in gens]


@lru_cache(maxsize=8)
def orbit_labels(ctx):
    """Component label (smallest member) of every minterm's prime orbit."""
    n = ctx.minterm_count
    idx = np.arange(n)
    rows = [idx]
    cols = [idx]
    for s in _generators(ctx.v):
        rows.append(idx)
        cols.append(induced_permutation(s, ctx))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    graph = coo_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(n, n))
    _, comp = connected_components(graph, directed=True, connection="weak")
    # relabel each component by its smallest member
    first = np.full(comp.max() + 1, n, dtype=np.int64)
    np.minimum.at(first, comp, idx)
    return first[comp]


@dataclass(frozen=True)
class PrimeOrbit:
    ctx: Context
    members: tuple

    def __len__(self):
        return len(self.members)

    def as_minmatrix(self):
        return Minmatrix.from_indices(self.ctx, self.members)


def orbits(ctx):
    """Partition of the minterms of ``ctx`` into prime orbits, ordered by least member."""
    labels = orbit_labels(ctx)
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    cuts = np.flatnonzero(np.diff(sorted_labels)) + 1
    return [PrimeOrbit(ctx, tuple(int(x) for x in grp)) for grp in np.split(order, cuts)]


def is_orbit_complete(m):
    """True iff ``m`` is a union of complete prime orbits."""
    labels = orbit_labels(m.ctx)
    arr = m.to_array()
    hit = np.zeros(m.ctx.minterm_count, dtype=bool)
    hit[labels[arr]] = True
    return bool(np.array_equal(hit[labels], arr))


def find_collapsing_substitution(m, allow_large=False):
    """A level-0 substitution sigma with [m & m o sigma] strictly inside [m], or None.

    Prime substitutions are tried first (identity never collapses), then the
    remaining ones.
    """
    v = m.ctx.v
    if v > MAX_ENUM_V and not allow_large:
        raise EnumerationBoundError(
            f"immunity scan over all substitutions is limited to v <= {MAX_ENUM_V}")
    arr = m.to_array()
    if not arr.any():
        return None
    seen = set()
    candidates = itertools.chain(prime_substitutions(v), all_substitutions(v))
    for s in candidates:
        if s.tables in seen:
            continue
        seen.add(s.tables)
        image = arr[pullback_map(s, m.ctx)]
        if not np.all(image[arr]):
            return s
    return None
