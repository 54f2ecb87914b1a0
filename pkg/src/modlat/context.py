"""Finite contexts E[v,d]: minterm indexing, minmatrix bitsets, normalization.

Encoding used throughout the package:

* a level-0 minterm is the binary number (p1 ... pv), p1 most significant;
* a minmatrix is a Python int whose bit ``i`` says whether minterm ``i`` is a member,
  and that int doubles as the rank of the formula it represents;
* a level-k minterm (k >= 1) has index ``prefix << F_k | states`` where bit ``r``
  of ``states`` is the polarity of the factor <>phi with rank(phi) = r, phi
  ranging over all formulas of E[v,k-1].
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import formula as fm
from .errors import CapacityExceeded, ContextError, ModlatError

DEFAULT_CAPACITY_BITS = 24
HEX_THRESHOLD = 4096


def default_capacity_bits():
    env = os.environ.get("MODLAT_CAPACITY")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ModlatError(f"MODLAT_CAPACITY must be an integer bit count, got {env!r}")
    return DEFAULT_CAPACITY_BITS


def _log2_sizes(v, d, cap_bits):
    """Return (log2 minterm counts per level, factor counts per level).

    Works in log space so that hopeless contexts are rejected before any
    huge integer is formed.
    """
    logs = [v]
    factors = [0]
    for k in range(1, d + 1):
        prev_log = logs[-1]
        if prev_log > cap_bits:
            raise CapacityExceeded(f"E[{v},{d}] exceeds 2^{cap_bits} minterms")
        f_k = 1 << (1 << prev_log)          # number of level-(k-1) formulas
        if v + f_k.bit_length() - 1 > cap_bits:
            raise CapacityExceeded(
                f"E[{v},{d}] has 2^({v}+2^(2^{prev_log})) minterms at level {k}, beyond the 2^{cap_bits} bound")
        factors.append(f_k)
        logs.append(v + f_k)
    if logs[-1] > cap_bits:
        raise CapacityExceeded(f"E[{v},{d}] exceeds 2^{cap_bits} minterms")
    return logs, factors


@dataclass(frozen=True)
class Context:
    """The arena E[v,d].  Construction checks the capacity bound."""

    v: int
    d: int
    capacity_bits: int = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.v < 0 or self.d < 0:
            raise ContextError("v and d must be non-negative")
        cap = self.capacity_bits
        if cap is None:
            cap = default_capacity_bits()
            object.__setattr__(self, "capacity_bits", cap)
        logs, factors = _log2_sizes(self.v, self.d, cap)
        object.__setattr__(self, "_logs", logs)
        object.__setattr__(self, "_factors", factors)

    @property
    def minterm_count(self):
        return 1 << self._logs[-1]

    @property
    def factor_count_per_level(self):
        """Number of modal factors of the minterms of each level 0..d."""
        return list(self._factors)

    @property
    def factor_count(self):
        return self._factors[-1]

    def level(self, k):
        """The sub-context E[v,k] for k <= d."""
        if not 0 <= k <= self.d:
            raise ContextError(f"level {k} outside 0..{self.d}")
        if k == self.d:
            return self
        return Context(self.v, k, self.capacity_bits)

    @property
    def full(self):
        return (1 << self.minterm_count) - 1

    def __str__(self):
        return f"E[{self.v},{self.d}]"


def context_new(v, d, capacity_bits=None):
    return Context(v, d, capacity_bits)


def parse_ctx(text, capacity_bits=None):
    """Parse ``"v,d"``."""
    try:
        v, d = (int(x) for x in text.split(","))
    except ValueError:
        raise ModlatError(f"context must look like 'v,d', got {text!r}")
    return Context(v, d, capacity_bits)


# --- bit helpers --------------------------------------------------------------

def bits_to_array(bits, n):
    """Bitset int -> bool array of length n."""
    nbytes = (n + 7) // 8
    raw = np.frombuffer(bits.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def array_to_bits(arr):
    """Bool array -> bitset int."""
    packed = np.packbits(np.asarray(arr, dtype=bool), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def members(bits):
    """Sorted member indices of a bitset int."""
    if bits == 0:
        return []
    n = bits.bit_length()
    return np.flatnonzero(bits_to_array(bits, n)).tolist()


# --- per-level tables (cached per (v, k)) --------------------------------------

@lru_cache(maxsize=None)
def _level_sizes(v, k):
    logs, factors = _log2_sizes(v, k, max(64, v + 1))
    return 1 << logs[-1], factors[-1]


@lru_cache(maxsize=None)
def _level_full(v, k):
    return (1 << _level_sizes(v, k)[0]) - 1


@lru_cache(maxsize=None)
def _indices(v, k):
    m, _ = _level_sizes(v, k)
    return np.arange(m, dtype=np.int64)


@lru_cache(maxsize=None)
def var_mask(v, k, i):
    """Minterms of E[v,k] whose prefix makes p_i true."""
    m, f = _level_sizes(v, k)
    idx = _indices(v, k)
    return array_to_bits(((idx >> f) >> (v - i)) & 1)


@lru_cache(maxsize=None)
def factor_mask(v, k, r):
    """Minterms of E[v,k] in which the factor of rank r has state 1."""
    idx = _indices(v, k)
    return array_to_bits((idx >> r) & 1)


@lru_cache(maxsize=None)
def parent_array(v, k):
    """For every minterm of E[v,k] (k >= 1), the index of its level-(k-1) ancestor."""
    m, f = _level_sizes(v, k)
    idx = _indices(v, k)
    prefix = idx >> f
    if k == 1:
        return prefix
    _, f_prev = _level_sizes(v, k - 1)
    pos = promoted_ranks(v, k - 1)
    states = np.zeros_like(idx)
    for theta, r in enumerate(pos):
        states |= ((idx >> int(r)) & 1) << theta
    return (prefix << f_prev) | states


@lru_cache(maxsize=None)
def promoted_ranks(v, k):
    """Rank in E[v,k] of the promotion of every formula of E[v,k-1] (k >= 1)."""
    m_prev, _ = _level_sizes(v, k - 1)
    par = parent_array(v, k)
    out = []
    for theta in range(1 << m_prev):
        table = bits_to_array(theta, m_prev)
        out.append(array_to_bits(table[par]))
    return tuple(out)


def ancestor_array(v, i, j):
    """Level-j ancestor index for every minterm of E[v,i]."""
    if j > i:
        raise ContextError("ancestor level must not exceed the minterm level")
    anc = _indices(v, i)
    for k in range(i, j, -1):
        anc = parent_array(v, k)[anc]
    return anc


@lru_cache(maxsize=4096)
def _lift(v, j, i, bits):
    if j == i:
        return bits
    m_j, _ = _level_sizes(v, j)
    table = bits_to_array(bits, m_j)
    return array_to_bits(table[ancestor_array(v, i, j)])


def lift_bits(v, j, i, bits):
    """Promote a level-j bitset to level i (union of descendants)."""
    if j > i:
        raise ContextError("cannot promote to a lower level")
    if j == i:
        return bits
    return _lift(v, j, i, bits)


# --- minmatrices ----------------------------------------------------------------

@dataclass(frozen=True)
class Minmatrix:
    """A set of minterms of one context, stored as a bitset int."""

    ctx: Context
    bits: int

    @classmethod
    def from_indices(cls, ctx, indices):
        bits = 0
        for i in indices:
            if not 0 <= i < ctx.minterm_count:
                raise ContextError(f"minterm index {i} outside {ctx}")
            bits |= 1 << i
        return cls(ctx, bits)

    @classmethod
    def empty(cls, ctx):
        return cls(ctx, 0)

    @classmethod
    def universe(cls, ctx):
        return cls(ctx, ctx.full)

    def _check(self, other):
        if self.ctx != other.ctx:
            raise ContextError(f"context mismatch: {self.ctx} vs {other.ctx}")

    def __or__(self, other):
        self._check(other)
        return Minmatrix(self.ctx, self.bits | other.bits)

    def __and__(self, other):
        self._check(other)
        return Minmatrix(self.ctx, self.bits & other.bits)

    def __sub__(self, other):
        self._check(other)
        return Minmatrix(self.ctx, self.bits & ~other.bits)

    def __invert__(self):
        return Minmatrix(self.ctx, self.ctx.full ^ self.bits)

    def __le__(self, other):
        self._check(other)
        return self.bits & ~other.bits == 0

    def __lt__(self, other):
        return self <= other and self.bits != other.bits

    def __contains__(self, index):
        return (self.bits >> index) & 1 == 1

    def __len__(self):
        return bin(self.bits).count("1") if self.bits else 0

    def indices(self):
        return members(self.bits)

    def __iter__(self):
        return iter(self.indices())

    def to_array(self):
        return bits_to_array(self.bits, self.ctx.minterm_count)

    @classmethod
    def from_array(cls, ctx, arr):
        return cls(ctx, array_to_bits(arr))

    @property
    def rank(self):
        return self.bits

    def __repr__(self):
        return f"Minmatrix({self.ctx}, count={len(self)})"


# --- minterms -------------------------------------------------------------------

@dataclass(frozen=True)
class Minterm:
    ctx: Context
    index: int

    def __post_init__(self):
        if not 0 <= self.index < self.ctx.minterm_count:
            raise ContextError(f"minterm index {self.index} outside {self.ctx}")

    @property
    def prefix(self):
        """Index of the level-0 assignment."""
        return self.index >> self.ctx.factor_count

    @property
    def states(self):
        """Factor polarities as an int, bit r for the factor of rank r."""
        return self.index & ((1 << self.ctx.factor_count) - 1)

    def assignment(self):
        v = self.ctx.v
        return tuple((self.prefix >> (v - i)) & 1 for i in range(1, v + 1))

    def state(self, rank):
        return (self.states >> rank) & 1

    def as_set(self):
        return Minmatrix(self.ctx, 1 << self.index)


def encode(ctx, prefix, states):
    return (prefix << ctx.factor_count) | states


def ancestor(mu, j):
    """Level-j ancestor of ``mu`` (a Minterm)."""
    ctx = mu.ctx
    if not 0 <= j <= ctx.d:
        raise ContextError(f"level {j} outside 0..{ctx.d}")
    idx = mu.index
    for k in range(ctx.d, j, -1):
        idx = int(parent_array(ctx.v, k)[idx])
    return Minterm(ctx.level(j), idx)


def descendants(mu, i, capacity_bits=None):
    """All level-i descendants of ``mu`` as a Minmatrix of E[v,i]."""
    if i < mu.ctx.d:
        raise ContextError("descendants live at a level >= the minterm's level")
    target = Context(mu.ctx.v, i, capacity_bits or mu.ctx.capacity_bits)
    return Minmatrix(target, lift_bits(mu.ctx.v, mu.ctx.d, i, 1 << mu.index))


def special_descendant(mu, i, capacity_bits=None):
    """The descendant whose factors beyond the ancestor's prefix are all 0."""
    if i < mu.ctx.d:
        raise ContextError("descendants live at a level >= the minterm's level")
    v = mu.ctx.v
    idx = mu.index
    for k in range(mu.ctx.d, i):
        # lift a level-k minterm to level k+1
        m_k, f_k = _level_sizes(v, k)
        _, f_next = _level_sizes(v, k + 1)
        prefix = idx >> f_k
        states = 0
        if k >= 1:
            ranks = promoted_ranks(v, k)
            own = idx & ((1 << f_k) - 1)
            for theta, r in enumerate(ranks):
                if (own >> theta) & 1:
                    states |= 1 << r
        idx = (prefix << f_next) | states
    target = Context(v, i, capacity_bits or mu.ctx.capacity_bits)
    return Minterm(target, idx)


def promote(m, to_ctx):
    """Rewrite a minmatrix of E[v,j] as the union of its descendants in E[v,i]."""
    if m.ctx.v != to_ctx.v:
        raise ContextError("promotion keeps the number of variables")
    if to_ctx.d < m.ctx.d:
        raise ContextError("promotion goes to a higher level")
    return Minmatrix(to_ctx, lift_bits(m.ctx.v, m.ctx.d, to_ctx.d, m.bits))


def label_ranks(ctx):
    """Ranks of the factors <>1 and <>0 at the top level of ``ctx``."""
    if ctx.d < 1:
        raise ContextError("primary labels need d >= 1")
    f = ctx.factor_count
    return f - 1, 0


# --- normalization --------------------------------------------------------------

class _Evaluator:
    """Evaluates formulas to bitsets, each node at the level of its own degree."""

    def __init__(self, v, d):
        self.v = v
        self.d = d
        self.memo = {}
        self.full = [_level_full(v, k) for k in range(d + 1)]

    def run(self, f):
        # settle long left spines bottom-up to keep recursion shallow
        spine = []
        node = f
        while type(node) in fm.BINARY:
            spine.append(node)
            node = node.left
        for n in reversed(spine):
            self.eval(n.left)
        return self.eval(f)

    def eval(self, f):
        # the caller holds the root, so every id in the memo stays valid
        memo = self.memo
        hit = memo.get(id(f))
        if hit is not None:
            return hit
        t = type(f)
        if t is fm.Not:
            k, b = self.eval(f.child)
            out = (k, self.full[k] ^ b)
        elif t is fm.And or t is fm.Or or t is fm.Imp or t is fm.Iff:
            kl, bl = self.eval(f.left)
            kr, br = self.eval(f.right)
            if kl < kr:
                k = kr
                bl = _lift(self.v, kl, k, bl)
            elif kr < kl:
                k = kl
                br = _lift(self.v, kr, k, br)
            else:
                k = kl
            if t is fm.And:
                bits = bl & br
            elif t is fm.Or:
                bits = bl | br
            elif t is fm.Imp:
                bits = (self.full[k] ^ bl) | br
            else:
                bits = self.full[k] ^ bl ^ br
            out = (k, bits)
        elif t is fm.Dia or t is fm.Box:
            k, b = self.eval(f.child)
            if k + 1 > self.d:
                raise ContextError(f"formula has modal degree above {self.d}")
            if t is fm.Box:
                out = (k + 1, self.full[k + 1] ^ factor_mask(self.v, k + 1, self.full[k] ^ b))
            else:
                out = (k + 1, factor_mask(self.v, k + 1, b))
        elif t is fm.Var:
            if f.index > self.v:
                raise ContextError(f"formula uses p{f.index} but the context has {self.v} variables")
            out = (0, var_mask(self.v, 0, f.index))
        elif t is fm.Const:
            out = (0, self.full[0] if f.value else 0)
        else:
            raise TypeError(f"not a formula: {f!r}")
        memo[id(f)] = out
        return out


def normalize(f, ctx):
    """DCF minmatrix of formula ``f`` in context ``ctx``.

    Each <> operand is normalized one level down and its rank selects the
    factor; formulas of lower degree are promoted.  <>0 stays a factor.
    """
    if isinstance(f, str):
        f = fm.parse(f)
    k, bits = _Evaluator(ctx.v, ctx.d).run(f)
    return Minmatrix(ctx, lift_bits(ctx.v, k, ctx.d, bits))


def normalize_many(formulas, ctx):
    """Normalize several formulas sharing one memo (useful for shared subtrees)."""
    ev = _Evaluator(ctx.v, ctx.d)
    out = []
    for f in formulas:
        k, bits = ev.run(f)
        out.append(Minmatrix(ctx, lift_bits(ctx.v, k, ctx.d, bits)))
    return out


def entails(a, b):
    return a <= b


# --- back to formulas -------------------------------------------------------------

def level0_minterm_formula(v, prefix):
    lits = []
    for i in range(1, v + 1):
        x = fm.Var(i)
        lits.append(x if (prefix >> (v - i)) & 1 else fm.Not(x))
    return fm.conj(lits)


@lru_cache(maxsize=4096)
def operand_formula(v, k, bits):
    """Formula for a level-k set used as a <> operand: 0, 1 or its DCF."""
    if bits == 0:
        return fm.ZERO
    if bits == (1 << _level_sizes(v, k)[0]) - 1:
        return fm.ONE
    return dcf_formula(v, k, bits)


@lru_cache(maxsize=None)
def _literals(v, k):
    """Positive and negative literal formulas of every factor of level k."""
    _, f = _level_sizes(v, k)
    out = []
    for r in range(f):
        atom = fm.Dia(operand_formula(v, k - 1, r))
        out.append((fm.Not(atom), atom))
    return out


def minterm_formula(ctx, index):
    v, d = ctx.v, ctx.d
    if d == 0:
        return level0_minterm_formula(v, index)
    f = ctx.factor_count
    prefix = index >> f
    lits = []
    for i in range(1, v + 1):
        x = fm.Var(i)
        lits.append(x if (prefix >> (v - i)) & 1 else fm.Not(x))
    table = _literals(v, d)
    for r in range(f - 1, -1, -1):
        lits.append(table[r][(index >> r) & 1])
    return fm.conj(lits)


def dcf_formula(v, k, bits):
    """Sum-of-minterms formula of a level-k bitset."""
    ctx = Context(v, k, max(default_capacity_bits(), 64))
    return fm.disj(minterm_formula(ctx, i) for i in members(bits))


def to_formula(m):
    return dcf_formula(m.ctx.v, m.ctx.d, m.bits)


# --- serialization -----------------------------------------------------------------

def dumps(m, form=None, extra=None):
    """Text form of a minmatrix.  ``form`` is 'index', 'hex' or None (automatic)."""
    n = len(m)
    if form is None:
        form = "index" if n <= HEX_THRESHOLD else "hex"
    lines = [f"ctx v={m.ctx.v} d={m.ctx.d}"]
    for key, value in (extra or {}).items():
        lines.append(f"{key}={value}")
    lines.append(f"count={n}")
    if form == "hex":
        lines.append(f"hex={m.bits:x}")
    elif form == "index":
        lines.extend(str(i) for i in m.indices())
    else:
        raise ModlatError(f"unknown minmatrix format {form!r}")
    return "\n".join(lines) + "\n"


def loads(text, capacity_bits=None):
    """Parse either serialization form.  Returns (Minmatrix, headers dict)."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("ctx "):
        raise ModlatError("minmatrix text must start with a 'ctx' line")
    head = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
    ctx = Context(int(head["v"]), int(head["d"]), capacity_bits)
    headers = {k: v for k, v in head.items() if k not in ("v", "d")}
    bits = None
    idx = []
    count = None
    for ln in lines[1:]:
        if ln.startswith("count="):
            count = int(ln[6:])
        elif ln.startswith("hex="):
            bits = int(ln[4:], 16)
        elif "=" in ln:
            key, value = ln.split("=", 1)
            headers[key] = value
        else:
            idx.append(int(ln))
    if bits is None:
        m = Minmatrix.from_indices(ctx, idx)
    else:
        if bits > ctx.full:
            raise ModlatError("hex bitset is larger than the context")
        m = Minmatrix(ctx, bits)
    if count is not None and count != len(m):
        raise ModlatError(f"count={count} does not match {len(m)} members")
    return m, headers
