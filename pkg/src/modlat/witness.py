"""Neighborhood models in which every minterm of a context holds at its own world.

Worlds are the minterms of every level 0..d.  Neighborhoods are kept in
complement form: each world starts with every subset of W as a neighborhood
and drops the sets W - X(phi) for the factors <>phi it must make true.
A world's dropped sets are stored as a row of a boolean matrix over the
interned world sets.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import formula as fm
from .context import (_level_sizes, ancestor_array, promoted_ranks, special_descendant,
                      Minterm)
from .errors import ContextError, ModlatError


class WitnessError(ModlatError):
    """A construction invariant failed (should never happen)."""


@dataclass
class WitnessModel:
    ctx: object
    level: np.ndarray           # level of every world
    index: np.ndarray           # minterm index of every world at its own level
    offsets: tuple              # first world id of each level
    prefix: np.ndarray          # level-0 assignment index of every world
    sets: np.ndarray            # interned world sets (rows) that can be dropped
    set_keys: list              # (level of operand, operand bitset) per interned set
    excluded: np.ndarray        # worlds x interned sets: the set is not a neighborhood
    labels: list = field(default_factory=list)   # semantic level-k minterm of every world
    _set_index: dict = field(default_factory=dict)

    @property
    def world_count(self):
        return len(self.level)

    def world(self, level, index):
        if not 0 <= level < len(self.offsets):
            raise ContextError(f"no level {level} in this model")
        return self.offsets[level] + index

    def world_name(self, w):
        return f"L{int(self.level[w])}#{int(self.index[w])}"

    def find_set(self, mask):
        """Interned id of a world set, or None."""
        return self._set_index.get(np.packbits(mask).tobytes())


def _intern(model_sets, keys, index, mask, key):
    packed = np.packbits(mask).tobytes()
    if packed in index:
        raise WitnessError(f"dropped set for {key} coincides with the one for {keys[index[packed]]}")
    index[packed] = len(keys)
    keys.append(key)
    model_sets.append(mask)


def _uniform_on_fibers(x, labels, n_labels):
    """True iff x is constant on every fiber of ``labels``."""
    ones = np.bincount(labels, weights=x.astype(float), minlength=n_labels)
    count = np.bincount(labels, minlength=n_labels)
    return bool(np.all((ones == 0) | (ones == count)))


def build_model(ctx):
    """Construct the model level by level and assert the separation conditions.

    At level k every world of level >= k drops W - X(phi) for each operand phi
    (a level k-1 formula that is not a promotion) whose factor has state 1 in
    the world's level-k ancestor.  Worlds below level k drop nothing new, so
    they take the special descendant whose later factors are all 0.
    """
    v, d = ctx.v, ctx.d
    sizes = [_level_sizes(v, k) for k in range(d + 1)]
    if sizes[d][1] > 62:
        raise ContextError(f"{ctx} is too large for an explicit witness model")
    counts = [m for m, _ in sizes]
    offsets = tuple(int(x) for x in np.concatenate([[0], np.cumsum(counts)[:-1]]))
    level = np.concatenate([np.full(m, k, dtype=np.int64) for k, m in enumerate(counts)])
    index = np.concatenate([np.arange(m, dtype=np.int64) for m in counts])
    n = len(level)
    prefix = np.empty(n, dtype=np.int64)
    for k in range(d + 1):
        sl = slice(offsets[k], offsets[k] + counts[k])
        prefix[sl] = index[sl] >> sizes[k][1] if k else index[sl]

    sets, keys, set_index = [], [], {}
    drops = []                  # columns of the excluded matrix
    labels = [prefix.copy()]

    for k in range(1, d + 1):
        m_prev, _ = sizes[k - 1]
        _, f = sizes[k]
        promoted = set(promoted_ranks(v, k - 1)) if k >= 2 else set()
        below = labels[k - 1]
        # level-k ancestor of every world at level >= k
        anc = np.full(n, -1, dtype=np.int64)
        for j in range(k, d + 1):
            sl = slice(offsets[j], offsets[j] + counts[j])
            anc[sl] = ancestor_array(v, j, k)
        x_of = {}
        for theta in range(f):
            x = ((theta >> below) & 1).astype(bool)
            x_of[theta] = x
            if k >= 2:
                lower_fiber = _uniform_on_fibers(x, labels[k - 2], sizes[k - 2][0])
                if lower_fiber != (theta in promoted):
                    raise WitnessError(f"separation fails for level-{k - 1} operand {theta}")
            if theta in promoted:
                continue
            _intern(sets, keys, set_index, ~x, (k - 1, theta))
            drops.append(np.where(anc >= 0, (np.maximum(anc, 0) >> theta) & 1, 0).astype(bool))
        # distinct operands of one level must have distinct truth sets
        seen = {np.packbits(x).tobytes() for x in x_of.values()}
        if len(seen) != f:
            raise WitnessError(f"two level-{k - 1} operands share a truth set")
        model = WitnessModel(ctx, level, index, offsets, prefix, np.array(sets),
                             list(keys), np.array(drops).T, labels, set_index)
        states = np.zeros(n, dtype=np.int64)
        for theta in range(f):
            states |= _dia(model, x_of[theta]).astype(np.int64) << theta
        labels.append((prefix << f) | states)

    model = WitnessModel(ctx, level, index, offsets, prefix,
                         np.array(sets) if sets else np.zeros((0, n), dtype=bool),
                         list(keys),
                         np.array(drops).T if drops else np.zeros((n, 0), dtype=bool),
                         labels, set_index)
    verify_labels(model)
    return model


def expected_label(model, w, k):
    """Level-k minterm that world w must validate: its ancestor or its special descendant."""
    ctx = model.ctx
    lvl, idx = int(model.level[w]), int(model.index[w])
    if lvl >= k:
        return int(ancestor_array(ctx.v, lvl, k)[idx])
    return special_descendant(Minterm(ctx.level(lvl), idx), k, ctx.capacity_bits).index


def verify_labels(model):
    """Each world validates exactly the required minterm at every level."""
    ctx = model.ctx
    for k in range(ctx.d + 1):
        got = model.labels[k]
        for j in range(ctx.d + 1):
            lo, cnt = model.offsets[j], _level_sizes(ctx.v, j)[0]
            sl = got[lo:lo + cnt]
            if j >= k:
                want = ancestor_array(ctx.v, j, k)
                if not np.array_equal(sl, want):
                    raise WitnessError(f"level-{j} worlds do not validate their level-{k} ancestors")
            else:
                for i in range(cnt):
                    if int(sl[i]) != expected_label(model, lo + i, k):
                        raise WitnessError(f"world L{j}#{i} misses its special level-{k} descendant")
    return True


def _dia(model, x):
    """Truth of <>phi at every world, given X(phi)."""
    s = model.find_set(~x)
    if s is None:
        return np.zeros(model.world_count, dtype=bool)
    return model.excluded[:, s].copy()


def truth_set(model, f):
    """X(f): boolean array over all worlds."""
    if isinstance(f, str):
        f = fm.parse(f)
    if fm.max_var(f) > model.ctx.v or fm.modal_degree(f) > model.ctx.d:
        raise ContextError(f"formula is outside {model.ctx}")
    v = model.ctx.v
    memo = {}

    def ev(g):
        key = id(g)
        if key in memo:
            return memo[key]
        t = type(g)
        if t is fm.Const:
            out = np.full(model.world_count, bool(g.value))
        elif t is fm.Var:
            out = ((model.prefix >> (v - g.index)) & 1).astype(bool)
        elif t is fm.Not:
            out = ~ev(g.child)
        elif t is fm.Dia:
            out = _dia(model, ev(g.child))
        elif t is fm.Box:
            out = ~_dia(model, ~ev(g.child))
        else:
            a, b = ev(g.left), ev(g.right)
            if t is fm.And:
                out = a & b
            elif t is fm.Or:
                out = a | b
            elif t is fm.Imp:
                out = ~a | b
            else:
                out = a == b
        memo[key] = out
        return out

    return fm._with_spines(f, ev)


def model_check(model, w, f):
    """Truth of formula f at world w."""
    return bool(truth_set(model, f)[w])


def check_separation(model):
    """Return (own_valid, others_invalid) over every level, read from the labels.

    A level-k minterm holds at w iff w's semantic level-k label is that minterm,
    so validity at the own world and failure elsewhere reduce to label checks.
    """
    own, others = True, True
    for k in range(model.ctx.d + 1):
        lo = model.offsets[k]
        cnt = _level_sizes(model.ctx.v, k)[0]
        lab = model.labels[k][lo:lo + cnt]
        own &= bool(np.array_equal(lab, np.arange(cnt)))
        others &= len(np.unique(lab)) == cnt
    return own, others


def dump(model, limit=None):
    """Text dump: one header line per world, then its dropped sets as world lists."""
    lines = []
    v = model.ctx.v
    names = [model.world_name(w) for w in range(model.world_count)]
    set_members = [np.flatnonzero(s) for s in model.sets]
    for w in range(model.world_count if limit is None else min(limit, model.world_count)):
        vars_bits = format(int(model.prefix[w]), f"0{v}b") if v else "-"
        dropped = np.flatnonzero(model.excluded[w]) if model.excluded.size else []
        lines.append(f"world {names[w]}: vars={vars_bits} excluded={len(dropped)} sets")
        for s in dropped:
            lines.append("  {" + ", ".join(names[i] for i in set_members[s]) + "}")
    return "\n".join(lines) + "\n"
