"""Characteristic-minmatrix helpers: labels, candidate checks, the E[0,1] lattice, K fixtures."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .context import Context, Minmatrix, Minterm, _level_sizes, label_ranks, normalize
from .errors import ContextError, ModlatError, NotPrimeError
from .replacement import (E01, E11, LABELS, LABEL_STATES, label_index, ur_is_prime,
                          ur_permutation)
from .substitution import (all_substitutions, find_collapsing_substitution,
                           is_orbit_complete, pullback_map)

E21 = Context(2, 1)


# --- primary labels -----------------------------------------------------------------

def label(mu):
    """Primary label W, D, C or V of a minterm: states of <>1 and <>0."""
    if mu.ctx.d < 1:
        raise ContextError("primary labels need d >= 1")
    one_rank, zero_rank = label_ranks(mu.ctx)
    pair = (mu.state(one_rank), mu.state(zero_rank))
    for name, states in LABEL_STATES.items():
        if states == pair:
            return name


def label_counts(ctx):
    out = dict.fromkeys(LABELS, 0)
    for i in range(ctx.minterm_count):
        out[label(Minterm(ctx, i))] += 1
    return out


# --- candidates -----------------------------------------------------------------------

@dataclass(frozen=True)
class CmmCandidate:
    minmatrix: Minmatrix
    orbit_complete: bool
    immune: bool
    witness: object = None      # a collapsing substitution, when one exists

    @property
    def passes(self):
        return self.orbit_complete and self.immune


def candidate_check(m):
    """Necessary-condition flags for m being a characteristic minmatrix."""
    witness = find_collapsing_substitution(m)
    return CmmCandidate(m, is_orbit_complete(m), witness is None, witness)


def lattice_join(a, b):
    """Join of two characteristic minmatrices: their union (exact)."""
    return a | b


def lattice_meet_bound(a, b):
    """Intersection: an upper bound on the meet, which may be strictly smaller."""
    return a & b


def substitution_closure(m):
    """Largest subset of m closed under every level-0 substitution (v <= 2).

    Repeatedly intersects m with all its substitution images; the result is
    the characteristic minmatrix of the system axiomatized by m in this context.
    """
    arr = m.to_array()
    maps = [pullback_map(s, m.ctx) for s in all_substitutions(m.ctx.v)]
    while True:
        nxt = arr.copy()
        for h in maps:
            nxt &= arr[h]
        if np.array_equal(nxt, arr):
            return Minmatrix.from_array(m.ctx, arr)
        arr = nxt


# --- the E[0,1] lattice ----------------------------------------------------------------

# Names used for lattice elements besides atoms (label sets); D+V is the normal K shadow.
_SPECIAL_NAMES = {frozenset(): "F", frozenset(LABELS): "E", frozenset("DV"): "K"}


def system_name(labels):
    key = frozenset(labels)
    if key in _SPECIAL_NAMES:
        return _SPECIAL_NAMES[key]
    return "+".join(x for x in LABELS if x in key)


@dataclass(frozen=True)
class LatticeNode:
    minmatrix: Minmatrix
    labels: tuple
    name: str


@dataclass(frozen=True)
class Lattice:
    nodes: tuple          # indexed by the E[0,1] bitset
    edges: tuple          # (lower bitset, upper bitset) covering pairs

    @property
    def atoms(self):
        return [n for n in self.nodes if len(n.labels) == 1]

    def to_dot(self):
        lines = ["digraph E01 {", "  rankdir=BT;"]
        for n in self.nodes:
            members = ",".join(n.labels) or "-"
            lines.append(f'  s{n.minmatrix.bits} [label="{n.name}\\n{{{members}}}"];')
        for lo, hi in self.edges:
            lines.append(f"  s{lo} -> s{hi};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_table(self):
        rows = [f"{'bits':>4}  {'size':>4}  name"]
        for n in self.nodes:
            rows.append(f"{n.minmatrix.bits:>4}  {len(n.labels):>4}  {n.name}")
        return "\n".join(rows) + "\n"


def _labels_of(bits):
    return tuple(x for x in LABELS if (bits >> label_index(x)) & 1)


@lru_cache(maxsize=1)
def figure1_lattice():
    """All 16 subsets of {W, D, C, V} as E[0,1] minmatrices, with the Hasse edges."""
    nodes = []
    for bits in range(16):
        labs = _labels_of(bits)
        nodes.append(LatticeNode(Minmatrix(E01, bits), labs, system_name(labs)))
    edges = []
    for lo in range(16):
        for k in range(4):
            if not (lo >> k) & 1:
                edges.append((lo, lo | (1 << k)))
    return Lattice(tuple(nodes), tuple(edges))


def ur_lattice_action(r):
    """Permutation of the 16 E[0,1] systems (by bitset) induced by a prime UR."""
    if not ur_is_prime(r):
        raise NotPrimeError(f"UR {r} is not prime")
    perm = ur_permutation(0, 1, r.eta)
    out = []
    for bits in range(16):
        img = 0
        for i in range(4):
            if (bits >> i) & 1:
                img |= 1 << int(perm[i])
        out.append(img)
    return tuple(out)


def is_lattice_automorphism(perm):
    if sorted(perm) != list(range(16)):
        return False
    return all(perm[a | b] == perm[a] | perm[b] and perm[a & b] == perm[a] & perm[b]
               for a in range(16) for b in range(16))


# --- co-atom demo -----------------------------------------------------------------------

COATOM_AXIOMS = ("<>p1", "<>p1 <-> p1", "<>p1 <-> !p1", "!<>p1")


def coatoms_demo():
    """For each axiom: its E[1,1] minmatrix, the substitution-closed part, and checks."""
    rows = []
    for text in COATOM_AXIOMS:
        raw = normalize(text, E11)
        closed = substitution_closure(raw)
        cand = candidate_check(closed)
        labs = sorted({label(Minterm(E11, i)) for i in closed.indices()})
        rows.append({
            "axiom": text,
            "raw_size": len(raw),
            "raw_orbit_complete": is_orbit_complete(raw),
            "closed": closed,
            "closed_size": len(closed),
            "orbit_complete": cand.orbit_complete,
            "immune": cand.immune,
            "labels": labs,
        })
    return rows


# --- K fixtures ------------------------------------------------------------------------

@dataclass(frozen=True)
class KFixture:
    """A K-based minmatrix restricted to the listed free factor rows.

    Column index = row states read as a binary number, first row most significant.
    """
    name: str
    v: int
    d: int
    rows: tuple
    columns: frozenset

    def __len__(self):
        return len(self.columns)

    def matrix(self):
        """Rows of 0/1 states, one list per factor row, columns in decreasing index order."""
        cols = sorted(self.columns, reverse=True)
        n = len(self.rows)
        return [[(c >> (n - 1 - k)) & 1 for c in cols] for k in range(n)]

    def to_table(self):
        width = max(len(r) for r in self.rows)
        return "\n".join(f"{r:>{width}} | " + " ".join(map(str, line))
                         for r, line in zip(self.rows, self.matrix())) + "\n"


def load_fixture(text):
    """Parse the fixture format: a minmatrix text with base=, system= and rows= headers."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines or not lines[0].startswith("ctx "):
        raise ModlatError("fixture must start with a 'ctx' line")
    head = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
    headers, cols = {}, []
    for ln in lines[1:]:
        if "=" in ln:
            k, val = ln.split("=", 1)
            headers[k] = val
        else:
            cols.append(int(ln))
    rows = tuple(headers["rows"].split(","))
    if any(not 0 <= c < 1 << len(rows) for c in cols):
        raise ModlatError("fixture column index out of range")
    if "count" in headers and int(headers["count"]) != len(set(cols)):
        raise ModlatError("fixture count does not match its columns")
    return KFixture(headers.get("system", "?"), int(head["v"]), int(head["d"]), rows,
                    frozenset(cols))


@lru_cache(maxsize=None)
def k_fixtures():
    data = resources.files("modlat") / "data"
    return {name.upper(): load_fixture((data / f"{name}.mm").read_text())
            for name in ("s4", "b", "s5", "t")}


def k12_swap(col):
    """Image of a reduced K[1,2] column under the prime substitution p := !p.

    (p, r1, r2, r3, r4) -> (!p, r3, r4, r1, r2): the operands of r1 and r3 trade
    places, as do those of r2 and r4.
    """
    p, r1, r2, r3, r4 = ((col >> (4 - k)) & 1 for k in range(5))
    out = 0
    for b in (1 - p, r3, r4, r1, r2):
        out = out * 2 + b
    return out


def _orbit_pairs(cols):
    pairs, unpaired = set(), set()
    for c in cols:
        img = k12_swap(c)
        if img in cols:
            pairs.add(tuple(sorted((c, img))))
        else:
            unpaired.add(c)
    return sorted(pairs), sorted(unpaired)


def k_collapse_demo():
    """Set algebra on the K[1,2] fixtures: the B4 intersection and its relation to S5."""
    fx = k_fixtures()
    s4, b, s5, t = fx["S4"].columns, fx["B"].columns, fx["S5"].columns, fx["T"].columns
    b4 = s4 & b
    report = {
        "S4": len(s4), "B": len(b), "S5": len(s5), "T_columns": len(t),
        "B4": len(b4), "B4_columns": sorted(b4),
        "S5_in_B4": s5 <= b4, "S5_strictly_in_B4": s5 < b4,
        "removed_by_collapse": sorted(b4 - s5),
    }
    for name, cols in (("S4", s4), ("B", b), ("S5", s5), ("B4", b4)):
        pairs, unpaired = _orbit_pairs(cols)
        report[f"{name}_orbit_pairs"] = pairs
        report[f"{name}_unpaired"] = unpaired
    return report


# --- the normal K shadow in E[2,1] ----------------------------------------------------------

def normal_k_cmm_e21():
    """The 64 E[2,1] minterms where <> of a union is the OR over its level-0 minterms.

    Free data: p1, p2 and the states of <> applied to each of the four level-0
    minterms; every other factor is the OR of the ones its operand contains.
    """
    v = 2
    m0, _ = _level_sizes(v, 0)          # 4 level-0 minterms
    _, f = _level_sizes(v, 1)           # 16 factors
    out = []
    for prefix in range(1 << v):
        for free in range(1 << m0):     # bit a: state of <>(level-0 minterm a)
            states = 0
            for theta in range(f):
                if theta & free:
                    states |= 1 << theta
            out.append((prefix << f) | states)
    return Minmatrix.from_indices(E21, out)


def additivity_holds(m):
    """Check <>(x + y) = <>x + <>y for all disjoint level-0 operands, in every minterm."""
    f = m.ctx.factor_count
    for idx in m.indices():
        s = idx & ((1 << f) - 1)
        for x in range(f):
            for y in range(f):
                if ((s >> (x | y)) & 1) != (((s >> x) | (s >> y)) & 1):
                    return False
    return True


def dia_state(mu, operand):
    """State in ``mu`` of the factor <>operand, operand a level-(d-1) formula."""
    rank = normalize(operand, mu.ctx.level(mu.ctx.d - 1)).bits
    return mu.state(rank)
