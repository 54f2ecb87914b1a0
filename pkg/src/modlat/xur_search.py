"""Exhaustive search for invertible extended replacements over all 2^32 tables.

The 32-bit table is split into a high half (rows with e true) and a low half.
One partition is one value of the high half; inside it the 65536 low halves
are screened together with lookup tables and the survivors get the exact
bijectivity test on the action map.

The screen is a necessary condition read off the action map: for every fixed
pair (<>1, <>0) = (o, z) the map (e, b, c) -> (e, chi(e), chi(!e)) must be
injective on those 8 rows.  The tables below are computed, not assumed.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from functools import lru_cache
from multiprocessing import get_context

import numpy as np

from .replacement import (IDENTITY_ETA5, action_map, compose_fast, embed_eta,
                          inverse_eta5)

log = logging.getLogger(__name__)

N_PARTITIONS = 1 << 16
CHUNK = 256          # partitions per unit of work and per checkpoint step
EXPECTED_PRIME_XURS = 31104


def _slice_pos(e, o, z, b, c):
    return 16 * e + 8 * o + 4 * b + 2 * c + z


@lru_cache(maxsize=None)
def injective_slices():
    """8-bit slice tables s(e,b,c) (row 4e+2b+c) whose map (e,b,c) -> (e, s(e,b,c), s(!e,c,b)) is injective."""
    good = []
    for s in range(256):
        seen = set()
        for e in (0, 1):
            for b in (0, 1):
                for c in (0, 1):
                    ce = (s >> (4 * e + 2 * b + c)) & 1
                    cn = (s >> (4 * (1 - e) + 2 * c + b)) & 1
                    seen.add((e, ce, cn))
        if len(seen) == 8:
            good.append(s)
    return tuple(good)


@lru_cache(maxsize=None)
def _tables():
    """Screening tables.

    nib[q] : for every 16-bit half, its 4-bit nibble belonging to slice q = 2o+z
    allowed[q, hi_nib, lo_nib] : the slice built from the two nibbles is injective
    """
    halves = np.arange(1 << 16, dtype=np.uint32)
    nib = np.zeros((4, 1 << 16), dtype=np.uint8)
    for o in (0, 1):
        for z in (0, 1):
            q = 2 * o + z
            for b in (0, 1):
                for c in (0, 1):
                    pos = _slice_pos(0, o, z, b, c)
                    nib[q] |= (((halves >> pos) & 1) << (2 * b + c)).astype(np.uint8)
    allowed = np.zeros((4, 16, 16), dtype=bool)
    good = set(injective_slices())
    for hi in range(16):
        for lo in range(16):
            allowed[:, hi, lo] = ((hi << 4) | lo) in good
    return nib, allowed


@lru_cache(maxsize=None)
def _exact_tables():
    """Row r -> bit positions read by each coordinate of the action map."""
    r = np.arange(32)
    e, o, b, c, z = (r >> 4) & 1, (r >> 3) & 1, (r >> 2) & 1, (r >> 1) & 1, r & 1
    one = 16 + 12 * o + 3 * z
    zero = 10 * o + 5 * z
    ce = 16 * e + 8 * o + 4 * b + 2 * c + z
    cn = 16 * (1 - e) + 8 * o + 4 * c + 2 * b + z
    return e, one, ce, cn, zero


def bijective_mask(etas):
    """Vectorized: which 32-bit tables have a bijective action map."""
    etas = np.asarray(etas, dtype=np.uint64)
    e, one, ce, cn, zero = _exact_tables()
    bit = lambda pos: ((etas[:, None] >> pos.astype(np.uint64)) & 1).astype(np.uint32)
    image = (16 * e + 8 * bit(one) + 4 * bit(ce) + 2 * bit(cn) + bit(zero)).astype(np.uint32)
    hit = np.bitwise_or.reduce(np.left_shift(np.uint32(1), image), axis=1)
    return hit == np.uint32(0xFFFFFFFF)


def scan_partition(hi):
    """Every prime table whose high half equals ``hi``, in increasing order."""
    nib, allowed = _tables()
    hi_nibs = nib[:, hi]
    keep = np.ones(1 << 16, dtype=bool)
    for q in range(4):
        keep &= allowed[q, hi_nibs[q]][nib[q]]
    lo = np.flatnonzero(keep).astype(np.uint64)
    if lo.size == 0:
        return []
    cand = (np.uint64(hi) << np.uint64(16)) | lo
    return [int(x) for x in cand[bijective_mask(cand)]]


def scan_chunk(chunk):
    out = []
    for hi in range(chunk * CHUNK, (chunk + 1) * CHUNK):
        out.extend(scan_partition(hi))
    return chunk, out


@dataclass
class SearchResult:
    primes: list = field(default_factory=list)
    chunks_done: int = 0
    total_chunks: int = 0
    complete: bool = False

    @property
    def count(self):
        return len(self.primes)


def _load_checkpoint(path):
    if path and os.path.exists(path):
        with open(path) as fh:
            data = json.load(fh)
        return {int(k): v for k, v in data["chunks"].items()}
    return {}


def _save_checkpoint(path, done):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump({"chunk_size": CHUNK, "chunks": {str(k): v for k, v in sorted(done.items())}}, fh)
    os.replace(tmp, path)


def full_search(workers=1, checkpoint=None, max_chunks=None):
    """Scan all 2^32 tables; resumable through a JSON checkpoint of finished chunks.

    ``max_chunks`` stops after that many new chunks, which is how an
    interruption is simulated in tests.
    """
    total = N_PARTITIONS // CHUNK
    done = _load_checkpoint(checkpoint)
    todo = [c for c in range(total) if c not in done]
    if max_chunks is not None:
        todo = todo[:max_chunks]
    log.info("xur search: %d chunks done, %d to scan", len(done), len(todo))

    def record(chunk, found):
        done[chunk] = found
        if checkpoint:
            _save_checkpoint(checkpoint, done)

    if workers > 1 and len(todo) > 1:
        with get_context("spawn").Pool(workers) as pool:
            for chunk, found in pool.imap_unordered(scan_chunk, todo):
                record(chunk, found)
    else:
        for c in todo:
            record(*scan_chunk(c))
    primes = sorted(x for found in done.values() for x in found)
    return SearchResult(primes, len(done), total, len(done) == total)


def smoke_search():
    """Scan only the 256 tables that embed plain replacements."""
    cand = np.array([embed_eta(e) for e in range(256)], dtype=np.uint64)
    return [int(x) for x in cand[bijective_mask(cand)]]


def confirm(primes):
    """Check that every found table has a two-sided inverse and 16 minterms.

    Returns a list of problems (empty when all is well).
    """
    problems = []
    for x in primes:
        inv = inverse_eta5(x)
        if inv is None:
            problems.append(f"0x{x:08x}: no inverse")
            continue
        if compose_fast(x, inv) != IDENTITY_ETA5 or compose_fast(inv, x) != IDENTITY_ETA5:
            problems.append(f"0x{x:08x}: inverse does not compose to the identity")
        if bin(x).count("1") != 16:
            problems.append(f"0x{x:08x}: {bin(x).count('1')} minterms, expected 16")
    action_map.cache_clear()
    return problems
