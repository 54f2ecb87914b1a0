"""Command-line interface: ``modlat <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import formula as fm
from . import lattice, replacement as rp, substitution as sb, witness, xur_search
from .context import (Context, dumps, normalize, parse_ctx, promote, to_formula)
from .errors import ModlatError


# --- argument helpers -----------------------------------------------------------

def _ctx(args, default=None):
    text = args.ctx or default
    if text is None:
        raise ModlatError("this command needs --ctx v,d")
    return parse_ctx(text, args.capacity)


def _ur(text):
    """A UR given as rhoN, a hex table (0x..), or a formula in p1 (or e)."""
    t = text.strip()
    if t.startswith("rho") and t[3:].isdigit():
        i = int(t[3:])
        if not 0 <= i < 24:
            raise ModlatError("prime indices run from rho0 to rho23")
        return rp.rho(i)
    if t.lower().startswith("0x"):
        return rp.UniformReplacement(int(t, 16))
    return rp.ur_from_formula(t.replace("e", "p1") if "p" not in t else t)


def _name(r):
    i = rp.prime_index(r)
    return f"rho{i}" if i is not None else str(r)


def _emit_minmatrix(m, fmt, extra=None):
    if fmt in ("index", "hex"):
        return dumps(m, fmt, extra)
    if fmt == "table":
        return "\n".join(str(i) for i in m.indices()) + "\n"
    return dumps(m, None, extra)


def _signs_text(signs):
    (s1, s2), (s3, s4) = signs

    def lits(a, b):
        return f"{'' if a else '!'}<>e & {'' if b else '!'}<>!e"

    if (s1, s2) == (s3, s4):
        return lits(s1, s2)
    return f"e & {lits(s1, s2)} + !e & {lits(s3, s4)}"


# --- subcommands ----------------------------------------------------------------

def cmd_normalize(args):
    ctx = _ctx(args)
    m = normalize(args.formula, ctx)
    if args.as_formula:
        return fm.to_text(to_formula(m)) + "\n"
    return _emit_minmatrix(m, args.format)


def cmd_promote(args):
    ctx = _ctx(args)
    m = normalize(args.formula, ctx)
    return _emit_minmatrix(promote(m, Context(ctx.v, args.to, args.capacity)), args.format)


def cmd_orbits(args):
    ctx = _ctx(args)
    orbs = sb.orbits(ctx)
    lines = [f"size={len(o)}: " + " ".join(map(str, o.members)) for o in orbs]
    lines.append(f"orbit_count={len(orbs)}")
    return "\n".join(lines) + "\n"


def cmd_subst_apply(args):
    s = sb.Substitution.parse(args.subst, args.v)
    out = sb.subst_apply(fm.parse(args.formula), s)
    text = fm.to_text(out) + "\n"
    if args.ctx:
        text += _emit_minmatrix(normalize(out, _ctx(args)), args.format)
    return text


def cmd_subst_prime(args):
    s = sb.Substitution.parse(args.subst, args.v)
    g = s.level0_map()
    return f"substitution: {s}\nlevel0_map: {' '.join(map(str, g))}\nprime={str(s.is_prime()).lower()}\n"


def cmd_ur_apply(args):
    r = _ur(args.ur)
    out = rp.ur_apply(fm.parse(args.formula), r)
    text = fm.to_text(out) + "\n"
    if args.ctx:
        text += _emit_minmatrix(normalize(out, _ctx(args)), args.format)
    return text


def cmd_ur_compose(args):
    r, s = _ur(args.first), _ur(args.second)
    c = rp.ur_compose(r, s)
    return (f"{_name(r)} {_name(s)} = {_name(c)}\n"
            f"eta=0x{c.eta:02x}\nformula: {fm.to_text(c.formula())}\n")


def cmd_ur_prime(args):
    primes = rp.prime_urs()
    lines = [f"0x{r.eta:02x} {_name(r)} inverse={_name(rp.ur_inverse(r))}" for r in primes]
    lines.append(f"prime_ur_count={len(primes)}")
    return "\n".join(lines) + "\n"


def cmd_table2(args):
    rows = rp.prime_table()
    w1 = max(len(r.text) for r in rows)
    w2 = max(len(r.dual_text) for r in rows)
    head = f"{'UR':<6} {'<>e ->':<{w1}}  {'[]e ->':<{w2}}  {'(W,D,C,V) ->':<13} inverse"
    lines = [head]
    for r in rows:
        lines.append(f"{'rho' + str(r.index):<6} {r.text:<{w1}}  {r.dual_text:<{w2}}  "
                     f"{'(' + ','.join(r.image) + ')':<13} rho{r.inverse}")
    return "\n".join(lines) + "\n"


def cmd_table3(args):
    heads = ("r(e)r(!e)", "r(e)!r(!e)", "!r(e)r(!e)", "!r(e)!r(!e)")
    rows = []
    for r in rp.prime_table():
        cells = []
        for m in rp.table3_products(r.ur):
            signs = rp.pattern_signs(m)
            if signs is None:
                raise ModlatError(f"rho{r.index}: product off the expected pattern")
            cells.append(_signs_text(signs))
        rows.append((f"rho{r.index}", cells))
    widths = [max(len(h), *(len(c[i]) for _, c in rows)) for i, h in enumerate(heads)]
    lines = [f"{'UR':<6} " + " | ".join(h.ljust(w) for h, w in zip(heads, widths))]
    for name, cells in rows:
        lines.append(f"{name:<6} " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)))
    return "\n".join(line.rstrip() for line in lines) + "\n"


def cmd_axiom_action(args):
    r = _ur(args.ur)
    lines = []
    for lab, m in rp.axiom_action(r).items():
        names = [x for x in rp.LABELS if rp.label_index(x) in m]
        lines.append(f"{lab} -> {'+'.join(names) or '0'}")
    return "\n".join(lines) + "\n"


def cmd_figure1(args):
    lat = lattice.figure1_lattice()
    if args.format == "table":
        return lat.to_table()
    return lat.to_dot()


def cmd_k_demo(args):
    rep = lattice.k_collapse_demo()
    fx = lattice.k_fixtures()
    out = []
    for name in ("S4", "B", "S5", "T"):
        out.append(f"{name} ({len(fx[name])} columns)")
        out.append(fx[name].to_table().rstrip())
    for key, val in rep.items():
        out.append(f"{key}={val}")
    return "\n".join(out) + "\n"


def cmd_k_cmm_e21(args):
    m = lattice.normal_k_cmm_e21()
    text = _emit_minmatrix(m, args.format or "index")
    return text + f"additive={str(lattice.additivity_holds(m)).lower()}\n"


def cmd_candidate_check(args):
    ctx = _ctx(args)
    c = lattice.candidate_check(normalize(args.formula, ctx))
    text = (f"minterms={len(c.minmatrix)}\n"
            f"orbit_complete={str(c.orbit_complete).lower()}\n"
            f"immune={str(c.immune).lower()}\n")
    if c.witness is not None:
        text += f"collapsing_substitution: {c.witness}\n"
    return text


def cmd_witness_model(args):
    ctx = _ctx(args)
    model = witness.build_model(ctx)
    own, others = witness.check_separation(model)
    text = witness.dump(model, args.limit)
    text += (f"worlds={model.world_count}\nown_valid={str(own).lower()}\n"
             f"others_invalid={str(others).lower()}\n")
    return text


def cmd_xur_search(args):
    if args.smoke:
        primes = xur_search.smoke_search()
    else:
        res = xur_search.full_search(args.workers, args.checkpoint, args.max_chunks)
        primes = res.primes
        if not res.complete:
            text = "" if args.count_only else "".join(f"0x{x:08x}\n" for x in primes)
            return (text + f"chunks_done={res.chunks_done}/{res.total_chunks}\n"
                    f"partial_prime_xur_count={res.count}\n")
    problems = xur_search.confirm(primes) if args.confirm else []
    if problems:
        raise ModlatError("confirmation failed: " + "; ".join(problems[:5]))
    text = "" if args.count_only else "".join(f"0x{x:08x}\n" for x in primes)
    return text + f"prime_xur_count={len(primes)}\n"


def cmd_coatoms(args):
    lines = []
    for row in lattice.coatoms_demo():
        lines.append(
            f"{row['axiom']}: raw={row['raw_size']} closed={row['closed_size']} "
            f"orbit_complete={str(row['orbit_complete']).lower()} "
            f"immune={str(row['immune']).lower()} labels={','.join(row['labels'])}")
    return "\n".join(lines) + "\n"


# --- parser -----------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ctx", help="context as v,d")
    common.add_argument("--format", choices=("index", "hex", "dot", "table"))
    common.add_argument("--capacity", type=int, metavar="BITS",
                        help="largest allowed log2 minterm count (default 24)")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--checkpoint", metavar="PATH")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="modlat", description="Normal forms and replacements in the minimal modal logic.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("normalize", cmd_normalize, "normal form of a formula")
    sp.add_argument("formula")
    sp.add_argument("--as-formula", action="store_true", help="print the canonical formula")
    sp = add("promote", cmd_promote, "rewrite a formula's minmatrix at a higher level")
    sp.add_argument("formula")
    sp.add_argument("--to", type=int, required=True, metavar="D")
    add("orbits", cmd_orbits, "prime orbits of a context")
    sp = add("subst-apply", cmd_subst_apply, "apply a level-0 substitution")
    sp.add_argument("subst", help="e.g. 'p1:=!p1; p2:=p1&p2'")
    sp.add_argument("formula")
    sp.add_argument("--vars", dest="v", type=int, help="number of variables")
    sp = add("subst-prime", cmd_subst_prime, "is a substitution invertible")
    sp.add_argument("subst")
    sp.add_argument("--vars", dest="v", type=int, help="number of variables")
    sp = add("ur-apply", cmd_ur_apply, "apply a uniform replacement")
    sp.add_argument("ur", help="rhoN, 0x.., or a formula in p1")
    sp.add_argument("formula")
    sp = add("ur-compose", cmd_ur_compose, "compose two uniform replacements")
    sp.add_argument("first")
    sp.add_argument("second")
    add("ur-prime", cmd_ur_prime, "list the invertible replacements among all 256")
    add("table2", cmd_table2, "the prime replacements with images and inverses")
    add("table3", cmd_table3, "products with complemental arguments")
    sp = add("axiom-action", cmd_axiom_action, "images of the W, D, C, V axioms")
    sp.add_argument("ur")
    add("figure1", cmd_figure1, "the 16-element E[0,1] lattice (DOT or table)")
    add("k-demo", cmd_k_demo, "set algebra on the K[1,2] fixtures")
    add("k-cmm-e21", cmd_k_cmm_e21, "the additive 64-minterm E[2,1] minmatrix")
    sp = add("candidate-check", cmd_candidate_check, "orbit completeness and immunity")
    sp.add_argument("formula")
    sp = add("witness-model", cmd_witness_model, "build and dump the witness model")
    sp.add_argument("--limit", type=int, help="dump at most this many worlds")
    sp = add("xur-search", cmd_xur_search, "count the invertible extended replacements")
    sp.add_argument("--smoke", action="store_true", help="scan only embedded plain replacements")
    sp.add_argument("--max-chunks", type=int, help="stop after this many new chunks")
    sp.add_argument("--count-only", action="store_true", help="print only the summary line")
    sp.add_argument("--no-confirm", dest="confirm", action="store_false")
    add("coatoms", cmd_coatoms, "substitution-closed parts of the four co-atom axioms")
    return p


def run(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)          # exits with 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        out.write(args.fn(args))
    except ModlatError as exc:
        sys.stderr.write(f"modlat: error: {exc}\n")
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
