import numpy as np
import pytest

from modlat import formula as fm
from modlat import witness
from modlat.context import Context, minterm_formula, to_formula, Minmatrix
from modlat.errors import CapacityExceeded, ContextError, ModlatError

E01, E11, E02, E21 = Context(0, 1), Context(1, 1), Context(0, 2), Context(2, 1)


@pytest.fixture(scope="module")
def models():
    return {ctx: witness.build_model(ctx) for ctx in (E01, E11, E02)}


def test_e01_shape(models):
    m = models[E01]
    assert m.world_count == 5
    w0 = m.world(0, 0)
    # the level-0 world makes every <> false: it validates V
    assert not witness.model_check(m, w0, "<>1")
    assert not witness.model_check(m, w0, "<>0")
    assert witness.model_check(m, w0, "!<>1 & !<>0")
    assert witness.model_check(m, w0, "1")


def test_every_minterm_holds_only_at_its_world(models):
    for ctx in (E01, E11):
        m = models[ctx]
        lo = m.offsets[ctx.d]
        for i in range(ctx.minterm_count):
            xs = witness.truth_set(m, minterm_formula(ctx, i))
            assert np.flatnonzero(xs[lo:lo + ctx.minterm_count]).tolist() == [i]


def test_separation_flags(models):
    for m in models.values():
        assert witness.check_separation(m) == (True, True)


def test_e02_world_count(models):
    assert models[E02].world_count == 1 + 4 + 65536


def test_sum_of_minterms_is_union(models):
    m = models[E11]
    parts = [3, 17, 30]
    f = fm.disj(minterm_formula(E11, i) for i in parts)
    union = np.zeros(m.world_count, dtype=bool)
    for i in parts:
        union |= witness.truth_set(m, minterm_formula(E11, i))
    assert np.array_equal(witness.truth_set(m, f), union)
    everything = to_formula(Minmatrix.universe(E11))
    assert witness.truth_set(m, everything).all()


def test_box_and_variables(models):
    m = models[E11]
    assert np.array_equal(witness.truth_set(m, "[]p1"), ~witness.truth_set(m, "<>!p1"))
    assert np.array_equal(witness.truth_set(m, "p1"), m.prefix == 1)


def test_formula_outside_context(models):
    with pytest.raises(ContextError):
        witness.truth_set(models[E11], "<><>p1")
    with pytest.raises(ContextError):
        witness.truth_set(models[E11], "p2")


def test_lower_worlds_validate_special_descendants(models):
    m = models[E02]
    for w in range(m.offsets[2]):
        lvl, idx = int(m.level[w]), int(m.index[w])
        assert int(m.labels[2][w]) == witness.expected_label(m, w, 2)
        assert int(m.labels[lvl][w]) == idx


def test_dump_format(models):
    text = witness.dump(models[E01])
    lines = text.splitlines()
    assert lines[0] == "world L0#0: vars=- excluded=0 sets"
    assert any(line.startswith("world L1#3:") for line in lines)
    assert witness.dump(models[E11], limit=2).count("world ") == 2


def test_e21_builds():
    m = witness.build_model(E21)
    assert witness.check_separation(m) == (True, True)


def test_too_large_context_rejected():
    with pytest.raises(ModlatError):
        witness.build_model(Context(3, 1, capacity_bits=300))
    with pytest.raises(CapacityExceeded):
        Context(1, 2)
