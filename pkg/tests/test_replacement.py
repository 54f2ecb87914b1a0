import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modlat import formula as fm
from modlat import replacement as rp
from modlat.context import Context, Minmatrix, Minterm, minterm_formula, normalize
from modlat.errors import ModlatError, NotPrimeError
from golden_tables import CHI, CHI_INVERSE, PRIME_ROWS, with_e
from gen import random_formula

E01, E11, E21 = Context(0, 1), Context(1, 1), Context(2, 1)
RHO = [rp.ur_from_formula(with_e(row[0])) for row in PRIME_ROWS]


def test_identity_encoding():
    assert rp.ur_from_formula("<>p1").eta == rp.IDENTITY_ETA == 0xCC
    assert rp.embed_eta(0xCC) == rp.IDENTITY_ETA5
    assert rp.restrict_eta5(rp.IDENTITY_ETA5) == 0xCC
    assert rp.restrict_eta5(0x00000001) is None


def test_table_formula_round_trip():
    for eta in range(256):
        assert rp.ur_from_formula(rp.UniformReplacement(eta).formula()).eta == eta


@pytest.mark.parametrize("f, r, want", [
    ("<>1", RHO[6], "!<>1"),
    ("p1", RHO[13], "p1"),
    ("p1 & !p2", rp.UniformReplacement(0x5A), "p1 & !p2"),
])
def test_apply_examples(f, r, want):
    assert normalize(rp.ur_apply(f, r), Context(2, 1)) == normalize(want, Context(2, 1))


def test_apply_to_label_axiom():
    out = normalize(rp.ur_apply("<>1 & <>0", RHO[6]), E01)
    assert out.indices() == [rp.label_index("V")]


def test_box_rule():
    r = RHO[9]
    lhs = normalize(rp.ur_apply("[]p1", r), E11)
    rhs = normalize(fm.Not(r.formula(fm.Not(rp.P1))), E11)
    assert lhs == rhs


def test_compose_examples():
    assert rp.ur_compose(RHO[2], RHO[3]) == RHO[1]
    assert rp.ur_compose(RHO[8], RHO[9]) == RHO[0]
    for eta in range(256):
        r = rp.UniformReplacement(eta)
        assert rp.ur_compose(r, RHO[0]) == r == rp.ur_compose(RHO[0], r)


def test_compose_is_associative_on_samples():
    rng = random.Random(1)
    for _ in range(200):
        a, b, c = (rp.UniformReplacement(rng.randrange(256)) for _ in range(3))
        assert rp.ur_compose(rp.ur_compose(a, b), c) == rp.ur_compose(a, rp.ur_compose(b, c))


def test_prime_examples():
    assert rp.ur_is_prime(RHO[13])
    assert rp.ur_inverse(RHO[13]) == RHO[19]
    assert sum(rp.ur_is_prime(rp.UniformReplacement(e)) for e in range(256)) == 24
    assert not rp.ur_is_prime(rp.UniformReplacement(0))
    with pytest.raises(NotPrimeError):
        rp.ur_inverse(rp.UniformReplacement(0))


def test_prime_table_rows():
    rows = rp.prime_table()
    assert [r.ur for r in rows] == RHO
    assert rows[0].image == ("W", "D", "C", "V") and rows[0].inverse == 0
    assert rows[6].image == ("V", "C", "D", "W") and rows[6].inverse == 6
    assert rows[20].image == ("D", "V", "C", "W") and rows[20].inverse == 23
    inv = [r.inverse for r in rows]
    assert all(inv[inv[i]] == i for i in range(24))


def test_axiom_action_examples():
    assert rp.axiom_permutation(RHO[18]) == ("V", "D", "C", "W")
    assert rp.axiom_permutation(RHO[0]) == rp.LABELS
    images = rp.axiom_permutation(rp.UniformReplacement(0))
    assert None in images or len(set(images)) < 4


def test_complemental_product_examples():
    p = rp.table3_products(RHO[0])
    assert p == tuple(normalize(with_e(t), E11) for t in
                      ("<>e & <>!e", "<>e & !<>!e", "!<>e & <>!e", "!<>e & !<>!e"))
    first = rp.table3_products(RHO[1])[0]
    assert first == normalize(with_e("e & <>e & !<>!e + !e & !<>e & <>!e"), E11)


def test_fast_path_examples():
    for i in range(32):
        assert rp.ur_apply_minterm(Minterm(E11, i), RHO[0]).index == i
    w = Minterm(E01, rp.label_index("W"))
    assert rp.ur_apply_minterm(w, RHO[6]).index == rp.label_index("V")
    with pytest.raises(NotPrimeError):
        rp.ur_apply_minterm(w, rp.UniformReplacement(0))


def test_fast_path_agrees_with_permutation_array():
    rng = random.Random(3)
    for r in RHO[::5]:
        perm = rp.ur_permutation(2, 1, r.eta)
        for i in rng.sample(range(E21.minterm_count), 20):
            assert rp.ur_apply_minterm(Minterm(E21, i), r).index == perm[i]


def test_image_of_a_set_matches_syntax():
    rng = random.Random(8)
    for _ in range(20):
        f = random_formula(rng, 1, 1, 6)
        r = rng.choice(RHO)
        m = normalize(f, E11)
        assert rp.ur_image(m, r) == normalize(rp.ur_apply(f, r), E11)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_replace_image_matches_syntax_for_any_ur(seed):
    rng = random.Random(seed)
    ctx = rng.choice([E11, E21, E01])
    f = random_formula(rng, ctx.v, 1, 6)
    x = rp.ExtendedUR(rng.getrandbits(32))
    assert rp.replace_image(normalize(f, ctx), x) == normalize(rp.xur_apply(f, x), ctx)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_tautologies_stay_tautologies(seed):
    rng = random.Random(seed)
    phi = random_formula(rng, 1, 1, 5)
    t = fm.Or(phi, fm.Not(phi))
    r = rp.UniformReplacement(rng.randrange(256))
    assert normalize(rp.ur_apply(t, r), E11) == Minmatrix.universe(E11)


def test_non_prime_orbit_images_are_orbit_unions():
    rng = random.Random(12)
    for eta in rng.sample(range(256), 12):
        assert rp.orbit_image_is_orbit_union(E11, rp.UniformReplacement(eta))


def test_chi_pair():
    chi = rp.xur_from_formula(with_e(CHI))
    chi_inv = rp.xur_from_formula(with_e(CHI_INVERSE))
    assert chi.eta5 == 0xF0F02DF0 and chi_inv.eta5 == 0xF0F01EF0
    assert rp.xur_compose(chi, chi_inv).eta5 == rp.IDENTITY_ETA5
    assert rp.compose_fast(chi.eta5, chi_inv.eta5) == rp.IDENTITY_ETA5
    assert rp.inverse_eta5(chi.eta5) == chi_inv.eta5
    assert rp.xur_is_prime(chi)
    assert chi.as_ur() is None
    with pytest.raises(ModlatError):
        rp.ur_from_formula(with_e(CHI))


def test_fast_composition_matches_symbolic():
    rng = random.Random(21)
    for _ in range(100):
        x, y = rng.getrandbits(32), rng.getrandbits(32)
        want = rp.xur_compose(rp.ExtendedUR(x), rp.ExtendedUR(y)).eta5
        assert rp.compose_fast(x, y) == want


def test_embedded_primes_are_prime_xurs():
    for r in RHO:
        assert rp.xur_is_prime(r.as_xur())
        assert bin(r.eta5).count("1") == 16


def test_action_map_bijective_iff_inverse():
    rng = random.Random(30)
    for _ in range(300):
        x = rng.getrandbits(32)
        assert rp.maps_minterms_bijectively(x) == (rp.inverse_eta5(x) is not None)


def test_pattern_signs():
    ok = normalize(with_e("e & <>e & !<>!e + !e & !<>e & <>!e"), E11)
    assert rp.pattern_signs(ok) == ((1, 0), (0, 1))
    assert rp.pattern_signs(normalize("p1", E11)) is None


def test_ur_permutation_is_bijective_and_matches_e11_syntax():
    for r in RHO:
        perm = rp.ur_permutation(1, 1, r.eta)
        assert sorted(perm.tolist()) == list(range(32))
        for i in range(32):
            img = normalize(rp.ur_apply(minterm_formula(E11, i), r), E11)
            assert img.indices() == [int(perm[i])]
    assert np.array_equal(rp.ur_permutation(1, 1, rp.IDENTITY_ETA), np.arange(32))
