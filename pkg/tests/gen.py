"""Random formula generation shared by the property tests."""
from modlat import formula as fm

_BINARY = (fm.And, fm.Or, fm.Imp, fm.Iff)


def random_formula(rng, v, d, size=6):
    """A random formula over p1..pv of modal degree at most d."""
    if size <= 1:
        roll = rng.random()
        if roll < 0.1:
            return fm.Const(rng.randrange(2))
        if d > 0 and roll < 0.35:
            inner = random_formula(rng, v, d - 1, rng.randrange(1, 4))
            return (fm.Dia if rng.random() < 0.7 else fm.Box)(inner)
        if v == 0:
            return fm.Const(rng.randrange(2))
        return fm.Var(rng.randrange(1, v + 1))
    roll = rng.random()
    if roll < 0.15:
        return fm.Not(random_formula(rng, v, d, size - 1))
    if d > 0 and roll < 0.35:
        return (fm.Dia if rng.random() < 0.7 else fm.Box)(random_formula(rng, v, d - 1, size - 1))
    left = rng.randrange(1, size)
    op = rng.choice(_BINARY)
    return op(random_formula(rng, v, d, left), random_formula(rng, v, d, size - left))
