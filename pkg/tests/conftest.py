import numpy as np
import pytest

from equichern.exterior import ExteriorAlgebra


@pytest.fixture
def plane_algebra():
    return ExteriorAlgebra(
        ["du", "dubar", "dv", "dvbar"], ["u", "ubar", "v", "vbar"])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_poly(algebra, rng, max_degree=2, n_terms=3):
    n = len(algebra.coordinates)
    terms = {}
    for _ in range(n_terms):
        m = tuple(int(rng.integers(0, max_degree + 1)) for _ in range(n))
        terms[m] = complex(rng.standard_normal(), rng.standard_normal())
    return algebra.poly(terms)


def random_form(algebra, rng, backend="symbolic", degrees=None, n_terms=4):
    from equichern.exterior import Form

    ngen = len(algebra.generators)
    terms = {}
    for _ in range(n_terms):
        mask = int(rng.integers(0, 1 << ngen))
        if degrees is not None and mask.bit_count() not in degrees:
            continue
        if backend == "numeric":
            terms[mask] = complex(rng.standard_normal(), rng.standard_normal())
        else:
            terms[mask] = random_poly(algebra, rng)
    return Form(algebra, backend, terms)
