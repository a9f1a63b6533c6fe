import pytest

from equichern.exterior import (
    NUMERIC,
    AlgebraMismatchError,
    BackendError,
    EvaluationError,
    ExteriorAlgebra,
    evaluate,
    exterior_derivative,
    interior_product,
    wedge,
)

from conftest import random_form, random_poly


class TestWedge:
    def test_adjacent_generators(self, plane_algebra):
        du = plane_algebra.gen("du")
        dubar = plane_algebra.gen("dubar")
        prod = wedge(du, dubar)
        mask, _ = plane_algebra.mask_of(("du", "dubar"))
        assert prod.terms[mask].constant_value() == 1.0

    def test_transposition_sign(self, plane_algebra):
        du = plane_algebra.gen("du")
        dubar = plane_algebra.gen("dubar")
        assert wedge(dubar, du) == -wedge(du, dubar)

    def test_one_form_squares_to_zero(self, plane_algebra):
        a = plane_algebra.gen("du") + plane_algebra.gen("dv")
        assert wedge(a, a).is_zero

    def test_bilinear_and_associative(self, plane_algebra, rng):
        a, b, c = (random_form(plane_algebra, rng) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        assert (a + b) * c == a * c + b * c

    def test_algebra_mismatch(self, plane_algebra):
        other = ExteriorAlgebra(["dx"], ["x"])
        with pytest.raises(AlgebraMismatchError):
            wedge(plane_algebra.gen("du"), other.gen("dx"))

    def test_odd_anticommutativity(self, plane_algebra, rng):
        for _ in range(20):
            a = random_form(plane_algebra, rng, degrees={1})
            b = random_form(plane_algebra, rng, degrees={1})
            assert a * b == -(b * a)


class TestInteriorProduct:
    def test_liouville_contraction(self):
        alg = ExteriorAlgebra(["dtheta", "dxi"], ["theta", "xi"])
        form = alg.scalar(alg.coord("xi")) * alg.gen("dtheta")
        x_big = 2.5
        out = interior_product({"dtheta": x_big}, form)
        assert out == alg.scalar(x_big * alg.coord("xi"))

    def test_degree_zero_input(self, plane_algebra):
        assert interior_product({"du": 1.0}, plane_algebra.one()).is_zero

    def test_nilpotency_exact_on_single_component(self, plane_algebra, rng):
        # one nonzero component: the cancellation shares one float path, so
        # the result is exactly empty
        vec = {"du": 1.5 - 0.25j}
        for _ in range(20):
            omega = random_form(plane_algebra, rng, degrees={2, 3})
            assert interior_product(vec, interior_product(vec, omega)).is_zero

    def test_nilpotency_general_fields(self, plane_algebra, rng):
        # Grassmann cancellation is structural; mixed components leave only
        # coefficient roundoff (double-precision products in two orders)
        vec = {"du": random_poly(plane_algebra, rng),
               "dv": -0.75,
               "dvbar": random_poly(plane_algebra, rng)}
        for _ in range(20):
            omega = random_form(plane_algebra, rng, degrees={2, 3})
            out = interior_product(vec, interior_product(vec, omega))
            assert out.norm_max() < 1e-12

    def test_graded_derivation_degree_minus_one(self, plane_algebra, rng):
        vec = {"du": 1.5 + 0.5j, "dv": -0.25j}
        a = random_form(plane_algebra, rng, degrees={1})
        b = random_form(plane_algebra, rng, degrees={1})
        lhs = interior_product(vec, a * b)
        rhs = interior_product(vec, a) * b - a * interior_product(vec, b)
        assert lhs == rhs


class TestExteriorDerivative:
    def test_coordinate_differential(self, plane_algebra):
        f = plane_algebra.scalar(plane_algebra.coord("u"))
        assert exterior_derivative(f) == plane_algebra.gen("du")

    def test_leibniz(self, plane_algebra):
        u = plane_algebra.coord("u")
        vbar = plane_algebra.coord("vbar")
        d = exterior_derivative(plane_algebra.scalar(u * vbar))
        expected = (plane_algebra.gen("du").scale(vbar)
                    + plane_algebra.gen("dvbar").scale(u))
        assert d == expected

    def test_d_squared_zero(self, plane_algebra, rng):
        for _ in range(20):
            f = random_form(plane_algebra, rng)
            assert f.d().d().is_zero

    def test_numeric_backend_rejected(self, plane_algebra):
        with pytest.raises(BackendError):
            plane_algebra.one(NUMERIC).d()

    def test_cartan_formula_on_functions(self, plane_algebra, rng):
        # (d iota + iota d) f = derivative of f along the linear field
        vec = {"du": plane_algebra.coord("u") * 2.0,
               "dvbar": plane_algebra.coord("vbar") * (-1.5)}
        for _ in range(10):
            f = plane_algebra.scalar(random_poly(plane_algebra, rng))
            lhs = interior_product(vec, f.d()) + interior_product(vec, f).d()
            p = f.terms.get(0, plane_algebra.const(0))
            directional = (p.diff("u") * (plane_algebra.coord("u") * 2.0)
                           + p.diff("vbar") * (plane_algebra.coord("vbar") * (-1.5)))
            assert lhs == plane_algebra.scalar(directional)


class TestEvaluate:
    def test_direct_substitution(self, plane_algebra):
        u = plane_algebra.coord("u")
        form = plane_algebra.gen("du").scale(u) + plane_algebra.gen("dv")
        out = evaluate(form, {"u": 2 + 1j, "v": 0})
        du_mask, _ = plane_algebra.mask_of(("du",))
        dv_mask, _ = plane_algebra.mask_of(("dv",))
        assert out.terms[du_mask] == 2 + 1j
        assert out.terms[dv_mask] == 1.0

    def test_differential_matches_finite_differences(self, plane_algebra):
        # oracle: central differences of u*ubar in each independent variable
        u, ubar = plane_algebra.coord("u"), plane_algebra.coord("ubar")
        form = plane_algebra.scalar(u * ubar).d()
        pt = {"u": 1 + 1j, "ubar": 1 - 1j}
        out = evaluate(form, pt)
        h = 1e-6

        def f(uu, ub):
            return uu * ub

        fd_u = (f(pt["u"] + h, pt["ubar"]) - f(pt["u"] - h, pt["ubar"])) / (2 * h)
        fd_ubar = (f(pt["u"], pt["ubar"] + h) - f(pt["u"], pt["ubar"] - h)) / (2 * h)
        du_mask, _ = plane_algebra.mask_of(("du",))
        dubar_mask, _ = plane_algebra.mask_of(("dubar",))
        assert abs(out.terms[du_mask] - fd_u) < 1e-8
        assert abs(out.terms[dubar_mask] - fd_ubar) < 1e-8
        assert abs(out.terms[du_mask] - (1 - 1j)) < 1e-8
        assert abs(out.terms[dubar_mask] - (1 + 1j)) < 1e-8

    def test_zero(self, plane_algebra):
        assert evaluate(plane_algebra.zero(), {}).is_zero

    def test_missing_coordinate_named(self, plane_algebra):
        form = plane_algebra.scalar(plane_algebra.coord("vbar"))
        with pytest.raises(EvaluationError, match="vbar"):
            evaluate(form, {"u": 1.0})

    def test_homomorphism_under_wedge(self, plane_algebra, rng):
        point = {c: complex(rng.standard_normal(), rng.standard_normal())
                 for c in plane_algebra.coordinates}
        for _ in range(100):
            a = random_form(plane_algebra, rng)
            b = random_form(plane_algebra, rng)
            lhs = evaluate(a * b, point)
            rhs = evaluate(a, point) * evaluate(b, point)
            assert lhs.isclose(rhs, 1e-12 * max(1.0, lhs.norm_max()))
            lhs_sum = evaluate(a + b, point)
            rhs_sum = evaluate(a, point) + evaluate(b, point)
            assert lhs_sum.isclose(rhs_sum, 1e-12)


class TestPoly:
    def test_leibniz_on_random_products(self, plane_algebra, rng):
        for _ in range(25):
            p = random_poly(plane_algebra, rng)
            q = random_poly(plane_algebra, rng)
            lhs = (p * q).diff("u")
            rhs = p.diff("u") * q + p * q.diff("u")
            assert lhs == rhs

    def test_commutative_associative(self, plane_algebra, rng):
        p, q, r = (random_poly(plane_algebra, rng) for _ in range(3))
        assert p * q == q * p
        assert p + q == q + p
        lhs, rhs = (p * q) * r, p * (q * r)
        assert ((lhs - rhs).max_abs_coeff()
                <= 1e-14 * max(1.0, lhs.max_abs_coeff()))

    def test_zero_coefficients_absent(self, plane_algebra):
        p = plane_algebra.coord("u") - plane_algebra.coord("u")
        assert p.terms == {}

    def test_eval_grid_matches_pointwise(self, plane_algebra, rng):
        p = random_poly(plane_algebra, rng)
        arrays = {c: rng.standard_normal(5) + 1j * rng.standard_normal(5)
                  for c in plane_algebra.coordinates}
        grid = p.eval_grid(arrays)
        for k in range(5):
            pt = {c: arrays[c][k] for c in plane_algebra.coordinates}
            assert abs(grid[k] - p.evaluate(pt)) < 1e-12
