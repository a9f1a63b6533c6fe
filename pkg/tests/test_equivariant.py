import cmath

import numpy as np
import pytest

from equichern.equivariant import (
    PoleGuardError,
    bundle_character,
    cartan_field,
    chern_form,
    closedness_residual,
    equivariant_curvature,
    moment,
    superconnection,
    symbolic_chern,
    transverse_chern,
)
from equichern.exterior import NUMERIC, SYMBOLIC
from equichern.geometry import (
    ActionModel,
    BundleSpec,
    Coordinate,
    SuperMatrix,
    c_plane,
    c_plane_uv,
    zero_op_s1,
)
from equichern.quadrature import orientation_sign
from equichern.supermatrix import UnsupportedShapeError


def closed_form_reference(model, u, v, theta):
    """The worked closed form, with the top term read against the oriented volume."""
    alg = model.algebra
    it = 1j * theta
    fac = (1 - cmath.exp(1j * theta)) ** 2
    scale = cmath.exp(-(abs(u) ** 2 + abs(v) ** 2)) * fac
    du, dub = alg.gen("du", NUMERIC), alg.gen("dubar", NUMERIC)
    dv, dvb = alg.gen("dv", NUMERIC), alg.gen("dvbar", NUMERIC)
    pair_sum = dub * du + dvb * dv
    vol = (dub * du * dvb * dv).scale(orientation_sign(model))
    return (alg.one(NUMERIC) + pair_sum.scale(1 / it)
            - vol.scale(1 / it**2)).scale(scale)


def moment_only_model():
    coords = (Coordinate("x", "complex", 1, "base"),)
    e = BundleSpec((0, 1), (0, 1))
    m = ActionModel("moment-only", coords, e)
    m.set_odd_term(SuperMatrix.zero(m.algebra, e.grading(), SYMBOLIC))
    return m


class TestMoment:
    def test_plane_weights(self):
        m = c_plane_uv()
        theta = 0.9
        mu = moment(m, theta)
        diag = [mu.entries[i][i].terms.get(0, m.algebra.const(0)).constant_value()
                for i in range(4)]
        assert diag == [0.0, 2j * theta, 1j * theta, 1j * theta]

    def test_zero_weights(self):
        m = moment_only_model()
        coords = (Coordinate("x", "complex", 1, "base"),)
        flat = ActionModel("flat", coords, BundleSpec((0, 0), (0, 1)))
        mu = moment(flat, 1.3)
        assert all(f.is_zero for row in mu.entries for f in row)

    def test_trivial_bundle_circle(self):
        m = zero_op_s1()
        mu = moment(m, 2.2)
        assert all(f.is_zero for row in mu.entries for f in row)

    def test_missing_bundle_unsupported(self):
        coords = (Coordinate("x", "complex", 1, "base"),)
        bare = ActionModel("bare", coords, None)
        with pytest.raises(UnsupportedShapeError):
            moment(bare, 1.0)


class TestEquivariantCurvature:
    def test_plane_body_and_one_form_part(self):
        m = c_plane_uv()
        theta = 1.1
        curv = equivariant_curvature(superconnection(m), m, theta)
        shared, offsets, soul = curv.split_body()
        # body: -(|u|^2 + |v|^2) plus the moment offsets
        alg = m.algebra
        expected = -(alg.coord("u") * alg.coord("ubar")
                     + alg.coord("v") * alg.coord("vbar"))
        assert shared == expected
        assert np.allclose(offsets, [0, 2j * theta, 1j * theta, 1j * theta])
        # 1-form part: i times the entrywise differential of the odd term/i
        dl = m.odd_term.scale(-1j).d().scale(1j)
        for i in range(4):
            for j in range(4):
                assert soul.entries[i][j] == dl.entries[i][j]

    def test_zero_model_zero_curvature(self):
        m = moment_only_model()
        flat = ActionModel("flat", (Coordinate("x", "complex", 1, "base"),),
                           BundleSpec((0, 0), (0, 1)))
        flat.set_odd_term(SuperMatrix.zero(flat.algebra,
                                           flat.bundle_e.grading(), SYMBOLIC))
        curv = equivariant_curvature(superconnection(flat), flat, 0.7)
        assert all(f.is_zero for row in curv.matrix.entries for f in row)

    def test_circle_zero_operator(self):
        # F = i(dxi ^ dtheta - X xi) for the tautological-form superconnection
        m = zero_op_s1()
        x_param = 1.6
        curv = equivariant_curvature(superconnection(m), m, x_param)
        f = curv.matrix.entries[0][0]
        assert f.coefficient(("dxi", "dtheta")).constant_value() == 1j
        deg0 = f.terms[0]
        assert deg0 == m.algebra.coord("xi") * (-1j * x_param)


class TestChernForm:
    def test_fixed_point_value(self):
        m = c_plane_uv()
        theta = cmath.pi
        ch = chern_form(m, theta, {"u": 0.0, "v": 0.0})
        ref = closed_form_reference(m, 0.0, 0.0, theta)
        assert abs(ref.terms[0] - 4.0) < 1e-12  # (1 - e^{i pi})^2 = 4
        assert ch.isclose(ref, 1e-10)

    def test_zero_operator_form(self):
        m = zero_op_s1()
        x_param = 0.8
        pt = {"theta": 0.3, "xi": 1.7}
        gf = symbolic_chern(m, x_param)
        ch = gf.evaluate(pt)
        osc = cmath.exp(-1j * x_param * pt["xi"])
        assert abs(ch.terms[0] - osc) < 1e-14
        assert abs(ch.coefficient(("dxi", "dtheta")) - 1j * osc) < 1e-14

    def test_moment_only_character(self):
        m = moment_only_model()
        theta = 1.3
        gf = symbolic_chern(m, theta)
        assert gf.exponent.is_zero
        got = gf.form.terms[0].constant_value()
        assert abs(got - (1 - cmath.exp(1j * theta))) < 1e-14

    def test_pole_guard(self):
        m = c_plane_uv()
        with pytest.raises(PoleGuardError):
            chern_form(m, 2 * cmath.pi + 1e-9, {"u": 0.0, "v": 0.0})
        ch = chern_form(m, 2 * cmath.pi + 1e-9, {"u": 0.0, "v": 0.0},
                        allow_near_pole=True)
        assert ch.norm_max() < 1e-8  # (1 - e^{i theta})^2 collapses at the pole

    def test_symbolic_route_matches_dense_exponential(self, rng):
        m = c_plane_uv()
        for _ in range(10):
            u = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            v = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            theta = rng.uniform(0.2, 6.0)
            dense = chern_form(m, theta, {"u": u, "v": v})
            sym = symbolic_chern(m, theta).evaluate(m.full_point({"u": u, "v": v}))
            assert dense.isclose(sym, 1e-10 * max(1.0, sym.norm_max()))


class TestBundleCharacter:
    def test_clifford_model_bundle(self):
        m = c_plane()
        for theta in np.linspace(0.1, 6.2, 7):
            got = bundle_character(m.bundle_w.weights, m.bundle_w.parities, theta)
            assert got == 1 - cmath.exp(1j * theta)

    def test_trivial_line_bundle(self):
        assert bundle_character((0,), (0,), 1.7) == 1.0

    def test_rank_four_square(self):
        theta = 0.45
        got = bundle_character((0, 1, 1, 2), (0, 1, 1, 0), theta)
        e = cmath.exp(1j * theta)
        assert abs(got - (1 - 2 * e + e * e)) < 1e-15
        assert abs(got - (1 - e) ** 2) < 1e-15


class TestTransverseChern:
    def test_quotient_cancels_one_character_factor(self, rng):
        m = c_plane_uv()
        theta = 2.1
        gf = transverse_chern(m, theta)
        u, v = 0.5 + 0.25j, -0.3j
        got = gf.evaluate(m.full_point({"u": u, "v": v}))
        ref = closed_form_reference(m, u, v, theta).scale(
            1.0 / (1 - cmath.exp(1j * theta)))
        assert got.isclose(ref, 1e-11)

    def test_trivial_clifford_bundle_is_identity(self):
        m = zero_op_s1()
        a = symbolic_chern(m, 0.9)
        b = transverse_chern(m, 0.9)
        assert a.form == b.form and a.exponent == b.exponent

    def test_top_coefficient_at_fixed_point(self):
        from equichern.quadrature import oriented_volume_coefficient

        m = c_plane_uv()
        theta = cmath.pi
        gf = transverse_chern(m, theta)
        top = oriented_volume_coefficient(m, gf.form).constant_value()
        # -(1/(i pi)^2) (1 - e^{i pi}) = 2 / pi^2 against the oriented volume
        assert abs(top - 2.0 / cmath.pi**2) < 1e-13

    def test_pole_guard_near_two_pi(self):
        m = c_plane_uv()
        with pytest.raises(PoleGuardError):
            transverse_chern(m, 1e-9)


class TestClosedness:
    def test_plane_residual_small(self, rng):
        m = c_plane_uv()
        pt = {"u": 0.45 + 0.2j, "v": -0.3 + 0.9j}
        assert closedness_residual(m, 1.0, pt) < 1e-8

    def test_constant_model_exactly_closed(self):
        flat = ActionModel("flat", (Coordinate("x", "complex", 1, "base"),),
                           BundleSpec((0, 0), (0, 1)))
        flat.set_odd_term(SuperMatrix.zero(flat.algebra,
                                           flat.bundle_e.grading(), SYMBOLIC))
        assert closedness_residual(flat, 1.0, {"x": 0.7 + 0.1j}) == 0.0

    def test_corrupted_moment_detected(self):
        m = c_plane_uv()
        pt = {"u": 0.45 + 0.2j, "v": -0.3 + 0.9j}
        res = closedness_residual(m, 1.0, pt, moment_perturbation=(1, 1.0))
        assert res > 1e-3

    def test_circle_model_residual(self):
        m = zero_op_s1()
        assert closedness_residual(m, 0.8, {"theta": 0.3, "xi": 1.7}) < 1e-12


class TestInvariants:
    def test_closed_form_random_sweep(self, rng):
        m = c_plane_uv()
        for _ in range(40):
            u = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            v = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            theta = rng.uniform(0.1, 3.0) * (1 if rng.random() < 0.5 else -1) % (
                2 * np.pi)
            theta = min(max(theta, 0.1), 2 * np.pi - 0.1)
            ch = chern_form(m, theta, {"u": u, "v": v})
            ref = closed_form_reference(m, u, v, theta)
            keys = set(ch.terms) | set(ref.terms)
            for k in keys:
                a, b = ch.terms.get(k, 0), ref.terms.get(k, 0)
                assert abs(a - b) <= 1e-8 * max(1.0, abs(b))

    def test_conjugation_naturality(self, rng):
        m = c_plane_uv()
        theta = 1.3
        curv = equivariant_curvature(superconnection(m), m, theta)
        pt = m.full_point({"u": 0.4 - 0.1j, "v": 0.2 + 0.3j})
        fnum = curv.matrix.evaluate(pt)
        g = np.eye(4, dtype=complex)
        g[0, 1], g[1, 0], g[2, 3], g[3, 2] = 0.2, -0.3j, 0.15 + 0.1j, 0.4
        g += np.eye(4)
        from equichern.supermatrix import super_exp, supertrace

        lhs = supertrace(super_exp(fnum.similarity(g), tol=1e-14))
        rhs = supertrace(super_exp(fnum, tol=1e-14))
        assert (lhs - rhs).norm_max() < 1e-10

    def test_top_coefficient_pole_order(self):
        # (i theta)^2 times the top coefficient converges as theta -> 0
        m = c_plane_uv()
        pt = m.full_point({"u": 0.0, "v": 0.0})
        vals = []
        for k in range(7):
            theta = 0.01 * 2.0**-k
            gf = symbolic_chern(m, theta)
            top = gf.form.coefficient(m.volume).constant_value()
            vals.append((1j * theta) ** 2 * top)
        diffs = [abs(a - b) for a, b in zip(vals, vals[1:])]
        assert all(d2 < d1 for d1, d2 in zip(diffs, diffs[1:]))
        assert abs(vals[-1]) < 1e-3  # limit (1 - e^{i theta})^2 -> 0

    def test_cartan_field_matches_moment_orientation(self):
        # the pair (moment, field) must cancel in the closedness residual;
        # flipping the field sign must break it
        m = c_plane_uv()
        zeta = cartan_field(m, 1.0)
        assert zeta["du"] == m.algebra.coord("u") * 1j
        assert zeta["dubar"] == m.algebra.coord("ubar") * (-1j)
