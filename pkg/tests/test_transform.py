"""Transform layer: plan assembly, the transform and its inverse, translation,
convolution by two routes, norms, and plan serialization.

The expensive reference plan is built once per module and shared; tolerances
come from a calibration run against independent formulas (profile values of
transformed Lorentz kernels, the triple-kernel identities, norm inequalities
with explicit constants).
"""

import mpmath
import pytest
from mpmath import mp, mpf

from qbft.core import (
    DECAY_BOUNDED,
    DECAY_INTEGRABLE,
    DECAY_RAPID,
    DomainError,
    GridFunction,
    InvalidParams,
    PreconditionError,
    QGrid,
    WindowError,
    constants,
    gridfunction_from_json,
    gridfunction_to_json,
)
from qbft.bessel import j_nu_lattice
from qbft.corpus import REFERENCE_GRID, load_corpus, reference_params
from qbft.transform import (
    LpNorm,
    TransformPlan,
    build_plan,
    convolve,
    convolve_direct,
    fourier,
    norm,
    plan_from_json,
    plan_to_json,
    translate,
    triple_kernel,
)


@pytest.fixture(scope="module")
def plan(params):
    return build_plan(params, REFERENCE_GRID)


@pytest.fixture(scope="module")
def members():
    return {e.name: e.f for e in load_corpus()}


def supdiff(f, g):
    return max(abs(a - b) for a, b in zip(f.values, g.values))


class TestPlanAssembly:
    def test_single_point_entry_is_weighted_kernel_sample(self, params):
        tiny = build_plan(params, QGrid(0, 0))
        with mp.workdps(80):
            want = constants(params).c_q_nu * (1 - params.q) * j_nu_lattice(0, params)
            got = tiny.entry(0, 0)
            assert abs(got - want) / abs(want) < mpf("1e-50")
        with pytest.raises(WindowError):
            tiny.entry(1, 0)
        with pytest.raises(WindowError):
            tiny.entry(0, -1)

    def test_entries_symmetric_up_to_weight_swap(self, params, plan):
        with mp.workdps(plan.dps):
            q = params.q
            nu = params.nu
            s = 2 * nu + 2
            for k, n in [(-3, 5), (0, 7), (12, -1), (30, 2)]:
                lhs = plan.entry(k, n) * q ** (mpf(k) * s)
                rhs = plan.entry(n, k) * q ** (mpf(n) * s)
                assert abs(lhs - rhs) <= mpf("1e-55") * abs(lhs)

    def test_rebuild_is_deterministic(self, params):
        a = build_plan(params, QGrid(-2, 6))
        b = build_plan(params, QGrid(-2, 6))
        assert (a.lat_lo, a.lat_hi, a.dps) == (b.lat_lo, b.lat_hi, b.dps)
        assert all(x == y for s in a.jrow for x, y in [(a.jrow[s], b.jrow[s])])
        assert all(x == y
                   for ra, rb in zip(a.rows, b.rows)
                   for x, y in zip(ra, rb))

    def test_repr_shows_windows(self, plan):
        assert "[-24,64]" in repr(plan)


class TestFourier:
    def test_zero_maps_to_zero(self, params, plan):
        out = fourier(GridFunction.zero(REFERENCE_GRID), plan)
        assert all(v == 0 for v in out.values)

    def test_output_tagged_rapid(self, plan, members):
        assert fourier(members["gauss_1"], plan).decay_class == DECAY_RAPID

    def test_undeclared_decay_rejected(self, params, plan):
        f = GridFunction.zero(REFERENCE_GRID, DECAY_BOUNDED)
        with pytest.raises(PreconditionError):
            fourier(f, plan)

    def test_window_exceeding_lattice_rejected(self, params, plan):
        f = GridFunction.zero(QGrid(-120, -100), DECAY_RAPID)
        with pytest.raises(WindowError):
            fourier(f, plan)

    def test_lorentz_sample_transforms_to_profile(self, params, plan, members):
        # window-sampled input: absolute interior agreement, relative
        # agreement away from the small-x edge where the profile is tiny
        spec = fourier(members["lorentz_1"], plan)
        with mp.workdps(80):
            q = params.q
            for k in range(-16, 57):
                want = 1 / (1 + q ** (2 * k))
                d = abs(spec.value_at(k) - want)
                assert d < mpf("1e-37")
                if k >= -5:
                    assert d / want < mpf("1e-33")

    def test_double_transform_windowed_route(self, params, plan, members):
        # serializing the spectrum keeps only window samples; the round trip
        # then floors near the small-x edge instead of reaching full depth
        f = members["gauss_1"]
        spec = fourier(f, plan)
        reloaded, _ = gridfunction_from_json(gridfunction_to_json(spec, params))
        back = fourier(reloaded, plan)
        with mp.workdps(80):
            scale = max(abs(v) for v in f.values)
            assert supdiff(back, f) / scale < mpf("1e-35")

    def test_double_transform_retained_spectrum(self, params, plan, members):
        # composing fourier directly keeps the spectrum's off-window lattice
        # samples, which restores sharp-edged members at full depth
        for name in ("step_one_flip", "gauss_1"):
            f = members[name]
            back = fourier(fourier(f, plan), plan)
            with mp.workdps(80):
                scale = max(abs(v) for v in f.values)
                assert supdiff(back, f) / scale < mpf("1e-70")

    def test_linearity(self, params, plan, members):
        f = members["gauss_1"]
        g = members["lorentz_q2"]
        with mp.workdps(80):
            a = mpf(3) / 7
            b = mpf(-5) / 11
            combo = GridFunction(
                REFERENCE_GRID,
                [a * x + b * y for x, y in zip(f.values, g.values)],
                DECAY_INTEGRABLE)
            lhs = fourier(combo, plan)
            ff = fourier(f, plan)
            fg = fourier(g, plan)
            worst = max(abs(lhs.value_at(k) - (a * ff.value_at(k) + b * fg.value_at(k)))
                        for k in REFERENCE_GRID.exponents())
            assert worst < mpf("1e-55")

    def test_plan_reuse_bit_identical(self, plan, members):
        f = members["gauss_1"]
        first = fourier(f, plan)
        second = fourier(f, plan)
        assert all(a == b for a, b in zip(first.values, second.values))


class TestTripleKernel:
    def test_symmetric_under_all_permutations(self, params):
        with mp.workdps(80):
            q = params.q
            base = triple_kernel(q ** 2, q ** 0, q ** -1, params)
            for a, b, c in [(2, 0, -1), (2, -1, 0), (0, 2, -1),
                            (0, -1, 2), (-1, 2, 0), (-1, 0, 2)]:
                v = triple_kernel(q ** a, q ** b, q ** c, params)
                assert abs(v - base) <= mpf("1e-60") * abs(base)

    def test_weighted_marginal_is_one(self, params):
        with mp.workdps(80):
            q = params.q
            total = (1 - q) * mpmath.fsum(
                q ** (mpf(m) * 3) * triple_kernel(q, q ** 2, q ** m, params)
                for m in range(-10, 56))
            assert abs(total - 1) < mpf("1e-40")

    def test_product_formula(self, params):
        with mp.workdps(80):
            q = params.q
            total = (1 - q) * mpmath.fsum(
                q ** (mpf(m) * 3) * triple_kernel(q, q ** 2, q ** m, params)
                * j_nu_lattice(m + 3, params)
                for m in range(-10, 56))
            want = j_nu_lattice(4, params) * j_nu_lattice(5, params)
            assert abs(total - want) < mpf("1e-40")

    def test_off_lattice_argument_rejected(self, params):
        with pytest.raises(DomainError):
            triple_kernel("1.5", "1", "1", params)


class TestTranslate:
    def test_eigenfunction_picks_up_product_factor(self, params, plan):
        with mp.workdps(80):
            q = params.q
            t_exp = 5
            f = GridFunction(
                REFERENCE_GRID,
                [j_nu_lattice(t_exp + n, params) for n in REFERENCE_GRID.exponents()],
                DECAY_INTEGRABLE)
            moved = translate(f, q ** 2, plan)
            for y in (-5, 0, 10, 25, 40):
                want = (j_nu_lattice(t_exp + 2, params)
                        * j_nu_lattice(t_exp + y, params))
                assert abs(moved.value_at(y) - want) < mpf("1e-60")

    def test_agrees_with_kernel_route(self, params, plan, members):
        f = members["gauss_1"]
        with mp.workdps(80):
            q = params.q
            moved = translate(f, q ** 2, plan)
            for y in (4, 2, 0, -1, -3):
                total = mpmath.fsum(
                    q ** (mpf(m) * 3) * triple_kernel(q ** 2, q ** y, q ** m, params)
                    * f.value_at(m)
                    for m in range(-12, 47))
                assert abs(moved.value_at(y) - (1 - q) * total) < mpf("1e-35")

    def test_vanishing_shift_returns_input(self, params, plan, members):
        f = members["gauss_1"]
        with mp.workdps(80):
            errs = []
            for x_exp in (20, 30, 40):
                moved = translate(f, params.q ** x_exp, plan)
                errs.append(supdiff(moved, f))
            assert errs[0] > errs[1] > errs[2]
            assert errs[2] < mpf("1e-20")

    def test_off_lattice_point_rejected(self, params, plan, members):
        with pytest.raises(DomainError):
            translate(members["gauss_1"], "0.3", plan)


class TestConvolve:
    def test_commutative_bit_for_bit(self, plan, members):
        a = convolve(members["gauss_1"], members["lorentz_q2"], plan)
        b = convolve(members["lorentz_q2"], members["gauss_1"], plan)
        assert all(x == y for x, y in zip(a.values, b.values))

    def test_transform_factorizes(self, params, plan, members):
        f = members["gauss_1"]
        g = members["lorentz_q2"]
        conv = convolve(f, g, plan)
        lhs = fourier(conv, plan)
        ff = fourier(f, plan)
        fg = fourier(g, plan)
        with mp.workdps(80):
            for k in range(-16, 57):
                d = abs(lhs.value_at(k) - ff.value_at(k) * fg.value_at(k))
                assert d < mpf("1e-60")

    def test_lorentz_pair_gives_product_profile(self, params, plan, members):
        conv = convolve(members["lorentz_1"], members["lorentz_q2"], plan)
        spec = fourier(conv, plan)
        with mp.workdps(80):
            q = params.q
            for k in range(-16, 57):
                want = 1 / ((1 + q ** (2 * k)) * (1 + q ** (2 * k) / q ** 4))
                d = abs(spec.value_at(k) - want)
                assert d < mpf("1e-37")
                if k >= -5:
                    assert d / want < mpf("1e-33")

    def test_spectral_route_matches_definitional_route(self, params, plan, members):
        f = members["lorentz_1"]
        g = members["gauss_half"]
        spectral = convolve(f, g, plan)
        direct = convolve_direct(f, g, plan)
        with mp.workdps(80):
            assert supdiff(spectral, direct) < mpf("1e-40")

    def test_undeclared_decay_rejected(self, params, plan, members):
        bad = GridFunction.zero(REFERENCE_GRID, DECAY_BOUNDED)
        with pytest.raises(PreconditionError):
            convolve(members["gauss_1"], bad, plan)


class TestNorms:
    def test_zero_function_has_zero_norms(self, params):
        z = GridFunction.zero(QGrid(-4, 12))
        for p in (1, 2, "inf"):
            assert norm(z, p, params) == 0

    def test_absolute_homogeneity(self, params, members):
        f = members["gauss_1"]
        with mp.workdps(80):
            c = mpf("-3.5")
            scaled = GridFunction(f.grid, [c * v for v in f.values], f.decay_class)
            for p in (1, 2, "inf"):
                lhs = norm(scaled, p, params)
                rhs = abs(c) * norm(f, p, params)
                assert abs(lhs - rhs) <= mpf("1e-60") * rhs

    def test_exponent_below_one_rejected(self):
        with pytest.raises(InvalidParams):
            LpNorm("0.5")

    def test_plain_measure_differs_from_weighted(self, params, members):
        f = members["gauss_1"]
        with mp.workdps(80):
            assert norm(f, LpNorm(1, weighted=False), params) != norm(f, 1, params)

    def test_norm_preserved_by_transform(self, params, plan, members):
        f = members["gauss_1"]
        with mp.workdps(80):
            n_f = norm(f, 2, params)
            n_t = norm(fourier(f, plan), 2, params)
            assert abs(n_f - n_t) / n_f < mpf("1e-40")

    def test_transform_bounded_by_integral_norm(self, params, plan, members):
        f = members["gauss_1"]
        with mp.workdps(80):
            lhs = norm(fourier(f, plan), "inf", params)
            rhs = constants(params).B_q_nu * norm(f, 1, params)
            assert lhs <= rhs

    def test_convolution_norm_inequalities(self, params, plan, members):
        # r-norm of f*g bounded by B-factors times the p and p' norms, for
        # the exponent triples (1,1,1), (1,inf,inf), (2,2,inf); the first
        # two carry constant B, and the (1,inf,inf) case also holds bare.
        f = members["gauss_1"]
        g = members["gauss_half"]
        conv = convolve(f, g, plan)
        with mp.workdps(80):
            B = constants(params).B_q_nu
            assert norm(conv, 1, params) <= B * norm(f, 1, params) * norm(g, 1, params)
            assert norm(conv, "inf", params) <= norm(f, 1, params) * norm(g, "inf", params)
            assert norm(conv, "inf", params) <= B * norm(f, 2, params) * norm(g, 2, params)


class TestPlanSerialization:
    def test_round_trip_preserves_transforms(self, params, plan, members):
        clone = plan_from_json(plan_to_json(plan))
        f = members["gauss_1"]
        with mp.workdps(80):
            assert supdiff(fourier(f, plan), fourier(f, clone)) < mpf("1e-70")

    def test_round_trip_preserves_geometry(self, plan):
        clone = plan_from_json(plan_to_json(plan))
        assert (clone.lat_lo, clone.lat_hi, clone.dps) == (
            plan.lat_lo, plan.lat_hi, plan.dps)
        assert clone.in_grid == plan.in_grid
        assert clone.out_grid == plan.out_grid

    def test_malformed_payload_rejected(self):
        with pytest.raises(InvalidParams):
            plan_from_json("not json at all")
        with pytest.raises(InvalidParams):
            plan_from_json('{"q": "0.5"}')
