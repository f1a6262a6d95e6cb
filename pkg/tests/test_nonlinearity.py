import numpy as np
import pytest
from scipy import integrate

from gradparab.errors import NotMonotone, OutOfRange, PropertyViolation
from gradparab.nonlinearity import (
    NonlinearPair,
    PiecewiseLinear,
    SmoothFunc,
    check_pair_inequalities,
    doubly_degenerate_pair,
    get_pair,
    pair_from_graph,
    piecewise_from_triples,
    p_laplace_identity_pair,
    richards_pair,
    stefan_pair,
)

ALL_PAIRS = [stefan_pair, richards_pair, p_laplace_identity_pair, doubly_degenerate_pair]


def quad_nu(pair, s):
    """Independent oracle: integrate beta' * zeta' with breakpoint splitting."""
    pts = sorted(
        set(np.atleast_1d(pair.beta.knots).tolist())
        | set(np.atleast_1d(pair.zeta.knots).tolist())
    )
    pts = [q for q in pts if min(0.0, s) < q < max(0.0, s)]
    val, _ = integrate.quad(
        lambda q: float(pair.beta.deriv(np.asarray(q))) * float(pair.zeta.deriv(np.asarray(q))),
        0.0,
        s,
        points=pts or None,
        limit=200,
    )
    return val


def quad_b_of_beta(pair, s):
    pts = sorted(
        set(np.atleast_1d(pair.beta.knots).tolist())
        | set(np.atleast_1d(pair.zeta.knots).tolist())
    )
    pts = [q for q in pts if min(0.0, s) < q < max(0.0, s)]
    val, _ = integrate.quad(
        lambda q: float(pair.zeta(np.asarray(q))) * float(pair.beta.deriv(np.asarray(q))),
        0.0,
        s,
        points=pts or None,
        limit=200,
    )
    return val


class TestNu:
    def test_stefan_hand_value(self):
        pair = stefan_pair()
        assert pair.nu(2.0) == pytest.approx(1.0, abs=1e-14)
        assert abs(pair.nu(2.0) - quad_nu(pair, 2.0)) < 1e-10

    def test_zero(self):
        for make in ALL_PAIRS:
            assert make().nu(0.0) == 0.0

    def test_doubly_degenerate_hand_values(self):
        pair = doubly_degenerate_pair()
        assert pair.nu(3.0) == pytest.approx(1.0, abs=1e-14)
        assert pair.nu(1.5) == pytest.approx(0.0, abs=1e-14)
        for s in (-2.0, 0.7, 1.5, 2.4, 3.0):
            assert pair.nu(s) == pytest.approx(quad_nu(pair, s), abs=1e-10)

    def test_sign_and_bounds(self):
        rng = np.random.default_rng(3)
        s = rng.uniform(-10, 10, 2000)
        for make in ALL_PAIRS:
            pair = make()
            nu = np.asarray(pair.nu(s))
            assert np.all(nu * np.sign(s) >= -1e-14)
            bound = np.minimum(
                pair.L_zeta * np.abs(pair.beta(s)), pair.L_beta * np.abs(pair.zeta(s))
            )
            assert np.all(np.abs(nu) <= bound + 1e-12)


class TestBetaR:
    def test_identity(self):
        assert stefan_pair().beta_r(0.7) == pytest.approx(0.7, abs=1e-14)

    def test_zero(self):
        for make in ALL_PAIRS:
            assert make().beta_r(0.0) == 0.0

    def test_plateau_smallest_root(self):
        # the time nonlinearity of the doubly degenerate pair plateaus at
        # value 1 on [1, 2]; the root closest to 0 is the left endpoint
        pair = doubly_degenerate_pair()
        assert pair.beta_r(1.0) == pytest.approx(1.0, abs=1e-12)
        # bisection oracle: smallest t >= 0 with beta(t) = 1
        lo, hi = 0.0, 4.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if float(pair.beta(mid)) >= 1.0:
                hi = mid
            else:
                lo = mid
        assert pair.beta_r(1.0) == pytest.approx(hi, abs=1e-12)

    def test_negative_side_sup(self):
        beta = PiecewiseLinear([-2.0, -1.0], [1.0, 0.0, 1.0])
        pair = NonlinearPair(beta, PiecewiseLinear([], [1.0]))
        # plateau at value -1 on [-2, -1]; sup of roots is the right endpoint
        assert pair.beta_r(-1.0) == pytest.approx(-1.0, abs=1e-12)

    def test_round_trip_off_plateaus(self):
        rng = np.random.default_rng(5)
        for make in ALL_PAIRS:
            pair = make()
            s = rng.uniform(-8, 8, 500)
            bs = np.asarray(pair.beta(s))
            back = np.asarray(pair.beta_r(bs))
            resid = np.abs(np.asarray(pair.beta(back)) - bs)
            assert np.max(resid) < 1e-12
            # off plateau preimages the round trip is the identity
            slope = np.asarray(pair.beta.deriv(s))
            free = slope > 0.5
            assert np.max(np.abs(back[free] - s[free])) < 1e-12

    def test_out_of_range(self):
        beta = PiecewiseLinear([0.0], [1.0, 0.0])  # range (-inf, 0]
        pair = NonlinearPair(beta, PiecewiseLinear([], [1.0]))
        with pytest.raises(OutOfRange):
            pair.beta_r(0.5)
        with pytest.raises(OutOfRange):
            pair.big_b(1.0)


class TestBigB:
    def test_stefan_hand_values(self):
        pair = stefan_pair()
        assert pair.big_b(2.0) == pytest.approx(0.5, abs=1e-14)
        assert pair.big_b(-1.0) == pytest.approx(0.5, abs=1e-14)
        assert pair.big_b(0.5) == pytest.approx(0.0, abs=1e-14)
        assert pair.big_b(0.0) == 0.0

    def test_matches_quadrature_oracle(self):
        for make in ALL_PAIRS:
            pair = make()
            for s in (-3.0, -0.4, 0.9, 1.7, 2.8):
                assert pair.big_b_of_beta(s) == pytest.approx(quad_b_of_beta(pair, s), abs=1e-10)
                assert pair.big_b(float(pair.beta(s))) == pytest.approx(
                    pair.big_b_of_beta(s), abs=1e-12
                )

    def test_growth_sandwich_stefan(self):
        pair = stefan_pair()
        K0, K1, K2 = pair.growth_constants()
        assert K2 == pytest.approx(0.5)
        B3 = pair.big_b_of_beta(3.0)
        assert B3 == pytest.approx(2.0, abs=1e-14)
        assert K0 * float(pair.beta(3.0)) ** 2 - K1 <= B3 <= K2 * 9.0

    def test_convexity_sampled(self):
        rng = np.random.default_rng(11)
        for make in ALL_PAIRS:
            pair = make()
            z = np.asarray(pair.beta(rng.uniform(-8, 8, 400)))
            lam = rng.uniform(0, 1, 400)
            z1, z2 = z[:200], z[200:]
            lam = lam[:200]
            mid = lam * z1 + (1 - lam) * z2
            lhs = np.asarray(pair.big_b(mid))
            rhs = lam * np.asarray(pair.big_b(z1)) + (1 - lam) * np.asarray(pair.big_b(z2))
            assert np.all(lhs <= rhs + 1e-10)


class TestPairFromGraph:
    def test_identity_graph(self):
        pair = pair_from_graph([(0.0, 0.0)], left_dir=(1, 1), right_dir=(1, 1))
        s = np.linspace(-3, 3, 13)
        assert np.allclose(pair.beta(s), s)
        assert np.allclose(pair.zeta(s), s)

    def test_heaviside_graph(self):
        pair = pair_from_graph([(0.0, 0.0), (0.0, 1.0)], left_dir=(2, 0), right_dir=(2, 0))
        s = np.array([-1.0, -0.25, 0.0, 0.25, 0.5, 0.75, 2.0])
        expect_zeta = np.where(s <= 0, 2 * s, np.where(s <= 0.5, 0.0, 2 * s - 1))
        assert np.allclose(pair.zeta(s), expect_zeta, atol=1e-14)
        assert np.allclose(pair.beta(s), 2 * s - expect_zeta, atol=1e-14)
        # graph membership: (zeta(s), beta(s)) stays on the heaviside graph
        for si in np.linspace(-2, 2, 41):
            x, y = float(pair.zeta(si)), float(pair.beta(si))
            if x < -1e-12:
                assert abs(y) < 1e-12
            elif x > 1e-12:
                assert abs(y - 1) < 1e-12
            else:
                assert -1e-12 <= y <= 1 + 1e-12

    def test_sum_is_twice_identity(self):
        pair = pair_from_graph([(0.0, 0.0), (0.0, 1.0)], left_dir=(2, 0), right_dir=(2, 0))
        assert float(pair.beta(0.3) + pair.zeta(0.3)) == pytest.approx(0.6, abs=0)
        s = np.linspace(-5, 5, 101)
        assert np.max(np.abs(pair.beta(s) + pair.zeta(s) - 2 * s)) == 0.0
        assert pair.L_beta <= 2.0 and pair.L_zeta <= 2.0

    def test_not_monotone_raises(self):
        with pytest.raises(NotMonotone):
            pair_from_graph([(0.0, 0.0), (1.0, -0.5)])

    def test_must_contain_origin(self):
        with pytest.raises(ValueError):
            pair_from_graph([(1.0, 1.0), (2.0, 2.0)])


class TestInequalitySuite:
    @pytest.mark.parametrize("make", ALL_PAIRS, ids=lambda m: m.__name__)
    def test_pairs_pass(self, make):
        rep = check_pair_inequalities(make(), 10_000, seed=7)
        assert min(rep.margins.values()) >= 0.0
        K0, K1, K2 = rep.growth_constants
        assert K2 > 0 and K0 > 0 and K1 >= 0

    def test_equal_arguments_degenerate(self):
        pair = stefan_pair()
        a = 1.3
        assert (pair.nu(a) - pair.nu(a)) == 0.0
        assert pair.big_b_of_beta(a) - pair.big_b_of_beta(a) == 0.0

    def test_uniform_convexity_hand_case(self):
        pair = stefan_pair()
        lhs = (pair.nu(2.0) - pair.nu(0.0)) ** 2
        mid = 0.5 * (float(pair.beta(2.0)) + float(pair.beta(0.0)))
        rhs = 4.0 * pair.L_beta * pair.L_zeta * (
            pair.big_b_of_beta(2.0) + pair.big_b_of_beta(0.0) - 2.0 * pair.big_b(mid)
        )
        assert lhs == pytest.approx(1.0, abs=1e-14)
        assert rhs == pytest.approx(2.0, abs=1e-14)
        assert lhs <= rhs

    def test_violation_detected(self):
        # a pair with mis-declared Lipschitz constant must be caught
        beta = PiecewiseLinear([], [1.0])
        zeta = PiecewiseLinear([], [1.0])
        pair = NonlinearPair(beta, zeta, L_beta=0.5, M0=1.0, M1=0.0)
        with pytest.raises(PropertyViolation):
            check_pair_inequalities(pair, 1000, seed=0)


class TestQuadratureFallback:
    def test_smooth_pair_matches_analytic(self):
        zeta = SmoothFunc(
            lambda s: s + 0.3 * np.tanh(s), lambda s: 1.0 + 0.3 / np.cosh(s) ** 2
        )
        pair = NonlinearPair(PiecewiseLinear([], [1.0]), zeta, M0=1.0, M1=0.0)
        for s in (-2.0, 0.5, 1.7):
            assert pair.nu(s) == pytest.approx(s + 0.3 * np.tanh(s), abs=1e-10)
            analytic = 0.5 * s**2 + 0.3 * np.log(np.cosh(s))
            assert pair.big_b_of_beta(s) == pytest.approx(analytic, abs=1e-10)
            assert pair.big_b(s) == pytest.approx(analytic, abs=1e-9)


class TestCustomTable:
    def test_triples_round_trip(self):
        f = piecewise_from_triples([(0.0, 0.0, 0.0), (1.0, 1.0, 0.0)], leftmost_slope=1.0)
        s = np.array([-1.0, 0.5, 2.0])
        assert np.allclose(f(s), [-1.0, 0.0, 1.0])

    def test_discontinuous_triples_rejected(self):
        with pytest.raises(ValueError):
            piecewise_from_triples([(0.0, 1.0, 0.0), (1.0, 1.0, 5.0)], leftmost_slope=1.0)

    def test_registry_custom(self):
        pair = get_pair(
            "custom",
            beta_triples=[(0.0, 1.0, 0.0)],
            beta_left_slope=1.0,
            zeta_triples=[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0)],
            zeta_left_slope=1.0,
        )
        assert float(pair.zeta(2.0)) == pytest.approx(1.0)

    def test_registry_names(self):
        for name in ("stefan", "richards", "p_laplace_identity", "doubly_degenerate"):
            assert get_pair(name).name == name
