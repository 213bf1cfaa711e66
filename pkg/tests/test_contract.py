import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from catbond_bounds.contract import (
    SWISS_RE_WEIGHTS,
    BondTerms,
    CouponLeg,
    IndexWeights,
    asian_spread,
    build_index,
    call_counterpart_payoff,
    call_to_put_bound,
    coupon_leg_value,
    loss_ratio,
    parity_adjustment_G,
    principal_payoff,
    principal_payoff_asian,
    read_rates_csv,
    read_weights_config,
)
from catbond_bounds.errors import ConfigError, DataError
from catbond_bounds.models import BlackScholesModel

Q0 = 0.008453
TERMS = BondTerms()


class TestTerms:
    def test_defaults(self):
        assert TERMS.maturity == 3.0
        assert TERMS.n == 3
        assert TERMS.scale == pytest.approx(5.0, rel=1e-14)
        assert TERMS.D == pytest.approx(1.0 / Q0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"q0": 0.0},
            {"k1": 1.0},
            {"k1": 1.6, "k2": 1.5},
            {"dates": ()},
            {"dates": (1.0, 1.0, 3.0)},
            {"dates": (-1.0, 2.0)},
            {"principal": 0.0},
            {"rate": math.nan},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            BondTerms(**kwargs)

    def test_other_tranche(self):
        assert BondTerms(k1=1.2, k2=1.6).scale == pytest.approx(2.5)


class TestIndex:
    two_country = IndexWeights((("A", 0.7), ("B", 0.3)), (("all", 1.0),), (0.65, 0.35))
    rates = {("A", "all", "m"): 10.0, ("A", "all", "f"): 20.0, ("B", "all", "m"): 30.0, ("B", "all", "f"): 40.0}

    def test_constant_field(self):
        w = IndexWeights((("X", 1.0),), (("all", 1.0),), (0.4, 0.6))
        assert build_index({("X", "all", "m"): 100.0, ("X", "all", "f"): 100.0}, w) == pytest.approx(100.0)

    def test_hand_expansion(self):
        expected = 0.7 * (0.65 * 10 + 0.35 * 20) + 0.3 * (0.65 * 30 + 0.35 * 40)
        assert expected == pytest.approx(19.5, rel=1e-15)
        assert build_index(self.rates, self.two_country) == pytest.approx(expected, rel=1e-15)

    def test_scale(self):
        assert build_index(self.rates, self.two_country, scale=1e-5) == pytest.approx(19.5e-5, rel=1e-14)

    def test_gender_spellings(self):
        rates = {(c, a, {"m": "male", "f": "Female"}[g]): v for (c, a, g), v in self.rates.items()}
        assert build_index(rates, self.two_country) == pytest.approx(19.5, rel=1e-15)

    @given(st.lists(st.floats(0, 1e3), min_size=4, max_size=4), st.floats(0.0, 10.0))
    def test_linear(self, vals, k):
        rates = dict(zip(self.rates, vals))
        scaled = {key: k * v for key, v in rates.items()}
        base = build_index(rates, self.two_country)
        assert build_index(scaled, self.two_country) == pytest.approx(k * base, rel=1e-12, abs=1e-12)

    def test_missing_cell_named(self):
        rates = dict(self.rates)
        del rates[("B", "all", "f")]
        with pytest.raises(DataError, match=r"B, all, female"):
            build_index(rates, self.two_country)

    def test_unknown_gender(self):
        with pytest.raises(DataError):
            build_index({("A", "all", "x"): 1.0}, self.two_country)

    @pytest.mark.parametrize(
        "args",
        [
            ((("A", 0.6), ("B", 0.3)), (("all", 1.0),), (0.5, 0.5)),
            ((("A", 1.0),), (("all", 1.0),), (0.6, 0.6)),
            ((("A", 1.2), ("B", -0.2)), (("all", 1.0),), (0.5, 0.5)),
            ((("A", 0.5), ("A", 0.5)), (("all", 1.0),), (0.5, 0.5)),
            ((), (("all", 1.0),), (0.5, 0.5)),
        ],
    )
    def test_bad_weights(self, args):
        with pytest.raises(ConfigError):
            IndexWeights(*args)

    def test_swiss_re_weights_valid(self):
        assert sum(w for _, w in SWISS_RE_WEIGHTS.country_weights) == pytest.approx(1.0)


class TestFiles:
    def test_rates_csv(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("country,age_band,gender,rate\nUS,all,m,12.5\nUS,all,f,7.5\n\n")
        assert read_rates_csv(p) == {("US", "all", "m"): 12.5, ("US", "all", "f"): 7.5}

    @pytest.mark.parametrize(
        "body",
        [
            "country,age,gender,rate\nUS,all,m,1\n",
            "",
            "country,age_band,gender,rate\nUS,all,m\n",
            "country,age_band,gender,rate\nUS,all,m,abc\n",
            "country,age_band,gender,rate\nUS,all,m,-1\n",
            "country,age_band,gender,rate\nUS,all,m,1\nUS,all,m,2\n",
        ],
    )
    def test_rates_csv_errors(self, tmp_path, body):
        p = tmp_path / "r.csv"
        p.write_text(body)
        with pytest.raises(DataError):
            read_rates_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            read_rates_csv(tmp_path / "nope.csv")

    def test_weights_config(self, tmp_path):
        p = tmp_path / "w.cfg"
        p.write_text("# weights\ncountry.US = 1.0\nage.all = 1\ngender.male = 0.5\ngender.female = 0.5\n")
        w = read_weights_config(p)
        assert w.country_weights == (("US", 1.0),)
        assert w.gender_weights == (0.5, 0.5)

    @pytest.mark.parametrize(
        "body",
        [
            "country.US = 1\nage.all = 1\ngender.male = 1\n",
            "country.US = x\nage.all = 1\ngender.male = .5\ngender.female = .5\n",
            "US = 1\nage.all = 1\ngender.male = .5\ngender.female = .5\n",
            "colour.US = 1\nage.all = 1\ngender.male = .5\ngender.female = .5\n",
            "country.US = 0.9\nage.all = 1\ngender.male = .5\ngender.female = .5\n",
            "[broken\n",
        ],
    )
    def test_weights_config_errors(self, tmp_path, body):
        p = tmp_path / "w.cfg"
        p.write_text(body)
        with pytest.raises(ConfigError):
            read_weights_config(p)


class TestPayoff:
    @pytest.mark.parametrize("mult,expected", [(1.2, 0.0), (1.4, 0.5), (1.6, 1.0), (1.3, 0.0), (1.5, 1.0)])
    def test_loss_ratio(self, mult, expected):
        assert loss_ratio(mult * Q0, TERMS) == pytest.approx(expected, abs=1e-12)

    @given(st.floats(0, 0.05), st.floats(0, 0.05))
    def test_loss_ratio_monotone_lipschitz(self, a, b):
        la, lb = loss_ratio(a, TERMS), loss_ratio(b, TERMS)
        assert 0.0 <= la <= 1.0
        if a <= b:
            assert la <= lb
        assert abs(la - lb) <= abs(a - b) / (TERMS.width * Q0) * (1 + 1e-12) + 1e-15

    def test_principal_examples(self):
        assert principal_payoff([Q0, 1.1 * Q0, 1.3 * Q0], TERMS) == 1.0
        assert principal_payoff([1.4 * Q0, 0.0, 0.0], TERMS) == pytest.approx(0.5)
        assert principal_payoff([1.45 * Q0, 1.45 * Q0, 1.0 * Q0], TERMS) == pytest.approx(0.0, abs=1e-12)
        assert principal_payoff([1.6 * Q0] * 3, TERMS) == 0.0

    def test_path_length(self):
        with pytest.raises(DataError):
            principal_payoff([Q0, Q0], TERMS)
        with pytest.raises(DataError):
            principal_payoff_asian(np.ones((4, 2)), TERMS)

    def test_forms_agree_on_many_paths(self):
        rng = np.random.default_rng(7)
        paths = Q0 * rng.uniform(0.9, 1.7, size=(1_000_000, 3))
        a = principal_payoff(paths, TERMS)
        b = principal_payoff_asian(paths, TERMS)
        np.testing.assert_allclose(b, a, rtol=1e-13, atol=1e-15)

    @given(arrays(float, 3, elements=st.floats(0.0, 0.03)))
    def test_forms_agree_property(self, path):
        assert principal_payoff_asian(path, TERMS) == pytest.approx(principal_payoff(path, TERMS), rel=1e-13, abs=1e-15)

    @given(arrays(float, 3, elements=st.floats(0.0, 0.03)), st.integers(0, 2), st.floats(0.0, 0.01))
    def test_principal_nonincreasing_and_bounded(self, path, i, bump):
        base = principal_payoff(path, TERMS)
        moved = path.copy()
        moved[i] += bump
        assert 0.0 <= principal_payoff(moved, TERMS) <= base <= TERMS.principal

    @given(arrays(float, 3, elements=st.floats(0.0, 0.03)))
    def test_call_counterpart_parity_pathwise(self, path):
        s = float(np.sum(asian_spread(path, TERMS)))
        lhs = call_counterpart_payoff(path, TERMS) - principal_payoff_asian(path, TERMS)
        assert lhs == pytest.approx(TERMS.D * (s - Q0), rel=1e-12, abs=1e-12)

    def test_asian_spread_examples(self):
        assert asian_spread(Q0, TERMS) == 0.0
        assert asian_spread(1.5 * Q0, TERMS) == pytest.approx(Q0, rel=1e-12)
        assert asian_spread(1.34 * Q0, TERMS) == pytest.approx(0.2 * Q0, rel=1e-12)

    @given(st.floats(0, 0.03), st.floats(0, 0.03), st.floats(0, 1))
    def test_asian_spread_convex(self, a, b, lam):
        mid = asian_spread(lam * a + (1 - lam) * b, TERMS)
        assert mid <= lam * asian_spread(a, TERMS) + (1 - lam) * asian_spread(b, TERMS) + 1e-15


class TestCoupon:
    def test_only_principal(self):
        assert coupon_leg_value(CouponLeg(spread=0.0), TERMS, 1.0) == pytest.approx(1.0)

    def test_hand_sum(self):
        assert coupon_leg_value(CouponLeg(), TERMS, 1.0) == pytest.approx(1.0405, rel=1e-14)

    def test_homogeneous_in_principal(self):
        terms2 = BondTerms(principal=2.0, rate=0.03)
        leg = CouponLeg(libor=(0.02,) * 12)
        assert coupon_leg_value(leg, terms2, 0.8) == pytest.approx(
            2.0 * coupon_leg_value(leg, BondTerms(rate=0.03), 0.8), rel=1e-14
        )

    def test_quarterly_discounting(self):
        leg = CouponLeg(spread=0.0)
        terms = BondTerms(rate=0.04)
        assert coupon_leg_value(leg, terms, 1.0) == pytest.approx(1.01**-12, rel=1e-14)

    def test_errors(self):
        with pytest.raises(ConfigError):
            coupon_leg_value(CouponLeg(libor=(0.0,) * 11), TERMS, 1.0)
        with pytest.raises(ConfigError):
            coupon_leg_value(CouponLeg(), TERMS, 1.2)
        with pytest.raises(ConfigError):
            CouponLeg(spread=-0.01)


class TestParity:
    def test_degenerate_model(self):
        model = BlackScholesModel(q0=Q0, sigma=0.0)
        assert parity_adjustment_G(model, TERMS) == pytest.approx(-1.0, abs=1e-15)

    def test_degenerate_model_discounted(self):
        model = BlackScholesModel(q0=Q0, sigma=0.0, r=0.02)
        terms = BondTerms(rate=0.02)
        assert parity_adjustment_G(model, terms) == pytest.approx(-math.exp(-0.06), rel=1e-14)

    def test_reference_value(self):
        # with a zero lower bound the bond-side bound is -G
        G = parity_adjustment_G(BlackScholesModel(), TERMS)
        assert call_to_put_bound(0.0, G) == pytest.approx(0.999995778016, abs=5e-13)

    def test_calls_gain_value_as_start_rises(self):
        gs = [parity_adjustment_G(BlackScholesModel(q0=q), TERMS) for q in (0.008, 0.01, 0.012)]
        assert gs[0] < gs[1] < gs[2]
        assert gs[2] > 0.0

    @pytest.mark.parametrize("x,g,expected", [(0.0, -1.0, 1.0), (0.3, 0.3, 0.0), (0.5, 1.0, 0.0)])
    def test_call_to_put(self, x, g, expected):
        assert call_to_put_bound(x, g) == expected
