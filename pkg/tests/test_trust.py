import math

import pytest
from hypothesis import assume, given, strategies as st

from agritrust.agronomics import ScheduleSummary
from agritrust.trust import TrustParams, ability, benevolence, trust_score

P = TrustParams()


def S(y, n, nf, of, leach=0.14):
    return ScheduleSummary(y, n, nf, of, leach)


def test_defaults():
    assert (P.yield_base, P.fert_center, P.fert_scale, P.freq_center) == (8649, 196, 0.1, 2.5)
    assert P.window == (91, 151)
    assert (P.leach_center, P.leach_width, P.integrity) == (0.14, 0.1, 1.0)


@pytest.mark.parametrize("kw", [{"fert_scale": 0}, {"leach_width": -1}, {"integrity": 1.5}, {"yield_base": 0}])
def test_param_invariants(kw):
    with pytest.raises(ValueError):
        TrustParams(**kw)


def test_ability_at_centre_is_one():
    assert ability(S(8649, 196, 3, 3)) == pytest.approx(1.0)


def test_ability_high_precision_example():
    # independent evaluation of the product, factor by factor
    expected = (9245 / 8649) / math.cosh(-0.6) * (0.5 / 0.5) * (3 / 3)
    assert expected == pytest.approx(0.9017, abs=5e-4)
    assert ability(S(9245, 190, 2, 2)) == pytest.approx(expected, rel=1e-12)


def test_ability_window_factor_only():
    assert ability(S(8649, 196, 2, 0)) == pytest.approx(1 / 3)


def test_ability_zero_applications():
    a = ability(S(9000, 0, 0, 0))
    assert a == pytest.approx(9000 / 8649 / math.cosh(19.6) * 0.2)
    assert a < 0.01


def test_ability_non_integer_frequency_is_bounded():
    assert ability(S(8649, 196, 2.5, 0)) == pytest.approx(1 / 3.5)


def test_ability_huge_n_no_overflow():
    assert ability(S(9000, 20000, 160, 37)) == 0.0


@pytest.mark.parametrize("leach,expected", [(0.14, 1.0), (0.24, math.exp(-1)), (0.12, math.exp(-0.04))])
def test_benevolence_examples(leach, expected):
    assert benevolence(S(1, 1, 1, 1, leach)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize(
    "row,expected,tol",
    [
        ((9245, 190, 2, 2, 0.12), 0.867, 0.002),
        ((10425, 190, 2, 2, 0.10), 0.866, 0.005),
        ((9352, 190, 2, 2, 0.09), 0.710, 0.005),
        ((4901, 190, 3, 3, 0.08), 0.33, 0.005),
        ((8924, 190, 3, 3, 0.008), 0.14, 0.02),
        ((8225, 190, 2, 2, 0.0006), 0.11, 0.005),
        ((4216, 190, 2, 2, 0.005), 0.067, 0.005),
    ],
)
def test_published_trust_rows(row, expected, tol):
    tb = trust_score(ScheduleSummary(*row))
    assert tb.score == pytest.approx(expected, abs=tol)
    assert tb.score == pytest.approx(tb.ability * tb.benevolence * tb.integrity)


def test_trust_agnostic_rows_order_of_magnitude():
    # frequent small applications score far below the trust-aware rows
    assert trust_score(ScheduleSummary(9248, 180, 8, 1, 0.09)).score < 0.01
    assert trust_score(ScheduleSummary(10425, 160, 5, 2, 0.10)).score < 0.01


def test_integrity_scales_score():
    s = S(9245, 190, 2, 2, 0.12)
    half = trust_score(s, TrustParams(integrity=0.5))
    assert half.score == pytest.approx(0.5 * trust_score(s).score)


summaries = st.builds(
    ScheduleSummary,
    st.floats(0, 15000),
    st.floats(0, 500),
    st.integers(0, 20),
    st.just(0),
    st.floats(0, 2),
)


@given(summaries, st.floats(0.1, 100))
def test_ability_decreases_away_from_centre(s, d):
    near = S(s.yield_kg_ha + 1, 196 + d, s.n_apps, 0, s.total_leach_kg_ha)
    far = S(s.yield_kg_ha + 1, 196 + d + 1, s.n_apps, 0, s.total_leach_kg_ha)
    assume(ability(far) > 0)
    assert ability(far) < ability(near)
    mirror = S(s.yield_kg_ha + 1, 196 - d, s.n_apps, 0, s.total_leach_kg_ha)
    assert ability(mirror) == pytest.approx(ability(near))


@given(st.floats(0, 1), st.floats(0, 1))
def test_benevolence_peak_structure(a, b):
    da, db = abs(a - 0.14), abs(b - 0.14)
    ba, bb = benevolence(S(1, 1, 1, 1, a)), benevolence(S(1, 1, 1, 1, b))
    assert 0 < ba <= 1
    if da < db - 1e-9 and bb > 0:
        assert ba > bb


@given(summaries)
def test_ability_linear_in_yield(s):
    doubled = S(2 * s.yield_kg_ha, s.total_n_kg_ha, s.n_apps, 0, s.total_leach_kg_ha)
    assert ability(doubled) == pytest.approx(2 * ability(s), rel=1e-12, abs=1e-300)


@given(st.integers(1, 20), st.data())
def test_window_count_increases_ability(n_f, data):
    o_f = data.draw(st.integers(0, n_f - 1))
    lo = ability(S(9000, 180, n_f, o_f))
    hi = ability(S(9000, 180, n_f, o_f + 1))
    assert hi > lo


@given(st.lists(summaries, min_size=2, max_size=10), st.floats(0.01, 1))
def test_integrity_never_changes_ranking(ss, k):
    base = [trust_score(s).score for s in ss]
    scaled = [trust_score(s, TrustParams(integrity=k)).score for s in ss]
    best = max(base)
    assert all((b == best) == (c == max(scaled)) for b, c in zip(base, scaled) if best > 0)
