import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from bgrisk.dominance import (
    CallableCDF,
    Relation,
    SupportStatus,
    check_fosd,
    check_noised,
    check_sosd,
    running_integral,
    support_bound_diagnostic,
)
from bgrisk.measures import Gamble, gaussian_grid, uniform_grid

from conftest import gambles

G = Gamble.from_pairs
P = Gamble.point


def test_fosd_examples():
    assert check_fosd(P(1), P(0)).relation is Relation.FIRST_STRICT
    v = check_fosd(G([(-10, 0.5), (12, 0.5)]), P(0))
    assert v.relation is Relation.NONE
    assert v.worst_violation == pytest.approx(-0.5)
    x = G([(0, 0.3), (2, 0.7)])
    assert check_fosd(x, x).relation is Relation.EQUAL_DISTRIBUTION


def test_fosd_witness_is_leftmost():
    v = check_fosd(G([(1, 0.5), (3, 0.5)]), G([(0, 0.5), (3, 0.5)]))
    assert v.relation is Relation.FIRST_STRICT
    assert v.witness_point == 0.0


def test_sosd_examples():
    spread = G([(-1, 0.5), (1, 0.5)])
    assert check_sosd(P(0), spread).relation is Relation.SECOND_STRICT
    assert check_sosd(P(1), P(0)).relation is Relation.SECOND_STRICT
    assert check_sosd(spread, P(0)).relation is Relation.NONE


def test_running_integral_exact():
    pts, integ, inf = running_integral(P(0), G([(-1, 0.5), (1, 0.5)]))
    np.testing.assert_allclose(integ, [0.0, 0.5, 0.0])
    assert inf == 0.0
    # crossing inside a gridded segment: minimum at the root, not a breakpoint
    pts, integ, inf = running_integral(G([(-1, 0.5), (1, 0.5)]), P(0))
    assert inf == pytest.approx(-0.5)


def test_verdict_json():
    v = check_fosd(P(1), P(0))
    js = v.to_json()
    assert set(js) == {"relation", "worst_violation", "witness_point", "truncation_mass"}
    assert js["relation"] == "FIRST_STRICT"


def test_support_diagnostic_examples():
    assert support_bound_diagnostic(G([(-10, 0.5), (12, 0.5)]), P(0)).feasible
    mixed = G([(0, 0.5), (10, 0.5)])
    assert support_bound_diagnostic(P(2), mixed).status is SupportStatus.INFEASIBLE_WITH_BOUNDED_NOISE
    assert support_bound_diagnostic(P(6), mixed).status is SupportStatus.INFEASIBLE_WITH_BOUNDED_NOISE
    assert support_bound_diagnostic(P(6), mixed, z_support_bounded=False).feasible
    assert support_bound_diagnostic(mixed, mixed).status is SupportStatus.INFEASIBLE_IDENTICAL


@given(gambles(), st.floats(0.01, 50))
def test_translation_property(x, c):
    assert check_fosd(x.shift(c), x).relation is Relation.FIRST_STRICT


@given(gambles(), gambles())
def test_fosd_implies_sosd(x, y):
    if check_fosd(x, y).relation is Relation.FIRST_STRICT:
        assert check_sosd(x, y).relation is Relation.SECOND_STRICT


@given(gambles(max_atoms=3), st.floats(0.01, 5), st.integers(0, 2))
def test_noise_preserves_fosd(x, c, kind):
    y = x.shift(-c)
    noise = [gaussian_grid(2.0, 0.05), uniform_grid(-3, 1, 0.05), gaussian_grid(0.3, 0.01)][kind]
    assert check_noised(x, y, noise, 1).relation is Relation.FIRST_STRICT


def test_noised_mixture_matches_analytic_gaussian():
    x, y = G([(0, 0.5), (3, 0.5)]), P(1)
    grid = gaussian_grid(1.0, 1e-3)
    from bgrisk.measures import AtomGridMixture

    mix = AtomGridMixture(x, grid)
    t = np.linspace(-5, 8, 101)
    exact = 0.5 * special.ndtr(t) + 0.5 * special.ndtr(t - 3)
    assert np.max(np.abs(mix(t) - exact)) < 1e-7


def _gauss_mixture_cdf(g, sd):
    return lambda t: sum(p * special.ndtr((t - v) / sd) for v, p in g.atoms)


@pytest.mark.parametrize("sd", [1.0, 2.0, 5.0, 10.0])
def test_tail_necessity_gaussian_only(sd):
    # max supp X < max supp Y although E[X] > E[Y]: Gaussian noise cannot help
    x, y = P(6), G([(0, 0.5), (10, 0.5)])
    pts = np.linspace(-12 * sd, 10 + 40 * sd, 20_001)
    fx = CallableCDF(_gauss_mixture_cdf(x, sd), pts)
    fy = CallableCDF(_gauss_mixture_cdf(y, sd), pts)
    v = check_fosd(fx, fy, tol=0.0)
    assert v.relation is Relation.NONE
    assert v.worst_violation < 0


def test_sosd_noised_equal_means():
    # both mixtures carry the same off-grid mass; roundoff must not block the integral
    from bgrisk.smoothing import construct_and_verify

    from conftest import random_gamble

    rng = np.random.default_rng(7)
    x, y = random_gamble(rng), random_gamble(rng)
    y = y.shift(x.mean - y.mean)
    if x.variance > y.variance:
        x, y = y, x
    r = construct_and_verify(x, y, 2)
    assert r.grid.tail_left > 0
    assert r.verdict.relation is Relation.SECOND_STRICT
