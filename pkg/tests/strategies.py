"""Shared hypothesis strategies for series, vectors and values."""
from fractions import Fraction

from hypothesis import strategies as st

from valstrat.gamma import Gamma
from valstrat.puiseux import PSeries
from valstrat.vla import KVector

exponents = st.builds(Fraction, st.integers(-8, 16), st.sampled_from([1, 2, 3, 6]))
small_ints = st.integers(-3, 3).filter(lambda k: k != 0)
coefficients = st.builds(complex, small_ints, st.integers(-2, 2))


@st.composite
def series(draw, min_terms=1, max_terms=4, exps=exponents):
    n = draw(st.integers(min_terms, max_terms))
    terms = [(draw(exps), draw(coefficients)) for _ in range(n)]
    x = PSeries.from_terms(terms)
    if min_terms and x.is_exact_zero:
        x = PSeries.monomial(draw(coefficients), draw(exps))
    return x


nonzero_series = series(min_terms=1)
units = series(exps=st.builds(Fraction, st.integers(0, 12), st.sampled_from([1, 2, 3]))).filter(
    lambda x: x.lead_exp == 0) | st.builds(lambda c: PSeries.const(c), coefficients)

gammas = st.one_of(
    st.just(Gamma.zero()), st.just(Gamma.inf()), st.builds(Gamma.of, exponents))
finite_gammas = st.builds(Gamma.of, exponents)


@st.composite
def vectors(draw, n):
    return KVector([draw(series(min_terms=0, max_terms=3)) for _ in range(n)])
