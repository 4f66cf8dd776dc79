import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jacobiflow.errors import PreconditionError, SingularityError
from jacobiflow.singular.classify import (
    SingularityReport,
    autonomous_spectrum_test,
    classify_coefficients,
    kneser_classify,
    oscillation_count_oracle,
    oscillation_verdict,
)
from jacobiflow.singular.frame import NormalFormCoefficients


def _coeffs(m, c11, b_m=-1.0, k=1, **kw):
    b = np.zeros(m + 1)
    b[m] = b_m
    return NormalFormCoefficients(k=k, m=m, b=b, b11=np.zeros(1), c11=[c11], **kw)


# ---------------------------------------------------------------------------
# spectral classifier
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("m", [0, 1])
@pytest.mark.parametrize("c", [-3.0, 0.0, 3.0])
def test_low_order_never_oscillates(m, c):
    assert kneser_classify([[-1.0]], [[c]], m) == "NonOscillating"


@pytest.mark.parametrize(
    "c, expected",
    [
        (0.5, "Oscillating"),        # eigenvalue -0.5 < -1/4
        (0.26, "Oscillating"),
        (-1.0, "NonOscillating"),    # eigenvalue 1
        (0.24, "NonOscillating"),
        (0.25, "Threshold"),         # exactly on the critical line
        (1e-9, "Threshold"),         # product indistinguishable from zero
    ],
)
def test_order_two_scalar_verdicts(c, expected):
    assert kneser_classify([[-1.0]], [[c]], 2) == expected


def test_order_two_complex_pair():
    # symmetric B, diagonal C with complex spectrum of C B
    b = np.array([[-1.0, 1.0], [1.0, 1.0]])
    c = np.diag([1.0, -1.0])
    eigs = np.linalg.eigvals(c @ b)
    assert np.max(np.abs(eigs.imag)) > 0.5  # really a complex pair
    assert kneser_classify(b, c, 2) == "Oscillating"  # real part -1
    b2 = np.array([[1.0, 1.0], [1.0, -1.0]])
    assert kneser_classify(b2, c, 2) == "NonOscillating"  # real part +1


@pytest.mark.parametrize(
    "cval, expected",
    [(-1.0, "NonOscillating"), (0.5, "Oscillating"), (1e-9, "Threshold")],
)
def test_higher_order_sign_test(cval, expected):
    assert kneser_classify([[-2.0]], [[cval]], 3) == expected


def test_higher_order_only_range_of_b_matters():
    b = np.diag([-2.0, 0.0])
    assert kneser_classify(b, np.diag([-1.0, 5.0]), 3) == "NonOscillating"
    assert kneser_classify(b, np.diag([1.0, -5.0]), 3) == "Oscillating"
    with pytest.raises(PreconditionError):
        kneser_classify(np.zeros((1, 1)), [[1.0]], 3)


@settings(max_examples=40, deadline=None)
@given(
    b_m=st.floats(min_value=-4.0, max_value=-0.2),
    c=st.floats(min_value=-3.0, max_value=3.0),
)
def test_order_two_matches_quarter_rule(b_m, c):
    product = c / b_m
    if abs(product + 0.25) < 1e-3 or abs(product) < 1e-3:
        return
    expected = "Oscillating" if product < -0.25 else "NonOscillating"
    assert kneser_classify([[1.0 / b_m]], [[c]], 2) == expected


def test_autonomous_spectrum_test():
    verdict, eigs = autonomous_spectrum_test([[-1.0]], [[0.5]])
    assert verdict == "Oscillating"
    assert eigs == pytest.approx([-0.5])
    verdict, _ = autonomous_spectrum_test([[-1.0]], [[-1.0]])
    assert verdict == "NonOscillating"
    # complex pair with zero real part has no real eigenvalue below -1/4
    b = np.array([[-1.0, 2.0], [2.0, 1.0]])
    verdict, eigs = autonomous_spectrum_test(b, np.diag([1.0, -1.0]))
    assert verdict == "NonOscillating"
    assert np.max(np.abs(eigs.imag)) > 1.0


# ---------------------------------------------------------------------------
# crossing-count oracle
# ---------------------------------------------------------------------------


def test_oracle_validates_interval():
    with pytest.raises(PreconditionError):
        oscillation_count_oracle([[-1.0]], [[1.0]], 2, (0.0, 1.0))
    with pytest.raises(PreconditionError):
        oscillation_count_oracle([[-1.0]], [[1.0]], 2, (0.5, 0.5))


def test_oracle_counts_grow_for_oscillating_data():
    counts = [
        sum(
            oscillation_count_oracle(
                [[-1.0]], [[2.5]], 2, (tau, 1.0), n_solutions=2, seed=3
            )
        )
        for tau in (1e-2, 1e-3, 1e-4)
    ]
    assert counts[0] < counts[1] < counts[2]
    # weaker oscillation still trends upward, if not per decade
    weak = [
        sum(
            oscillation_count_oracle(
                [[-1.0]], [[1.2]], 2, (tau, 1.0), n_solutions=2, seed=3
            )
        )
        for tau in (1e-2, 1e-3, 1e-4, 1e-5)
    ]
    assert weak[-1] > weak[0]
    assert all(a <= b for a, b in zip(weak, weak[1:]))


def test_oracle_counts_saturate_for_nonoscillating_data():
    counts = [
        sum(
            oscillation_count_oracle(
                [[-1.0]], [[-0.3]], 2, (tau, 1.0), n_solutions=2, seed=3
            )
        )
        for tau in (1e-2, 1e-3, 1e-4)
    ]
    assert counts[1] == counts[2]


@pytest.mark.parametrize(
    "m, c11, expected",
    [
        (2, 1.2, "Oscillating"),
        (2, -0.3, "NonOscillating"),
        (1, 0.8, "NonOscillating"),
        (3, 2.0, "Oscillating"),
        (3, -2.0, "NonOscillating"),
    ],
)
def test_verdict_protocol_agrees_with_spectrum(m, c11, expected):
    coeffs = _coeffs(m, c11, b_m=-1.5 if m == 3 else -1.0)
    bnf = coeffs.bnum_stack(6)
    cnf = coeffs.cnf_stack(6)
    assert oscillation_verdict(bnf, cnf, m, n_solutions=2) == expected
    if m >= 2:
        assert kneser_classify(bnf[0], cnf[0], m) == expected


def test_verdict_protocol_two_block():
    coeffs = NormalFormCoefficients(
        k=2, m=2, b=[0.0, 0.0, -1.0], b11=np.zeros(1), c11=[2.0],
        b22=[-1.0], c22=[-0.5],
    )
    bnf = coeffs.bnum_stack(6)
    cnf = coeffs.cnf_stack(6)
    assert kneser_classify(bnf[0], cnf[0], 2) == "Oscillating"
    assert oscillation_verdict(bnf, cnf, 2, n_solutions=2) == "Oscillating"


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def test_report_validation_and_dict():
    rep = SingularityReport(
        m=2, b_m=-1.0, sigma_xxdot=1.0, delta=3.0,
        verdict="NonOscillating", case="span3", k=2,
    )
    d = rep.to_dict()
    assert d["delta"] == 3.0 and d["verdict"] == "NonOscillating"
    assert set(d) == {"m", "b_m", "sigma_xxdot", "delta", "verdict", "case", "k"}
    with pytest.raises(SingularityError):
        SingularityReport(m=0, b_m=-1.0, sigma_xxdot=1.0, delta=None,
                          verdict="NonOscillating", case="", k=1)
    with pytest.raises(SingularityError):
        SingularityReport(m=2, b_m=0.0, sigma_xxdot=1.0, delta=None,
                          verdict="NonOscillating", case="", k=1)


def test_classify_coefficients_discriminant():
    # product 2: delta = sqrt(1 + 8) = 3, no oscillation
    rep = classify_coefficients(_coeffs(2, -2.0))
    assert rep.verdict == "NonOscillating"
    assert rep.delta == pytest.approx(3.0)
    assert rep.sigma_xxdot == pytest.approx(2.0)
    # product -1/2: complex exponents, oscillating, no real delta
    rep = classify_coefficients(_coeffs(2, 0.5))
    assert rep.verdict == "Oscillating"
    assert rep.delta is None
    # order one: no discriminant is reported
    rep = classify_coefficients(_coeffs(1, 0.7), case="span2")
    assert rep.verdict == "NonOscillating"
    assert rep.delta is None and rep.case == "span2"


def test_classify_coefficients_rejects_regular_order():
    with pytest.raises(SingularityError):
        classify_coefficients(_coeffs(0, 1.0))


if __name__ == "__main__":
    pytest.main([__file__])
