import numpy as np
import pytest

from jacobiflow.errors import (
    ChartError,
    OscillatingError,
    PreconditionError,
    RadiusError,
    ResonanceError,
)
from jacobiflow.grassmann import canonicalize, isotropy_residual, plane_distance
from jacobiflow.singular.firstjet import (
    blowup_equilibrium,
    blowup_linearization,
    blowup_residual,
    case_system,
    first_jet_case,
    first_jet_continuation,
    series_start,
    shayman_flag,
    shayman_membership,
)
from jacobiflow.singular.frame import NormalFormCoefficients


def _graph(s):
    return np.vstack([np.eye(2), np.asarray(s, dtype=float)])


def _coeffs_c2():
    # scalar order-two data with discriminant root 3
    return NormalFormCoefficients(
        k=1, m=2, b=[0.0, 0.0, -1.0], b11=np.zeros(1), c11=[-2.0]
    )


def _coeffs_k2():
    return NormalFormCoefficients(
        k=2, m=2, b=[0.0, 0.0, -1.5], b11=[0.3], c11=[-0.9],
        b12=[0.1], b22=[-0.4], c22=[0.6],
    )


# ---------------------------------------------------------------------------
# chart transform selection
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "plane, expected_case, expected_shear",
    [
        (_graph([[1.0, 0.3], [0.3, 2.0]]), 1, 2.0 - 0.3**2 / 1.0),
        (_graph(np.zeros((2, 2))), 1, 0.0),
        (_graph([[0.0, 0.0], [0.0, 1.5]]), 1, 1.5),
        (_graph([[0.0, 1.0], [1.0, 0.5]]), 2, 0.0),
        (_graph([[0.0, 1.0], [1.0, 0.0]]), 3, 0.0),
        (np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 1.0]]), 2, 0.0),
        (np.vstack([np.zeros((2, 2)), np.eye(2)]), 3, 0.0),
    ],
)
def test_case_selection(plane, expected_case, expected_shear):
    case = first_jet_case(plane)
    assert case.case == expected_case
    assert case.s22plus == pytest.approx(expected_shear, abs=1e-12)
    # the transform sends the jump extension to the chart origin, so the
    # blown-up chart starts at zero
    assert plane_distance(case.plane, canonicalize(plane)) < 1e-12


def test_case_selection_uncovered_position():
    plane = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ChartError, match="outside the chart classes"):
        first_jet_case(plane)


def test_case_selection_single_degree():
    case = first_jet_case(np.array([[1.0], [0.4]]))
    assert case.case == 1
    assert np.array_equal(case.matrix, np.eye(2))
    assert np.allclose(case.post_plane.ravel(), [1.0, 0.0])
    with pytest.raises(PreconditionError):
        first_jet_case(np.eye(3))


# ---------------------------------------------------------------------------
# transformed system
# ---------------------------------------------------------------------------


def test_case_system_guards():
    with pytest.raises(PreconditionError):
        case_system(
            NormalFormCoefficients(k=1, m=3, b=[0, 0, 0, -1.0], b11=np.zeros(1), c11=[-1.0]),
            1,
        )
    with pytest.raises(PreconditionError):
        case_system(_coeffs_c2(), 2)  # only the identity chart in one degree
    with pytest.raises(PreconditionError):
        case_system(_coeffs_k2(), 5)


def test_case_system_order_two_discriminant_gates():
    with pytest.raises(OscillatingError):
        case_system(
            NormalFormCoefficients(k=1, m=2, b=[0, 0, -1.0], b11=np.zeros(1), c11=[0.5]), 1
        )
    with pytest.raises(ResonanceError):
        case_system(
            NormalFormCoefficients(k=1, m=2, b=[0, 0, -1.0], b11=np.zeros(1), c11=[0.25]), 1
        )
    with pytest.raises(ResonanceError):
        # discriminant root hits one when the product vanishes
        case_system(
            NormalFormCoefficients(k=1, m=2, b=[0, 0, -1.0], b11=np.zeros(1), c11=[1e-12]), 1
        )


def test_case_system_blocks_and_root():
    sys2 = case_system(_coeffs_c2(), 1)
    assert sys2.d == pytest.approx(3.0)
    assert sys2.b2 == -1.0
    ap, cp, gp = sys2.blocks_at(0.5)
    assert np.allclose(ap, 0.0)
    assert cp[0, 0] == pytest.approx(-2.0)
    assert gp[0, 0] == pytest.approx(-1.0)  # t^2 / (b2 t^2)


# ---------------------------------------------------------------------------
# fixed point, linearization, series window
# ---------------------------------------------------------------------------


def test_equilibrium_scalar_order_two():
    sys2 = case_system(_coeffs_c2(), 1)
    eq = blowup_equilibrium(1, 2, sys2)
    assert np.allclose(eq, [[-1.0]])
    assert blowup_residual(sys2, eq) < 1e-14
    assert np.allclose(blowup_linearization(sys2, eq), [-3.0, 1.0])


def test_equilibrium_order_one_is_symmetrized_c():
    c1 = NormalFormCoefficients(k=1, m=1, b=[0.0, -1.0], b11=np.zeros(1), c11=[0.7])
    s1 = case_system(c1, 1)
    eq = blowup_equilibrium(1, 1, s1)
    assert np.allclose(eq, [[0.7]])
    assert blowup_residual(s1, eq) < 1e-14
    assert np.allclose(blowup_linearization(s1, eq), [-1.0, 1.0])


def test_equilibrium_two_block_closed_spectrum():
    case = first_jet_case(_graph([[1.0, 0.3], [0.3, 2.0]]))
    sys2 = case_system(_coeffs_k2(), case)
    eq = blowup_equilibrium(case.case, 2, sys2)
    assert blowup_residual(sys2, eq) < 1e-12
    d = sys2.d
    lin = blowup_linearization(sys2, eq)
    assert np.allclose(lin, np.sort([-d, -(1.0 + d) / 2.0, -1.0, 1.0]), atol=1e-10)


def test_linearization_order_one_two_blocks():
    c2 = NormalFormCoefficients(
        k=2, m=1, b=[0.0, -1.0], b11=[0.2], c11=[0.7], b22=[-0.3], c22=[-0.1]
    )
    s = case_system(c2, 1)
    eq = blowup_equilibrium(1, 1, s)
    assert np.allclose(blowup_linearization(s, eq), [-1.0, -1.0, -1.0, 1.0])


def test_equilibrium_guards():
    sys2 = case_system(_coeffs_c2(), 1)
    with pytest.raises(PreconditionError):
        blowup_equilibrium(5, 2, sys2)
    with pytest.raises(PreconditionError):
        blowup_equilibrium(1, 3, sys2)
    with pytest.raises(PreconditionError):
        blowup_equilibrium(2, 2, sys2)  # case mismatch


def test_series_start_windows():
    geometric = np.array([[[5.0**k]] for k in range(30)])
    assert series_start(geometric) == pytest.approx(0.08)
    constant = np.zeros((30, 1, 1))
    constant[0, 0, 0] = 1.0
    assert series_start(constant) == pytest.approx(0.1)
    tail_only = np.zeros((30, 1, 1))
    tail_only[-1, 0, 0] = 1.0
    with pytest.raises(RadiusError):
        series_start(tail_only)


# ---------------------------------------------------------------------------
# continuation
# ---------------------------------------------------------------------------


def test_continuation_scalar_closed_form():
    # S1(t) = -1 identically, so the continued plane is span{(1, -t)}
    grid = np.linspace(0.05, 1.0, 20)
    trace = first_jet_continuation(_coeffs_c2(), np.array([[1.0], [0.4]]), grid)
    assert trace.diagnostics["series_start"] == pytest.approx(0.1)
    assert trace.diagnostics["case"] == 1
    assert np.allclose(trace.diagnostics["equilibrium"], [[-1.0]])
    assert trace.jumps[0].time == 0.0
    for t, p in zip(grid, trace.curve.planes):
        expected = canonicalize(np.array([[1.0], [-t]]))
        assert plane_distance(p, expected) < 1e-12


def test_continuation_two_block_stays_lagrangian():
    case = first_jet_case(_graph([[1.0, 0.3], [0.3, 2.0]]))
    grid = np.linspace(0.05, 0.8, 8)
    trace = first_jet_continuation(_coeffs_k2(), case, grid)
    assert len(trace.curve.planes) == 8
    assert max(isotropy_residual(p) for p in trace.curve.planes) < 1e-10
    # the chart values are symmetric by construction
    for s1 in trace.diagnostics["blowup_values"]:
        assert np.allclose(s1, s1.T)


def test_continuation_grid_validation():
    coeffs = _coeffs_c2()
    plane = np.array([[1.0], [0.4]])
    with pytest.raises(PreconditionError):
        first_jet_continuation(coeffs, plane, np.array([0.0, 0.5]))
    with pytest.raises(PreconditionError):
        first_jet_continuation(coeffs, plane, np.array([0.5, 0.2]))
    with pytest.raises(PreconditionError):
        first_jet_continuation(coeffs, "not a case", np.array([0.5]))


# ---------------------------------------------------------------------------
# stable-set membership
# ---------------------------------------------------------------------------


def test_shayman_flag_scalar_exponents():
    sys2 = case_system(_coeffs_c2(), 1)
    w, v = shayman_flag(sys2)
    assert np.allclose(w, [-1.5, 1.5])  # +- d/2
    assert np.allclose(np.linalg.norm(v, axis=0), 1.0)


def test_shayman_flag_rejects_tied_spectrum():
    c2 = NormalFormCoefficients(
        k=2, m=1, b=[0.0, -1.0], b11=[0.2], c11=[0.7], b22=[-0.3], c22=[-0.1]
    )
    with pytest.raises(PreconditionError):
        shayman_flag(case_system(c2, 1))


def test_shayman_membership_indicator_pattern():
    flag = np.eye(4)
    assert shayman_membership(np.eye(4)[:, :2], flag, (1, 2))
    plane13 = np.eye(4)[:, [0, 2]]
    assert not shayman_membership(plane13, flag, (1, 2))
    assert shayman_membership(plane13, flag, (1, 3))
    with pytest.raises(PreconditionError):
        shayman_membership(np.eye(4)[:, :2], np.eye(3), (1, 2))
    with pytest.raises(PreconditionError):
        shayman_membership(np.eye(4)[:, :2], flag, (2, 2))


if __name__ == "__main__":
    pytest.main([__file__])
