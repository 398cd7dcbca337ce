import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bubbly.dynsys import (
    Classification,
    ImplicitSystem,
    MapSystem,
    analyze_point,
    as_map,
    backward_iterate,
    classify_determinacy,
    count_sign_changes,
    eigenvalues,
    find_fixed_point,
    implicit_jacobian,
    jacobian_fd,
    orbit,
    solve_saddle_path,
)
from bubbly.errors import (
    InverseUndefined,
    NoConvergence,
    NonFiniteEvaluation,
    NotDeterminate,
)
from bubbly.models import samuelson as sam


def linear(A, predetermined=(), bracket=None):
    A = np.asarray(A, dtype=float)
    return MapSystem(A.shape[0], lambda x: A @ x, predetermined=predetermined,
                     jacobian=lambda x: A, free_bracket=bracket)


def test_fixed_points_of_samuelson_map(sam_div):
    system = sam.samuelson_injected_system(sam_div)
    bub = find_fixed_point(system, [0.3, 0.0])
    assert bub.point == pytest.approx([1 / 3, 0.0], abs=1e-12)
    assert bub.residual_norm < 1e-12
    fund = find_fixed_point(system, [1e-6, 0.0])
    assert fund.residual_norm < 1e-12
    assert np.max(np.abs(fund.point)) < 1e-11
    assert sorted(bub.eigenvalues.real) == pytest.approx([5 / 6, 1.5], abs=1e-12)
    assert bub.verdict.classification == Classification.LOCALLY_DETERMINATE
    # both roots stable at the origin: indeterminate by count alone
    assert fund.verdict.classification == Classification.INDETERMINATE


def test_contraction_fixed_point():
    st_ = find_fixed_point(MapSystem(1, lambda x: 0.5 * x, ()), [1.0])
    assert abs(st_.point[0]) < 1e-12
    assert st_.eigenvalues[0] == pytest.approx(0.5)


def test_newton_gives_up():
    # h(x) = x + 1 has no fixed point
    with pytest.raises(NoConvergence):
        find_fixed_point(MapSystem(1, lambda x: x + 1.0, ()), [0.0], max_iter=5)


def test_bad_arguments():
    with pytest.raises(ValueError):
        find_fixed_point(MapSystem(1, lambda x: x, ()), [np.nan])
    with pytest.raises(ValueError):
        find_fixed_point(MapSystem(1, lambda x: x, ()), [0.0], tol=0.0)


@pytest.mark.parametrize("eig, npre, expected", [
    ([1.5, 5 / 6], 1, Classification.LOCALLY_DETERMINATE),
    ([0.5, 0.5], 1, Classification.INDETERMINATE),
    ([1.0], 1, Classification.NON_HYPERBOLIC),
    ([1.5, 2.0], 1, Classification.NO_CONVERGENT_PATH),
    ([1 + 1e-10, 0.5], 1, Classification.NON_HYPERBOLIC),
])
def test_classification_examples(eig, npre, expected):
    assert classify_determinacy(eig, npre).classification == expected


@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=4),
       st.integers(0, 4))
def test_classification_counting_identity(eig, npre):
    v = classify_determinacy(eig, npre)
    assert v.stable_count + v.unstable_count + v.on_circle_count == len(eig)
    if v.on_circle_count:
        assert v.classification == Classification.NON_HYPERBOLIC
    elif v.stable_count == npre:
        assert v.classification == Classification.LOCALLY_DETERMINATE
    elif v.stable_count > npre:
        assert v.classification == Classification.INDETERMINATE
    else:
        assert v.classification == Classification.NO_CONVERGENT_PATH


def test_margin_must_be_positive():
    with pytest.raises(ValueError):
        classify_determinacy([0.5], 1, margin=0.0)


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_closed_form_eigenvalues_match_numpy(entries):
    J = np.array(entries).reshape(2, 2)
    ours = list(eigenvalues(J))
    tol = 1e-7 * (1 + np.max(np.abs(J)))
    for z in np.linalg.eigvals(J):
        i = int(np.argmin([abs(z - w) for w in ours]))
        assert abs(z - ours.pop(i)) < tol


def test_block_triangular_eigenvalues():
    J = np.array([[1.2, 0.3, 0.5], [0.4, 0.7, -0.2], [0.0, 0.0, 0.9]])
    assert np.allclose(np.sort(eigenvalues(J).real), np.sort(np.linalg.eigvals(J).real))


def test_jacobian_fd_examples(sam_div):
    J = jacobian_fd(MapSystem(2, lambda x: x, ()), [0.3, -1.0])
    assert np.allclose(J, np.eye(2), atol=1e-9)
    J = jacobian_fd(MapSystem(1, lambda x: x ** 2, ()), [2.0])
    assert J[0, 0] == pytest.approx(4.0, abs=1e-6)
    system = sam.samuelson_injected_system(sam_div)
    J = jacobian_fd(system, [1 / 3, 0.0])
    q = 1.0 / 1.2
    assert np.allclose(J, [[1.5, -q], [0.0, q]], atol=1e-6)
    assert np.allclose(J, system.jacobian(np.array([1 / 3, 0.0])), atol=1e-5)


def test_jacobian_fd_nonfinite():
    with pytest.raises(NonFiniteEvaluation), np.errstate(divide="ignore", invalid="ignore"):
        jacobian_fd(MapSystem(1, lambda x: np.log(x), ()), [0.0])


def test_implicit_system_matches_explicit_map():
    A = np.array([[0.5, 0.2], [0.0, 1.5]])
    res = lambda xi, eta: eta - A @ xi
    system = ImplicitSystem(2, res, predetermined=(0,), solve_next=lambda xi: A @ xi)
    assert np.allclose(implicit_jacobian(system, np.zeros(2)), A, atol=1e-8)
    m = as_map(system)
    assert np.allclose(m(np.array([1.0, 2.0])), A @ [1.0, 2.0])


def test_backward_iterate_round_trip(sam_div):
    system = sam.samuelson_injected_system(sam_div)
    inv = sam._inverse(sam_div)
    terminal = np.array([1 / 3 + 1e-4, 1e-4])
    path = backward_iterate(inv, terminal, 50)
    assert path.states.shape == (51, 2)
    assert np.allclose(path.states[-1], terminal)
    for t in range(50):
        assert np.allclose(system(path.states[t]), path.states[t + 1], rtol=1e-10, atol=1e-13)
    assert backward_iterate(inv, terminal, 0).states.shape == (1, 2)
    with pytest.raises(InverseUndefined):
        backward_iterate(inv, [-0.1, 0.0], 3)


def test_saddle_path_against_backward_oracle(sam_div):
    system = sam.samuelson_injected_system(sam_div)
    target = find_fixed_point(system, [0.3, 0.0])
    path = solve_saddle_path(system, [sam_div.D0], target, 200)
    oracle = sam.backward_saddle_path(sam_div, 200)
    assert np.max(np.abs(path.states - oracle)) < 1e-10
    x1 = path.states[:, 0]
    # monotone approach until the gap reaches round-off level
    moving = np.abs(x1[:-1] - 1 / 3) > 1e-12
    assert np.all(np.diff(x1)[moving] < 0)
    assert abs(x1[-1] - 1 / 3) < 1e-8


def test_saddle_path_at_steady_state_is_constant(sam_div):
    system = sam.samuelson_injected_system(sam_div)
    target = find_fixed_point(system, [0.3, 0.0])
    path = solve_saddle_path(system, [0.0], target, 50)
    assert np.allclose(path.states[:, 0], 1 / 3, atol=1e-10)


def test_saddle_path_short_segment_forward_consistency(sam_div):
    # free-coordinate errors grow like 1.5^t, so forward reproduction is
    # checked over a window where round-off stays below 1e-9
    system = sam.samuelson_injected_system(sam_div)
    target = find_fixed_point(system, [0.3, 0.0])
    path = solve_saddle_path(system, [sam_div.D0], target, 300)
    fwd = orbit(system, path.states[0], 30)
    assert np.allclose(fwd, path.states[:31], rtol=1e-9, atol=0)
    steps = np.array([system(path.states[t]) - path.states[t + 1] for t in range(300)])
    assert np.max(np.abs(steps)) < 1e-12


def test_saddle_path_perturbation_diverges(sam_div):
    system = sam.samuelson_injected_system(sam_div)
    target = find_fixed_point(system, [0.3, 0.0])
    path = solve_saddle_path(system, [sam_div.D0], target, 100)
    base = abs(path.states[40, 0] - 1 / 3)
    for eps in (1e-4, -1e-4):
        x0 = path.states[0] + [eps, 0.0]
        pert = orbit(system, x0, 20)
        assert abs(pert[20, 0] - 1 / 3) > 100 * max(base, abs(path.states[20, 0] - 1 / 3))


def test_saddle_path_needs_determinate_target():
    system = linear([[0.5, 0.0], [0.0, 0.6]], predetermined=(1,))
    target = analyze_point(system, [0.0, 0.0])
    with pytest.raises(NotDeterminate):
        solve_saddle_path(system, [0.1], target, 10)


def test_linear_saddle():
    # x' = 2x + y, y' = 0.5y: stable manifold x = -y/1.5
    system = linear([[2.0, 1.0], [0.0, 0.5]], predetermined=(1,), bracket=(-1.0, 1.0))
    target = analyze_point(system, [0.0, 0.0])
    path = solve_saddle_path(system, [0.3], target, 60)
    assert path.states[0, 0] == pytest.approx(-0.2, abs=1e-10)


def test_leverage_without_dividend_is_constant(lev_params):
    from bubbly.models.leverage import leverage_bubbly, leverage_injected_dynamics
    y_b = leverage_bubbly(lev_params).y
    s = orbit(leverage_injected_dynamics(lev_params), [y_b, 0.0], 100)
    assert np.allclose(s[:, 0], y_b, rtol=1e-12)


def test_count_sign_changes():
    assert count_sign_changes([-np.inf, -1, -0.5, 0.3, np.inf]) == 1
    assert count_sign_changes([1, -1, 1]) == 2
    assert count_sign_changes([1, np.nan, 2]) == 0
    assert count_sign_changes([-1, np.nan, 2]) == 1
