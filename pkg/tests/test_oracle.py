"""Closed-form exchange-model references and the conserved projector sum."""
import numpy as np
import pytest

from septraj import (
    HamiltonianDecomposition,
    IntegratorConfig,
    SwapScenario,
    TensorSpace,
    TimeGrid,
    Trajectory,
    analytic_se_swap,
    analytic_sse_swap,
    build_swap,
    conserved_C,
    evolve_sse_bipartite,
    fidelity_up_to_phase,
    partial_reduce,
    ProductState,
)

UP = np.array([1.0, 0.0], dtype=complex)
DOWN = np.array([0.0, 1.0], dtype=complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)


def random_pair(rng, d):
    a = rng.normal(size=d) + 1j * rng.normal(size=d)
    b = rng.normal(size=d) + 1j * rng.normal(size=d)
    return a / np.linalg.norm(a), b / np.linalg.norm(b)


def swap_decomposition(d):
    zero = np.zeros((d, d))
    return HamiltonianDecomposition([zero, zero], build_swap(d), TensorSpace((d, d)))


def test_scenario_caches_overlap():
    s = SwapScenario(UP, PLUS)
    assert abs(s.q - 1 / np.sqrt(2)) < 1e-12
    rng = np.random.default_rng(301)
    a, b = random_pair(rng, 4)
    s = SwapScenario(a, b)
    assert abs(s.q - np.vdot(a, b)) < 1e-12
    assert abs(s.q) <= 1 + 1e-12


def test_scenario_rejects_bad_inputs():
    with pytest.raises(ValueError, match="share a dimension"):
        SwapScenario(UP, np.array([1, 0, 0], dtype=complex))
    with pytest.raises(ValueError, match="normalized"):
        SwapScenario(2.0 * UP, PLUS)


def test_se_solution_boundary_values():
    s = SwapScenario(UP, PLUS)
    psi0 = np.kron(UP, PLUS)
    assert np.allclose(analytic_se_swap(s, 0.0), psi0, atol=1e-14)
    # half the exchange cycle lands on the swapped product
    assert fidelity_up_to_phase(analytic_se_swap(s, np.pi / 2), np.kron(PLUS, UP)) > 1 - 1e-14
    assert np.allclose(analytic_se_swap(s, np.pi), -psi0, atol=1e-14)


def test_se_solution_stays_normalized():
    rng = np.random.default_rng(302)
    for _ in range(100):
        d = int(rng.integers(2, 6))
        a, b = random_pair(rng, d)
        s = SwapScenario(a, b)
        tau = rng.uniform(0, 12)
        assert abs(np.linalg.norm(analytic_se_swap(s, tau)) - 1) < 1e-12


def test_sse_solution_boundary_values():
    s = SwapScenario(UP, PLUS)
    a, b = analytic_sse_swap(s, 0.0)
    assert np.allclose(a, UP, atol=1e-14)
    assert np.allclose(b, PLUS, atol=1e-14)
    # factors trade places (up to phase) at a quarter of the full cycle
    tau_swap = np.pi / (2 * abs(s.q))
    a, b = analytic_sse_swap(s, tau_swap)
    assert np.allclose(a, -1j * PLUS, atol=1e-12)
    assert np.allclose(b, -1j * UP, atol=1e-12)


def test_sse_solution_unit_norms():
    rng = np.random.default_rng(303)
    count = 0
    while count < 500:
        d = int(rng.integers(2, 6))
        a0, b0 = random_pair(rng, d)
        s = SwapScenario(a0, b0)
        tau = rng.uniform(0, 20)
        a, b = analytic_sse_swap(s, tau)
        assert abs(np.linalg.norm(a) - 1) < 1e-12
        assert abs(np.linalg.norm(b) - 1) < 1e-12
        count += 1


def test_sse_solution_energy_is_squared_overlap():
    # E(tau) = |<a|b>|^2 stays at |q|^2 for all tau
    rng = np.random.default_rng(304)
    for _ in range(50):
        a0, b0 = random_pair(rng, 3)
        s = SwapScenario(a0, b0)
        taus = rng.uniform(0, 15, size=20)
        a, b = analytic_sse_swap(s, taus)
        E = np.abs(np.einsum("ki,ki->k", a.conj(), b)) ** 2
        assert np.max(np.abs(E - abs(s.q) ** 2)) <= 1e-10


def test_sse_solution_orthogonal_pair_is_stationary():
    s = SwapScenario(UP, DOWN)
    assert abs(s.q) < 1e-12
    a, b = analytic_sse_swap(s, 7.3)
    assert np.array_equal(a, UP)
    assert np.array_equal(b, DOWN)


def test_sse_solution_satisfies_coupled_equations():
    """Five-point derivatives of the phase-restored factors obey the raw pair.

    The closed form drops a global phase; restoring exp(i |q|^2 tau / 2) on
    each factor makes i (<b|b> da + <b|db> a) = H_b a hold directly, with
    H_b the partial reduction of the exchange operator.
    """
    rng = np.random.default_rng(305)
    space = TensorSpace((3, 3))
    V = build_swap(3)
    checked = 0
    while checked < 50:
        a0, b0 = random_pair(rng, 3)
        s = SwapScenario(a0, b0)
        if abs(s.q) < 0.05:
            continue

        def restored(tau):
            a, b = analytic_sse_swap(s, tau)
            phase = np.exp(1j * abs(s.q) ** 2 * tau / 2)
            return a * phase, b * phase

        tau0 = rng.uniform(0.1, 6.0)
        h = 1e-3
        stencil = [restored(tau0 + k * h) for k in (-2, -1, 1, 2)]
        da = (stencil[0][0] - 8 * stencil[1][0] + 8 * stencil[2][0] - stencil[3][0]) / (12 * h)
        db = (stencil[0][1] - 8 * stencil[1][1] + 8 * stencil[2][1] - stencil[3][1]) / (12 * h)
        a, b = restored(tau0)
        state = ProductState([a, b])
        Hb = partial_reduce(V, state, 0, space)
        Ha = partial_reduce(V, state, 1, space)
        res_a = np.linalg.norm(1j * ((b.conj() @ b) * da + (b.conj() @ db) * a) - Hb @ a)
        res_b = np.linalg.norm(1j * ((a.conj() @ a) * db + (a.conj() @ da) * b) - Ha @ b)
        assert max(res_a, res_b) <= 1e-10
        checked += 1


def test_conserved_projector_sum_on_closed_form():
    rng = np.random.default_rng(306)
    a0, b0 = random_pair(rng, 3)
    s = SwapScenario(a0, b0)
    grid = TimeGrid(0.0, 2 * np.pi / abs(s.q), 500)
    A, B = analytic_sse_swap(s, grid.times)
    traj = Trajectory(grid, TensorSpace((3, 3)), factors=[A, B])
    assert conserved_C(s, traj) <= 1e-12


def test_conserved_projector_sum_on_numeric_run():
    s = SwapScenario(UP, PLUS)
    grid = TimeGrid(0.0, 2 * np.pi / abs(s.q), 4000)
    traj = evolve_sse_bipartite(swap_decomposition(2), UP, PLUS, grid, IntegratorConfig())
    assert conserved_C(s, traj) <= 1e-8


def test_conserved_projector_sum_stationary_case():
    s = SwapScenario(UP, DOWN)
    grid = TimeGrid(0.0, 2 * np.pi, 50)
    A, B = analytic_sse_swap(s, grid.times)
    traj = Trajectory(grid, TensorSpace((2, 2)), factors=[A, B])
    assert conserved_C(s, traj) == 0.0


def test_conserved_projector_needs_product_trajectory():
    s = SwapScenario(UP, PLUS)
    grid = TimeGrid(0.0, 1.0, 4)
    traj = Trajectory(grid, TensorSpace((4,)), states=np.ones((5, 4), dtype=complex))
    with pytest.raises(ValueError, match="two-party product"):
        conserved_C(s, traj)
