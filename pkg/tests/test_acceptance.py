"""End-to-end acceptance checks.

Each test prints one verdict line (also echoed in the terminal summary):
the quantity measured, the bound it must meet, and the margin achieved.
Thresholds are part of the package contract, so they are asserted as-is.
"""
import math
import time

import numpy as np

from septraj import (
    HamiltonianDecomposition,
    IntegratorConfig,
    SwapScenario,
    TensorSpace,
    TimeGrid,
    action,
    analytic_schmidt_swap,
    analytic_se_swap,
    analytic_sse_swap,
    build_swap,
    coherent_state,
    compare_trajectories,
    evolve_se,
    evolve_sse_bipartite,
    evolve_sse_multipartite,
    lagrangian_values,
    phase_space_coords,
    schmidt_coefficients,
    see_solve,
)

REPORT = []

UP = np.array([1.0, 0.0], dtype=complex)
DOWN = np.array([0.0, 1.0], dtype=complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)


def _report(num, label, ok, detail):
    line = f"criterion {num:02d} {'PASS' if ok else 'FAIL'}  {label}: {detail}"
    REPORT.append(line)
    print(line)
    assert ok, line


def random_ket(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_hermitian(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (m + m.conj().T) / 2


def swap_decomposition(d, kappa=1.0):
    zero = np.zeros((d, d))
    return HamiltonianDecomposition([zero, zero], kappa * build_swap(d),
                                    TensorSpace((d, d)))


def row_fidelity(X, Y):
    ov = np.abs(np.einsum("ki,ki->k", X.conj(), Y))
    return ov / (np.linalg.norm(X, axis=1) * np.linalg.norm(Y, axis=1))


def drift(series):
    series = np.asarray(series)
    return float(np.abs(series - series[0]).max())


def test_criterion_01_constrained_flow_matches_closed_form():
    rng = np.random.default_rng(20240814)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 6))
        a0 = random_ket(rng, d)
        b0 = random_ket(rng, d)
        while abs(np.vdot(a0, b0)) < 0.15:  # keep the period bounded
            b0 = random_ket(rng, d)
        s = SwapScenario(a0, b0)
        period = 2 * np.pi / abs(s.q)
        steps = 2000 * math.ceil(period / (2 * np.pi))
        grid = TimeGrid(0, period, steps)
        traj = evolve_sse_bipartite(swap_decomposition(d), a0, b0, grid,
                                    IntegratorConfig())
        ao, bo = analytic_sse_swap(s, traj.taus)
        fid = np.minimum(row_fidelity(ao, traj.factors[0]),
                         row_fidelity(bo, traj.factors[1]))
        worst = max(worst, float((1 - fid).max()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 10.0
    _report(1, "factor flow vs closed form, 50 random pairs (dims 2-5)", ok,
            f"worst fidelity deficit {worst:.2e} (bound 1e-08), {elapsed:.2f} s (bound 10 s)")


def test_criterion_02_composite_flow_matches_closed_form():
    rng = np.random.default_rng(20240814 + 2)
    grid = TimeGrid(0, 2 * np.pi, 2000)
    pairs = [(UP, PLUS)] + [
        (random_ket(rng, d), random_ket(rng, d)) for d in (2, 3, 4, 5, 3)
    ]
    results = []
    ok = True
    for method, tol in (("spectral-exact", 1e-10), ("rk4", 1e-8)):
        worst = 0.0
        for a0, b0 in pairs:
            d = a0.size
            s = SwapScenario(a0, b0)
            traj = evolve_se(build_swap(d), np.kron(a0, b0), grid,
                             IntegratorConfig(method=method),
                             space=TensorSpace((d, d)))
            fid = row_fidelity(analytic_se_swap(s, traj.taus), traj.states)
            worst = max(worst, float((1 - fid).max()))
        ok = ok and worst <= tol
        results.append(f"{method} deficit {worst:.2e} (bound {tol:.0e})")
    _report(2, "composite flow vs closed form", ok, ", ".join(results))


def test_criterion_03_norm_and_energy_conservation():
    rng = np.random.default_rng(20240814 + 3)
    period = 2 * np.pi * np.sqrt(2)  # full constrained period for q = 1/sqrt(2)
    grid = TimeGrid(0, period, 2000 * math.ceil(period / (2 * np.pi)))
    traj = evolve_sse_bipartite(swap_decomposition(2), UP, PLUS, grid,
                                IntegratorConfig())
    worst = max(drift(traj.records["norm_a"]), drift(traj.records["norm_b"]),
                drift(traj.records["energy"]))
    grid = TimeGrid(0, 2 * np.pi, 2000)
    for _ in range(20):
        dA, dB = (int(x) for x in rng.integers(2, 5, size=2))
        parts = [random_hermitian(rng, dA), random_hermitian(rng, dB),
                 random_hermitian(rng, dA * dB)]
        # unit spectral norm: same grid resolution per unit of dynamical
        # phase as the exchange model above
        scale = max(np.linalg.norm(p, 2) for p in parts)
        decomp = HamiltonianDecomposition(
            [parts[0] / scale, parts[1] / scale], parts[2] / scale,
            TensorSpace((dA, dB)))
        traj = evolve_sse_bipartite(decomp, random_ket(rng, dA),
                                    random_ket(rng, dB), grid, IntegratorConfig())
        worst = max(worst, drift(traj.records["norm_a"]),
                    drift(traj.records["norm_b"]), drift(traj.records["energy"]))
    ok = worst <= 1e-8
    _report(3, "norm and energy drift, exchange + 20 random couplings", ok,
            f"worst drift {worst:.2e} (bound 1e-08)")


def test_criterion_04_period_stretches_by_inverse_overlap():
    worst_rel = 0.0
    details = []
    for q in (0.25, 0.5, 1 / np.sqrt(2), 0.9):
        b0 = np.array([q, np.sqrt(1 - q * q)], dtype=complex)
        tau_max = 1.2 * 2 * np.pi / q
        steps = 2000 * math.ceil(tau_max / (2 * np.pi))
        grid = TimeGrid(0, tau_max, steps)
        se = evolve_se(build_swap(2), np.kron(UP, b0), grid,
                       IntegratorConfig(method="spectral-exact"),
                       space=TensorSpace((2, 2)))
        sse = evolve_sse_bipartite(swap_decomposition(2), UP, b0, grid,
                                   IntegratorConfig(gauge="physical"))
        ratio = compare_trajectories(se, sse).period_ratio
        rel = abs(ratio - 1 / q) * q
        worst_rel = max(worst_rel, rel)
        details.append(f"|q|={q:.4f}: ratio {ratio:.4f}")
    ok = worst_rel <= 0.01
    _report(4, "period ratio equals 1/|q|", ok,
            "; ".join(details) + f"; worst relative error {worst_rel:.2e} (bound 1e-02)")


def test_criterion_05_schmidt_coefficient_law():
    rng = np.random.default_rng(20240814 + 5)
    worst = 0.0
    samples = 0
    for _ in range(10):
        d = int(rng.integers(2, 5))
        a0, b0 = random_ket(rng, d), random_ket(rng, d)
        s = SwapScenario(a0, b0)
        space = TensorSpace((d, d))
        grid = TimeGrid(0, 2 * np.pi, 400)
        traj = evolve_se(build_swap(d), np.kron(a0, b0), grid,
                         IntegratorConfig(method="spectral-exact"), space=space)
        for k in rng.integers(0, grid.steps + 1, size=20):
            lam = schmidt_coefficients(traj.states[k], space).coefficients
            lp, lm = analytic_schmidt_swap(s.q, traj.taus[k])
            worst = max(worst, abs(lam[0] - lp), abs(lam[1] - lm))
            samples += 1
    grid = TimeGrid(0, 2 * np.pi, 2000)
    space = TensorSpace((2, 2))
    traj = evolve_se(build_swap(2), np.kron(UP, PLUS), grid,
                     IntegratorConfig(method="spectral-exact"), space=space)
    worst_zero = 0.0
    for k in (0, 500, 1000, 1500, 2000):  # tau = multiples of pi/2
        lam = schmidt_coefficients(traj.states[k], space).coefficients
        worst_zero = max(worst_zero, lam[1])
    ok = worst <= 1e-10 and samples == 200 and worst_zero <= 1e-10
    _report(5, "Schmidt weights follow the overlap law", ok,
            f"worst deviation {worst:.2e} on {samples} samples, "
            f"worst lambda_minus at k*pi/2 {worst_zero:.2e} (bounds 1e-10)")


def test_criterion_06_stationary_pairs_stay_fixed():
    worst_fid = 0.0
    worst_eig = 0.0
    grid = TimeGrid(0, 2 * np.pi, 2000)
    for kappa in (1.0, 0.7):
        decomp = swap_decomposition(2, kappa)
        for seeds, expected in (((UP, UP), kappa), ((UP, DOWN), 0.0)):
            sol = see_solve(decomp, *seeds)
            worst_eig = max(worst_eig, abs(sol.eigenvalue - expected))
            traj = evolve_sse_bipartite(decomp, sol.a, sol.b, grid,
                                        IntegratorConfig())
            for f, init in zip(traj.factors, (sol.a, sol.b)):
                fid = row_fidelity(np.tile(init, (len(f), 1)), f)
                worst_fid = max(worst_fid, float((1 - fid).max()))
    ok = worst_fid <= 1e-8 and worst_eig <= 1e-10
    _report(6, "solver pairs are fixed points with eigenvalues {0, kappa}", ok,
            f"worst fidelity deficit {worst_fid:.2e} (bound 1e-08), "
            f"worst eigenvalue error {worst_eig:.2e} (bound 1e-10)")


def test_criterion_07_decoupled_factors_evolve_independently():
    rng = np.random.default_rng(20240814 + 7)
    grid = TimeGrid(0, 2 * np.pi, 2000)
    worst = 0.0
    for _ in range(5):
        dA, dB = (int(x) for x in rng.integers(2, 5, size=2))
        HA, HB = random_hermitian(rng, dA), random_hermitian(rng, dB)
        decomp = HamiltonianDecomposition(
            [HA, HB], np.zeros((dA * dB, dA * dB)), TensorSpace((dA, dB)))
        a0, b0 = random_ket(rng, dA), random_ket(rng, dB)
        sse = evolve_sse_bipartite(decomp, a0, b0, grid, IntegratorConfig())
        for party, (h, v0) in enumerate(((HA, a0), (HB, b0))):
            ref = evolve_se(h, v0, grid, IntegratorConfig(method="spectral-exact"))
            fid = row_fidelity(ref.states, sse.factors[party])
            worst = max(worst, float((1 - fid).max()))
    ok = worst <= 1e-9
    _report(7, "zero coupling reduces to independent local flows", ok,
            f"worst fidelity deficit {worst:.2e} (bound 1e-09)")


def test_criterion_08_multipartite_flow():
    rng = np.random.default_rng(20240814 + 8)
    grid = TimeGrid(0, 2 * np.pi, 2000)
    H = random_hermitian(rng, 3)
    psi0 = random_ket(rng, 3)
    single = evolve_sse_multipartite(
        HamiltonianDecomposition([H], np.zeros((3, 3)), TensorSpace((3,))),
        [psi0], grid, IntegratorConfig())
    ref = evolve_se(H, psi0, grid, IntegratorConfig(method="spectral-exact"))
    dev_single = float((1 - row_fidelity(ref.states, single.factors[0])).max())

    dims = (2, 3, 2)
    decomp = HamiltonianDecomposition(
        [random_hermitian(rng, d) for d in dims],
        random_hermitian(rng, 12), TensorSpace(dims))
    traj3 = evolve_sse_multipartite(decomp, [random_ket(rng, d) for d in dims],
                                    grid, IntegratorConfig())
    drift3 = max(drift(traj3.records["energy"]),
                 *(drift(traj3.records[f"norm_{k}"]) for k in "123"))

    pair_only = HamiltonianDecomposition(
        [np.zeros((2, 2))] * 3, np.kron(build_swap(2), np.eye(2)),
        TensorSpace((2, 2, 2)))
    c0 = random_ket(rng, 2)
    traj_e = evolve_sse_multipartite(pair_only, [UP, PLUS, c0], grid,
                                     IntegratorConfig())
    dev_bystander = float(
        (1 - row_fidelity(np.tile(c0, (grid.steps + 1, 1)), traj_e.factors[2])).max())

    ok = dev_single <= 1e-10 and drift3 <= 1e-8 and dev_bystander <= 1e-9
    _report(8, "one-party flow, three-party conservation, idle third party", ok,
            f"single-party deficit {dev_single:.2e} (bound 1e-10), "
            f"three-party drift {drift3:.2e} (bound 1e-08), "
            f"bystander deficit {dev_bystander:.2e} (bound 1e-09)")


def test_criterion_09_coherent_exchange_geometry():
    alpha = np.exp(1j * np.pi / 4) / 2
    a0 = coherent_state(alpha, 15)
    b0 = coherent_state(-alpha, 15)
    q = abs(np.vdot(a0, b0))
    dev_q = abs(q - np.exp(-0.5))
    grid = TimeGrid(0, 2 * np.pi / q, 4000)
    space = TensorSpace((16, 16))
    se = evolve_se(build_swap(16), np.kron(a0, b0), grid,
                   IntegratorConfig(method="spectral-exact"), space=space)
    sse = evolve_sse_bipartite(swap_decomposition(16), a0, b0, grid,
                               IntegratorConfig())
    axis = np.array([alpha.real, alpha.imag])
    axis /= np.linalg.norm(axis)
    transverse = np.array([-axis[1], axis[0]])
    reach = {}
    for name, traj in (("se", se), ("sse", sse)):
        xp = phase_space_coords(traj, 0)
        reach[name] = float(np.abs(xp @ transverse).max())
    margin = 1 - reach["se"] / reach["sse"]
    ok = dev_q <= 1e-6 and reach["se"] < reach["sse"] and margin > 0.10
    _report(9, "mode overlap and oval widths for coherent exchange", ok,
            f"|q - exp(-1/2)| = {dev_q:.2e} (bound 1e-06), oval half-widths "
            f"se {reach['se']:.5f} < sse {reach['sse']:.5f}, margin {margin:.1%} (bound 10%)")


def test_criterion_10_on_shell_action_vanishes():
    decomp = swap_decomposition(2)
    period = 2 * np.pi * np.sqrt(2)
    grid = TimeGrid(0, period, 4000)
    space = TensorSpace((2, 2))
    se = evolve_se(build_swap(2), np.kron(UP, PLUS), grid,
                   IntegratorConfig(method="spectral-exact"), space=space)
    sse = evolve_sse_bipartite(decomp, UP, PLUS, grid, IntegratorConfig())
    worst_L = max(float(np.abs(lagrangian_values(t, decomp)).max()) for t in (se, sse))
    s_se = action(se, decomp)
    s_sse = action(sse, decomp)
    ok = worst_L <= 1e-6 and max(abs(s_se), abs(s_sse)) <= 1e-5
    _report(10, "Lagrangian and action vanish along both flows", ok,
            f"worst |L| {worst_L:.2e} (bound 1e-06), S_se = {s_se:.2e}, "
            f"S_sse = {s_sse:.2e} (bounds 1e-05; no ordering asserted)")
