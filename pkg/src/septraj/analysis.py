"""Derived quantities: Schmidt spectra, observable tracks, actions, fixed points.

Everything here consumes :class:`~septraj.dynamics.Trajectory` objects or
plain states; nothing integrates.  Comparisons between unconstrained and
product-constrained runs (periods, per-step deltas, entanglement onset)
live in :func:`compare_trajectories`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import Trajectory, _batch_reductions
from .hamiltonians import HamiltonianDecomposition, assemble, build_annihilation
from .statespace import (
    ProductState,
    TensorSpace,
    as_ket,
    fidelity_up_to_phase,
    partial_reduce,
    reduced_density,
    tensor_product,
)

__all__ = [
    "SchmidtResult",
    "SeeSolution",
    "ComparisonReport",
    "schmidt_coefficients",
    "analytic_schmidt_swap",
    "bloch_coords",
    "phase_space_coords",
    "lagrangian_values",
    "action",
    "see_solve",
    "estimate_period",
    "compare_trajectories",
]

_PAULIS = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass
class SchmidtResult:
    """Schmidt form of a bipartite ket: psi = sum_k c_k (left_k (x) right_k).

    ``coefficients`` are sorted descending; ``left`` holds the party-0
    vectors as columns and ``right`` the party-1 vectors as rows, so that
    ``sum_k coefficients[k] * kron(left[:, k], right[k, :])`` rebuilds psi.
    """

    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        acc = np.zeros(self.left.shape[0] * self.right.shape[1], dtype=complex)
        for k, c in enumerate(self.coefficients):
            acc += c * np.kron(self.left[:, k], self.right[k, :])
        return acc


@dataclass
class SeeSolution:
    """A stationary product pair: both reductions share ``eigenvalue``.

    ``residual`` bounds both ||H_b a - E a|| and ||H_a b - E b|| for the
    returned unit-norm factors.
    """

    a: np.ndarray
    b: np.ndarray
    eigenvalue: float
    residual: float
    iterations: int
    converged: bool


@dataclass
class ComparisonReport:
    """Side-by-side diagnostics for one unconstrained and one constrained run."""

    taus: np.ndarray
    deltas: dict[str, np.ndarray] = field(default_factory=dict)
    fidelity_gap: np.ndarray | None = None
    se_period: float = float("nan")
    sse_period: float = float("nan")
    period_ratio: float = float("nan")
    max_schmidt_minus_se: float = float("nan")
    action_se: float = float("nan")
    action_sse: float = float("nan")


def schmidt_coefficients(psi, space: TensorSpace) -> SchmidtResult:
    """Schmidt decomposition of a two-party ket via the SVD of its amplitude matrix."""
    v = as_ket(psi)
    if space.n_parties != 2:
        raise ValueError(f"Schmidt form needs exactly two parties, got {space.n_parties}")
    if v.size != space.dim:
        raise ValueError(f"state dim {v.size} does not match the space dim {space.dim}")
    dA, dB = space.party_dims
    U, s, Vh = np.linalg.svd(v.reshape(dA, dB), full_matrices=False)
    return SchmidtResult(coefficients=s, left=U, right=Vh)


def analytic_schmidt_swap(q: complex, tau):
    """Closed-form Schmidt pair of the exchange-model unconstrained state.

    lambda_pm = sqrt((1 pm sqrt(1 - sin^2(2 tau) (1 - |q|^2)^2)) / 2), with
    q the initial overlap.  ``tau`` may be scalar or array; returns
    (lambda_plus, lambda_minus).  The subdominant one vanishes exactly at
    tau = k*pi/2 and for |q| = 1.
    """
    if abs(q) > 1 + 1e-12:
        raise ValueError(f"|q| = {abs(q):.6f} exceeds 1; overlaps obey Cauchy-Schwarz")
    t = np.asarray(tau, dtype=float)
    inner = 1.0 - np.sin(2 * t) ** 2 * (1 - abs(q) ** 2) ** 2
    root = np.sqrt(np.clip(inner, 0.0, 1.0))
    lp = np.sqrt((1 + root) / 2)
    lm = np.sqrt(np.clip(1 - root, 0.0, None) / 2)
    if np.isscalar(tau):
        return float(lp), float(lm)
    return lp, lm


def _party_track(traj: Trajectory, party: int, op: np.ndarray) -> np.ndarray:
    """Per-step expectation of a single-party operator (complex array)."""
    traj.space.check_party(party)
    d = traj.space.party_dims[party]
    if op.shape != (d, d):
        raise ValueError(f"operator shape {op.shape} does not fit party dim {d}")
    if traj.factors is not None:
        F = traj.factors[party]
        num = np.einsum("ki,ij,kj->k", F.conj(), op, F)
        den = np.einsum("ki,ki->k", F.conj(), F).real
        return num / den
    dims = traj.space.party_dims
    t = traj.states.reshape((-1,) + dims)
    t = np.moveaxis(t, 1 + party, 1).reshape(t.shape[0], d, -1)
    rho = np.einsum("kir,kjr->kij", t, t.conj())
    tr = np.einsum("kii->k", rho).real
    return np.einsum("kij,ji->k", rho, op) / tr


def bloch_coords(traj: Trajectory, party: int) -> np.ndarray:
    """(n_steps+1, 3) array of Pauli expectations for a dim-2 party.

    Product runs use the pure factor (unit-length coordinates); composite
    runs use the reduced density matrix, whose coordinates shrink inside the
    sphere as the parties entangle.
    """
    if traj.space.party_dims[traj.space.check_party(party)] != 2:
        raise ValueError("Bloch coordinates need a two-dimensional party")
    cols = [_party_track(traj, party, p).real for p in _PAULIS]
    return np.stack(cols, axis=1)


def phase_space_coords(traj: Trajectory, party: int) -> np.ndarray:
    """(n_steps+1, 2) array of (Re<c>, Im<c>) for a truncated mode."""
    d = traj.space.party_dims[traj.space.check_party(party)]
    if d < 2:
        raise ValueError("phase-space coordinates need a party dim >= 2")
    c = build_annihilation(d - 1)
    track = _party_track(traj, party, c)
    return np.stack([track.real, track.imag], axis=1)


def lagrangian_values(traj: Trajectory, decomp: HamiltonianDecomposition) -> np.ndarray:
    """Per-step on-shell Lagrangian with equation-of-motion derivatives.

    Evaluates (i/2)(<psi|dpsi> - <dpsi|psi>) - <psi|H|psi> with dpsi taken
    from the generating equation, not from finite differences: the SE
    substitutes dpsi = -i H psi; the product-constrained form substitutes
    the coupled factor equations in the physical phase convention
    (symmetric split).  Both make L vanish identically on solutions, so the
    track doubles as a consistency check at the rounding floor.
    """
    H = assemble(decomp)
    if traj.states is not None:
        S = traj.states
        hs = S @ H.T
        energy = np.einsum("ki,ki->k", S.conj(), hs).real
        s = -1j * np.einsum("ki,ki->k", S.conj(), hs)
        return (0.5j * (s - s.conj())).real - energy
    dims = decomp.space.party_dims
    if dims != traj.space.party_dims:
        raise ValueError(
            f"decomposition space {dims} does not match trajectory space "
            f"{traj.space.party_dims}"
        )
    N = len(dims)
    F = traj.factors
    S = traj.composite_states()
    hs = S @ H.T
    norm2 = np.einsum("ki,ki->k", S.conj(), S).real
    energy = np.einsum("ki,ki->k", S.conj(), hs).real
    e_norm = energy / norm2
    sq_norms = [np.einsum("ki,ki->k", F[l].conj(), F[l]).real for l in range(N)]
    s = np.zeros(S.shape[0], dtype=complex)
    for l in range(N):
        red = _batch_reductions(H, dims, F, l)
        v = np.einsum("kij,kj->ki", red, F[l])
        dxl = -1j * (v - ((N - 1) / N) * e_norm[:, None] * F[l])
        others = np.ones(S.shape[0])
        for m in range(N):
            if m != l:
                others = others * sq_norms[m]
        s += np.einsum("ki,ki->k", F[l].conj(), dxl) * others
    return (0.5j * (s - s.conj())).real - energy


def action(traj: Trajectory, decomp: HamiltonianDecomposition) -> float:
    """Trapezoidal quadrature of the on-shell Lagrangian along the trajectory."""
    return float(np.trapezoid(lagrangian_values(traj, decomp), traj.taus))


def _select_eigvec(Hred: np.ndarray, current: np.ndarray) -> tuple[np.ndarray, float]:
    """Eigenvector of Hred with maximal overlap against ``current``.

    Ties (within 1e-12 of the max overlap) resolve to the lowest eigenvalue
    and then the lowest index; eigh already orders eigenvalues ascending.
    The returned vector is phase-aligned with ``current``.
    """
    w, U = np.linalg.eigh(Hred)
    ov = np.abs(U.conj().T @ current)
    best = float(np.max(ov))
    k = int(np.nonzero(ov >= best - 1e-12)[0][0])
    v = U[:, k]
    p = np.vdot(v, current)
    if abs(p) > 0:
        v = v * (p / abs(p))
    return v, float(w[k])


def see_solve(
    decomp: HamiltonianDecomposition,
    a_init,
    b_init,
    max_iters: int = 100,
    tol: float = 1e-10,
) -> SeeSolution:
    """Alternating eigenvector iteration for stationary product pairs.

    Freezes b, replaces a by the eigenvector of the b-reduction closest to
    the current a, then mirrors the move for b, until both residuals
    ||H_b a - E a|| and ||H_a b - E b|| fall below ``tol`` with
    E = <a,b|H|a,b>.  Non-convergence is reported through the flag, not an
    exception: the returned pair is the best iterate either way.
    """
    space = decomp.space
    if space.n_parties != 2:
        raise ValueError("the fixed-point solver works on two parties")
    H = assemble(decomp)
    a = as_ket(a_init).astype(complex)
    b = as_ket(b_init).astype(complex)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    energy = 0.0
    residual = float("inf")
    iterations = 0
    for iterations in range(1, max_iters + 1):
        Hb = partial_reduce(H, ProductState([a, b]), 0, space)
        a, _ = _select_eigvec(Hb, a)
        Ha = partial_reduce(H, ProductState([a, b]), 1, space)
        b, _ = _select_eigvec(Ha, b)
        psi = tensor_product([a, b])
        energy = float(np.vdot(psi, H @ psi).real)
        Hb = partial_reduce(H, ProductState([a, b]), 0, space)
        Ha = partial_reduce(H, ProductState([a, b]), 1, space)
        residual = max(
            float(np.linalg.norm(Hb @ a - energy * a)),
            float(np.linalg.norm(Ha @ b - energy * b)),
        )
        if residual <= tol:
            return SeeSolution(a, b, energy, residual, iterations, True)
    return SeeSolution(a, b, energy, residual, iterations, False)


def estimate_period(taus: np.ndarray, overlaps: np.ndarray, band: float = 1e-4) -> float:
    """Period from the complex overlap series c_k = <psi_0|psi(tau_k)>.

    Main path: twice the time of the first local maximum of |c| above
    1 - band, after the series has first left that band, refined by a
    parabola through the three bracketing samples (the trajectory crosses
    the initial ray twice per cycle, at the half period with flipped sign
    and at the full period exactly).  If |c| never leaves the band the ray
    is stationary and the period comes from the phase slope of c (inf when
    the phase is flat too).  Returns nan when no return happens inside the
    sampled window.
    """
    taus = np.asarray(taus, dtype=float)
    f = np.abs(np.asarray(overlaps))
    thr = 1.0 - band
    below = f < thr
    if not below.any():
        theta = np.unwrap(np.angle(overlaps))
        x = taus - taus[0]
        denom = float(np.dot(x, x))
        slope = float(np.dot(x, theta - theta[0])) / denom if denom > 0 else 0.0
        if abs(slope) < 1e-12:
            return float("inf")
        return 2 * np.pi / abs(slope)
    first_dip = int(np.argmax(below))
    interior = np.arange(1, len(f) - 1)
    mask = (
        (interior > first_dip)
        & (f[interior] >= thr)
        & (f[interior] >= f[interior - 1])
        & (f[interior] >= f[interior + 1])
    )
    hits = interior[mask]
    if hits.size == 0:
        return float("nan")
    k = int(hits[0])
    h = taus[1] - taus[0]
    denom = f[k - 1] - 2 * f[k] + f[k + 1]
    delta = 0.5 * (f[k - 1] - f[k + 1]) / denom if denom < 0 else 0.0
    if not abs(delta) <= 1.0:
        delta = 0.0
    t_peak = taus[k] + delta * h
    return 2 * (t_peak - taus[0])


def _overlap_series(traj: Trajectory) -> np.ndarray:
    S = traj.composite_states()
    norms = np.linalg.norm(S, axis=1)
    return (S @ S[0].conj()) / (norms * norms[0])


def compare_trajectories(se: Trajectory, sse: Trajectory) -> ComparisonReport:
    """Per-step deltas, period estimates, and entanglement onset for a pair of runs.

    The two runs must share a time grid.  ``deltas`` holds sse - se for the
    record keys both carry; ``fidelity_gap`` is 1 minus the per-step overlap
    magnitude between the composite states, the direct measure of where the
    product constraint starts to bite.  The period ratio is sse/se.
    """
    if se.grid.steps != sse.grid.steps or not np.allclose(se.taus, sse.taus):
        raise ValueError("the two trajectories must share a time grid")
    report = ComparisonReport(taus=se.taus)
    for key in sorted(set(se.records) & set(sse.records)):
        if se.records[key].shape == sse.records[key].shape:
            report.deltas[key] = sse.records[key] - se.records[key]
    S1 = se.composite_states()
    S2 = sse.composite_states()
    ov = np.einsum("ki,ki->k", S1.conj(), S2)
    report.fidelity_gap = 1.0 - np.abs(ov) / (
        np.linalg.norm(S1, axis=1) * np.linalg.norm(S2, axis=1)
    )
    report.se_period = estimate_period(se.taus, _overlap_series(se))
    report.sse_period = estimate_period(sse.taus, _overlap_series(sse))
    if np.isfinite(report.se_period) and report.se_period > 0:
        report.period_ratio = report.sse_period / report.se_period
    space = sse.space if sse.space.n_parties == 2 else se.space
    if space.n_parties == 2:
        dA, dB = space.party_dims
        sv = np.linalg.svd(S1.reshape(-1, dA, dB), compute_uv=False)
        if sv.shape[1] >= 2:
            norms = np.linalg.norm(S1, axis=1)
            report.max_schmidt_minus_se = float(np.max(sv[:, 1] / norms))
        else:
            report.max_schmidt_minus_se = 0.0
    if "lagrangian" in se.records:
        report.action_se = float(np.trapezoid(se.records["lagrangian"], se.taus))
    if "lagrangian" in sse.records:
        report.action_sse = float(np.trapezoid(sse.records["lagrangian"], sse.taus))
    return report
