"""Time evolution, unconstrained (SE) and product-constrained (SSE).

The SE path propagates a composite state under i dpsi/dtau = H psi, either
through the spectral decomposition of H (exact up to rounding) or with
fixed-step RK4.

The SSE path propagates one factor per party.  The coupled equations fix
each factor's ray but leave a global phase per factor free (only the sum of
the phase rates is determined).  The integrator therefore advances the
zero-phase representative

    i dx_l/dtau = (H_l - E) x_l,      <x_l | dx_l/dtau> = 0,

where H_l is the reduction of H against the projectors of every other
party's current factor and E is the full expectation value, both recomputed
at every RK4 stage.  With gauge="physical" the factors are rephased after
the fact by exp(-i Phi(tau)/N) with Phi the accumulated integral of E: the
coupled equations determine only the sum of the per-factor phase rates, and
the symmetric split is the convention used throughout.

Norms are never renormalized unless asked: norm drift is the cheapest
honest diagnostic of integration error.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np

from .hamiltonians import HamiltonianDecomposition, assemble
from .statespace import ProductState, TensorSpace, as_ket, as_operator, assert_hermitian

__all__ = [
    "TimeGrid",
    "IntegratorConfig",
    "Trajectory",
    "evolve_se",
    "evolve_sse_bipartite",
    "evolve_sse_multipartite",
    "gauge_fix",
]

_METHODS = ("spectral-exact", "rk4")
_GAUGES = ("physical", "zero-phase")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid with ``steps`` intervals between tau_start and tau_end."""

    tau_start: float
    tau_end: float
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not self.tau_end > self.tau_start:
            raise ValueError(
                f"tau_end ({self.tau_end}) must exceed tau_start ({self.tau_start})"
            )

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.tau_start, self.tau_end, self.steps + 1)

    @property
    def dt(self) -> float:
        return (self.tau_end - self.tau_start) / self.steps


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    renormalize_each_step: bool = False
    gauge: str = "zero-phase"
    tolerance: float = 1e-8

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        if self.gauge not in _GAUGES:
            raise ValueError(f"gauge must be one of {_GAUGES}, got {self.gauge!r}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")


def party_labels(n: int) -> list[str]:
    """Column/record suffixes per party: a/b for two parties, 1..N otherwise."""
    if n == 2:
        return ["a", "b"]
    return [str(i + 1) for i in range(n)]


@dataclass
class Trajectory:
    """States on a time grid plus per-step diagnostic records.

    Exactly one of ``states`` (composite kets, shape (steps+1, dim)) or
    ``factors`` (one (steps+1, d_party) array per party) is set, for SE and
    SSE runs respectively.  ``records`` maps names to per-step arrays.
    """

    grid: TimeGrid
    space: TensorSpace
    states: np.ndarray | None = None
    factors: list[np.ndarray] | None = None
    records: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if (self.states is None) == (self.factors is None):
            raise ValueError("exactly one of states/factors must be provided")

    @property
    def kind(self) -> str:
        return "se" if self.states is not None else "sse"

    @property
    def taus(self) -> np.ndarray:
        return self.grid.times

    @property
    def n_steps(self) -> int:
        return self.grid.steps

    def composite_states(self) -> np.ndarray:
        """Per-step composite kets; built from the factors for SSE runs."""
        if self.states is not None:
            return self.states
        out = self.factors[0]
        for f in self.factors[1:]:
            out = np.einsum("ki,kj->kij", out, f).reshape(out.shape[0], -1)
        return out

    def product_state(self, step: int) -> ProductState:
        if self.factors is None:
            raise ValueError("not a product-state trajectory")
        return ProductState([f[step] for f in self.factors])


def _cumtrapz(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def _check_hamiltonian(H, dim: int) -> np.ndarray:
    H = as_operator(H)
    if H.shape[0] != dim:
        raise ValueError(f"Hamiltonian dim {H.shape[0]} does not match state dim {dim}")
    assert_hermitian(H, name="Hamiltonian")
    return H


# ---------------------------------------------------------------------------
# SE evolution
# ---------------------------------------------------------------------------

def evolve_se(
    H,
    psi0,
    grid: TimeGrid,
    cfg: IntegratorConfig,
    *,
    space: TensorSpace | None = None,
) -> Trajectory:
    """Propagate i dpsi/dtau = H psi for Hermitian H.

    method="spectral-exact" uses the eigendecomposition of H (error at the
    rounding floor at any step count); method="rk4" does fixed-step RK4 and
    carries the usual O(dt^4) global error.  ``space`` optionally tags the
    trajectory with a party split (for reduced-state analyses); the plain
    flow never looks at it.
    """
    psi0 = as_ket(psi0)
    H = _check_hamiltonian(H, psi0.size)
    if space is not None and space.dim != psi0.size:
        raise ValueError(f"space dim {space.dim} does not match state dim {psi0.size}")
    taus = grid.times
    if cfg.method == "spectral-exact":
        w, U = np.linalg.eigh(H)
        coeff = U.conj().T @ psi0
        phases = np.exp(-1j * np.multiply.outer(taus - grid.tau_start, w))
        states = (phases * coeff) @ U.T
    else:
        states = np.empty((grid.steps + 1, psi0.size), dtype=complex)
        states[0] = psi0
        u = psi0.astype(complex).copy()
        k1 = np.empty_like(u)
        k2 = np.empty_like(u)
        k3 = np.empty_like(u)
        k4 = np.empty_like(u)
        stage = np.empty_like(u)
        for k in range(grid.steps):
            h = taus[k + 1] - taus[k]
            c2 = -0.5j * h
            np.matmul(H, u, out=k1)
            np.multiply(k1, c2, out=stage)
            stage += u
            np.matmul(H, stage, out=k2)
            np.multiply(k2, c2, out=stage)
            stage += u
            np.matmul(H, stage, out=k3)
            np.multiply(k3, -1j * h, out=stage)
            stage += u
            np.matmul(H, stage, out=k4)
            k1 += k4
            k2 += k3
            k2 *= 2.0
            k1 += k2
            k1 *= -1j * h / 6.0
            u += k1
            if cfg.renormalize_each_step:
                u /= np.linalg.norm(u)
            states[k + 1] = u
    if space is None:
        space = TensorSpace((psi0.size,))
    traj = Trajectory(grid=grid, space=space, states=states)
    _attach_se_records(traj, H)
    return traj


def _attach_se_records(traj: Trajectory, H: np.ndarray) -> None:
    S = traj.states
    hs = S @ H.T
    energy = np.einsum("ki,ki->k", S.conj(), hs).real
    norm = np.linalg.norm(S, axis=1)
    # on-shell Lagrangian with the equation-of-motion derivative dpsi = -i H psi:
    # kinetic term (i/2)(<psi|dpsi> - c.c.) minus <psi|H|psi>
    s = -1j * np.einsum("ki,ki->k", S.conj(), hs)
    kinetic = (0.5j * (s - s.conj())).real
    traj.records.update(norm=norm, energy=energy, lagrangian=kinetic - energy)


# ---------------------------------------------------------------------------
# SSE evolution
# ---------------------------------------------------------------------------

def evolve_sse_bipartite(
    decomp: HamiltonianDecomposition,
    a0,
    b0,
    grid: TimeGrid,
    cfg: IntegratorConfig,
) -> Trajectory:
    """Product-constrained evolution of a two-party system.

    Advances the zero-phase form with the reductions H_b (driving a) and
    H_a (driving b) rebuilt at every RK4 stage.  Records factor norms, the
    energy E = <a,b|H|a,b>, the on-shell Lagrangian, and the per-party
    residuals of i dP/dtau = [H_other, P] estimated by finite differences.
    """
    if decomp.space.n_parties != 2:
        raise ValueError(f"expected a two-party space, got {decomp.space.n_parties}")
    return evolve_sse_multipartite(decomp, [a0, b0], grid, cfg)


def evolve_sse_multipartite(
    decomp: HamiltonianDecomposition,
    factors,
    grid: TimeGrid,
    cfg: IntegratorConfig,
) -> Trajectory:
    """Product-constrained evolution with one factor per party (N >= 1).

    Each factor obeys i dx_l/dtau = (H_l - E) x_l with H_l the reduction of
    the assembled H against every other party's projector.  With one party
    the reduction is H itself and the flow is the SE up to a global phase.
    """
    space = decomp.space
    fs0 = [as_ket(f) for f in factors]
    ProductState(fs0).check_space(space)
    if cfg.method != "rk4":
        raise ValueError(
            "product-constrained evolution has a state-dependent generator; "
            "only method='rk4' applies"
        )
    H = _check_hamiltonian(assemble(decomp), space.dim)
    taus = grid.times
    if space.n_parties == 2:
        stored = _sse_rk4_two_party(H, space.party_dims, fs0, taus, cfg.renormalize_each_step)
    else:
        stored = _sse_rk4_generic(H, space.party_dims, fs0, taus, cfg.renormalize_each_step)
    _rephase_zero(stored, H, taus)
    traj = Trajectory(grid=grid, space=space, factors=stored)
    _attach_sse_records(traj, H)
    if cfg.gauge == "physical":
        _restore_physical_phases(traj)
    return traj


def _sse_rk4_two_party(H, dims, fs0, taus, renormalize) -> list[np.ndarray]:
    # hot loop: preallocated buffers, precreated views, np.dot instead of
    # matmul (lower dispatch cost at these sizes), -i folded into the matrix
    # so every step scalar is real (the acceptance runs push ~10^5 steps).
    # The stepped form is i dx = H_b x, i dy = H_a y: the energy term of the
    # zero-phase form only rotates a global phase per factor, so it is
    # restored after the fact by _rephase_zero instead of inside the loop.
    dA, dB = dims
    n = len(taus) - 1
    Hm = -1j * H
    out = np.empty((n + 1, dA + dB), dtype=complex)
    u = np.concatenate([fs0[0].astype(complex), fs0[1].astype(complex)])
    out[0] = u
    uc = np.empty_like(u)
    ucx = uc[:dA]
    ucy = uc[dA:]
    psi = np.empty((dA, dB), dtype=complex)
    pf = psi.reshape(-1)
    hpsi = np.empty(dA * dB, dtype=complex)
    z = hpsi.reshape(dA, dB)
    uX = u[:dA].reshape(dA, 1)
    uY = u[dA:].reshape(1, dB)
    stage = np.empty_like(u)
    sX = stage[:dA].reshape(dA, 1)
    sY = stage[dA:].reshape(1, dB)
    gs = []
    for _ in range(4):
        g = np.empty_like(u)
        gs.append((g, g[:dA], g[dA:]))
    (g1, g1x, g1y), (g2, g2x, g2y), (g3, g3x, g3y), (g4, g4x, g4y) = gs

    def rhs(v, vX, vY, gx, gy) -> None:
        # (gx, gy) <- (-i H_b x, -i H_a y): the true derivatives
        np.conjugate(v, out=uc)
        np.multiply(vX, vY, out=psi)
        np.dot(Hm, pf, out=hpsi)
        np.dot(z, ucy, out=gx)
        np.dot(ucx, z, out=gy)

    h = taus[1] - taus[0]
    a2 = 0.5 * h
    a6 = h / 6.0
    for k in range(n):
        rhs(u, uX, uY, g1x, g1y)
        np.multiply(g1, a2, out=stage)
        stage += u
        rhs(stage, sX, sY, g2x, g2y)
        np.multiply(g2, a2, out=stage)
        stage += u
        rhs(stage, sX, sY, g3x, g3y)
        np.multiply(g3, h, out=stage)
        stage += u
        rhs(stage, sX, sY, g4x, g4y)
        g1 += g4
        g2 += g3
        g2 *= 2.0
        g1 += g2
        g1 *= a6
        u += g1
        if renormalize:
            u[:dA] /= np.linalg.norm(u[:dA])
            u[dA:] /= np.linalg.norm(u[dA:])
        out[k + 1] = u
    return [np.ascontiguousarray(out[:, :dA]), np.ascontiguousarray(out[:, dA:])]


def _sse_rk4_generic(H, dims, fs0, taus, renormalize) -> list[np.ndarray]:
    N = len(dims)
    n = len(taus) - 1
    stored = [np.empty((n + 1, d), dtype=complex) for d in dims]
    fs = [f.astype(complex).copy() for f in fs0]
    for l in range(N):
        stored[l][0] = fs[l]

    def rhs(cur: list[np.ndarray]) -> list[np.ndarray]:
        # i dx_l = H_l x_l; the global-phase term is restored post hoc
        psi = cur[0]
        for f in cur[1:]:
            psi = np.kron(psi, f)
        z = (H @ psi).reshape(dims)
        gs = []
        for l in range(N):
            v = z
            axes = list(range(N))
            for m in range(N):
                if m == l:
                    continue
                pos = axes.index(m)
                v = np.tensordot(cur[m].conj(), v, axes=([0], [pos]))
                axes.remove(m)
            gs.append(v)
        return gs

    for k in range(n):
        h = taus[k + 1] - taus[k]
        c2 = -0.5j * h
        g1 = rhs(fs)
        g2 = rhs([f + c2 * g for f, g in zip(fs, g1)])
        g3 = rhs([f + c2 * g for f, g in zip(fs, g2)])
        g4 = rhs([f - 1j * h * g for f, g in zip(fs, g3)])
        for l in range(N):
            fs[l] = fs[l] - (1j * h / 6.0) * (g1[l] + 2 * g2[l] + 2 * g3[l] + g4[l])
            if renormalize:
                fs[l] /= np.linalg.norm(fs[l])
            stored[l][k + 1] = fs[l]
    return stored


def _rephase_zero(stored: list[np.ndarray], H: np.ndarray, taus: np.ndarray) -> None:
    """Rotate integrator output into the zero-phase convention, in place.

    The stepped flow leaves each factor with an extra exp(-i Phi) relative
    to the zero-phase form (<x|dx/dtau> = 0), with Phi the integral of the
    normalized energy; both conventions share rays and norms.  Phi is exact
    for stationary states (E constant) and carries the trapezoid's O(h^2)
    error otherwise, well under the phase tolerances anything downstream
    asserts.
    """
    S = stored[0]
    for f in stored[1:]:
        S = np.einsum("ki,kj->kij", S, f).reshape(S.shape[0], -1)
    energy = np.einsum("ki,ki->k", S.conj(), S @ H.T).real
    norm2 = np.einsum("ki,ki->k", S.conj(), S).real
    phase = np.exp(1j * _cumtrapz(energy / norm2, taus))
    for f in stored:
        f *= phase[:, None]


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

def _batch_reductions(H: np.ndarray, dims, factors, keep: int) -> np.ndarray:
    """Per-step reduction of H onto party ``keep``: shape (n_steps+1, d, d)."""
    N = len(dims)
    if N == 1:
        # nothing to trace against: the reduction is H itself at every step
        return np.broadcast_to(H, (factors[0].shape[0],) + H.shape)
    T = H.reshape(dims + dims)
    rows = string.ascii_lowercase[:N]
    cols = string.ascii_lowercase[N:2 * N]
    script = rows + cols
    operands: list[np.ndarray] = [T]
    for p in range(N):
        if p == keep:
            continue
        operands.extend((factors[p].conj(), factors[p]))
        script += f",z{rows[p]},z{cols[p]}"
    script += f"->z{rows[keep]}{cols[keep]}"
    return np.einsum(script, *operands, optimize=True)


def _fd_derivative(arr: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """Second-order finite-difference d/dtau along axis 0 (uniform grid)."""
    h = taus[1] - taus[0]
    d = np.empty_like(arr)
    if len(taus) < 3:
        d[:] = (arr[-1] - arr[0]) / (taus[-1] - taus[0])
        return d
    d[1:-1] = (arr[2:] - arr[:-2]) / (2 * h)
    d[0] = (-3 * arr[0] + 4 * arr[1] - arr[2]) / (2 * h)
    d[-1] = (3 * arr[-1] - 4 * arr[-2] + arr[-3]) / (2 * h)
    return d


def _attach_sse_records(traj: Trajectory, H: np.ndarray) -> None:
    dims = traj.space.party_dims
    N = len(dims)
    labels = party_labels(N)
    taus = traj.taus
    F = traj.factors
    S = traj.composite_states()
    hs = S @ H.T
    norm2 = np.einsum("ki,ki->k", S.conj(), S).real
    energy = np.einsum("ki,ki->k", S.conj(), hs).real
    for l in range(N):
        traj.records[f"norm_{labels[l]}"] = np.linalg.norm(F[l], axis=1)
    traj.records["energy"] = energy

    # reductions per party per step, reused by the Lagrangian and the
    # projector-evolution residuals
    reductions = [_batch_reductions(H, dims, F, l) for l in range(N)]

    # on-shell Lagrangian with equation-of-motion derivatives in the
    # physical phase convention (symmetric split of the total phase rate):
    # i dx_l = H_l x_l - ((N-1)/N) E x_l
    e_norm = energy / norm2
    s = np.zeros(len(taus), dtype=complex)
    sq_norms = [np.einsum("ki,ki->k", F[l].conj(), F[l]).real for l in range(N)]
    for l in range(N):
        v = np.einsum("kij,kj->ki", reductions[l], F[l])
        dxl = -1j * (v - ((N - 1) / N) * e_norm[:, None] * F[l])
        others = np.ones(len(taus))
        for m in range(N):
            if m != l:
                others = others * sq_norms[m]
        s += np.einsum("ki,ki->k", F[l].conj(), dxl) * others
    kinetic = (0.5j * (s - s.conj())).real
    traj.records["lagrangian"] = kinetic - energy

    if len(taus) >= 3:
        for l in range(N):
            P = np.einsum("ki,kj->kij", F[l], F[l].conj())
            dP = _fd_derivative(P, taus)
            comm = np.einsum("kij,kjl->kil", reductions[l], P) - np.einsum(
                "kij,kjl->kil", P, reductions[l]
            )
            resid = 1j * dP - comm
            traj.records[f"vn_residual_{labels[l]}"] = np.sqrt(
                np.sum(np.abs(resid) ** 2, axis=(1, 2))
            )


def _restore_physical_phases(traj: Trajectory) -> None:
    """Rephase zero-phase factors into the physical convention.

    The flow determines only the sum of the factor phase rates (-E); the
    symmetric split assigns exp(-i Phi/N) to each of the N factors, with
    Phi the cumulative trapezoid of E.
    """
    N = len(traj.factors)
    phi = _cumtrapz(traj.records["energy"], traj.taus)
    phase = np.exp(-1j * phi / N)
    for l in range(N):
        traj.factors[l] *= phase[:, None]
    traj.records["gauge_phase"] = -phi / N


# ---------------------------------------------------------------------------
# Gauge fixing
# ---------------------------------------------------------------------------

def gauge_fix(traj: Trajectory, decomp: HamiltonianDecomposition) -> Trajectory:
    """Return the trajectory with each factor parallel-transported in phase.

    Output factors satisfy <x_k | x_{k+1}> real and >= 0 for consecutive
    steps, the discrete form of <x|dx/dtau> = 0; applying gauge_fix twice
    changes nothing (the phase corrections are identically zero the second
    time).  The applied angles are recorded per party as
    ``gauge_fix_phase_<label>`` (original = exp(+i angle) * fixed), and for
    two parties the phase-rate asymmetry i(<a|da> - <b|db>), estimated by
    finite differences on the input factors, is recorded as ``phi``.
    """
    if traj.factors is None:
        raise ValueError("gauge_fix applies to product-state trajectories")
    if decomp.space.party_dims != traj.space.party_dims:
        raise ValueError(
            f"decomposition space {decomp.space.party_dims} does not match "
            f"trajectory space {traj.space.party_dims}"
        )
    n1 = traj.n_steps + 1
    N = len(traj.factors)
    labels = party_labels(N)
    fixed: list[np.ndarray] = []
    records = dict(traj.records)
    for l, F in enumerate(traj.factors):
        X = np.array(F, copy=True)
        theta = np.zeros(n1)
        for k in range(1, n1):
            # X[k-1] is already transported, X[k] still carries its raw phase
            ov = np.vdot(X[k - 1], X[k])
            ph = float(np.angle(ov)) if ov != 0 else 0.0
            if ph != 0.0:
                X[k] *= np.exp(-1j * ph)
            theta[k] = ph
        fixed.append(X)
        records[f"gauge_fix_phase_{labels[l]}"] = theta
    if N == 2 and n1 >= 3:
        da = _fd_derivative(traj.factors[0], traj.taus)
        db = _fd_derivative(traj.factors[1], traj.taus)
        sa = np.einsum("ki,ki->k", traj.factors[0].conj(), da)
        sb = np.einsum("ki,ki->k", traj.factors[1].conj(), db)
        records["phi"] = (1j * (sa - sb)).real
    return Trajectory(grid=traj.grid, space=traj.space, factors=fixed, records=records)
