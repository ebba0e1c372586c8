"""Model Hamiltonians: exchange, spin-spin, and truncated bosonic builders.

All builders work in units with hbar = 1.  A Hamiltonian is either a dense
matrix on the full space or a :class:`HamiltonianDecomposition` that keeps
the local parts and the interaction separate, which is what the
product-constrained integrator and the interaction-picture transform need.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .statespace import TensorSpace, as_ket, as_operator, assert_hermitian

__all__ = [
    "PAULI_0",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "HamiltonianDecomposition",
    "BosonicModeSpec",
    "build_swap",
    "build_spin_spin",
    "build_annihilation",
    "build_beam_splitter_approx",
    "coherent_state",
    "assemble",
    "effective_hamiltonian",
]

PAULI_0 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass
class HamiltonianDecomposition:
    """H = sum of embedded local parts plus an interaction on the full space.

    ``local_parts[n]`` acts on party n alone; ``interaction`` is a matrix on
    the full space and may be zero.  Nothing is symmetrized here; use
    ``validate`` to check shapes and Hermiticity explicitly.
    """

    local_parts: list[np.ndarray]
    interaction: np.ndarray
    space: TensorSpace

    def __post_init__(self):
        self.local_parts = [as_operator(h) for h in self.local_parts]
        self.interaction = as_operator(self.interaction)

    def validate(self, tol: float = 1e-12) -> None:
        if len(self.local_parts) != self.space.n_parties:
            raise ValueError(
                f"{len(self.local_parts)} local parts for {self.space.n_parties} parties"
            )
        for n, (h, d) in enumerate(zip(self.local_parts, self.space.party_dims)):
            if h.shape != (d, d):
                raise ValueError(f"local part {n} has shape {h.shape}, expected ({d}, {d})")
            assert_hermitian(h, tol, name=f"local part {n}")
        if self.interaction.shape != (self.space.dim, self.space.dim):
            raise ValueError(
                f"interaction has shape {self.interaction.shape}, expected "
                f"({self.space.dim}, {self.space.dim})"
            )
        assert_hermitian(self.interaction, tol, name="interaction")


@dataclass(frozen=True)
class BosonicModeSpec:
    """A single truncated mode holding a coherent amplitude.

    The Fock ladder is cut at ``n_max`` (dimension n_max + 1).  Amplitudes
    are restricted to |alpha| <= 1 so that the truncated coherent state
    keeps its norm defect below ``norm_tol``.
    """

    n_max: int
    alpha: complex
    norm_tol: float = 1e-6

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if abs(self.alpha) > 1.0:
            raise ValueError(
                f"|alpha| = {abs(self.alpha):.3f} exceeds 1; larger amplitudes are not "
                "representable at the supported truncations"
            )

    def ket(self) -> np.ndarray:
        """Truncated coherent state exp(-|a|^2/2) sum_n a^n/sqrt(n!) |n>."""
        n = np.arange(self.n_max + 1)
        log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, self.n_max + 1)))))
        amps = np.exp(-abs(self.alpha) ** 2 / 2) * self.alpha ** n * np.exp(-log_fact / 2)
        defect = abs(1.0 - np.linalg.norm(amps) ** 2)
        if defect > self.norm_tol:
            raise ValueError(
                f"coherent state truncated at n_max = {self.n_max} loses norm "
                f"{defect:.3e} > {self.norm_tol:.1e}; raise n_max"
            )
        return amps


def coherent_state(alpha: complex, n_max: int) -> np.ndarray:
    """Truncated coherent state; shorthand for BosonicModeSpec(n_max, alpha).ket()."""
    return BosonicModeSpec(n_max, alpha).ket()


def build_swap(d: int) -> np.ndarray:
    """Exchange operator V on two d-dimensional parties: V (u (x) v) = v (x) u.

    V is Hermitian, V^2 = 1, and its eigenvalues are +-1 (symmetric and
    antisymmetric subspaces).  Multiply by kappa for the physical generator.
    """
    if d < 1:
        raise ValueError(f"party dimension must be >= 1, got {d}")
    V = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            V[j * d + i, i * d + j] = 1.0
    return V


def build_spin_spin(kappa: float) -> HamiltonianDecomposition:
    """Two spin-1/2 parties: kappa/2 on the identity plus 2*kappa S_A . S_B.

    The sum collapses to kappa * swap(2); the decomposition keeps everything
    in the interaction slot (the local parts are zero).
    """
    space = TensorSpace((2, 2))
    spin = [PAULI_X / 2, PAULI_Y / 2, PAULI_Z / 2]
    inter = (kappa / 2) * np.kron(PAULI_0, PAULI_0)
    for s in spin:
        inter = inter + 2 * kappa * np.kron(s, s)
    zero = np.zeros((2, 2), dtype=complex)
    return HamiltonianDecomposition([zero, zero], inter, space)


def build_annihilation(n_max: int) -> np.ndarray:
    """Truncated lowering operator: <n-1| c |n> = sqrt(n), zero elsewhere."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    c = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    ns = np.arange(1, n_max + 1)
    c[ns - 1, ns] = np.sqrt(ns)
    return c


def build_beam_splitter_approx(kappa: float, n_max: int) -> HamiltonianDecomposition:
    """First-order exchange model for two truncated modes.

    kappa * (1 - a^dag a - b^dag b) split evenly between the two local
    parts, plus the hopping term kappa * (a^dag b + b^dag a) as the
    interaction.  The hopping commutes with the total photon number, and on
    the subspace with at most one photon in total the assembled matrix
    equals kappa * swap.  The model is taken as exact at this order; no
    higher corrections are generated.
    """
    c = build_annihilation(n_max)
    number = c.conj().T @ c
    eye = np.eye(n_max + 1, dtype=complex)
    local = kappa * (0.5 * eye - number)
    hop = kappa * (np.kron(c.conj().T, c) + np.kron(c, c.conj().T))
    space = TensorSpace((n_max + 1, n_max + 1))
    return HamiltonianDecomposition([local.copy(), local.copy()], hop, space)


def assemble(decomp: HamiltonianDecomposition) -> np.ndarray:
    """Dense matrix on the full space: embedded local parts plus interaction."""
    dims = decomp.space.party_dims
    if len(decomp.local_parts) != len(dims):
        raise ValueError(
            f"{len(decomp.local_parts)} local parts for {len(dims)} parties"
        )
    total = np.array(decomp.interaction, dtype=complex, copy=True)
    if total.shape != (decomp.space.dim, decomp.space.dim):
        raise ValueError(
            f"interaction has shape {total.shape}, expected square of dim {decomp.space.dim}"
        )
    for n, part in enumerate(decomp.local_parts):
        if part.shape != (dims[n], dims[n]):
            raise ValueError(f"local part {n} has shape {part.shape}, expected dim {dims[n]}")
        embedded = part
        for d in dims[:n][::-1]:
            embedded = np.kron(np.eye(d, dtype=complex), embedded)
        for d in dims[n + 1:]:
            embedded = np.kron(embedded, np.eye(d, dtype=complex))
        total += embedded
    return total


def _expi_hermitian(H: np.ndarray, t: float) -> np.ndarray:
    """exp(+i H t) through the eigendecomposition of Hermitian H."""
    w, U = np.linalg.eigh(H)
    return (U * np.exp(1j * w * t)) @ U.conj().T


def effective_hamiltonian(decomp: HamiltonianDecomposition, t: float) -> np.ndarray:
    """Interaction at time ``t`` in the frame co-rotating with the local parts.

    Conjugates the interaction by exp(+i H_local t) on each party.  Being a
    unitary conjugation, it preserves the interaction's eigenvalue multiset;
    the exponentials come from eigendecompositions, not series expansions.
    """
    if len(decomp.local_parts) != decomp.space.n_parties:
        raise ValueError("decomposition does not cover every party")
    for n, part in enumerate(decomp.local_parts):
        assert_hermitian(part, name=f"local part {n}")
    U = _expi_hermitian(decomp.local_parts[0], t)
    for part in decomp.local_parts[1:]:
        U = np.kron(U, _expi_hermitian(part, t))
    return U @ decomp.interaction @ U.conj().T
