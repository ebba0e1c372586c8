"""States, operators, and tensor-space bookkeeping for composite systems.

Pure states are plain 1-D complex numpy arrays and operators are dense
complex matrices; this module keeps dimension bookkeeping, tensor products,
and partial reductions in one place.  Everything works in units with
hbar = 1 and a dimensionless time variable.

Hermiticity is never enforced silently: callers that need the guarantee run
``assert_hermitian`` themselves.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TensorSpace",
    "ProductState",
    "as_ket",
    "as_operator",
    "assert_hermitian",
    "tensor_product",
    "partial_reduce",
    "reduced_density",
    "fidelity_up_to_phase",
]

_AXIS_LETTERS = string.ascii_lowercase + string.ascii_uppercase


def as_ket(amplitudes) -> np.ndarray:
    """Coerce ``amplitudes`` to a finite, nonempty 1-D complex vector."""
    v = np.asarray(amplitudes, dtype=complex)
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"a state vector must be 1-D and nonempty, got shape {v.shape}")
    if not np.all(np.isfinite(v.view(float))):
        raise ValueError("state vector contains non-finite amplitudes")
    return v


def as_operator(matrix) -> np.ndarray:
    """Coerce ``matrix`` to a square 2-D complex array."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"an operator must be a square matrix, got shape {m.shape}")
    return m


def assert_hermitian(op: np.ndarray, tol: float = 1e-12, name: str = "operator") -> None:
    """Raise ValueError if ``op`` deviates from its adjoint by more than ``tol``.

    The deviation is reported entrywise (max abs difference) so a failure
    message localizes the defect instead of hiding it behind symmetrization.
    """
    m = as_operator(op)
    defect = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if defect > tol:
        i, j = np.unravel_index(np.argmax(np.abs(m - m.conj().T)), m.shape)
        raise ValueError(
            f"{name} is not Hermitian: max |M - M^dag| = {defect:.3e} at entry "
            f"({i}, {j}) exceeds tol = {tol:.1e}"
        )


@dataclass(frozen=True)
class TensorSpace:
    """Composite Hilbert space as an ordered list of party dimensions.

    Party 0 varies slowest in the flattened index, matching the usual
    Kronecker-product convention (``kron(a, b)`` puts ``a`` on party 0).
    """

    party_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.party_dims)
        if len(dims) < 1 or any(d < 1 for d in dims):
            raise ValueError(f"party dimensions must all be >= 1, got {self.party_dims}")
        object.__setattr__(self, "party_dims", dims)

    @property
    def n_parties(self) -> int:
        return len(self.party_dims)

    @property
    def dim(self) -> int:
        out = 1
        for d in self.party_dims:
            out *= d
        return out

    def check_party(self, party: int) -> int:
        if not 0 <= party < self.n_parties:
            raise ValueError(f"party index {party} out of range for {self.n_parties} parties")
        return party


@dataclass
class ProductState:
    """One state vector per party.  Factors are kept as given (not renormalized)."""

    factors: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.factors = [as_ket(f) for f in self.factors]

    @property
    def n_parties(self) -> int:
        return len(self.factors)

    def norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(f) for f in self.factors])

    def composite(self) -> np.ndarray:
        return tensor_product(self.factors)

    def check_space(self, space: TensorSpace) -> None:
        dims = tuple(f.size for f in self.factors)
        if dims != space.party_dims:
            raise ValueError(
                f"product state has factor dims {dims} but the space expects "
                f"{space.party_dims}"
            )


def tensor_product(factors) -> np.ndarray:
    """Kronecker product of the factors, party 0 slowest."""
    if isinstance(factors, ProductState):
        factors = factors.factors
    factors = [as_ket(f) for f in factors]
    if not factors:
        raise ValueError("tensor_product needs at least one factor")
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def partial_reduce(H, state: ProductState, keep: int, space: TensorSpace) -> np.ndarray:
    """Trace ``H`` against the projectors of every party except ``keep``.

    Returns the operator on party ``keep`` obtained by contracting H with
    |f_n><f_n| for each other party n, i.e. the reduction that drives one
    factor of a product state.  The factor stored at ``keep`` is ignored.
    The result is Hermitian whenever H is, and satisfies
    <x, y| H |x, y> == <x| reduce(H; y) |x> on two parties.
    """
    if isinstance(state, (list, tuple)):
        state = ProductState(list(state))
    space.check_party(keep)
    state.check_space(space)
    H = as_operator(H)
    if H.shape[0] != space.dim:
        raise ValueError(
            f"operator dim {H.shape[0]} does not match the space dim {space.dim}"
        )
    dims = space.party_dims
    n = space.n_parties
    if 2 * n > len(_AXIS_LETTERS):
        raise ValueError(f"too many parties ({n}) for the contraction table")
    T = H.reshape(dims + dims)
    rows = _AXIS_LETTERS[:n]
    cols = _AXIS_LETTERS[n:2 * n]
    script = rows + cols
    operands: list[np.ndarray] = [T]
    for p, f in enumerate(state.factors):
        if p == keep:
            continue
        # row index contracts with the bra, column index with the ket
        operands.extend((f.conj(), f))
        script += f",{rows[p]},{cols[p]}"
    script += f"->{rows[keep]}{cols[keep]}"
    return np.einsum(script, *operands)


def reduced_density(psi, space: TensorSpace, keep: int) -> np.ndarray:
    """Partial trace of |psi><psi| down to party ``keep`` (not normalized)."""
    v = as_ket(psi)
    space.check_party(keep)
    if v.size != space.dim:
        raise ValueError(f"state dim {v.size} does not match the space dim {space.dim}")
    t = v.reshape(space.party_dims)
    t = np.moveaxis(t, keep, 0).reshape(space.party_dims[keep], -1)
    return t @ t.conj().T


def fidelity_up_to_phase(u, v) -> float:
    """|<u|v>| / (||u|| ||v||): overlap magnitude, insensitive to global phase."""
    u = as_ket(u)
    v = as_ket(v)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("fidelity is undefined for a zero vector")
    return float(abs(np.vdot(u, v)) / (nu * nv))
