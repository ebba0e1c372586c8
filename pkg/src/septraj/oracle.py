"""Closed-form reference trajectories for the exchange model.

For H = V (exchange, in units of hbar*kappa with tau = kappa*t) both the
unconstrained and the product-constrained evolutions have exact solutions
fixed entirely by the initial pair (a0, b0) and their overlap q = <a0|b0>.
These are the oracles the integrators are certified against.  Global phases
are dropped throughout (solutions of the product-constrained flow are only
defined up to one), so comparisons must use ``fidelity_up_to_phase``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statespace import as_ket

__all__ = ["SwapScenario", "analytic_se_swap", "analytic_sse_swap", "conserved_C"]

# overlaps below this magnitude count as orthogonal initial pairs
_Q_ZERO = 1e-12


@dataclass
class SwapScenario:
    """Initial product pair for the exchange model; caches q = <a0|b0>."""

    a0: np.ndarray
    b0: np.ndarray
    q: complex = 0j

    def __post_init__(self):
        self.a0 = as_ket(self.a0)
        self.b0 = as_ket(self.b0)
        if self.a0.size != self.b0.size:
            raise ValueError(
                f"initial factors must share a dimension, got {self.a0.size} and {self.b0.size}"
            )
        for name, v in (("a0", self.a0), ("b0", self.b0)):
            n = np.linalg.norm(v)
            if abs(n - 1.0) > 1e-9:
                raise ValueError(f"{name} must be normalized, got norm {n!r}")
        self.q = complex(np.vdot(self.a0, self.b0))


def analytic_se_swap(s: SwapScenario, tau) -> np.ndarray:
    """Unconstrained solution cos(tau)|a0, b0> - i sin(tau)|b0, a0>.

    ``tau`` may be a scalar or an array; the trailing axis is the state.
    """
    t = np.asarray(tau, dtype=float)
    u = np.kron(s.a0, s.b0)
    v = np.kron(s.b0, s.a0)
    return np.multiply.outer(np.cos(t), u) - 1j * np.multiply.outer(np.sin(t), v)


def analytic_sse_swap(s: SwapScenario, tau) -> tuple[np.ndarray, np.ndarray]:
    """Product-constrained factors at ``tau`` (scalar or array).

    a(tau) = cos(|q| tau) a0 - i (q*/|q|) sin(|q| tau) b0 and the mirrored
    expression for b.  The overall phase is dropped.  For |q| = 0 (orthogonal
    initial factors, here |q| < 1e-12) the pair is stationary and (a0, b0)
    is returned at every tau: the formula's q/|q| direction is undefined and
    the exact flow leaves orthogonal factors untouched.
    """
    t = np.asarray(tau, dtype=float)
    if abs(s.q) < _Q_ZERO:
        ones = np.ones_like(t)
        return (
            np.multiply.outer(ones, s.a0),
            np.multiply.outer(ones, s.b0),
        )
    u = s.q / abs(s.q)
    c = np.cos(abs(s.q) * t)
    sn = np.sin(abs(s.q) * t)
    a = np.multiply.outer(c, s.a0) - 1j * np.conj(u) * np.multiply.outer(sn, s.b0)
    b = np.multiply.outer(c, s.b0) - 1j * u * np.multiply.outer(sn, s.a0)
    return a, b


def conserved_C(s: SwapScenario, trajectory) -> float:
    """Max drift of |a><a| + |b><b| from its initial value along a trajectory.

    ``trajectory`` is a product-constrained Trajectory on two parties (or any
    object with per-party ``factors`` arrays of shape (n_steps+1, d)).  The
    drift is measured in the Frobenius norm against the projector sum built
    from the scenario's own (a0, b0).
    """
    factors = trajectory.factors
    if factors is None or len(factors) != 2:
        raise ValueError("conserved_C needs a two-party product trajectory")
    A, B = factors
    C0 = np.outer(s.a0, s.a0.conj()) + np.outer(s.b0, s.b0.conj())
    # batch of projector sums, one per step
    C = np.einsum("ki,kj->kij", A, A.conj()) + np.einsum("ki,kj->kij", B, B.conj())
    drift = C - C0[None, :, :]
    return float(np.max(np.sqrt(np.sum(np.abs(drift) ** 2, axis=(1, 2)))))
