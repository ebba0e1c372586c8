"""Declarative run descriptions: TOML text in, validated ScenarioConfig out.

The grammar (documented in the README) has four top-level keys and three
sections::

    system = "qubit-pair"            # qubit-pair | boson-pair | custom | multipartite
    dims = [2, 2]                    # optional when the system implies it
    initial = ["up", "plus"]         # one state spec per party
    outputs = ["bloch", "schmidt"]   # optional observable columns

    [hamiltonian]
    kind = "swap"                    # swap | spin-spin | beam-splitter | matrix-literal
    kappa = 1.0
    n_max = 15                       # bosonic kinds only
    # real = [[...], ...]            # matrix-literal only; imag optional
    # imag = [[...], ...]

    [grid]
    tau_max = 6.2832
    steps = 2000                     # default: ceil(2000 * tau_max / (2 pi))

    [integrator]
    method = "spectral-exact"        # SE leg; the product-constrained leg is always rk4
    gauge = "zero-phase"
    renormalize_each_step = false
    tolerance = 1e-8

Unknown keys fail loudly with the key and section named; dimension clashes
name both offending fields.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dynamics import IntegratorConfig, TimeGrid
from .hamiltonians import (
    HamiltonianDecomposition,
    build_beam_splitter_approx,
    build_spin_spin,
    build_swap,
    coherent_state,
)
from .statespace import TensorSpace, assert_hermitian

__all__ = [
    "HamiltonianSpec",
    "ScenarioConfig",
    "ScenarioError",
    "config_from_data",
    "parse_scenario",
]

_SYSTEMS = ("qubit-pair", "boson-pair", "custom", "multipartite")
_KINDS = ("swap", "spin-spin", "beam-splitter", "matrix-literal")
_OUTPUTS = ("bloch", "phase_space", "schmidt", "fidelity_oracle")
_TOP_KEYS = ("system", "dims", "initial", "outputs", "hamiltonian", "grid", "integrator")
_HAM_KEYS = ("kind", "kappa", "n_max", "real", "imag")
_GRID_KEYS = ("tau_max", "steps")
_INT_KEYS = ("method", "gauge", "renormalize_each_step", "tolerance")

_STATE_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*(.*?)\s*\))?\s*$")


class ScenarioError(ValueError):
    """Raised for malformed or inconsistent scenario documents."""


@dataclass(frozen=True)
class HamiltonianSpec:
    """Which model to build, with its parameters resolved."""

    kind: str
    kappa: float = 1.0
    n_max: int = 15
    matrix: np.ndarray | None = None

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind, "kappa": self.kappa, "n_max": self.n_max}
        if self.matrix is not None:
            out["real"] = self.matrix.real.tolist()
            out["imag"] = self.matrix.imag.tolist()
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully validated run description; every field has its final value."""

    system: str
    dims: tuple[int, ...]
    hamiltonian: HamiltonianSpec
    initial: tuple[str, ...]
    grid: TimeGrid
    outputs: tuple[str, ...]
    integrator: IntegratorConfig
    steps_explicit: bool = False

    @property
    def space(self) -> TensorSpace:
        return TensorSpace(self.dims)

    @property
    def oracle_available(self) -> bool:
        """True when the run has a closed-form exchange-model reference."""
        return len(self.dims) == 2 and self.hamiltonian.kind in ("swap", "spin-spin")

    def build_decomposition(self) -> HamiltonianDecomposition:
        ham = self.hamiltonian
        space = self.space
        if ham.kind == "swap":
            d = self.dims[0]
            zeros = [np.zeros((dd, dd), dtype=complex) for dd in self.dims]
            return HamiltonianDecomposition(zeros, ham.kappa * build_swap(d), space)
        if ham.kind == "spin-spin":
            return build_spin_spin(ham.kappa)
        if ham.kind == "beam-splitter":
            return build_beam_splitter_approx(ham.kappa, ham.n_max)
        zeros = [np.zeros((dd, dd), dtype=complex) for dd in self.dims]
        return HamiltonianDecomposition(zeros, ham.matrix, space)

    def build_initial_states(self) -> list[np.ndarray]:
        return [
            _build_state(spec, i, self.dims[i], self.hamiltonian.n_max)
            for i, spec in enumerate(self.initial)
        ]

    def to_dict(self) -> dict:
        """Canonical plain-data form: the scenario-hash basis.

        Round-trips through :func:`config_from_data` (the grid is stored in
        grammar form, tau_max + steps, with tau_start pinned to 0).
        """
        return {
            "system": self.system,
            "dims": list(self.dims),
            "hamiltonian": self.hamiltonian.to_dict(),
            "initial": list(self.initial),
            "grid": {"tau_max": self.grid.tau_end, "steps": self.grid.steps},
            "outputs": list(self.outputs),
            "integrator": {
                "method": self.integrator.method,
                "gauge": self.integrator.gauge,
                "renormalize_each_step": self.integrator.renormalize_each_step,
                "tolerance": self.integrator.tolerance,
            },
        }


def _reject_unknown(section: dict, allowed: tuple[str, ...], where: str) -> None:
    for key in section:
        if key not in allowed:
            raise ScenarioError(
                f"unknown key '{key}' in {where} (allowed: {', '.join(allowed)})"
            )


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ScenarioError(f"missing required key '{key}' in {where}")
    return section[key]


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where} must be a number, got {value!r}")
    return float(value)


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where} must be an integer, got {value!r}")
    return value


def _parse_args(argtext: str | None, spec: str, party: int) -> list[float]:
    if argtext is None or argtext == "":
        return []
    try:
        return [float(tok) for tok in argtext.split(",")]
    except ValueError:
        raise ScenarioError(
            f"initial[{party}] = '{spec}': arguments must be comma-separated numbers"
        ) from None


def _build_state(spec: str, party: int, dim: int, n_max: int) -> np.ndarray:
    """One factor from its textual spec, normalized to unit length."""
    m = _STATE_RE.match(spec)
    if not m:
        raise ScenarioError(f"initial[{party}] = '{spec}' is not a recognized state spec")
    name, argtext = m.group(1), m.group(2)
    args = _parse_args(argtext, spec, party)
    if name in ("up", "down", "plus"):
        if dim != 2:
            raise ScenarioError(
                f"initial[{party}] = '{spec}' needs a two-level party, but dims[{party}] = {dim}"
            )
        vec = {
            "up": np.array([1, 0], dtype=complex),
            "down": np.array([0, 1], dtype=complex),
            "plus": np.array([1, 1], dtype=complex),
        }[name]
    elif name == "basis":
        if len(args) != 1 or args[0] != int(args[0]):
            raise ScenarioError(f"initial[{party}] = '{spec}': basis takes one integer index")
        k = int(args[0])
        if not 0 <= k < dim:
            raise ScenarioError(
                f"initial[{party}] = '{spec}': index {k} out of range for dims[{party}] = {dim}"
            )
        vec = np.zeros(dim, dtype=complex)
        vec[k] = 1.0
    elif name == "coherent":
        if len(args) != 2:
            raise ScenarioError(
                f"initial[{party}] = '{spec}': coherent takes (re, im) of the amplitude"
            )
        if dim != n_max + 1:
            raise ScenarioError(
                f"initial[{party}] = '{spec}' lives on a truncated mode of dim "
                f"{n_max + 1} (hamiltonian.n_max = {n_max}), but dims[{party}] = {dim}"
            )
        vec = coherent_state(complex(args[0], args[1]), n_max)
    elif name == "amplitudes":
        if len(args) == 0 or len(args) % 2 != 0:
            raise ScenarioError(
                f"initial[{party}] = '{spec}': amplitudes takes interleaved re, im pairs"
            )
        vec = np.array(
            [complex(args[2 * k], args[2 * k + 1]) for k in range(len(args) // 2)]
        )
        if vec.size != dim:
            raise ScenarioError(
                f"initial[{party}] yields dim {vec.size}, but dims[{party}] = {dim}"
            )
    else:
        raise ScenarioError(
            f"initial[{party}] = '{spec}': unknown state form '{name}' "
            "(use up, down, plus, basis(k), coherent(re,im), amplitudes(...))"
        )
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ScenarioError(f"initial[{party}] = '{spec}' is the zero vector")
    return vec / norm


def _parse_matrix(ham: dict, dims: tuple[int, ...]) -> np.ndarray:
    real = _require(ham, "real", "section 'hamiltonian' (matrix-literal)")
    try:
        mat = np.array(real, dtype=float).astype(complex)
        if "imag" in ham:
            mat = mat + 1j * np.array(ham["imag"], dtype=float)
    except (ValueError, TypeError):
        raise ScenarioError(
            "hamiltonian.real/imag must be rectangular numeric arrays"
        ) from None
    dim = int(np.prod(dims))
    if mat.ndim != 2 or mat.shape != (dim, dim):
        raise ScenarioError(
            f"hamiltonian matrix has shape {mat.shape}, but dims = {list(dims)} "
            f"implies ({dim}, {dim})"
        )
    try:
        assert_hermitian(mat, name="hamiltonian matrix")
    except ValueError as exc:
        raise ScenarioError(f"hamiltonian.real/imag rejected: {exc}") from None
    return mat


def _resolve_dims(data: dict, system: str, ham: dict) -> tuple[int, ...]:
    n_max = _as_int(ham.get("n_max", 15), "hamiltonian.n_max")
    if n_max < 1:
        raise ScenarioError(f"hamiltonian.n_max must be >= 1, got {n_max}")
    given = data.get("dims")
    if given is not None:
        if (
            not isinstance(given, list)
            or not given
            or any(isinstance(d, bool) or not isinstance(d, int) or d < 1 for d in given)
        ):
            raise ScenarioError("dims must be a non-empty list of positive integers")
        given = tuple(given)
    if system == "qubit-pair":
        if given is not None and given != (2, 2):
            raise ScenarioError(f"dims = {list(given)}, but system = 'qubit-pair' implies [2, 2]")
        return (2, 2)
    if system == "boson-pair":
        implied = (n_max + 1, n_max + 1)
        if given is not None and given != implied:
            raise ScenarioError(
                f"dims = {list(given)}, but system = 'boson-pair' with "
                f"hamiltonian.n_max = {n_max} implies {list(implied)}"
            )
        return implied
    if given is None:
        raise ScenarioError(f"system = '{system}' requires an explicit dims list")
    if system == "custom" and len(given) != 2:
        raise ScenarioError(
            f"system = 'custom' is bipartite, but dims = {list(given)} has {len(given)} entries"
        )
    return given


def _check_kind_dims(kind: str, dims: tuple[int, ...], n_max: int) -> None:
    if kind == "swap":
        if len(dims) != 2 or dims[0] != dims[1]:
            raise ScenarioError(
                f"hamiltonian.kind = 'swap' needs two equal dims, but dims = {list(dims)}"
            )
    elif kind == "spin-spin":
        if dims != (2, 2):
            raise ScenarioError(
                f"hamiltonian.kind = 'spin-spin' needs dims = [2, 2], but dims = {list(dims)}"
            )
    elif kind == "beam-splitter":
        if dims != (n_max + 1, n_max + 1):
            raise ScenarioError(
                f"hamiltonian.kind = 'beam-splitter' with n_max = {n_max} needs dims = "
                f"{[n_max + 1, n_max + 1]}, but dims = {list(dims)}"
            )


def _check_outputs(outputs, dims: tuple[int, ...], oracle_ok: bool) -> tuple[str, ...]:
    if not isinstance(outputs, list) or any(not isinstance(o, str) for o in outputs):
        raise ScenarioError("outputs must be a list of observable names")
    for name in outputs:
        if name not in _OUTPUTS:
            raise ScenarioError(
                f"unknown output '{name}' (allowed: {', '.join(_OUTPUTS)})"
            )
    if "bloch" in outputs and any(d != 2 for d in dims):
        raise ScenarioError(
            f"output 'bloch' needs every party two-dimensional, but dims = {list(dims)}"
        )
    if "schmidt" in outputs and len(dims) != 2:
        raise ScenarioError(
            f"output 'schmidt' needs exactly two parties, but dims = {list(dims)}"
        )
    if "fidelity_oracle" in outputs and not oracle_ok:
        raise ScenarioError(
            "output 'fidelity_oracle' needs an exchange-model hamiltonian "
            "(kind swap or spin-spin) on two parties"
        )
    return tuple(outputs)


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a scenario document; all defaults resolved on return."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"scenario text is not well-formed: {exc}") from None
    return config_from_data(data)


def config_from_data(data: dict) -> ScenarioConfig:
    """Validate an already-parsed scenario mapping (the --override entry point)."""
    _reject_unknown(data, _TOP_KEYS, "the top level")
    system = _require(data, "system", "the top level")
    if system not in _SYSTEMS:
        raise ScenarioError(f"unknown system '{system}' (allowed: {', '.join(_SYSTEMS)})")

    ham_sec = _require(data, "hamiltonian", "the top level")
    if not isinstance(ham_sec, dict):
        raise ScenarioError("'hamiltonian' must be a section")
    _reject_unknown(ham_sec, _HAM_KEYS, "section 'hamiltonian'")
    kind = _require(ham_sec, "kind", "section 'hamiltonian'")
    if kind not in _KINDS:
        raise ScenarioError(
            f"unknown hamiltonian.kind '{kind}' (allowed: {', '.join(_KINDS)})"
        )
    if kind != "matrix-literal" and ("real" in ham_sec or "imag" in ham_sec):
        raise ScenarioError(
            f"hamiltonian.real/imag only apply to kind = 'matrix-literal', not '{kind}'"
        )
    kappa = _as_float(ham_sec.get("kappa", 1.0), "hamiltonian.kappa")
    n_max = _as_int(ham_sec.get("n_max", 15), "hamiltonian.n_max")

    dims = _resolve_dims(data, system, ham_sec)
    _check_kind_dims(kind, dims, n_max)
    matrix = _parse_matrix(ham_sec, dims) if kind == "matrix-literal" else None
    ham = HamiltonianSpec(kind=kind, kappa=kappa, n_max=n_max, matrix=matrix)

    initial = _require(data, "initial", "the top level")
    if not isinstance(initial, list) or any(not isinstance(s, str) for s in initial):
        raise ScenarioError("initial must be a list of state-spec strings")
    if len(initial) != len(dims):
        raise ScenarioError(
            f"initial has {len(initial)} entries, but dims = {list(dims)} "
            f"names {len(dims)} parties"
        )

    grid_sec = _require(data, "grid", "the top level")
    if not isinstance(grid_sec, dict):
        raise ScenarioError("'grid' must be a section")
    _reject_unknown(grid_sec, _GRID_KEYS, "section 'grid'")
    tau_max = _as_float(_require(grid_sec, "tau_max", "section 'grid'"), "grid.tau_max")
    if not tau_max > 0:
        raise ScenarioError(f"grid.tau_max must be positive, got {tau_max}")
    steps_explicit = "steps" in grid_sec
    if steps_explicit:
        steps = _as_int(grid_sec["steps"], "grid.steps")
        if steps < 1:
            raise ScenarioError(f"grid.steps must be >= 1, got {steps}")
    else:
        steps = max(1, math.ceil(2000 * tau_max / (2 * math.pi)))
    grid = TimeGrid(0.0, tau_max, steps)

    int_sec = data.get("integrator", {})
    if not isinstance(int_sec, dict):
        raise ScenarioError("'integrator' must be a section")
    _reject_unknown(int_sec, _INT_KEYS, "section 'integrator'")
    renorm = int_sec.get("renormalize_each_step", False)
    if not isinstance(renorm, bool):
        raise ScenarioError("integrator.renormalize_each_step must be a boolean")
    try:
        integrator = IntegratorConfig(
            method=int_sec.get("method", "spectral-exact"),
            renormalize_each_step=renorm,
            gauge=int_sec.get("gauge", "zero-phase"),
            tolerance=_as_float(int_sec.get("tolerance", 1e-8), "integrator.tolerance"),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None

    oracle_ok = len(dims) == 2 and kind in ("swap", "spin-spin")
    outputs = _check_outputs(data.get("outputs", []), dims, oracle_ok)
    cfg = ScenarioConfig(
        system=system,
        dims=dims,
        hamiltonian=ham,
        initial=tuple(initial),
        grid=grid,
        outputs=outputs,
        integrator=integrator,
        steps_explicit=steps_explicit,
    )
    cfg.build_initial_states()
    return cfg
