"""Scenario-driven command line: run, verify, and sweep.

``run`` propagates one scenario under both flows and writes plot-ready CSV
plus a JSON run record.  ``verify`` runs the built-in invariant and oracle
checks and prints a pass/fail table.  ``sweep`` repeats a scenario over a
parameter list and emits one summary row per value.

Exit codes: 0 success, 1 failed checks or I/O trouble, 2 bad usage or a bad
scenario, 3 non-finite amplitudes during integration.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .analysis import (
    analytic_schmidt_swap,
    bloch_coords,
    compare_trajectories,
    phase_space_coords,
)
from .dynamics import (
    IntegratorConfig,
    Trajectory,
    evolve_se,
    evolve_sse_bipartite,
    evolve_sse_multipartite,
    party_labels,
)
from .hamiltonians import assemble
from .oracle import SwapScenario, analytic_se_swap, analytic_sse_swap
from .scenario import ScenarioConfig, ScenarioError, config_from_data, parse_scenario

__all__ = [
    "RunRecord",
    "cmd_run",
    "cmd_sweep",
    "cmd_verify",
    "main",
    "parse_scenario",
]

SCHEMA_VERSION = 1

# finite-difference floor for the projector-equation residual; the integrator
# itself is far more accurate than this
_VN_RESIDUAL_LIMIT = 1e-4

_SWEEPABLE = ("kappa", "q-angle", "tau_max", "steps", "n_max")


@dataclass
class RunRecord:
    """Machine-readable account of one CLI invocation.

    Everything except ``wall_clock_s`` is deterministic for a fixed scenario
    and tool version.
    """

    schema_version: int
    tool_version: str
    command: str
    scenario_sha256: str
    wall_clock_s: float
    checks: list[dict] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    sweep: dict | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _scenario_hash(cfg: ScenarioConfig) -> str:
    canon = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _fmt(x) -> str:
    # repr of a Python float is the shortest round-trip decimal form
    return repr(float(x))


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    n = len(columns[0])
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for k in range(n):
            f.write(",".join(_fmt(col[k]) for col in columns) + "\n")


def _first_bad_step(traj: Trajectory) -> int | None:
    finite = np.isfinite(traj.composite_states()).all(axis=1)
    if finite.all():
        return None
    return int(np.argmin(finite))


def _sse_config(cfg: ScenarioConfig, gauge: str | None = None) -> IntegratorConfig:
    # the product-constrained generator is state dependent, so this leg is
    # always stepped with rk4 whatever the SE leg uses
    return IntegratorConfig(
        method="rk4",
        renormalize_each_step=cfg.integrator.renormalize_each_step,
        gauge=gauge if gauge is not None else cfg.integrator.gauge,
        tolerance=cfg.integrator.tolerance,
    )


def _run_legs(cfg: ScenarioConfig, sse_gauge: str | None = None):
    decomp = cfg.build_decomposition()
    decomp.validate()
    space = cfg.space
    initials = cfg.build_initial_states()
    H = assemble(decomp)
    psi0 = initials[0]
    for f in initials[1:]:
        psi0 = np.kron(psi0, f)
    se = evolve_se(H, psi0, cfg.grid, cfg.integrator, space=space)
    icfg = _sse_config(cfg, sse_gauge)
    if space.n_parties == 2:
        sse = evolve_sse_bipartite(decomp, initials[0], initials[1], cfg.grid, icfg)
    else:
        sse = evolve_sse_multipartite(decomp, initials, cfg.grid, icfg)
    return decomp, initials, se, sse


def _check_finite(se: Trajectory, sse: Trajectory) -> int:
    for name, traj in (("se", se), ("sse", sse)):
        bad = _first_bad_step(traj)
        if bad is not None:
            print(
                f"error: non-finite amplitudes in the {name} trajectory, "
                f"first at step {bad} (tau = {traj.taus[bad]:.6g})",
                file=sys.stderr,
            )
            return 3
    return 0


def _batch_lambda_minus(states: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    dA, dB = dims
    sv = np.linalg.svd(states.reshape(-1, dA, dB), compute_uv=False)
    if sv.shape[1] < 2:
        return np.zeros(states.shape[0])
    return sv[:, 1] / np.linalg.norm(states, axis=1)


def _row_fidelity(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    ov = np.abs(np.einsum("ki,ki->k", X.conj(), Y))
    return ov / (np.linalg.norm(X, axis=1) * np.linalg.norm(Y, axis=1))


def _oracle_scenario(cfg: ScenarioConfig, initials) -> SwapScenario:
    return SwapScenario(initials[0], initials[1])


def _trajectory_columns(
    cfg: ScenarioConfig, traj: Trajectory, initials
) -> tuple[list[str], list[np.ndarray]]:
    """CSV header and data columns in the documented order.

    tau, per-party norms (one ``norm`` column for the composite run), the
    energy, the declared observables, then ``lambda_minus`` and
    ``fidelity_oracle`` when requested.
    """
    labels = party_labels(traj.space.n_parties)
    header = ["tau"]
    cols: list[np.ndarray] = [traj.taus]
    if traj.factors is not None:
        for lab in labels:
            header.append(f"norm_{lab}")
            cols.append(traj.records[f"norm_{lab}"])
    else:
        header.append("norm")
        cols.append(traj.records["norm"])
    header.append("energy")
    cols.append(traj.records["energy"])
    for name in cfg.outputs:
        if name == "bloch":
            for party, lab in enumerate(labels):
                xyz = bloch_coords(traj, party)
                for axis, comp in zip("xyz", xyz.T):
                    header.append(f"sigma_{axis}_{lab}")
                    cols.append(comp)
        elif name == "phase_space":
            for party, lab in enumerate(labels):
                xp = phase_space_coords(traj, party)
                header.extend([f"x_{lab}", f"p_{lab}"])
                cols.extend([xp[:, 0], xp[:, 1]])
    if "schmidt" in cfg.outputs:
        header.append("lambda_minus")
        cols.append(_batch_lambda_minus(traj.composite_states(), cfg.dims))
    if "fidelity_oracle" in cfg.outputs:
        s = _oracle_scenario(cfg, initials)
        phases = cfg.hamiltonian.kappa * traj.taus
        if traj.factors is not None:
            ao, bo = analytic_sse_swap(s, phases)
            fid = np.minimum(
                _row_fidelity(ao, traj.factors[0]),
                _row_fidelity(bo, traj.factors[1]),
            )
        else:
            fid = _row_fidelity(analytic_se_swap(s, phases), traj.states)
        header.append("fidelity_oracle")
        cols.append(fid)
    return header, cols


def cmd_run(cfg: ScenarioConfig, out_dir: Path) -> int:
    """Propagate both flows and write se.csv, sse.csv, and run.json."""
    t0 = time.perf_counter()
    decomp, initials, se, sse = _run_legs(cfg)
    rc = _check_finite(se, sse)
    if rc:
        return rc
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, traj in (("se", se), ("sse", sse)):
        header, cols = _trajectory_columns(cfg, traj, initials)
        path = out_dir / f"{name}.csv"
        _write_csv(path, header, cols)
        written.append(path.name)
        print(f"{name}: {len(traj.taus)} rows -> {path}")
    record = RunRecord(
        schema_version=SCHEMA_VERSION,
        tool_version=__version__,
        command="run",
        scenario_sha256=_scenario_hash(cfg),
        wall_clock_s=time.perf_counter() - t0,
        outputs=written,
    )
    (out_dir / "run.json").write_text(record.to_json(), encoding="utf-8")
    return 0


def _drift(series: np.ndarray) -> float:
    return float(np.max(np.abs(series - series[0])))


def _verify_checks(cfg: ScenarioConfig, initials, se, sse) -> list[dict]:
    tol = cfg.integrator.tolerance
    labels = party_labels(len(cfg.dims))
    checks = []

    def add(name: str, measured: float, threshold: float) -> None:
        checks.append(
            {
                "name": name,
                "passed": bool(measured <= threshold),
                "measured": float(measured),
                "threshold": float(threshold),
            }
        )

    add("se_norm_drift", _drift(se.records["norm"]), tol)
    add("se_energy_drift", _drift(se.records["energy"]), tol)
    add(
        "sse_norm_drift",
        max(_drift(sse.records[f"norm_{lab}"]) for lab in labels),
        tol,
    )
    add("sse_energy_drift", _drift(sse.records["energy"]), tol)
    add(
        "sse_projector_residual",
        max(float(np.max(sse.records[f"vn_residual_{lab}"])) for lab in labels),
        _VN_RESIDUAL_LIMIT,
    )
    if cfg.oracle_available:
        s = _oracle_scenario(cfg, initials)
        phases = cfg.hamiltonian.kappa * se.taus
        se_tol = 1e-10 if cfg.integrator.method == "spectral-exact" else 1e-8
        fid_se = _row_fidelity(analytic_se_swap(s, phases), se.states)
        add("se_oracle_infidelity", float(np.max(1.0 - fid_se)), se_tol)
        ao, bo = analytic_sse_swap(s, phases)
        fid_sse = np.minimum(
            _row_fidelity(ao, sse.factors[0]), _row_fidelity(bo, sse.factors[1])
        )
        add("sse_oracle_infidelity", float(np.max(1.0 - fid_sse)), 1e-8)
        lam_num = _batch_lambda_minus(se.states, cfg.dims)
        _, lam_ref = analytic_schmidt_swap(s.q, phases)
        add("schmidt_law_deviation", float(np.max(np.abs(lam_num - lam_ref))), se_tol)
    if len(cfg.dims) == 1:
        fid = _row_fidelity(sse.composite_states(), se.states)
        add("se_equivalence_infidelity", float(np.max(1.0 - fid)), 1e-10)
    return checks


def cmd_verify(cfg: ScenarioConfig, out_dir: Path | None = None) -> int:
    """Run the invariant and oracle checks; print a table; 0 iff all pass."""
    t0 = time.perf_counter()
    decomp, initials, se, sse = _run_legs(cfg)
    rc = _check_finite(se, sse)
    if rc:
        return rc
    checks = _verify_checks(cfg, initials, se, sse)
    width = max(len(c["name"]) for c in checks) + 2
    print(f"{'check':<{width}}{'status':<8}{'measured':<13}threshold")
    for c in checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(
            f"{c['name']:<{width}}{status:<8}{c['measured']:<13.3e}<= {c['threshold']:.1e}"
        )
    n_pass = sum(c["passed"] for c in checks)
    print(f"{n_pass}/{len(checks)} checks passed")
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        record = RunRecord(
            schema_version=SCHEMA_VERSION,
            tool_version=__version__,
            command="verify",
            scenario_sha256=_scenario_hash(cfg),
            wall_clock_s=time.perf_counter() - t0,
            checks=checks,
        )
        (out_dir / "verify.json").write_text(record.to_json(), encoding="utf-8")
    return 0 if n_pass == len(checks) else 1


def _apply_sweep_value(cfg: ScenarioConfig, parameter: str, value: float) -> ScenarioConfig:
    data = cfg.to_dict()
    # period estimation from the overlap phase needs the physical convention
    data["integrator"]["gauge"] = "physical"
    if parameter == "kappa":
        data["hamiltonian"]["kappa"] = float(value)
    elif parameter == "q-angle":
        if cfg.dims != (2, 2):
            raise ScenarioError(
                f"q-angle sweeps need two two-level parties, but dims = {list(cfg.dims)}"
            )
        c, s = float(np.cos(float(value))), float(np.sin(float(value)))
        data["initial"] = ["up", f"amplitudes({c!r}, 0, {s!r}, 0)"]
    elif parameter == "tau_max":
        data["grid"]["tau_max"] = float(value)
        if not cfg.steps_explicit:
            del data["grid"]["steps"]
    elif parameter == "steps":
        if value != int(value):
            raise ScenarioError(f"steps sweep values must be integers, got {value!r}")
        data["grid"]["steps"] = int(value)
    elif parameter == "n_max":
        if value != int(value):
            raise ScenarioError(f"n_max sweep values must be integers, got {value!r}")
        if cfg.system != "boson-pair":
            raise ScenarioError(
                f"n_max sweeps need system = 'boson-pair', got '{cfg.system}'"
            )
        data["hamiltonian"]["n_max"] = int(value)
        del data["dims"]
    else:
        raise ScenarioError(
            f"parameter '{parameter}' is not sweepable (choose from {', '.join(_SWEEPABLE)})"
        )
    return config_from_data(data)


def cmd_sweep(cfg: ScenarioConfig, parameter: str, values, out_dir: Path) -> int:
    """One run per value, in input order; writes sweep.csv and sweep.json."""
    if parameter not in _SWEEPABLE:
        raise ScenarioError(
            f"parameter '{parameter}' is not sweepable (choose from {', '.join(_SWEEPABLE)})"
        )
    t0 = time.perf_counter()
    header = [
        "parameter",
        "value",
        "q_abs",
        "se_period",
        "sse_period",
        "period_ratio",
        "max_lambda_minus_se",
        "max_norm_drift",
        "max_energy_drift",
    ]
    rows = []
    for value in values:
        cfg_v = _apply_sweep_value(cfg, parameter, value)
        decomp, initials, se, sse = _run_legs(cfg_v, sse_gauge="physical")
        rc = _check_finite(se, sse)
        if rc:
            print(f"error: sweep value {value!r} failed", file=sys.stderr)
            return rc
        report = compare_trajectories(se, sse)
        labels = party_labels(len(cfg_v.dims))
        q_abs = (
            abs(complex(np.vdot(initials[0], initials[1])))
            if len(cfg_v.dims) == 2
            else float("nan")
        )
        rows.append(
            [
                float(value),
                q_abs,
                report.se_period,
                report.sse_period,
                report.period_ratio,
                report.max_schmidt_minus_se,
                max(_drift(sse.records[f"norm_{lab}"]) for lab in labels),
                _drift(sse.records["energy"]),
            ]
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "sweep.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join([parameter] + [_fmt(x) for x in row]) + "\n")
    print(f"sweep: {len(rows)} rows -> {path}")
    record = RunRecord(
        schema_version=SCHEMA_VERSION,
        tool_version=__version__,
        command="sweep",
        scenario_sha256=_scenario_hash(cfg),
        wall_clock_s=time.perf_counter() - t0,
        outputs=["sweep.csv"],
        sweep={"parameter": parameter, "values": [float(v) for v in values]},
    )
    (out_dir / "sweep.json").write_text(record.to_json(), encoding="utf-8")
    return 0


def _parse_override(item: str) -> tuple[str, object]:
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ScenarioError(f"override '{item}' must look like key=value")
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw  # bare word: treat as a string
    return key, value


def _apply_overrides(data: dict, overrides) -> None:
    for item in overrides:
        dotted, value = _parse_override(item)
        parts = dotted.split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ScenarioError(
                    f"override '{dotted}' descends into '{p}', which is not a section"
                )
        node[parts[-1]] = value


def _load_config(args) -> ScenarioConfig:
    try:
        text = Path(args.scenario).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"scenario text is not well-formed: {exc}") from None
    _apply_overrides(data, args.override)
    return config_from_data(data)


def _parse_values(raw: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise ScenarioError(f"--values must be comma-separated numbers, got '{raw}'") from None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="septraj",
        description=(
            "Propagate composite quantum systems under the standard and the "
            "product-constrained Schroedinger flows, and check the built-in "
            "conservation and oracle properties."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required):
        p.add_argument("--scenario", required=True, help="scenario file (TOML)")
        p.add_argument(
            "--out",
            required=out_required,
            default=None,
            help="output directory" + ("" if out_required else " (optional)"),
        )
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a scenario entry (dotted path, TOML-typed value); repeatable",
        )

    p_run = sub.add_parser("run", help="propagate both flows and write CSV + JSON")
    common(p_run, out_required=True)
    p_verify = sub.add_parser("verify", help="run invariant and oracle checks")
    common(p_verify, out_required=False)
    p_sweep = sub.add_parser("sweep", help="repeat a scenario over a parameter list")
    common(p_sweep, out_required=True)
    p_sweep.add_argument("--parameter", required=True, choices=_SWEEPABLE)
    p_sweep.add_argument("--values", required=True, help="comma-separated values")

    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "run":
            return cmd_run(cfg, Path(args.out))
        if args.command == "verify":
            out = Path(args.out) if args.out else None
            return cmd_verify(cfg, out)
        values = _parse_values(args.values)
        return cmd_sweep(cfg, args.parameter, values, Path(args.out))
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
