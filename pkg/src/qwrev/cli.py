"""``qwrev`` command line: run walk experiments and write CSV/JSON results.

Exit codes: 0 success, 2 configuration error, 3 numerical check failed,
4 protocol inapplicable because a coin spectrum is degenerate.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
import time
from dataclasses import fields
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from qwrev import __version__
from qwrev.coinspace import (
    CoinOperator,
    CoinParams,
    build_coin,
    build_d,
    build_g,
    explicit_coin,
    grover_coin,
    params_match,
    tensor_coin,
)
from qwrev.config import (
    ConfigError,
    ExperimentConfig,
    load_matrix_json,
    parse_complex,
    read_config_file,
)
from qwrev.errors import ContractError, DegenerateSpectrum, QWalkError, VerificationError
from qwrev.numerics import min_circular_gap, normalize
from qwrev.reversion import run_periodic, scan_intervention_times, verify_reversal_identity, verify_return
from qwrev.spectral import momentum_evolve, run_protocol, spectral_grid, verify_full_cycle
from qwrev.walk import (
    InterventionSchedule,
    LatticeSpec,
    WalkerState,
    evolve,
    position_distribution,
)

log = logging.getLogger("qwrev")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DEGENERATE = 0, 2, 3, 4

# torus edge used by the spectral mode when no lattice is given
SPECTRAL_DEFAULT_EDGE = {1: 64, 2: 16}
SPECTRAL_DEFAULT_EDGE_HIGH = 8


class Table:
    """A CSV-able block of rows; ``suffix`` is ``None`` for the primary table."""

    def __init__(self, name: str, columns: list[str], rows: list[list[Any]], suffix: str | None = None):
        self.name = name
        self.columns = columns
        self.rows = rows
        self.suffix = suffix

    def as_json(self) -> dict[str, Any]:
        return {"columns": self.columns, "rows": self.rows}


def cplx(z: complex) -> dict[str, float]:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


# --------------------------------------------------------------------------
# config resolution
# --------------------------------------------------------------------------


def _params(cfg: ExperimentConfig) -> CoinParams:
    theta = math.pi / 4 if cfg.coin == "hadamard" else cfg.theta
    try:
        return CoinParams(theta, cfg.phi1, cfg.phi2)
    except ContractError as exc:
        raise ConfigError("theta/phi1/phi2", str(exc)) from None


def _power(op: CoinOperator, n: int) -> CoinOperator:
    return tensor_coin([op] * n)


def resolve_coin(cfg: ExperimentConfig) -> CoinOperator:
    n = cfg.dim
    try:
        if cfg.coin in ("param", "hadamard"):
            return _power(build_coin(_params(cfg)), n)
        if cfg.coin == "grover":
            return grover_coin(2**n)
        if cfg.coin == "product":
            parts = [s for s in cfg.factors.split(";") if s.strip()]
            if len(parts) != n:
                raise ConfigError("factors", f"need {n} factors for dim {n}, got {len(parts)}")
            coins = []
            for part in parts:
                vals = [parse_complex(v).real for v in part.split(":")]
                if not 1 <= len(vals) <= 3:
                    raise ConfigError("factors", f"factor {part!r} must be theta[:phi1[:phi2]]")
                coins.append(build_coin(CoinParams(*vals)))
            return tensor_coin(coins)
        m = load_matrix_json(cfg.coin_file)
        coin = explicit_coin(m, "file")
    except (OSError, KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("coin", str(exc)) from None
    if coin.dim != 2**n:
        raise ConfigError("coin_file", f"matrix dim {coin.dim} does not match dim {n}")
    return coin


def resolve_intervention(cfg: ExperimentConfig) -> CoinOperator:
    try:
        if cfg.intervention == "g":
            g1 = cfg.phi1 if cfg.g_phi1 is None else cfg.g_phi1
            g2 = cfg.phi2 if cfg.g_phi2 is None else cfg.g_phi2
            return _power(build_g(g1, g2), cfg.dim)
        g = explicit_coin(load_matrix_json(cfg.intervention_file), "file")
    except (OSError, KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("intervention", str(exc)) from None
    if g.dim != 2**cfg.dim:
        raise ConfigError("intervention_file", f"matrix dim {g.dim} does not match dim {cfg.dim}")
    return g


def resolve_lattice(cfg: ExperimentConfig, default: LatticeSpec) -> LatticeSpec:
    if not cfg.lattice:
        return default
    try:
        dims = tuple(int(x) for x in cfg.lattice.lower().split("x"))
        if len(dims) == 1:
            dims = dims * cfg.dim
        if len(dims) != cfg.dim:
            raise ValueError(f"lattice {cfg.lattice!r} has {len(dims)} axes, dim is {cfg.dim}")
        return LatticeSpec(dims)
    except (ValueError, ContractError) as exc:
        raise ConfigError("lattice", str(exc)) from None


def resolve_state(cfg: ExperimentConfig, lattice: LatticeSpec) -> WalkerState:
    try:
        if cfg.state_file:
            obj = json.loads(Path(cfg.state_file).read_text(encoding="utf-8"))
            re = np.asarray(obj["re"], dtype=float)
            im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
            amps = (re + 1j * im).reshape((lattice.coin_dim, *lattice.dims))
            return WalkerState.from_amplitudes(lattice, normalize(amps))
        site = tuple(int(x) for x in cfg.site.split(","))
        if len(site) == 1:
            site = site * lattice.ndim
        parts = cfg.coin_state.split(",")
        coin: int | np.ndarray
        if len(parts) == 1:
            coin = int(parts[0])
        else:
            coin = normalize([parse_complex(p) for p in parts])
        return WalkerState.localized(lattice, coin, site)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError("initial state", str(exc)) from None


def resolve_schedule(cfg: ExperimentConfig, steps: int) -> InterventionSchedule:
    entries = []
    for item in (s.strip() for s in cfg.schedule.split(",")):
        if not item:
            continue
        j, _, op = item.partition(":")
        try:
            entries.append((int(j), op.strip() or "V"))
        except ValueError:
            raise ConfigError("schedule", f"bad entry {item!r}") from None
    try:
        return InterventionSchedule(steps, tuple(entries))
    except ContractError as exc:
        raise ConfigError("schedule", str(exc)) from None


def _require_light_cone(lattice: LatticeSpec, steps: int) -> None:
    if not lattice.light_cone_ok(steps):
        raise ConfigError("lattice", f"{lattice.dims} too small for {steps} steps (need >= {2 * steps + 2} per axis)")


# --------------------------------------------------------------------------
# tables
# --------------------------------------------------------------------------


def _axis_names(ndim: int) -> list[str]:
    return ["x", "y", "z"][:ndim] if ndim <= 3 else [f"x{i}" for i in range(ndim)]


def distribution_rows(dist: np.ndarray, lattice: LatticeSpec, prefix: Sequence[Any] = ()) -> list[list[Any]]:
    """Rows ``[*prefix, coords..., p]`` sorted by coordinate, row-major over axes."""
    coords = [lattice.coordinates(a) for a in range(lattice.ndim)]
    orders = [np.argsort(c, kind="stable") for c in coords]
    rows = []
    for idx in itertools.product(*orders):
        rows.append([*prefix, *(int(coords[a][i]) for a, i in enumerate(idx)), float(dist[idx])])
    return rows


def _summary(state: WalkerState) -> dict[str, Any]:
    dist = position_distribution(state)
    idx = np.unravel_index(int(np.argmax(dist)), dist.shape)
    coords = [int(state.lattice.coordinates(a)[i]) for a, i in enumerate(idx)]
    neg = state.lattice.coordinates(0) < 0
    return {
        "total_probability": float(dist.sum()),
        "argmax_site": coords,
        "p_max": float(dist[idx]),
        "p_negative_axis0": float(dist[neg].sum()),
    }


# --------------------------------------------------------------------------
# commands: each returns (metrics, tables, warnings)
# --------------------------------------------------------------------------


def cmd_walk(cfg: ExperimentConfig):
    coin = resolve_coin(cfg)
    lattice = resolve_lattice(cfg, LatticeSpec.for_steps(cfg.steps, cfg.dim))
    psi0 = resolve_state(cfg, lattice)
    sched = resolve_schedule(cfg, cfg.steps)
    g = resolve_intervention(cfg) if sched.entries else None
    warnings = []
    if not lattice.light_cone_ok(cfg.steps):
        warnings.append(f"lattice {lattice.dims} is smaller than the light cone; amplitudes may wrap")
    try:
        final, trace = evolve(psi0, coin, cfg.steps, sched, g, record=cfg.trace)
    except ContractError as exc:
        raise ConfigError("schedule", str(exc)) from None
    metrics = {"steps": cfg.steps, "lattice": list(lattice.dims), **_summary(final)}
    if abs(metrics["total_probability"] - 1.0) > cfg.tolerance:
        raise VerificationError(f"probability not conserved: {metrics['total_probability']!r}")
    axes = _axis_names(lattice.ndim)
    tables = [Table("distribution", [*axes, "p"], distribution_rows(position_distribution(final), lattice))]
    if trace is not None:
        rows = [r for t in range(trace.shape[0]) for r in distribution_rows(trace[t], lattice, (t,))]
        tables.append(Table("trace", ["step", *axes, "p"], rows, suffix="trace"))
    return metrics, tables, warnings


def cmd_revert(cfg: ExperimentConfig):
    p = _params(cfg)
    if cfg.coin not in ("param", "hadamard"):
        raise ConfigError("coin", "revert needs a parametric coin")
    l = cfg.l
    t1 = l if cfg.t1 is None else cfg.t1
    t2 = l - 1 if cfg.t2 is None else cfg.t2
    lattice = resolve_lattice(cfg, LatticeSpec.for_steps(max(2 * l, t1 + t2 + 1)))
    _require_light_cone(lattice, max(2 * l, t1 + t2 + 1))
    psi0 = resolve_state(cfg, lattice)
    g = resolve_intervention(cfg)
    matched = params_match(build_coin(p), g)
    warnings = []
    if not matched:
        warnings.append("intervention phases differ from coin phases; D*D = I is not guaranteed")
    ret = verify_return(psi0, p, l, g=g, require_match=False, check=False)
    ident = verify_reversal_identity(psi0, p, t1, t2, g=g, require_match=False)
    d = build_d(build_coin(p), g)
    metrics = {
        "l": l,
        "t1": t1,
        "t2": t2,
        "params_matched": matched,
        "return_probability": ret.position_return_probability,
        "return_marginal_defect": ret.marginal_defect,
        "return_amplitude_defect": ret.max_amplitude_diff,
        "identity_max_amplitude_diff": ident.max_amplitude_diff,
        "identity_fidelity": ident.lhs_rhs_fidelity,
        "phase_factor": cplx(ret.phase_factor),
        "identity_phase_factor": cplx(ident.phase_factor),
        "d_squared_defect": ret.d_squared_defect,
    }
    axes = _axis_names(1)
    tables = [
        Table("distribution", [*axes, "p"], distribution_rows(position_distribution(ret.final_state), lattice)),
        Table("d_matrix", ["row", "col", "re", "im"], _matrix_rows(d.matrix), suffix="d"),
    ]
    if matched:
        tol = cfg.tolerance
        if abs(ret.position_return_probability - 1.0) > tol or ret.marginal_defect > tol:
            raise VerificationError(f"walker did not return (P = {ret.position_return_probability!r})", metrics)
        if ident.max_amplitude_diff > tol:
            raise VerificationError(f"reversal identity off by {ident.max_amplitude_diff:.3e}", metrics)
    return metrics, tables, warnings


def _matrix_rows(m: np.ndarray) -> list[list[Any]]:
    return [[i, j, float(m[i, j].real), float(m[i, j].imag)] for i in range(m.shape[0]) for j in range(m.shape[1])]


def cmd_periodic(cfg: ExperimentConfig):
    p = _params(cfg)
    if cfg.coin not in ("param", "hadamard"):
        raise ConfigError("coin", "periodic needs a parametric coin")
    lattice = resolve_lattice(cfg, LatticeSpec.for_steps(2 * cfg.l))
    _require_light_cone(lattice, 2 * cfg.l)
    psi0 = resolve_state(cfg, lattice)
    run = run_periodic(psi0, p, cfg.l, cfg.cycles, tol=cfg.tolerance)
    rep = run.report
    metrics = {
        "l": cfg.l,
        "cycles": cfg.cycles,
        "scan_horizon": rep.scan_horizon,
        "position_period": rep.position_period,
        "full_state_period": rep.full_state_period,
        "coin_period": rep.coin_period,
        "period_ratio_is_two": rep.ratio_holds,
        "position_recurrences": list(rep.position_recurrences),
        "full_state_recurrences": list(rep.full_state_recurrences),
        "recurrence_fidelity": rep.recurrence_fidelity,
    }
    cycle = rep.full_state_period or 4 * cfg.l
    last = min(cycle, rep.scan_horizon)
    axes = _axis_names(1)
    pos_rows = [r for t in range(last + 1) for r in distribution_rows(run.position_trace[t], lattice, (t,))]
    coin_rows = [[t, *r] for t in range(last + 1) for r in _matrix_rows(run.coin_trace[t])]
    tables = [
        Table("position_trace", ["step", *axes, "p"], pos_rows),
        Table("coin_trace", ["step", "row", "col", "re", "im"], coin_rows, suffix="coin"),
    ]
    if rep.ratio_holds is False:
        raise VerificationError("full-state period is not twice the position period", metrics)
    return metrics, tables, []


def cmd_spectral(cfg: ExperimentConfig):
    coin = resolve_coin(cfg)
    edge = SPECTRAL_DEFAULT_EDGE.get(cfg.dim, SPECTRAL_DEFAULT_EDGE_HIGH)
    lattice = resolve_lattice(cfg, LatticeSpec((edge,) * cfg.dim))
    psi0 = resolve_state(cfg, lattice)
    grid = spectral_grid(coin, lattice, seed=cfg.seed)
    cycle = [verify_full_cycle(sc, cfg.l) for sc in grid.coins]
    res = run_protocol(psi0, coin, cfg.l, grid=grid, check=False)
    worst = int(np.argmax([c.defect for c in cycle]))
    samples = sorted({0, len(cycle) // 3, (2 * len(cycle)) // 3, len(cycle) - 1})
    metrics = {
        "dim": cfg.dim,
        "l": cfg.l,
        "lattice": list(lattice.dims),
        "k_points": len(cycle),
        "total_steps": res.total_steps,
        "expected_total_steps": 2**cfg.dim * (cfg.l + 1),
        "fidelity": res.fidelity,
        "accumulated_phase": cplx(res.phase),
        "phase_spread_over_k": res.phase_spread,
        "per_k_defect": res.per_k_defect,
        "full_cycle_max_defect": cycle[worst].defect,
        "full_cycle_worst_k": [float(x) for x in grid.kvectors[worst]],
        "phase_identity_max_defect": max(c.phase_identity_defect for c in cycle),
        "min_spectral_gap": float(min(min_circular_gap(sc.phases) for sc in grid.coins)),
    }
    rows = [
        [*(float(x) for x in grid.kvectors[i]), cycle[i].defect, cycle[i].phase.real, cycle[i].phase.imag]
        for i in samples
    ]
    kcols = [f"k{a}" for a in range(cfg.dim)]
    tables = [Table("sampled_k", [*kcols, "full_cycle_defect", "phase_re", "phase_im"], rows)]
    tol = cfg.tolerance
    if res.fidelity < 1.0 - tol or cycle[worst].defect > tol:
        raise VerificationError(f"protocol fidelity {res.fidelity!r}, full-cycle defect {cycle[worst].defect:.3e}", metrics)
    return metrics, tables, []


def cmd_scan(cfg: ExperimentConfig):
    p = _params(cfg)
    if cfg.coin not in ("param", "hadamard"):
        raise ConfigError("coin", "scan needs a parametric coin")
    if cfg.steps < 2:
        raise ConfigError("steps", "scan needs at least 2 steps")
    lattice = resolve_lattice(cfg, LatticeSpec.for_steps(cfg.steps))
    _require_light_cone(lattice, cfg.steps)
    psi0 = resolve_state(cfg, lattice)
    rows = scan_intervention_times(psi0, p, cfg.steps, include_baseline=True)
    base, scans = rows[0], rows[1:]
    best_neg = max(scans, key=lambda r: r.p_negative)
    metrics = {
        "steps": cfg.steps,
        "baseline": {"argmax_x": base.argmax_site, "p_max": base.p_max, "p_negative": base.p_negative},
        "max_p_negative_step": best_neg.step,
        "max_p_negative": best_neg.p_negative,
        "argmax_range": [min(r.argmax_site for r in scans), max(r.argmax_site for r in scans)],
    }
    table = Table(
        "scan",
        ["intervention_step", "argmax_x", "p_max", "p_negative"],
        [["" if r.step is None else r.step, r.argmax_site, r.p_max, r.p_negative] for r in rows],
    )
    return metrics, [table], []


def cmd_crosscheck(cfg: ExperimentConfig):
    coin = resolve_coin(cfg)
    lattice = resolve_lattice(cfg, LatticeSpec.for_steps(cfg.steps, cfg.dim))
    psi0 = resolve_state(cfg, lattice)
    sched = resolve_schedule(cfg, cfg.steps)
    if any(op != "V" for _, op in sched.entries):
        raise ConfigError("schedule", "crosscheck compares 'V' interventions only")
    g = resolve_intervention(cfg) if sched.entries else None
    a = evolve(psi0, coin, cfg.steps, sched, g).state
    b = momentum_evolve(psi0, coin, cfg.steps, sched, g)
    diff = float(np.max(np.abs(a.amps - b.amps)))
    metrics = {"steps": cfg.steps, "lattice": list(lattice.dims), "max_amplitude_diff": diff}
    axes = _axis_names(lattice.ndim)
    pa, pb = position_distribution(a), position_distribution(b)
    rows = [r + [s[-1]] for r, s in zip(distribution_rows(pa, lattice), distribution_rows(pb, lattice))]
    tables = [Table("distributions", [*axes, "p", "p_momentum"], rows)]
    if diff > cfg.tolerance:
        raise VerificationError(f"backends disagree by {diff:.3e}", metrics)
    return metrics, tables, []


COMMANDS: dict[str, Callable] = {
    "walk": cmd_walk,
    "revert": cmd_revert,
    "periodic": cmd_periodic,
    "spectral": cmd_spectral,
    "scan": cmd_scan,
    "crosscheck": cmd_crosscheck,
}


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _sidecar(out: Path, suffix: str, ext: str) -> Path:
    return out.with_name(f"{out.stem}.{suffix}{ext}")


def _csv_text(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    w.writerows([[repr(v) if isinstance(v, float) else v for v in row] for row in table.rows])
    return buf.getvalue()


def write_outputs(cfg: ExperimentConfig, manifest: dict[str, Any], tables: list[Table]) -> None:
    dump = lambda obj: json.dumps(obj, indent=2) + "\n"  # noqa: E731
    if cfg.format == "json":
        data = {t.name: t.as_json() for t in tables}
        text = dump({"manifest": manifest, "data": data})
        if cfg.out:
            Path(cfg.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return
    out = Path(cfg.out)
    for t in tables:
        path = out if t.suffix is None else _sidecar(out, t.suffix, ".csv")
        path.write_text(_csv_text(t), encoding="utf-8")
    _sidecar(out, "manifest", ".json").write_text(dump(manifest), encoding="utf-8")


def _output_names(cfg: ExperimentConfig, tables: list[Table]) -> list[str]:
    if not cfg.out:
        return []
    out = Path(cfg.out)
    if cfg.format == "json":
        return [out.name]
    names = [out.name if t.suffix is None else _sidecar(out, t.suffix, ".csv").name for t in tables]
    return names + [_sidecar(out, "manifest", ".json").name]


def build_manifest(cfg, metrics, warnings, outputs, status="ok", wall=None) -> dict[str, Any]:
    m = {
        "artifact": "qwrev",
        "version": __version__,
        "mode": cfg.mode,
        "status": status,
        "config": cfg.echo(),
        "metrics": metrics,
        "warnings": warnings,
        "outputs": outputs,
    }
    if wall is not None:
        m["wall_time_s"] = wall
    return m


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

_FLAG_HELP = {
    "theta": "coin angle theta in [0, 2pi) (expressions like pi/4 accepted)",
    "phi1": "coin phase phi1 in [0, pi)",
    "phi2": "coin phase phi2 in [0, pi)",
    "g_phi1": "intervention phase phi1 (defaults to phi1)",
    "g_phi2": "intervention phase phi2 (defaults to phi2)",
    "coin": "param | hadamard | grover | product | file",
    "factors": "product coin factors 'theta:phi1:phi2;...' (one per axis)",
    "coin_file": "JSON coin matrix {re, im}",
    "intervention": "g | file",
    "intervention_file": "JSON intervention matrix {re, im}",
    "dim": "walk dimension n (coin dim 2**n)",
    "lattice": "sites per axis, e.g. 256 or 32x32",
    "coin_state": "initial coin basis index, or comma-separated amplitudes",
    "site": "initial site, comma-separated per axis",
    "state_file": "JSON initial amplitudes {re, im}, shape (coin, *lattice)",
    "steps": "number of steps",
    "l": "segment length l",
    "t1": "steps before the intervention (revert)",
    "t2": "steps after the intervention (revert)",
    "cycles": "number of intervention cycles (periodic)",
    "schedule": "interventions, e.g. '51' or '26:V,76:V'",
    "trace": "record per-step distributions (walk)",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwrev", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qwrev {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in COMMANDS:
        sp = sub.add_parser(mode)
        sp.add_argument("--config", help="flat 'key = value' config file")
        sp.add_argument("--out", help="output path (stdout for JSON when omitted)")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--seed", help="seed for eigen-solver draws")
        sp.add_argument("--tol", help="acceptance tolerance override")
        sp.add_argument("--timing", action="store_const", const="true", help="record wall time in the manifest")
        sp.add_argument("-v", "--verbose", action="store_true")
        for key, text in _FLAG_HELP.items():
            flag = "--" + key.replace("_", "-")
            if key == "trace":
                sp.add_argument(flag, action="store_const", const="true", dest=key, help=text)
            else:
                sp.add_argument(flag, dest=key, help=text)
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict[str, Any] = {}
    if args.config:
        try:
            values.update(read_config_file(args.config))
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
    known = {f.name for f in fields(ExperimentConfig)}
    for key, val in vars(args).items():
        if key in known and val is not None:
            values[key] = val
    values["mode"] = args.mode
    return ExperimentConfig.from_mapping(values)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"qwrev: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    start = time.perf_counter()
    status, code = "ok", EXIT_OK
    try:
        metrics, tables, warnings = COMMANDS[cfg.mode](cfg)
    except ConfigError as exc:
        print(f"qwrev: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateSpectrum as exc:
        print(f"qwrev: protocol inapplicable: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except VerificationError as exc:
        print(f"qwrev: check failed: {exc.args[0]}", file=sys.stderr)
        if len(exc.args) < 2:
            return EXIT_NUMERIC
        metrics, tables, warnings = exc.args[1], [], []
        status, code = "failed", EXIT_NUMERIC
    except QWalkError as exc:
        print(f"qwrev: numerical contract violated: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    wall = time.perf_counter() - start
    log.info("%s finished in %.3f s", cfg.mode, wall)
    manifest = build_manifest(cfg, metrics, warnings, _output_names(cfg, tables), status, wall if cfg.timing else None)
    try:
        write_outputs(cfg, manifest, tables)
    except BrokenPipeError:
        # reader closed stdout early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return code


if __name__ == "__main__":
    sys.exit(main())
