"""Command-line runner: simulate, optimize, spectrum, and wigner subcommands.

All outputs are plain CSV with a leading comment line carrying the hash of
the resolved configuration, a header row, and floats printed with 17
significant digits so byte-identical reruns and exact round-trips hold.
Exit codes: 0 success, 2 configuration error, 3 runtime/optimizer error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, Scenario, config_hash, load_config, resolve_scenario, resolved_config
from .krotov import clamp_controls, krotov_optimize, propagate_with_controls
from .chains import initial_guess
from .measures import control_spectrum, gaussian_fidelity, log_negativity, reduce_cm, wigner_slice

_FMT = "%.17g"


def _fmt(value: float) -> str:
    return _FMT % value


def _write_csv(path: Path, header: list[str], rows, cfg_hash: str):
    lines = [f"# config_sha256={cfg_hash}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _out_dir(args, scenario_raw) -> Path:
    out = args.out or scenario_raw.get("output_dir") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_controls_csv(path, n_channels: int, n_steps: int) -> np.ndarray:
    """Raw control values from a controls CSV (column layout as written by us)."""
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    except FileNotFoundError:
        raise ConfigError([f"controls file not found: {path}"]) from None
    if not lines:
        raise ConfigError([f"controls file is empty: {path}"])
    header = lines[0].split(",")
    data_rows = [ln.split(",") for ln in lines[1:]]
    expected = [f"c_raw_{i}" for i in range(1, n_channels + 1)]
    missing = [name for name in expected if name not in header]
    if missing:
        raise ConfigError([f"controls file lacks column {name}" for name in missing])
    if len(data_rows) != n_steps:
        raise ConfigError(
            [f"controls file has {len(data_rows)} rows, the grid has {n_steps} bins"]
        )
    controls = np.empty((n_channels, n_steps))
    for ch, name in enumerate(expected):
        col = header.index(name)
        try:
            controls[ch] = [float(row[col]) for row in data_rows]
        except (ValueError, IndexError):
            raise ConfigError([f"controls file column {name} is malformed"]) from None
    return controls


def _scenario_controls(scenario: Scenario, args) -> np.ndarray:
    path = getattr(args, "controls", None) or scenario.raw.get("controls_file")
    n = scenario.chain.n_sites
    if path is not None:
        return _load_controls_csv(path, n, scenario.grid.n_steps)
    return np.stack(
        [initial_guess(scenario.chain.topology, i, scenario.grid) for i in range(1, n + 1)]
    )


def _write_controls(out, scenario, cfg_hash, raw, clamped):
    header = ["t"]
    for i in range(1, scenario.chain.n_sites + 1):
        header += [f"c_raw_{i}", f"c_clamped_{i}"]
    rows = []
    for k, t in enumerate(scenario.grid.bin_times()):
        row = [float(t)]
        for ch in range(scenario.chain.n_sites):
            row += [float(raw[ch, k]), float(clamped[ch, k])]
        rows.append(row)
    _write_csv(out / "controls.csv", header, rows, cfg_hash)


def _dynamics_rows(scenario: Scenario, traj, clamped, pair):
    n = scenario.chain.n_sites
    head = (1, 2)
    tail = pair.negativity_pair
    rows = []
    nodes = scenario.grid.nodes()
    for k, t in enumerate(nodes):
        g = traj[k]
        fid = gaussian_fidelity(g, pair.target)
        n_head = log_negativity(reduce_cm(g, head), physical_tol=1e-3)
        n_tail = log_negativity(reduce_cm(g, tail), physical_tol=1e-3)
        det = float(np.linalg.det(g))
        kbin = min(k, scenario.grid.n_steps - 1)  # final node repeats the last bin
        rows.append(
            [float(t), fid, n_head, n_tail, det] + [float(clamped[ch, kbin]) for ch in range(n)]
        )
    return rows


def _write_dynamics(out, scenario, cfg_hash, traj_per_pair, clamped):
    header = ["t", "fidelity", "negativity_head", "negativity_tail", "det_gamma"]
    header += [f"c_clamped_{i}" for i in range(1, scenario.chain.n_sites + 1)]
    files = []
    for pair, r, traj in zip(scenario.pairs, scenario.r_values, traj_per_pair):
        name = "dynamics.csv" if len(scenario.pairs) == 1 else f"dynamics_r{r:.4g}.csv"
        _write_csv(out / name, header, _dynamics_rows(scenario, traj, clamped, pair), cfg_hash)
        files.append(name)
    return files


def _final_objective(scenario: Scenario, finals):
    from .krotov import _Evaluator

    ev = _Evaluator(scenario.pairs, scenario.krotov.objective, scenario.krotov.gradient_step)
    j, f_res, n_res, _ = ev.metrics(finals)
    return j, f_res, n_res


def _write_manifest(out, scenario, cfg_hash, command, extra):
    resolved = resolved_config(scenario)
    manifest = {
        "command": command,
        "config": resolved,
        "config_sha256": cfg_hash,
        "version": __version__,
    }
    manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _emit_flags(scenario):
    flags = {
        "controls": True, "dynamics": True, "spectrum": False,
        "wigner": False, "residuals": True, "iterations": True,
    }
    flags.update(scenario.raw.get("emit", {}))
    return flags


def run_simulate(args) -> int:
    scenario = resolve_scenario(load_config(args.config))
    out = _out_dir(args, scenario.raw)
    cfg_hash = config_hash(resolved_config(scenario))
    raw = _scenario_controls(scenario, args)
    clamped, _ = clamp_controls(raw, scenario.krotov.clamp_amplitude)
    initials = np.stack([p.initial for p in scenario.pairs])
    traj, _, _ = propagate_with_controls(
        initials, scenario.chain, scenario.grid, raw, scenario.bath,
        scenario.krotov.clamp_amplitude,
    )
    traj_per_pair = [traj[:, j] for j in range(len(scenario.pairs))]
    emit = _emit_flags(scenario)
    files = []
    if emit["dynamics"]:
        files += _write_dynamics(out, scenario, cfg_hash, traj_per_pair, clamped)
    if emit["controls"]:
        _write_controls(out, scenario, cfg_hash, raw, clamped)
        files.append("controls.csv")
    j, f_res, n_res = _final_objective(scenario, traj[-1])
    _write_manifest(out, scenario, cfg_hash, "simulate", {
        "final_j": j,
        "fidelity_residuals": list(map(float, f_res)),
        "negativity_residuals": list(map(float, n_res)),
        "files": sorted(files),
    })
    return 0


def run_optimize(args) -> int:
    scenario = resolve_scenario(load_config(args.config), iterations_override=args.iterations)
    out = _out_dir(args, scenario.raw)
    cfg_hash = config_hash(resolved_config(scenario))
    guess = _scenario_controls(scenario, args)
    result = krotov_optimize(
        scenario.pairs, scenario.chain, scenario.grid, scenario.krotov,
        scenario.bath, initial_controls=guess,
    )
    emit = _emit_flags(scenario)
    files = []
    if emit["controls"]:
        _write_controls(out, scenario, cfg_hash, result.controls, result.clamped_controls)
        files.append("controls.csv")
    if emit["iterations"]:
        header = ["iteration", "j"]
        for j in range(1, len(scenario.pairs) + 1):
            header += [f"f_residual_{j}", f"n_residual_{j}"]
        rows = []
        for rec in result.history:
            row = [rec.iteration, rec.j_value]
            for fr, nr in zip(rec.fidelity_residuals, rec.negativity_residuals):
                row += [fr, nr]
            rows.append(row)
        _write_csv(out / "iterations.csv", header, rows, cfg_hash)
        files.append("iterations.csv")
    if emit["residuals"]:
        rows = [
            [float(r), float(fr), float(nr), float(0.5 * (fr + nr))]
            for r, fr, nr in zip(
                scenario.r_values, result.fidelity_residuals, result.negativity_residuals
            )
        ]
        _write_csv(out / "residuals.csv", ["r", "f_residual", "n_residual", "j_pair"], rows, cfg_hash)
        files.append("residuals.csv")
    if emit["dynamics"]:
        initials = np.stack([p.initial for p in scenario.pairs])
        traj, _, _ = propagate_with_controls(
            initials, scenario.chain, scenario.grid, result.controls, scenario.bath,
            scenario.krotov.clamp_amplitude,
        )
        files += _write_dynamics(
            out, scenario, cfg_hash, [traj[:, j] for j in range(len(scenario.pairs))],
            result.clamped_controls,
        )
    if emit["spectrum"]:
        _write_spectrum(out, cfg_hash, result.clamped_controls)
        files.append("spectrum.csv")
    _write_manifest(out, scenario, cfg_hash, "optimize", {
        "final_j": result.final_j,
        "fidelity_residuals": list(map(float, result.fidelity_residuals)),
        "negativity_residuals": list(map(float, result.negativity_residuals)),
        "iterations_run": len(result.history) - 1,
        "monotonic": all(rec.monotonic for rec in result.history),
        "files": sorted(files),
    })
    return 0


def _write_spectrum(out, cfg_hash, clamped):
    header = ["channel"] + [f"bin_{b}" for b in range(10)]
    rows = []
    for ch in range(clamped.shape[0]):
        rows.append([ch + 1] + [float(v) for v in control_spectrum(clamped[ch])])
    _write_csv(out / "spectrum.csv", header, rows, cfg_hash)


def run_spectrum(args) -> int:
    if not args.controls:
        raise ConfigError(["spectrum requires --controls <file>"])
    try:
        with open(args.controls) as fh:
            all_lines = [ln.strip() for ln in fh if ln.strip()]
    except FileNotFoundError:
        raise ConfigError([f"controls file not found: {args.controls}"]) from None
    cfg_hash = "unknown"
    for ln in all_lines:
        if ln.startswith("# config_sha256="):
            cfg_hash = ln.removeprefix("# config_sha256=")
            break
    lines = [ln for ln in all_lines if not ln.startswith("#")]
    if len(lines) < 2:
        raise ConfigError([f"controls file has no data rows: {args.controls}"])
    header = lines[0].split(",")
    clamped_cols = [(name, idx) for idx, name in enumerate(header) if name.startswith("c_clamped_")]
    if not clamped_cols:
        raise ConfigError(["controls file has no c_clamped_* columns"])
    rows = [ln.split(",") for ln in lines[1:]]
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    out_rows = []
    for name, idx in clamped_cols:
        try:
            values = np.array([float(r[idx]) for r in rows])
        except (ValueError, IndexError):
            raise ConfigError([f"column {name} is malformed or empty"]) from None
        out_rows.append([name.removeprefix("c_clamped_")] + [float(v) for v in control_spectrum(values)])
    _write_csv(out / "spectrum.csv", ["channel"] + [f"bin_{b}" for b in range(10)], out_rows,
               cfg_hash)
    return 0


def run_wigner(args) -> int:
    scenario = resolve_scenario(load_config(args.config))
    out = _out_dir(args, scenario.raw)
    cfg_hash = config_hash(resolved_config(scenario))
    wcfg = scenario.raw.get("wigner", {})
    times = [float(t) for t in args.times.split(",")] if args.times else wcfg.get("times")
    if not times:
        raise ConfigError(["wigner requires --times or a wigner/times config entry"])
    horizon = scenario.grid.horizon
    bad = [t for t in times if not (0.0 <= t <= horizon)]
    if bad:
        raise ConfigError([f"wigner time {t} outside the grid [0, {horizon}]" for t in bad])
    n = scenario.chain.n_sites
    default_pairs = [[1, 2], [n - 1, n]]
    pairs = wcfg.get("pairs", default_pairs)
    extent = wcfg.get("extent", 4.0)
    n_points = wcfg.get("n_points", 101)
    raw = _scenario_controls(scenario, args)
    initials = np.stack([p.initial for p in scenario.pairs])
    traj, _, _ = propagate_with_controls(
        initials, scenario.chain, scenario.grid, raw, scenario.bath,
        scenario.krotov.clamp_amplitude,
    )
    for t in times:
        k = round(t / scenario.grid.dt)
        for i, j in pairs:
            g_red = reduce_cm(traj[k, 0], (i, j))
            s = wigner_slice(g_red, extent=extent, n_points=n_points, modes=(i, j))
            rows = [
                [float(a), float(b), float(s.values[ai, bi])]
                for ai, a in enumerate(s.a_values)
                for bi, b in enumerate(s.b_values)
            ]
            _write_csv(out / f"wigner_t{t:g}_modes{i}-{j}.csv", ["a", "b", "w"], rows, cfg_hash)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvchain",
        description="Entangled-state transfer in oscillator chains: simulation and control synthesis",
    )
    parser.add_argument("--version", action="version", version=f"cvchain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=False, help="path to the scenario JSON")
        p.add_argument("--out", help="output directory (default: config output_dir or cwd)")
        p.add_argument(
            "--seedless", action="store_true",
            help="assert deterministic operation (the engine uses no randomness; kept for interface compatibility)",
        )

    p_sim = sub.add_parser("simulate", help="propagate fixed controls and write dynamics CSVs")
    common(p_sim)
    p_sim.add_argument("--controls", help="controls CSV to apply (default: initial guess)")

    p_opt = sub.add_parser("optimize", help="run the control iteration")
    common(p_opt)
    p_opt.add_argument("--iterations", type=int, help="override krotov/max_iterations")
    p_opt.add_argument("--controls", help="controls CSV to start from (default: initial guess)")

    p_spec = sub.add_parser("spectrum", help="first 10 DFT magnitudes per control channel")
    common(p_spec)
    p_spec.add_argument("--controls", help="controls CSV to analyze")

    p_wig = sub.add_parser("wigner", help="phase-space slices at chosen times")
    common(p_wig)
    p_wig.add_argument("--times", help="comma-separated times within [0, horizon]")
    p_wig.add_argument("--controls", help="controls CSV to apply (default: initial guess)")
    return parser


_RUNNERS = {
    "simulate": run_simulate,
    "optimize": run_optimize,
    "spectrum": run_spectrum,
    "wigner": run_wigner,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command != "spectrum" and not args.config:
        print("config error: --config is required", file=sys.stderr)
        return 2
    try:
        return _RUNNERS[args.command](args)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
