"""Command-line front end.

Every subcommand writes a ``manifest.json`` into its output directory; feeding
that file back through ``--config`` reproduces the run. Explicit flags
override config values.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Environment: ``MALLEABILITY_OUTPUT_ROOT`` (base for relative ``--out``),
``MALLEABILITY_WORKERS`` (default pool size).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import IntegrationError, SimulationConfig, integrate, save_trajectory, write_trajectory_csv
from .ensemble import (
    HIST_BIN,
    VARIANTS,
    SampleTemplate,
    SamplingStrategy,
    cross_matrix,
    delta_omega_scan,
    derive_seed,
    perturb_unit,
    run_ensemble,
    run_reference,
    single_unit_change,
    write_samples_csv,
    write_summary_json,
)
from .observables import fingerprint, summarize
from .sweep import PRESETS, CheckpointError, SweepPlan, linear_grid, log_p_grid, preset, run_sweep
from .topology import TopologySpec, kappa_dd, kappa_graph, kappa_ws

log = logging.getLogger("malleability")

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# keys that never enter a manifest: where to write and how many processes
_RUNTIME_KEYS = {"command", "config", "out", "workers", "verbose"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- parser


def _add_topology(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("topology")
    g.add_argument("--topology", choices=("ws", "dd"), default="ws", help="Watts-Strogatz or distance-dependent ring")
    g.add_argument("--N", type=int, default=101, help="number of oscillators (odd for dd)")
    g.add_argument("--k", type=int, default=2, help="ring neighbours per side (ws)")
    g.add_argument("--p", type=float, default=0.0, help="rewiring probability (ws)")
    g.add_argument("--alpha", type=float, default=0.0, help="locality exponent (dd)")
    g.add_argument("--topology-seed", type=int, default=None, help="graph seed (ws); derived from --seed if omitted")


def _add_dynamics(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("dynamics")
    g.add_argument("--eps", type=float, default=0.0, help="coupling strength")
    g.add_argument("--t-transient", type=float, default=500.0)
    g.add_argument("--t-observe", type=float, default=500.0)
    g.add_argument("--dt", type=float, default=0.1, help="sampling interval")
    g.add_argument("--atol", type=float, default=1e-6)
    g.add_argument("--rtol", type=float, default=1e-6)
    g.add_argument("--max-step", type=float, default=1.0)
    g.add_argument("--max-steps", type=int, default=50_000_000, help="abort after this many accepted steps")


def _add_seeds(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("seeds")
    g.add_argument("--seed", type=int, default=0, help="base seed; the other seeds derive from it")
    g.add_argument("--freq-seed", type=int, default=None)
    g.add_argument("--ic-seed", type=int, default=None)


def _add_strategy(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("sampling")
    g.add_argument("--strategy", choices=VARIANTS, default="shuffle-freq")
    g.add_argument("--count", type=int, default=51, help="number of samples")
    g.add_argument("--unit", type=int, default=None, help="1-based unit for single-unit/perturb-unit "
                   "(omitted: sample s changes unit s mod N + 1)")
    g.add_argument("--omega-new", type=float, default=None)
    g.add_argument("--delta-omega", type=float, default=None)


def _add_runtime(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON config or a previous run's manifest.json")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--workers", type=int, default=None, help="process pool size (default: all cores)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="malleability", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one realisation")
    _add_topology(p)
    _add_dynamics(p)
    _add_seeds(p)
    p.add_argument("--unit", type=int, default=None, help="1-based unit whose frequency is changed")
    p.add_argument("--omega-new", type=float, default=None)
    p.add_argument("--delta-omega", type=float, default=None)
    p.add_argument("--csv", action="store_true", help="also write r.csv, frequencies.csv and phases.csv")
    p.add_argument("--raster-stride", type=int, default=10, help="keep every n-th sample in phases.csv")
    _add_runtime(p)

    p = sub.add_parser("ensemble", help="ensemble of perturbed realisations")
    _add_topology(p)
    _add_dynamics(p)
    _add_seeds(p)
    _add_strategy(p)
    p.add_argument("--fingerprints", action="store_true", help="count attractors from dynamical fingerprints")
    p.add_argument("--tau", type=float, default=1e-3, help="attractor clustering threshold")
    p.add_argument("--bin-width", type=float, default=HIST_BIN)
    p.add_argument("--csv", action="store_true", help="also write histogram.csv")
    _add_runtime(p)

    p = sub.add_parser("scan", help="per-unit frequency perturbation scan or shuffle x network matrix")
    _add_topology(p)
    _add_dynamics(p)
    _add_seeds(p)
    p.add_argument("--kind", choices=("delta", "cross"), default="delta")
    p.add_argument("--units", type=int, nargs="+", default=None, help="units to perturb (default: all)")
    p.add_argument("--delta-omega", type=float, nargs="+", default=None,
                   help="frequency offsets (default: -0.5..0.5 in steps of 0.05)")
    p.add_argument("--shuffles", type=int, default=21)
    p.add_argument("--networks", type=int, default=21)
    _add_runtime(p)

    p = sub.add_parser("sweep", help="grid of ensembles over eps, p/alpha and N")
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--full-scale", action="store_true", help="N=501 and 501 samples (hours of CPU)")
    p.add_argument("--topology", choices=("ws", "dd"), default="ws")
    p.add_argument("--eps", type=float, nargs=3, metavar=("LO", "HI", "COUNT"), default=None,
                   help="linear eps grid")
    p.add_argument("--p", type=float, nargs=3, metavar=("LO", "HI", "COUNT"), default=None,
                   help="log-spaced p grid (p=0 prepended)")
    p.add_argument("--alpha", type=float, nargs=3, metavar=("LO", "HI", "COUNT"), default=None,
                   help="linear alpha grid")
    p.add_argument("--N", type=int, nargs="+", default=None)
    p.add_argument("--strategy", choices=VARIANTS, default="shuffle-freq")
    p.add_argument("--count", type=int, default=51)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-transient", type=float, default=500.0)
    p.add_argument("--t-observe", type=float, default=500.0)
    p.add_argument("--max-points", type=int, default=None, help="stop after this many new grid points")
    p.set_defaults(plan=None)
    _add_runtime(p)

    p = sub.add_parser("kappa", help="short/long-range coupling ratio (no simulation)")
    p.add_argument("--topology", choices=("ws", "dd"), default="ws")
    p.add_argument("--N", type=int, default=501)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--d", type=int, default=2, help="short/long-range cutoff distance")
    p.add_argument("--empirical", type=int, default=0, metavar="SEEDS",
                   help="ws: also average the realised ratio over this many graph seeds")
    p.add_argument("--digits", type=int, default=6)
    p.add_argument("--config", default=None)
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("repro", help="write (and optionally run) the desk-scale configs of a figure")
    p.add_argument("--figure", type=int, choices=range(2, 9), required=True)
    p.add_argument("--full-scale", action="store_true")
    p.add_argument("--run", action="store_true", help="execute the configs after writing them")
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


# ---------------------------------------------------------------- config files


def _key_line(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _where(path, text, key) -> str:
    line = _key_line(text, key)
    return f"{path}:{line}" if line else str(path)


def _coerce(action: argparse.Action, value):
    """Apply ``action``'s type/choices to a JSON value (argparse skips this for defaults)."""
    if value is None:
        return None
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        if not isinstance(value, bool):
            raise ValueError("expected true or false")
        return value
    many = action.nargs in ("+", "*") or isinstance(action.nargs, int)
    items = value if many else [value]
    if many and not isinstance(value, list):
        raise ValueError("expected a list")
    if isinstance(action.nargs, int) and len(items) != action.nargs:
        raise ValueError(f"expected {action.nargs} values")
    out = []
    for v in items:
        if isinstance(v, (list, dict)) or isinstance(v, bool):
            raise ValueError(f"unexpected value {v!r}")
        if action.type is int and isinstance(v, float) and not v.is_integer():
            raise ValueError(f"expected an integer, got {v!r}")
        c = action.type(v) if action.type is not None else v
        if action.choices is not None and c not in action.choices:
            raise ValueError(f"{c!r} is not one of {', '.join(map(str, action.choices))}")
        out.append(c)
    return out if many else out[0]


def load_config(path, command: str, subparser: argparse.ArgumentParser) -> dict:
    """Validated ``{dest: value}`` from a JSON config or manifest."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}:1: top level must be an object")
    if "plan_sha256" in doc and "plan" in doc:  # a sweep directory manifest
        if command != "sweep":
            raise ConfigError(f"{path}: sweep manifest given to '{command}'")
        return {"plan": doc["plan"]}
    if "command" in doc:
        if doc["command"] != command:
            raise ConfigError(f"{_where(path, text, 'command')}: config is for '{doc['command']}', not '{command}'")
        extra = set(doc) - {"command", "config", "version"}
        if extra:
            key = sorted(extra)[0]
            raise ConfigError(f"{_where(path, text, key)}: unknown key {key!r}")
        doc = doc.get("config", {})
        if not isinstance(doc, dict):
            raise ConfigError(f"{_where(path, text, 'config')}: 'config' must be an object")
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config", "version")}
    out = {}
    for key, value in doc.items():
        if key == "plan" and command == "sweep":
            out["plan"] = value
            continue
        if key not in actions:
            raise ConfigError(f"{_where(path, text, key)}: unknown key {key!r}")
        try:
            out[key] = _coerce(actions[key], value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{_where(path, text, key)}: bad value for {key!r}: {exc}") from None
    return out


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for a in parser._actions:
        if isinstance(a, argparse._SubParsersAction):
            return a.choices[command]
    raise KeyError(command)


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = _subparser(parser, args.command)
        cfg = load_config(args.config, args.command, sub)
        # config values become defaults, so explicit flags still win
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------- helpers


def output_dir(args, default: str) -> Path:
    root = os.environ.get("MALLEABILITY_OUTPUT_ROOT")
    out = Path(args.out) if args.out else Path(default)
    if root and not out.is_absolute():
        out = Path(root) / out
    out.mkdir(parents=True, exist_ok=True)
    return out


def manifest(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in _RUNTIME_KEYS}
    return {"command": args.command, "version": __version__, "config": cfg}


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def topology_spec(args) -> TopologySpec:
    if args.topology == "ws":
        seed = args.topology_seed if args.topology_seed is not None else derive_seed(args.seed, 2)
        return TopologySpec("ws", args.N, k=args.k, p=args.p, seed=seed)
    return TopologySpec("dd", args.N, alpha=args.alpha)


def template(args) -> SampleTemplate:
    fs = args.freq_seed if args.freq_seed is not None else derive_seed(args.seed, 0)
    ic = args.ic_seed if args.ic_seed is not None else derive_seed(args.seed, 1)
    return SampleTemplate(topology_spec(args), freq_seed=fs, ic_seed=ic)


def sim_config(args, store_phases: bool = False) -> SimulationConfig:
    return SimulationConfig(eps=args.eps, t_transient=args.t_transient, t_observe=args.t_observe,
                            dt_sample=args.dt, abs_tol=args.atol, rel_tol=args.rtol, max_step=args.max_step,
                            max_steps=args.max_steps,
                            store_phases=store_phases)


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    tpl = template(args)
    omega = tpl.base_frequencies()
    if args.omega_new is not None or args.delta_omega is not None:
        if args.unit is None:
            raise ConfigError("--omega-new/--delta-omega need --unit")
        if args.omega_new is not None and args.delta_omega is not None:
            raise ConfigError("give either --omega-new or --delta-omega, not both")
        if args.omega_new is not None:
            omega = single_unit_change(omega, args.unit, args.omega_new)
        else:
            omega = perturb_unit(omega, args.unit, args.delta_omega)
    topo = tpl.topology.build()
    sim = sim_config(args, store_phases=True)
    out = output_dir(args, "simulate")
    traj = integrate(tpl.base_initial(), omega, topo, sim)
    man = manifest(args)
    save_trajectory(traj, out / "trajectory", sidecar=man["config"])
    s = summarize(traj)
    summary = {"R": s.R, "r_std": s.r_std, "freq_sync": s.freq_sync,
               "fingerprint": fingerprint(traj).to_record(),
               "seeds": {"freq": tpl.freq_seed, "ic": tpl.ic_seed, "topology": tpl.topology.seed},
               "frequencies": omega.provenance()}
    _write_json(out / "summary.json", summary)
    _write_json(out / "manifest.json", man)
    if args.csv:
        write_trajectory_csv(traj, omega, out)
        stride = max(1, args.raster_stride)
        rows = np.column_stack([traj.times, traj.phases])[::stride]
        header = "t," + ",".join(f"theta_{i}" for i in range(1, traj.n + 1))
        np.savetxt(out / "phases.csv", rows, delimiter=",", header=header, comments="", fmt="%.10g")
    print(f"R = {s.R:.6f}  r_std = {s.r_std:.6f}  freq_sync = {s.freq_sync}  -> {out}")
    return 0


def cmd_ensemble(args) -> int:
    tpl = template(args)
    strategy = SamplingStrategy(args.strategy, count=args.count, base_seed=derive_seed(args.seed, 3),
                                unit=args.unit, omega_new=args.omega_new, delta_omega=args.delta_omega)
    sim = sim_config(args)
    out = output_dir(args, "ensemble")
    stats = run_ensemble(tpl, strategy, sim, workers=args.workers, fingerprints=args.fingerprints,
                         tau=args.tau, bin_width=args.bin_width)
    extra = {"strategy": strategy.to_dict(), "template": tpl.to_dict(), "sim": sim.to_dict()}
    if args.strategy in ("single-unit", "perturb-unit"):
        ref = run_reference(tpl, sim)
        extra["R_reference"] = ref.R if ref.ok else None
    write_samples_csv(stats.records, out / "samples.csv")
    write_summary_json(stats, out / "summary.json", extra)
    if args.csv:
        h = stats.histogram
        lines = ["left,right,count,probability"] + [
            f"{a!r},{b!r},{c},{q!r}" for a, b, c, q in
            zip(h.edges[:-1].tolist(), h.edges[1:].tolist(), h.counts.tolist(), h.probabilities.tolist())]
        (out / "histogram.csv").write_text("\n".join(lines) + "\n")
    _write_json(out / "manifest.json", manifest(args))
    print(f"{stats.count} samples: delta = {stats.delta:.6f}  chi = {stats.chi:.6f}  "
          f"R_mean = {stats.R_mean:.6f}  failed = {stats.n_failed}"
          + (f"  attractors = {stats.attractors}" if stats.attractors is not None else "")
          + f"  -> {out}")
    return EXIT_NUMERICAL if stats.n_failed else 0


def cmd_scan(args) -> int:
    tpl = template(args)
    sim = sim_config(args)
    out = output_dir(args, "scan")
    if args.kind == "cross":
        cm = cross_matrix(tpl, args.shuffles, args.networks, sim, base_seed=derive_seed(args.seed, 3),
                          workers=args.workers)
        lines = ["shuffle,network,shuffle_seed,network_seed,R"]
        for i, s in enumerate(cm.shuffle_ids):
            for j, n in enumerate(cm.network_ids):
                lines.append(f"{s},{n},{cm.shuffle_seeds[i]},{cm.network_seeds[j]},{float(cm.R[i, j])!r}")
        (out / "cross.csv").write_text("\n".join(lines) + "\n")
        _write_json(out / "network_order.json", cm.network_order.tolist())
        failed = int(np.isnan(cm.R).sum())
        print(f"{cm.R.shape[0]}x{cm.R.shape[1]} matrix, R in [{np.nanmin(cm.R):.4f}, {np.nanmax(cm.R):.4f}] -> {out}")
    else:
        units = args.units if args.units else list(range(1, args.N + 1))
        deltas = args.delta_omega if args.delta_omega else np.round(linear_grid(-0.5, 0.5, 21), 12).tolist()
        if 0.0 not in deltas:
            deltas = sorted(list(deltas) + [0.0])
        scan = delta_omega_scan(tpl, units, deltas, sim, workers=args.workers)
        lines = ["unit,delta_omega,delta_R"]
        for a, u in enumerate(scan.units):
            for b, d in enumerate(scan.deltas):
                lines.append(f"{u},{float(d)!r},{float(scan.delta_R[a, b])!r}")
        (out / "scan.csv").write_text("\n".join(lines) + "\n")
        _write_json(out / "summary.json", {"R_reference": scan.R_reference, "n_failed": scan.n_failed,
                                           "max_abs_delta_R": float(np.nanmax(np.abs(scan.delta_R)))})
        failed = scan.n_failed
        print(f"{len(units)} units x {len(deltas)} offsets, R_ref = {scan.R_reference:.6f}, "
              f"max |dR| = {np.nanmax(np.abs(scan.delta_R)):.4f} -> {out}")
    _write_json(out / "manifest.json", manifest(args))
    return EXIT_NUMERICAL if failed else 0


def sweep_plan(args) -> SweepPlan:
    if args.plan is not None:
        try:
            return SweepPlan.from_dict(args.plan)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid sweep plan: {exc}") from None
    if args.preset:
        return preset(args.preset, args.full_scale)
    topo_axis = args.p if args.topology == "ws" else args.alpha
    if args.eps is None or topo_axis is None:
        raise ConfigError("sweep needs --preset, --config, or --eps plus --p (ws) / --alpha (dd) grids")
    lo, hi, n = args.eps
    eps = linear_grid(lo, hi, int(n))
    lo, hi, n = topo_axis
    values = log_p_grid(int(n), lo, hi) if args.topology == "ws" else linear_grid(lo, hi, int(n))
    return SweepPlan(args.topology, eps, values, sizes=tuple(args.N or (101,)),
                     strategy=SamplingStrategy(args.strategy, count=args.count, base_seed=args.seed),
                     sim=SimulationConfig(t_transient=args.t_transient, t_observe=args.t_observe,
                                          store_phases=False))


def cmd_sweep(args) -> int:
    plan = sweep_plan(args)
    out = output_dir(args, "sweep")
    res = run_sweep(plan, out, workers=args.workers, max_points=args.max_points)
    n_done = sum(res.completed)
    failed = sum(st.n_failed for st in res.stats.values())
    print(f"{n_done}/{len(res.points)} grid points complete, {failed} failed samples -> {out}")
    return EXIT_NUMERICAL if failed else 0


def cmd_kappa(args) -> int:
    if args.topology == "ws":
        value = kappa_ws(args.p)
    else:
        value = kappa_dd(args.alpha, args.N, args.d).kappa
    print(repr(round(value, args.digits)))
    if args.topology == "ws" and args.empirical > 0:
        emp = [kappa_graph(TopologySpec("ws", args.N, k=args.k, p=args.p, seed=s).build(), args.d).kappa
               for s in range(args.empirical)]
        print(f"empirical {np.mean(emp):.{args.digits}f} +- {np.std(emp):.{args.digits}f} over {args.empirical} graphs")
    return 0


SCALE_NOTE = ("desk scale: N=101 and 51 samples per point instead of N=501 and 501; "
              "grid endpoints other than the quoted parameter values are reconstructions")

_FIG_CONFIGS = {
    2: {"simulate": {"topology": "ws", "N": 501, "p": 0.08733, "eps": 4.51282, "seed": 7, "csv": True}},
    5: {
        "single-unit": ("ensemble", {"topology": "ws", "N": 101, "p": 0.19684, "eps": 4.51282,
                                     "strategy": "single-unit", "omega_new": 3.0, "count": 101}),
        "delta-scan": ("scan", {"topology": "ws", "N": 101, "p": 0.19684, "eps": 4.51282, "kind": "delta",
                                "units": list(range(1, 102, 5))}),
        "cross": ("scan", {"topology": "ws", "N": 101, "p": 0.19684, "eps": 4.51282, "kind": "cross",
                           "shuffles": 21, "networks": 21}),
    },
}
_FIG_PRESETS = {
    3: ("fig3-ws-eps", "fig3-dd-eps", "fig3-ws-p", "fig3-dd-alpha"),
    4: ("fig4",),
    6: ("fig6-ws", "fig6-dd"),
    7: ("fig7",),
    8: ("fig8-freq", "fig8-ic"),
}


def figure_configs(figure: int, full_scale: bool = False) -> dict[str, dict]:
    """``{name: config document}`` for ``figure``; each document is accepted by ``--config``."""
    docs = {}
    if figure in _FIG_PRESETS:
        for name in _FIG_PRESETS[figure]:
            plan = preset(name, full_scale)
            docs[name] = {"command": "sweep", "config": {"plan": plan.to_dict()}}
    elif figure == 2:
        cfg = dict(_FIG_CONFIGS[2]["simulate"])
        docs["fig2"] = {"command": "simulate", "config": cfg}
    else:
        for name, (command, cfg) in _FIG_CONFIGS[5].items():
            cfg = dict(cfg)
            if full_scale:
                cfg["N"] = 501
                if "count" in cfg:
                    cfg["count"] = 501
                if "units" in cfg:
                    cfg["units"] = list(range(1, 502, 5))
            docs[f"fig5-{name}"] = {"command": command, "config": cfg}
    return docs


def cmd_repro(args) -> int:
    out = output_dir(args, f"fig{args.figure}")
    docs = figure_configs(args.figure, args.full_scale)
    scale = "full scale" if args.full_scale else SCALE_NOTE
    index = {"figure": args.figure, "scale": scale, "configs": sorted(docs)}
    _write_json(out / "README.json", index)
    for name, doc in docs.items():
        _write_json(out / f"{name}.json", doc)
    print(f"figure {args.figure} ({scale}): wrote {', '.join(f'{n}.json' for n in sorted(docs))} to {out}")
    if not args.run:
        return 0
    status = 0
    for name, doc in sorted(docs.items()):
        argv = [doc["command"], "--config", str(out / f"{name}.json"), "--out", str((out / name).resolve())]
        if args.workers is not None:
            argv += ["--workers", str(args.workers)]
        status = max(status, main(argv))
    return status


COMMANDS = {
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "scan": cmd_scan,
    "sweep": cmd_sweep,
    "kappa": cmd_kappa,
    "repro": cmd_repro,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse usage errors exit with 2 already
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, CheckpointError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
