"""Parameter grids over coupling strength, topology and size.

A sweep writes into one directory::

    manifest.json              plan, plan hash, code version, completion bitmap, wall times
    grid.csv                   one row per completed grid point
    points/<id>/samples.csv    per-sample records
    points/<id>/summary.json   ensemble statistics (+ sha256 of samples.csv)

The manifest is rewritten after every grid point, so an interrupted sweep
resumes from the last completed point. Every point uses the same strategy
seed, i.e. sample ``s`` is the same realisation across the whole grid.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .dynamics import SimulationConfig
from .ensemble import (
    EnsembleStats,
    SampleTemplate,
    SamplingStrategy,
    read_samples_csv,
    run_ensemble,
    write_samples_csv,
)
from .topology import TopologySpec, kappa_dd, kappa_graph, kappa_ws

log = logging.getLogger(__name__)

__all__ = [
    "CheckpointError",
    "SweepPlan",
    "GridPoint",
    "SweepResult",
    "log_p_grid",
    "linear_grid",
    "run_sweep",
    "load_sweep",
    "KappaPoint",
    "kappa_curve",
    "scaling_sweep",
    "PRESETS",
    "preset",
]


class CheckpointError(RuntimeError):
    """A sweep directory is corrupted or belongs to a different plan."""


def log_p_grid(n: int, lo: float = 1e-3, hi: float = 1.0, include_zero: bool = True) -> tuple[float, ...]:
    """``n`` log-spaced rewiring probabilities, optionally preceded by ``p = 0``."""
    values = np.logspace(np.log10(lo), np.log10(hi), n).tolist()
    return tuple(([0.0] if include_zero else []) + values)


def linear_grid(lo: float, hi: float, n: int) -> tuple[float, ...]:
    return tuple(np.linspace(lo, hi, n).tolist())


@dataclass(frozen=True)
class SweepPlan:
    """Grid over ``sizes x topology_values x eps`` (row-major in that order).

    ``topology_values`` are rewiring probabilities for ``family='ws'`` and
    locality exponents for ``family='dd'``. ``sim.eps`` is ignored.
    """

    family: str
    eps: tuple[float, ...]
    topology_values: tuple[float, ...]
    sizes: tuple[int, ...] = (101,)
    strategy: SamplingStrategy = SamplingStrategy("shuffle-freq", count=51)
    sim: SimulationConfig = SimulationConfig()
    k: int = 2
    topology_seed: int = 0
    freq_seed: int = 0
    ic_seed: int = 1
    fingerprints: bool = False
    kappa_d: int = 2

    def __post_init__(self):
        if self.family not in ("ws", "dd"):
            raise ValueError(f"unknown topology family {self.family!r}")
        for name in ("eps", "topology_values", "sizes"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError(f"sweep axis {name!r} is empty")
            object.__setattr__(self, name, value)
        if self.family == "dd" and any(n % 2 == 0 for n in self.sizes):
            raise ValueError("distance-dependent sweeps need odd N")

    def points(self) -> list[GridPoint]:
        out = []
        for n in self.sizes:
            for v in self.topology_values:
                for e in self.eps:
                    out.append(GridPoint(len(out), int(n), float(v), float(e)))
        return out

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.sizes), len(self.topology_values), len(self.eps)

    def template(self, point: GridPoint) -> SampleTemplate:
        if self.family == "ws":
            spec = TopologySpec("ws", point.n, k=self.k, p=point.topology_value, seed=self.topology_seed)
        else:
            spec = TopologySpec("dd", point.n, alpha=point.topology_value)
        return SampleTemplate(spec, self.freq_seed, self.ic_seed)

    def simulation(self, point: GridPoint) -> SimulationConfig:
        return replace(self.sim, eps=point.eps)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "eps": list(self.eps),
            "topology_values": list(self.topology_values),
            "sizes": list(self.sizes),
            "strategy": self.strategy.to_dict(),
            "sim": self.sim.to_dict(),
            "k": self.k,
            "topology_seed": self.topology_seed,
            "freq_seed": self.freq_seed,
            "ic_seed": self.ic_seed,
            "fingerprints": self.fingerprints,
            "kappa_d": self.kappa_d,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SweepPlan:
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sweep plan keys: {', '.join(sorted(unknown))}")
        d = dict(d)
        if "strategy" in d:
            d["strategy"] = SamplingStrategy.from_dict(d["strategy"])
        if "sim" in d:
            d["sim"] = SimulationConfig.from_dict(d["sim"])
        return cls(**d)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


@dataclass(frozen=True)
class GridPoint:
    index: int
    n: int
    topology_value: float
    eps: float

    @property
    def id(self) -> str:
        return f"{self.index:05d}"


@dataclass
class SweepResult:
    plan: SweepPlan
    points: list[GridPoint]
    stats: dict[int, EnsembleStats]
    completed: list[bool]
    manifest: dict = field(default_factory=dict)

    @property
    def done(self) -> bool:
        return all(self.completed)

    def surface(self, metric: str = "R_mean") -> np.ndarray:
        """``metric`` on the ``(sizes, topology_values, eps)`` grid; NaN where not computed."""
        out = np.full(len(self.points), np.nan)
        for i, st in self.stats.items():
            out[i] = getattr(st, metric)
        return out.reshape(self.plan.shape)


def _kappa(plan: SweepPlan, point: GridPoint) -> float:
    if plan.family == "ws":
        return kappa_ws(point.topology_value)
    return kappa_dd(point.topology_value, point.n, plan.kappa_d).kappa


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json_atomic(path: Path, doc: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


GRID_COLUMNS = ("point_id", "N", "topology_value", "eps", "kappa", "delta", "chi", "R_mean",
                "freq_sync_fraction", "n_failed", "attractors")


def _write_grid(out: Path, plan: SweepPlan, points, stats) -> None:
    with open(out / "grid.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRID_COLUMNS)
        for pt in points:
            st = stats.get(pt.index)
            if st is None:
                continue
            w.writerow([pt.id, pt.n, repr(pt.topology_value), repr(pt.eps), repr(_kappa(plan, pt)),
                        repr(st.delta), repr(st.chi), repr(st.R_mean), repr(st.freq_sync_fraction),
                        st.n_failed, "" if st.attractors is None else st.attractors])


def _load_point(out: Path, point: GridPoint) -> EnsembleStats:
    pdir = out / "points" / point.id
    try:
        summary = json.loads((pdir / "summary.json").read_text())
        if _sha256(pdir / "samples.csv") != summary["samples_sha256"]:
            raise CheckpointError(f"{pdir}/samples.csv does not match its recorded checksum")
        records = read_samples_csv(pdir / "samples.csv")
    except CheckpointError:
        raise
    except (OSError, ValueError, KeyError) as exc:
        raise CheckpointError(f"grid point {point.id} is marked complete but unreadable: {exc}") from exc
    stats = EnsembleStats.from_records(records, summary["histogram"]["bin_width"])
    stats.attractors = summary.get("attractors")
    return stats


def _save_point(out: Path, point: GridPoint, stats: EnsembleStats, kappa: float) -> None:
    pdir = out / "points" / point.id
    pdir.mkdir(parents=True, exist_ok=True)
    write_samples_csv(stats.records, pdir / "samples.csv")
    doc = stats.summary() | {
        "point": {"id": point.id, "N": point.n, "topology_value": point.topology_value, "eps": point.eps},
        "kappa": kappa,
        "samples_sha256": _sha256(pdir / "samples.csv"),
    }
    _write_json_atomic(pdir / "summary.json", doc)


def _read_manifest(out: Path) -> dict:
    try:
        return json.loads((out / "manifest.json").read_text())
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read {out / 'manifest.json'}: {exc}") from exc


def run_sweep(plan: SweepPlan, out_dir, *, workers: int | None = None, resume: bool = True,
              max_points: int | None = None) -> SweepResult:
    """Run (or resume) every grid point of ``plan`` into ``out_dir``.

    ``max_points`` stops after that many newly computed points, leaving a
    resumable partial sweep.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    points = plan.points()
    stats: dict[int, EnsembleStats] = {}
    manifest_path = out / "manifest.json"
    if manifest_path.exists():
        if not resume:
            raise CheckpointError(f"{out} already holds a sweep; pass resume=True or use a fresh directory")
        manifest = _read_manifest(out)
        if manifest.get("plan_sha256") != plan.digest():
            raise CheckpointError(f"{out} holds a sweep for a different plan")
        completed = manifest.get("completed")
        if not isinstance(completed, list) or len(completed) != len(points):
            raise CheckpointError(f"{manifest_path}: completion bitmap has the wrong length")
        for pt, done in zip(points, completed):
            if done:
                stats[pt.index] = _load_point(out, pt)
    else:
        completed = [False] * len(points)
        manifest = {
            "plan": plan.to_dict(),
            "plan_sha256": plan.digest(),
            "version": __version__,
            "points": [{"id": p.id, "N": p.n, "topology_value": p.topology_value, "eps": p.eps} for p in points],
            "completed": completed,
            "wall_time": {},
        }
        _write_json_atomic(manifest_path, manifest)

    fresh = 0
    for pt in points:
        if completed[pt.index]:
            continue
        if max_points is not None and fresh >= max_points:
            break
        t0 = time.perf_counter()
        st = run_ensemble(plan.template(pt), plan.strategy, plan.simulation(pt), workers=workers,
                          fingerprints=plan.fingerprints)
        _save_point(out, pt, st, _kappa(plan, pt))
        stats[pt.index] = st
        completed[pt.index] = True
        manifest["completed"] = completed
        manifest["wall_time"][pt.id] = round(time.perf_counter() - t0, 3)
        _write_json_atomic(manifest_path, manifest)
        _write_grid(out, plan, points, stats)
        fresh += 1
        log.info("point %s (N=%d, value=%g, eps=%g): delta=%.4f chi=%.4f R=%.4f",
                 pt.id, pt.n, pt.topology_value, pt.eps, st.delta, st.chi, st.R_mean)
    _write_grid(out, plan, points, stats)
    return SweepResult(plan, points, stats, list(completed), manifest)


def load_sweep(out_dir) -> SweepResult:
    out = Path(out_dir)
    manifest = _read_manifest(out)
    plan = SweepPlan.from_dict(manifest["plan"])
    if plan.digest() != manifest.get("plan_sha256"):
        raise CheckpointError(f"{out}/manifest.json: plan does not match its checksum")
    points = plan.points()
    stats = {p.index: _load_point(out, p) for p, done in zip(points, manifest["completed"]) if done}
    return SweepResult(plan, points, stats, list(manifest["completed"]), manifest)


@dataclass(frozen=True)
class KappaPoint:
    topology_value: float
    kappa: float
    chi: float
    delta: float
    R_mean: float
    kappa_empirical: float | None = None


def kappa_curve(plan: SweepPlan, out_dir, *, workers: int | None = None) -> list[KappaPoint]:
    """Fluctuations versus short/long-range ratio at a single coupling strength."""
    if len(plan.eps) != 1 or len(plan.sizes) != 1:
        raise ValueError("kappa curve needs a single eps and a single N; vary only the topology axis")
    result = run_sweep(plan, out_dir, workers=workers)
    curve = []
    for pt in result.points:
        st = result.stats[pt.index]
        emp = None
        if plan.family == "ws":
            emp = kappa_graph(plan.template(pt).topology.build(), plan.kappa_d).kappa
        curve.append(KappaPoint(pt.topology_value, _kappa(plan, pt), st.chi, st.delta, st.R_mean, emp))
    return curve


def scaling_sweep(sizes: Sequence[int], family: str, topology_value: float, eps: float,
                  strategy: SamplingStrategy, sim: SimulationConfig, out_dir, *,
                  workers: int | None = None, **plan_kwargs) -> dict[int, EnsembleStats]:
    """Ensemble statistics per network size with matched sample counts."""
    plan = SweepPlan(family=family, eps=(eps,), topology_values=(topology_value,), sizes=tuple(sizes),
                     strategy=strategy, sim=sim, **plan_kwargs)
    result = run_sweep(plan, out_dir, workers=workers)
    return {pt.n: result.stats[pt.index] for pt in result.points}


# Coupling strengths quoted for the topology transitions; the grids themselves
# are reconstructions (equally spaced, p log-spaced) at desk scale.
EPS_WS = 4.51282
EPS_DD = 6.46154
P_INTERMEDIATE = (0.08733, 0.19684)


def _desk(n=101, count=51, variant="shuffle-freq", **strategy) -> dict:
    return {"sizes": (n,), "strategy": SamplingStrategy(variant, count=count, **strategy)}


PRESETS = {
    # figure 3: coupling- and topology-induced transitions
    "fig3-ws-eps": lambda: SweepPlan("ws", linear_grid(0.0, 10.0, 21), (0.0,) + P_INTERMEDIATE + (1.0,), **_desk()),
    "fig3-dd-eps": lambda: SweepPlan("dd", linear_grid(0.0, 10.0, 21), (0.0, 1.76923, 3.0), **_desk()),
    "fig3-ws-p": lambda: SweepPlan("ws", (EPS_WS,), log_p_grid(21), **_desk()),
    "fig3-dd-alpha": lambda: SweepPlan("dd", (EPS_DD,), linear_grid(0.0, 5.0, 21), **_desk()),
    # figure 4: (p, eps) surface
    "fig4": lambda: SweepPlan("ws", linear_grid(0.0, 10.0, 21), log_p_grid(20), **_desk()),
    # figure 6: fluctuations versus kappa
    "fig6-ws": lambda: SweepPlan("ws", (EPS_WS,), log_p_grid(21, include_zero=False), **_desk()),
    "fig6-dd": lambda: SweepPlan("dd", (EPS_DD,), linear_grid(0.0, 5.0, 21), **_desk()),
    # figure 7: initial-condition shuffles with attractor counting
    "fig7": lambda: SweepPlan("ws", (EPS_WS,), log_p_grid(11), fingerprints=True,
                              **_desk(variant="shuffle-ic")),
    # figure 8: distributions of R, frequency versus initial-condition shuffles
    "fig8-freq": lambda: SweepPlan("ws", (2.0, EPS_WS, 8.0), P_INTERMEDIATE, **_desk(count=501)),
    "fig8-ic": lambda: SweepPlan("ws", (2.0, EPS_WS, 8.0), P_INTERMEDIATE, **_desk(count=501, variant="shuffle-ic")),
    # supplementary size scaling
    "scaling-ws": lambda: SweepPlan("ws", (EPS_WS,), (P_INTERMEDIATE[0],), sizes=(101, 201, 501, 1001),
                                    strategy=SamplingStrategy("shuffle-freq", count=51)),
}


def preset(name: str, full_scale: bool = False) -> SweepPlan:
    """Desk-scale plan for ``name``; ``full_scale`` switches to N=501 and 501 samples."""
    try:
        plan = PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None
    if full_scale:
        sizes = plan.sizes if name.startswith("scaling") else (501,)
        count = max(plan.strategy.count, 501)
        plan = replace(plan, sizes=sizes, strategy=replace(plan.strategy, count=count))
    return plan
