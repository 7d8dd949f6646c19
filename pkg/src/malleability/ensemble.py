"""Sample families, parallel execution and sample-to-sample statistics.

Every sample is a pure function of ``(template, strategy, index, sim)``: the
per-sample seed is ``derive_seed(strategy.base_seed, index)``, a
``numpy.random.SeedSequence`` child keyed by the index. Results therefore do
not depend on worker count or scheduling, and an ensemble can be extended
without re-running earlier samples.
"""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .dynamics import (
    IntegrationError,
    NaturalFrequencies,
    PhaseState,
    SimulationConfig,
    integrate,
    sample_frequencies,
    sample_initial_conditions,
)
from .observables import count_attractors, fingerprint, summarize
from .topology import TopologySpec

__all__ = [
    "VARIANTS",
    "SamplingStrategy",
    "SampleTemplate",
    "Sample",
    "SampleRecord",
    "Histogram",
    "EnsembleStats",
    "derive_seed",
    "shuffle_frequencies",
    "single_unit_change",
    "perturb_unit",
    "realize",
    "run_sample",
    "run_samples",
    "run_ensemble",
    "run_reference",
    "DeltaScan",
    "delta_omega_scan",
    "CrossMatrix",
    "cross_matrix",
    "histogram_R",
    "write_samples_csv",
    "read_samples_csv",
    "write_summary_json",
    "default_workers",
]

VARIANTS = (
    "shuffle-freq",
    "single-unit",
    "perturb-unit",
    "shuffle-ic",
    "resample-freq",
    "resample-ic",
    "resample-topology",
)

HIST_BIN = 0.005


def derive_seed(base_seed: int, *key: int) -> int:
    """64-bit child seed of ``base_seed`` for the spawn key ``key``."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def default_workers() -> int:
    env = os.environ.get("MALLEABILITY_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SamplingStrategy:
    """How the samples of an ensemble differ from the template.

    ``unit`` (1-based) applies to ``single-unit`` and ``perturb-unit``; when it
    is ``None`` sample ``s`` changes unit ``s mod N + 1``, so ``count = N``
    scans every unit.
    """

    variant: str
    count: int = 1
    base_seed: int = 0
    unit: int | None = None
    omega_new: float | None = None
    delta_omega: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown sampling variant {self.variant!r}; choose from {', '.join(VARIANTS)}")
        if self.count < 1:
            raise ValueError("an ensemble needs at least one sample")
        if self.variant == "single-unit" and self.omega_new is None:
            raise ValueError("single-unit strategy needs omega_new")
        if self.variant == "perturb-unit" and self.delta_omega is None:
            raise ValueError("perturb-unit strategy needs delta_omega")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("variant", "count", "base_seed", "unit", "omega_new", "delta_omega")}

    @classmethod
    def from_dict(cls, d: dict) -> SamplingStrategy:
        return cls(**d)


@dataclass(frozen=True)
class SampleTemplate:
    """Reference realisation: topology plus the seeds of the base frequencies and phases."""

    topology: TopologySpec
    freq_seed: int = 0
    ic_seed: int = 1

    @property
    def n(self) -> int:
        return self.topology.n

    def base_frequencies(self) -> NaturalFrequencies:
        return sample_frequencies(self.n, self.freq_seed)

    def base_initial(self) -> PhaseState:
        return sample_initial_conditions(self.n, self.ic_seed)

    def to_dict(self) -> dict:
        return {"topology": self.topology.to_dict(), "freq_seed": self.freq_seed, "ic_seed": self.ic_seed}

    @classmethod
    def from_dict(cls, d: dict) -> SampleTemplate:
        return cls(TopologySpec.from_dict(d["topology"]), d["freq_seed"], d["ic_seed"])


def shuffle_frequencies(omega: NaturalFrequencies, seed) -> NaturalFrequencies:
    """Random permutation of the frequency vector (same multiset)."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(omega.n)
    return NaturalFrequencies(omega.values[perm], seed=omega.seed, distribution=omega.distribution,
                              perturbation=omega.perturbation + (("shuffle", seed),))


def _check_unit(unit: int, n: int) -> None:
    if not 1 <= unit <= n:
        raise ValueError(f"unit {unit} outside [1, {n}]")


def single_unit_change(omega: NaturalFrequencies, unit: int, omega_new: float) -> NaturalFrequencies:
    """Set the frequency of ``unit`` (1-based) to ``omega_new``."""
    _check_unit(unit, omega.n)
    values = omega.values.copy()
    old = float(values[unit - 1])
    values[unit - 1] = omega_new
    return NaturalFrequencies(values, seed=omega.seed, distribution=omega.distribution,
                              perturbation=omega.perturbation + (("set", unit, old, float(omega_new)),))


def perturb_unit(omega: NaturalFrequencies, unit: int, delta: float) -> NaturalFrequencies:
    _check_unit(unit, omega.n)
    return single_unit_change(omega, unit, float(omega.values[unit - 1]) + delta)


@dataclass(frozen=True)
class Sample:
    index: int
    seed: int
    omega: NaturalFrequencies
    initial: PhaseState
    topology: TopologySpec
    perturbation: str


def _unit_for(strategy: SamplingStrategy, index: int, n: int) -> int:
    return strategy.unit if strategy.unit is not None else index % n + 1


def realize(template: SampleTemplate, strategy: SamplingStrategy, index: int) -> Sample:
    """Concrete frequencies, initial phases and topology of sample ``index``."""
    n = template.n
    seed = derive_seed(strategy.base_seed, index)
    omega = template.base_frequencies()
    initial = template.base_initial()
    topology = template.topology
    v = strategy.variant
    if v == "shuffle-freq":
        omega = shuffle_frequencies(omega, seed)
        desc = f"shuffle-freq seed={seed}"
    elif v == "single-unit":
        unit = _unit_for(strategy, index, n)
        old = float(omega.values[unit - 1])
        omega = single_unit_change(omega, unit, strategy.omega_new)
        desc = f"unit={unit} omega {old!r}->{float(strategy.omega_new)!r}"
    elif v == "perturb-unit":
        unit = _unit_for(strategy, index, n)
        omega = perturb_unit(omega, unit, strategy.delta_omega)
        desc = f"unit={unit} delta_omega={float(strategy.delta_omega)!r}"
    elif v == "shuffle-ic":
        perm = np.random.default_rng(seed).permutation(n)
        initial = PhaseState(initial.theta[perm])
        desc = f"shuffle-ic seed={seed}"
    elif v == "resample-freq":
        omega = sample_frequencies(n, seed)
        desc = f"resample-freq seed={seed}"
    elif v == "resample-ic":
        initial = sample_initial_conditions(n, seed)
        desc = f"resample-ic seed={seed}"
    else:
        if topology.family != "ws":
            raise ValueError("resample-topology needs a Watts-Strogatz template (distance-dependent rings have no disorder)")
        topology = replace(topology, seed=seed)
        desc = f"resample-topology seed={seed}"
    return Sample(index=index, seed=seed, omega=omega, initial=initial, topology=topology, perturbation=desc)


@dataclass
class SampleRecord:
    sample_id: int
    R: float
    r_std: float
    freq_sync: bool
    seed: int
    perturbation: str
    status: str = "ok"
    fingerprint: np.ndarray | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _simulate(sample_id, seed, desc, omega, initial, topology_spec, sim, with_fingerprint) -> SampleRecord:
    topology = topology_spec.build()
    if with_fingerprint and not sim.store_phases:
        sim = replace(sim, store_phases=True)
    try:
        traj = integrate(initial, omega, topology, sim)
    except IntegrationError as exc:
        return SampleRecord(sample_id, float("nan"), float("nan"), False, seed, desc,
                            status=f"failed: {exc.reason} at t={exc.t:.6g}")
    s = summarize(traj)
    fp = fingerprint(traj).features if with_fingerprint else None
    return SampleRecord(sample_id, s.R, s.r_std, s.freq_sync, seed, desc, fingerprint=fp)


def run_sample(template: SampleTemplate, strategy: SamplingStrategy, index: int,
               sim: SimulationConfig, with_fingerprint: bool = False) -> SampleRecord:
    sample = realize(template, strategy, index)
    return _simulate(index, sample.seed, sample.perturbation, sample.omega, sample.initial,
                     sample.topology, sim, with_fingerprint)


def run_reference(template: SampleTemplate, sim: SimulationConfig, with_fingerprint: bool = False) -> SampleRecord:
    """Simulate the unperturbed template."""
    return _simulate(-1, template.freq_seed, "reference", template.base_frequencies(),
                     template.base_initial(), template.topology, sim, with_fingerprint)


def _call(job):
    fn, args = job
    return fn(*args)


def run_samples(jobs: Sequence[tuple], workers: int | None = None) -> list:
    """Evaluate ``(fn, args)`` jobs, returning results in job order."""
    workers = default_workers() if workers is None else workers
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [_call(j) for j in jobs]
    chunk = max(1, len(jobs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_call, jobs, chunksize=chunk))


@dataclass(frozen=True)
class Histogram:
    """Occupation counts of bins ``[k*w, (k+1)*w)`` covering ``[0, 1]`` (1.0 falls in the last bin)."""

    bin_width: float
    counts: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.counts.size

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n_bins + 1) * self.bin_width

    @property
    def probabilities(self) -> np.ndarray:
        total = self.counts.sum()
        if total == 0:
            return np.zeros(self.n_bins)
        return self.counts / total

    def coarsen(self, factor: int) -> Histogram:
        if self.n_bins % factor:
            raise ValueError(f"{self.n_bins} bins cannot be merged in groups of {factor}")
        return Histogram(self.bin_width * factor, self.counts.reshape(-1, factor).sum(axis=1))

    def to_dict(self) -> dict:
        return {"bin_width": self.bin_width, "counts": self.counts.tolist(),
                "probabilities": self.probabilities.tolist()}


def histogram_R(values, bin_width: float = HIST_BIN) -> Histogram:
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    n_bins = int(round(1.0 / bin_width))
    if abs(n_bins * bin_width - 1.0) > 1e-9:
        raise ValueError(f"bin width {bin_width} does not tile [0, 1]")
    v = np.asarray(values, dtype=float)
    if v.size and (np.any(~np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0):
        raise ValueError("order-parameter values must lie in [0, 1]")
    idx = np.minimum(np.floor(v / bin_width).astype(np.int64), n_bins - 1)
    return Histogram(bin_width, np.bincount(idx, minlength=n_bins))


@dataclass
class EnsembleStats:
    records: list[SampleRecord]
    R_values: np.ndarray
    delta: float
    chi: float
    R_mean: float
    histogram: Histogram
    freq_sync_fraction: float
    n_failed: int
    attractors: int | None = None

    @property
    def count(self) -> int:
        return len(self.records)

    @classmethod
    def from_records(cls, records: Sequence[SampleRecord], bin_width: float = HIST_BIN,
                     tau: float | None = None) -> EnsembleStats:
        ok = [r for r in records if r.ok]
        R = np.array([r.R for r in ok], dtype=float)
        if R.size:
            delta = float(R.max() - R.min())
            chi = float(R.std())
            mean = float(R.mean())
            fs = float(np.mean([r.freq_sync for r in ok]))
        else:
            delta = chi = mean = fs = float("nan")
        attractors = None
        if tau is not None and ok and all(r.fingerprint is not None for r in ok):
            attractors = count_attractors([r.fingerprint for r in ok], tau)
        return cls(records=list(records), R_values=R, delta=delta, chi=chi, R_mean=mean,
                   histogram=histogram_R(R, bin_width), freq_sync_fraction=fs,
                   n_failed=len(records) - len(ok), attractors=attractors)

    def summary(self) -> dict:
        return {
            "count": self.count,
            "n_failed": self.n_failed,
            "delta": self.delta,
            "chi": self.chi,
            "R_mean": self.R_mean,
            "R_min": float(self.R_values.min()) if self.R_values.size else None,
            "R_max": float(self.R_values.max()) if self.R_values.size else None,
            "freq_sync_fraction": self.freq_sync_fraction,
            "attractors": self.attractors,
            "histogram": self.histogram.to_dict(),
        }


def run_ensemble(template: SampleTemplate, strategy: SamplingStrategy, sim: SimulationConfig, *,
                 workers: int | None = None, fingerprints: bool = False, tau: float = 1e-3,
                 bin_width: float = HIST_BIN) -> EnsembleStats:
    """One simulation per sample; failed samples are kept in ``records`` and counted."""
    if strategy.unit is not None:
        _check_unit(strategy.unit, template.n)
    realize(template, strategy, 0)  # validates strategy/template compatibility before spawning work
    jobs = [(run_sample, (template, strategy, i, sim, fingerprints)) for i in range(strategy.count)]
    records = run_samples(jobs, workers)
    return EnsembleStats.from_records(records, bin_width, tau if fingerprints else None)


@dataclass
class DeltaScan:
    units: np.ndarray
    deltas: np.ndarray
    delta_R: np.ndarray
    R_reference: float
    n_failed: int


def delta_omega_scan(template: SampleTemplate, units: Sequence[int], deltas: Sequence[float],
                     sim: SimulationConfig, *, workers: int | None = None) -> DeltaScan:
    """``delta_R[u, d] = R(omega_u + deltas[d]) - R(reference)``; the 0 column is exact zero."""
    deltas = np.asarray(deltas, dtype=float)
    units = np.asarray(units, dtype=np.int64)
    if not np.any(deltas == 0.0):
        raise ValueError("deltas must include 0 for the reference column")
    for u in units:
        _check_unit(int(u), template.n)
    ref = run_reference(template, sim)
    if not ref.ok:
        raise IntegrationError(ref.status, float("nan"))
    jobs, cells = [], []
    for a, u in enumerate(units):
        for b, d in enumerate(deltas):
            if d == 0.0:
                continue
            strategy = SamplingStrategy("perturb-unit", unit=int(u), delta_omega=float(d))
            jobs.append((run_sample, (template, strategy, 0, sim, False)))
            cells.append((a, b))
    out = np.zeros((units.size, deltas.size))
    failed = 0
    for (a, b), rec in zip(cells, run_samples(jobs, workers)):
        if rec.ok:
            out[a, b] = rec.R - ref.R
        else:
            out[a, b] = np.nan
            failed += 1
    return DeltaScan(units=units, deltas=deltas, delta_R=out, R_reference=ref.R, n_failed=failed)


@dataclass
class CrossMatrix:
    """R for frequency shuffle ``shuffle_ids[i]`` on network ``network_ids[j]``.

    ``network_order`` sorts networks by R under the first shuffle (ascending),
    the presentation order used for plotting.
    """

    R: np.ndarray
    shuffle_ids: np.ndarray
    network_ids: np.ndarray
    shuffle_seeds: np.ndarray
    network_seeds: np.ndarray
    network_order: np.ndarray


def _cross_cell(template, shuffle_seed, network_seed, sim):
    omega = shuffle_frequencies(template.base_frequencies(), shuffle_seed)
    topo = replace(template.topology, seed=network_seed)
    return _simulate(0, shuffle_seed, f"shuffle={shuffle_seed} network={network_seed}", omega,
                     template.base_initial(), topo, sim, False)


def cross_matrix(template: SampleTemplate, shuffles, networks, sim: SimulationConfig, *,
                 base_seed: int = 0, workers: int | None = None) -> CrossMatrix:
    """R over (frequency shuffle x network realisation) with fixed initial phases.

    ``shuffles``/``networks`` are counts or explicit id sequences; the seeds are
    ``derive_seed(base_seed, 0, id)`` and ``derive_seed(base_seed, 1, id)``.
    """
    if template.topology.family != "ws":
        raise ValueError("cross matrix needs a Watts-Strogatz template (distance-dependent rings have no disorder)")
    shuffle_ids = np.arange(shuffles) if np.isscalar(shuffles) else np.asarray(shuffles, dtype=np.int64)
    network_ids = np.arange(networks) if np.isscalar(networks) else np.asarray(networks, dtype=np.int64)
    s_seeds = np.array([derive_seed(base_seed, 0, i) for i in shuffle_ids], dtype=np.uint64)
    n_seeds = np.array([derive_seed(base_seed, 1, j) for j in network_ids], dtype=np.uint64)
    jobs = [(_cross_cell, (template, int(s), int(t), sim)) for s in s_seeds for t in n_seeds]
    recs = run_samples(jobs, workers)
    R = np.array([r.R for r in recs]).reshape(shuffle_ids.size, network_ids.size)
    order = np.argsort(R[0], kind="stable") if R.size else np.array([], dtype=np.int64)
    return CrossMatrix(R=R, shuffle_ids=shuffle_ids, network_ids=network_ids,
                       shuffle_seeds=s_seeds, network_seeds=n_seeds, network_order=order)


SAMPLE_COLUMNS = ("sample_id", "R", "r_std", "freq_sync", "seed", "perturbation", "status")


def write_samples_csv(records: Sequence[SampleRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_COLUMNS)
        for r in records:
            w.writerow([r.sample_id, repr(r.R), repr(r.r_std), int(r.freq_sync), r.seed, r.perturbation, r.status])


def read_samples_csv(path) -> list[SampleRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [SampleRecord(int(row["sample_id"]), float(row["R"]), float(row["r_std"]),
                         bool(int(row["freq_sync"])), int(row["seed"]), row["perturbation"], row["status"])
            for row in rows]


def write_summary_json(stats: EnsembleStats, path, extra: dict | None = None) -> None:
    doc = stats.summary()
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
