"""Kuramoto dynamics on ring topologies.

``theta_i' = omega_i + eps * sum_j A_ij sin(theta_j - theta_i)``

Phases are integrated unwrapped; they are reduced to ``[0, 2pi)`` only when
stored in a :class:`Trajectory`. Instantaneous frequencies are right-hand
side evaluations at the sample times, not finite differences.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .topology import DistanceDependentProfile, Topology, WattsStrogatzGraph

__all__ = [
    "IntegrationError",
    "PhaseState",
    "NaturalFrequencies",
    "SimulationConfig",
    "Trajectory",
    "rhs",
    "rhs_direct",
    "integrate",
    "sample_initial_conditions",
    "sample_frequencies",
    "save_trajectory",
    "load_trajectory",
    "write_trajectory_csv",
]

TWO_PI = 2.0 * np.pi


class IntegrationError(RuntimeError):
    """Integration aborted (step-size underflow, non-finite state, step budget)."""

    def __init__(self, reason: str, t: float, detail: str = ""):
        self.reason = reason
        self.t = t
        msg = f"integration aborted at t={t:.6g}: {reason}"
        super().__init__(msg + (f" ({detail})" if detail else ""))


@dataclass(frozen=True)
class PhaseState:
    theta: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        if theta.ndim != 1 or theta.size == 0:
            raise ValueError("phase vector must be one-dimensional and non-empty")
        if not np.all(np.isfinite(theta)):
            raise ValueError("phase vector contains non-finite entries")
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    @property
    def n(self) -> int:
        return self.theta.size

    def wrapped(self) -> np.ndarray:
        """Canonical representative in ``[0, 2pi)``."""
        return np.mod(self.theta, TWO_PI)


@dataclass(frozen=True)
class NaturalFrequencies:
    """Frequency vector with a replayable record of how it was produced."""

    values: np.ndarray
    seed: int | None = None
    distribution: str = "normal(mu=0, sigma=1)"
    perturbation: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("frequency vector must be one-dimensional")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size

    def provenance(self) -> dict:
        return {"seed": self.seed, "distribution": self.distribution,
                "perturbation": [list(p) for p in self.perturbation]}


@dataclass(frozen=True)
class SimulationConfig:
    """Coupling strength and integration/observation settings.

    Samples are taken at ``t_transient + k*dt_sample`` for
    ``k = 0 .. round(t_observe/dt_sample)``.
    """

    eps: float = 0.0
    t_transient: float = 500.0
    t_observe: float = 500.0
    dt_sample: float = 0.1
    abs_tol: float = 1e-6
    rel_tol: float = 1e-6
    max_step: float = 1.0
    max_steps: int = 50_000_000
    store_phases: bool = True
    mean_field_fast_path: bool = False

    def __post_init__(self):
        if not self.eps >= 0:
            raise ValueError(f"coupling strength must be >= 0, got {self.eps}")
        for name in ("t_transient", "t_observe", "dt_sample", "abs_tol", "rel_tol", "max_step"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value}")
        if self.dt_sample > self.t_observe:
            raise ValueError("dt_sample must not exceed t_observe")

    @property
    def n_samples(self) -> int:
        return int(round(self.t_observe / self.dt_sample)) + 1

    @property
    def t_end(self) -> float:
        return self.t_transient + (self.n_samples - 1) * self.dt_sample

    def sample_times(self) -> np.ndarray:
        return self.t_transient + np.arange(self.n_samples) * self.dt_sample

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> SimulationConfig:
        return cls(**d)

    def with_(self, **changes) -> SimulationConfig:
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Observation-window samples of one integration.

    ``phases`` and ``freqs`` are ``(T, N)`` (rows are sample times) and are
    ``None`` when the run was made with ``store_phases=False``. ``r`` and
    ``mean_frequencies`` are always present.
    """

    times: np.ndarray
    r: np.ndarray
    mean_frequencies: np.ndarray
    final: PhaseState
    phases: np.ndarray | None = None
    freqs: np.ndarray | None = None
    topology: Topology | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.mean_frequencies.size

    @property
    def n_samples(self) -> int:
        return self.times.size


def sample_initial_conditions(n: int, seed) -> PhaseState:
    """I.i.d. phases uniform on ``[0, 2pi)``."""
    if n < 1:
        raise ValueError("need at least one oscillator")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, TWO_PI, size=n)
    # uniform() may round up to the open endpoint
    theta[theta >= TWO_PI] = 0.0
    return PhaseState(theta)


def sample_frequencies(n: int, seed) -> NaturalFrequencies:
    """I.i.d. standard normal natural frequencies."""
    if n < 1:
        raise ValueError("need at least one oscillator")
    rng = np.random.default_rng(seed)
    return NaturalFrequencies(rng.standard_normal(n), seed=seed)


def _as_theta(state) -> np.ndarray:
    return state.theta if isinstance(state, PhaseState) else np.asarray(state, dtype=float)


def _as_omega(omega) -> np.ndarray:
    return omega.values if isinstance(omega, NaturalFrequencies) else np.asarray(omega, dtype=float)


_NO_EDGES = np.zeros(0, dtype=np.int64)
_NO_WEIGHTS = np.zeros(0)


def _kernel_args(topology: Topology, fast_mean_field: bool = False) -> tuple:
    """``(kind, src, dst, weights)`` selecting the compiled right-hand side."""
    if isinstance(topology, WattsStrogatzGraph):
        src, dst = topology.edge_index
        return _kernels.EDGES, src, dst, _NO_WEIGHTS
    if isinstance(topology, DistanceDependentProfile):
        if fast_mean_field and topology.alpha == 0:
            return _kernels.MEAN_FIELD, _NO_EDGES, _NO_EDGES, np.array([1.0 / (topology.n - 1)])
        return _kernels.HALF_RING, _NO_EDGES, _NO_EDGES, np.ascontiguousarray(topology.weights)
    raise TypeError(f"unsupported topology type {type(topology).__name__}")


def _check_sizes(theta, omega, topology):
    if not (theta.size == omega.size == topology.n):
        raise ValueError(
            f"dimension mismatch: {theta.size} phases, {omega.size} frequencies, "
            f"{topology.n} nodes in topology"
        )


def rhs(state, omega, eps: float, topology: Topology, *, fast_mean_field: bool = False) -> np.ndarray:
    """Instantaneous frequencies ``theta'`` for ``state``."""
    theta = _as_theta(state)
    om = _as_omega(omega)
    _check_sizes(theta, om, topology)
    kind, src, dst, weights = _kernel_args(topology, fast_mean_field)
    out = np.empty(theta.size)
    _kernels.rhs(kind, np.ascontiguousarray(theta), np.ascontiguousarray(om), float(eps), src, dst, weights, out)
    return out


def rhs_direct(state, omega, eps: float, topology: Topology) -> np.ndarray:
    """Literal evaluation of the model sums (reference path, O(N^2) memory).

    Watts-Strogatz: ``sum_j A_ij sin(theta_j - theta_i)`` over the dense
    adjacency. Distance-dependent: the half-ring form
    ``(1/eta) sum_{j=1}^{N'} j^-alpha [sin(theta_{i+j}-theta_i) + sin(theta_{i-j}-theta_i)]``.
    """
    theta = _as_theta(state)
    om = _as_omega(omega)
    _check_sizes(theta, om, topology)
    if isinstance(topology, DistanceDependentProfile):
        acc = np.zeros(theta.size)
        for j, w in enumerate(topology.weights, start=1):
            acc += w * (np.sin(np.roll(theta, -j) - theta) + np.sin(np.roll(theta, j) - theta))
        return om + eps * acc
    a = topology.adjacency()
    return om + eps * (a * np.sin(theta[None, :] - theta[:, None])).sum(axis=1)


_STATUS = {
    _kernels.STEP_UNDERFLOW: "step-size underflow",
    _kernels.NON_FINITE: "non-finite state",
    _kernels.MAX_STEPS: "step budget exhausted",
}


def integrate(initial, omega, topology: Topology, config: SimulationConfig) -> Trajectory:
    """Integrate from ``t = 0`` through the transient and observation window.

    Raises :class:`IntegrationError` if the adaptive stepper aborts.
    """
    theta0 = np.ascontiguousarray(_as_theta(initial), dtype=float)
    om = np.ascontiguousarray(_as_omega(omega), dtype=float)
    _check_sizes(theta0, om, topology)
    kind, src, dst, weights = _kernel_args(topology, config.mean_field_fast_path)
    status, t, y, r, omega_sum, phases, freqs, n_steps, n_rej = _kernels.dopri54(
        kind, src, dst, weights, theta0, om, float(config.eps),
        float(config.t_transient), float(config.dt_sample), config.n_samples,
        float(config.abs_tol), float(config.rel_tol), float(config.max_step),
        bool(config.store_phases), int(config.max_steps),
    )
    if status != _kernels.OK:
        raise IntegrationError(_STATUS[status], t, f"{n_steps} accepted, {n_rej} rejected steps")
    meta = {"n_steps": int(n_steps), "n_rejected": int(n_rej), "eps": config.eps}
    return Trajectory(
        times=config.sample_times(),
        r=r,
        mean_frequencies=omega_sum / config.n_samples,
        final=PhaseState(y, t),
        phases=np.mod(phases, TWO_PI) if config.store_phases else None,
        freqs=freqs if config.store_phases else None,
        topology=topology,
        meta=meta,
    )


def save_trajectory(traj: Trajectory, prefix, sidecar: dict | None = None) -> tuple[Path, Path]:
    """Write ``<prefix>.bin`` (raw little-endian float64 columns) and ``<prefix>.json``.

    The JSON sidecar lists every column with its shape and byte offset, plus
    ``sidecar`` (parameters, seeds) verbatim.
    """
    prefix = Path(prefix)
    columns = {
        "times": traj.times,
        "r": traj.r,
        "mean_frequencies": traj.mean_frequencies,
        "final_theta": traj.final.theta,
    }
    if traj.phases is not None:
        columns["phases"] = traj.phases
        columns["freqs"] = traj.freqs
    layout = []
    offset = 0
    bin_path = prefix.with_suffix(".bin")
    with open(bin_path, "wb") as fh:
        for name, arr in columns.items():
            data = np.ascontiguousarray(arr, dtype="<f8")
            fh.write(data.tobytes())
            layout.append({"name": name, "shape": list(data.shape), "offset": offset})
            offset += data.nbytes
    doc = {
        "format": "float64-le-columns",
        "N": traj.n,
        "final_t": traj.final.t,
        "columns": layout,
        "meta": traj.meta,
        "topology": traj.topology.describe() if traj.topology is not None else None,
        "params": sidecar or {},
    }
    json_path = prefix.with_suffix(".json")
    json_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return bin_path, json_path


def load_trajectory(prefix) -> Trajectory:
    prefix = Path(prefix)
    doc = json.loads(prefix.with_suffix(".json").read_text())
    raw = prefix.with_suffix(".bin").read_bytes()
    cols = {}
    for col in doc["columns"]:
        count = int(np.prod(col["shape"])) if col["shape"] else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=col["offset"])
        cols[col["name"]] = arr.reshape(col["shape"]).astype(float)
    return Trajectory(
        times=cols["times"],
        r=cols["r"],
        mean_frequencies=cols["mean_frequencies"],
        final=PhaseState(cols["final_theta"], doc["final_t"]),
        phases=cols.get("phases"),
        freqs=cols.get("freqs"),
        meta=doc["meta"],
    )


def write_trajectory_csv(traj: Trajectory, omega, directory) -> tuple[Path, Path]:
    """Plain-text ``r.csv`` (t, r) and ``frequencies.csv`` (unit, omega, Omega)."""
    directory = Path(directory)
    om = _as_omega(omega)
    r_path = directory / "r.csv"
    lines = ["t,r"] + [f"{t!r},{r!r}" for t, r in zip(traj.times.tolist(), traj.r.tolist())]
    r_path.write_text("\n".join(lines) + "\n")
    f_path = directory / "frequencies.csv"
    lines = ["unit,omega,Omega"] + [
        f"{i},{w!r},{o!r}" for i, (w, o) in enumerate(zip(om.tolist(), traj.mean_frequencies.tolist()), start=1)
    ]
    f_path.write_text("\n".join(lines) + "\n")
    return r_path, f_path
