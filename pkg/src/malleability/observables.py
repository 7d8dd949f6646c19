"""Synchronization measures and attractor fingerprints."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from .dynamics import Trajectory
from .topology import DistanceDependentProfile

__all__ = [
    "order_parameter",
    "mean_R",
    "SyncSummary",
    "summarize",
    "frequency_synchronized",
    "AttractorFingerprint",
    "fingerprint",
    "count_attractors",
    "ring_blocks",
    "FINGERPRINT_FEATURES",
    "dump_records",
]

SECTION_SIZE = 100
FREQ_SYNC_TOL = 0.01


def order_parameter(theta) -> float:
    """Magnitude of the mean phasor, ``|sum_j exp(i theta_j)| / N``."""
    theta = np.asarray(theta, dtype=float)
    if theta.size == 0:
        raise ValueError("order parameter of an empty phase vector")
    z = np.exp(1j * theta).mean(axis=-1)
    return float(min(abs(z), 1.0))


def mean_R(traj: Trajectory) -> float:
    """Time average of r(t) over the observation window."""
    if traj.r.size == 0:
        raise ValueError("trajectory has an empty observation window")
    return float(np.mean(traj.r))


def frequency_synchronized(mean_frequencies, tol: float = FREQ_SYNC_TOL) -> bool:
    """True iff every time-averaged frequency lies within ``tol`` of their mean."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    om = np.asarray(mean_frequencies, dtype=float)
    return bool(np.max(np.abs(om - om.mean())) < tol)


@dataclass(frozen=True)
class SyncSummary:
    R: float
    r_std: float
    freq_sync: bool
    mean_frequencies: np.ndarray

    def to_record(self) -> dict:
        return {"R": self.R, "r_std": self.r_std, "freq_sync": self.freq_sync,
                "Omega": self.mean_frequencies.tolist()}


def summarize(traj: Trajectory, freq_tol: float = FREQ_SYNC_TOL) -> SyncSummary:
    return SyncSummary(
        R=mean_R(traj),
        r_std=float(np.std(traj.r)),
        freq_sync=frequency_synchronized(traj.mean_frequencies, freq_tol),
        mean_frequencies=traj.mean_frequencies,
    )


def ring_blocks(n: int, size: int = SECTION_SIZE) -> list[slice]:
    """Contiguous blocks of ``size`` units; the last block absorbs the remainder.

    ``n = 501`` gives four blocks of 100 and one of 101; ``n < 2*size`` gives a
    single block.
    """
    count = max(1, n // size)
    bounds = [b * size for b in range(count)] + [n]
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


FINGERPRINT_FEATURES = (
    "R",
    "r_std",
    "neighbor_sync[1..N]",
    "section_sync[blocks]",
    "Omega[1..N]",
    "Omega_std",
    "Omega_iqr",
    "Omega_max_gap",
)


@dataclass(frozen=True)
class AttractorFingerprint:
    """Feature vector in :data:`FINGERPRINT_FEATURES` order.

    All features are time averages over the observation window except
    ``r_std``, which depends on the spread but not the order of the samples.
    """

    features: np.ndarray
    n: int
    n_sections: int

    def distance(self, other: AttractorFingerprint) -> float:
        """Max-norm distance; symmetric."""
        return float(np.max(np.abs(self.features - other.features)))

    def to_record(self) -> dict:
        return {"N": self.n, "n_sections": self.n_sections, "features": self.features.tolist()}


def _neighbor_pairs(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    topo = traj.topology
    n = traj.n
    if topo is None or isinstance(topo, DistanceDependentProfile):
        # all-to-all weights: use the strongest links (ring distance 1)
        i = np.arange(n)
        return np.concatenate([i, i]), np.concatenate([(i + 1) % n, (i - 1) % n])
    src, dst = topo.edge_index
    return np.concatenate([src, dst]), np.concatenate([dst, src])


def fingerprint(traj: Trajectory) -> AttractorFingerprint:
    """Dynamical features used to tell attractors apart.

    Neighbour sync of unit ``i`` averages ``|exp(i theta_i) + exp(i theta_j)| / 2``
    over its neighbours ``j`` and over time; for distance-dependent rings the
    neighbours are the two adjacent units. The frequency gap is the largest
    spacing between consecutive sorted time-averaged frequencies.
    """
    if traj.phases is None:
        raise ValueError("fingerprint needs stored phases (run with store_phases=True)")
    if traj.n_samples == 0:
        raise ValueError("trajectory has an empty observation window")
    n = traj.n
    phases = traj.phases
    a, b = _neighbor_pairs(traj)
    pair_sync = np.abs(np.cos(0.5 * (phases[:, a] - phases[:, b]))).mean(axis=0)
    neighbor = np.bincount(a, weights=pair_sync, minlength=n) / np.maximum(np.bincount(a, minlength=n), 1)

    z = np.exp(1j * phases)
    blocks = ring_blocks(n)
    sections = np.array([np.abs(z[:, blk].mean(axis=1)).mean() for blk in blocks])

    om = traj.mean_frequencies
    q75, q25 = np.percentile(om, [75, 25])
    gap = float(np.max(np.diff(np.sort(om)))) if n > 1 else 0.0
    features = np.concatenate([
        [np.mean(traj.r), np.std(traj.r)],
        neighbor,
        sections,
        om,
        [np.std(om), q75 - q25, gap],
    ])
    return AttractorFingerprint(features=features, n=n, n_sections=len(blocks))


def count_attractors(fingerprints, tau: float = 1e-3) -> int:
    """Number of single-linkage clusters with max-norm links shorter than ``tau``.

    Features are compared in their natural units (order parameters in [0, 1],
    frequencies in units of the natural-frequency spread). Distinct
    clusters are a lower bound on the number of attractors.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    feats = [f.features if isinstance(f, AttractorFingerprint) else np.asarray(f, dtype=float)
             for f in fingerprints]
    if not feats:
        return 0
    if len(feats) == 1:
        return 1
    x = np.vstack(feats)
    linked = squareform(pdist(x, metric="chebyshev")) < tau
    n_clusters, _ = connected_components(csr_matrix(linked), directed=False)
    return int(n_clusters)


def dump_records(records: dict, path) -> None:
    """Write ``{sample_id: record}`` as JSON (SyncSummary/fingerprint records)."""
    doc = {str(k): (v.to_record() if hasattr(v, "to_record") else v) for k, v in records.items()}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
