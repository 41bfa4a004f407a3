"""Local mode statistics, generalized-Gibbs reference marginals and equilibration traces.

The stationary reference for a single mode at photon density D = n/m is
the geometric law p(k) = D^k / (D + 1)^(k + 1). Observed marginals of an
n-photon experiment live on k = 0..n, so the reference is truncated by
folding the entire geometric tail k >= n into the last bin; the raw
(untruncated) values are available separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import fock, hamiltonian


@dataclass(frozen=True)
class MarginalDistribution:
    """Photon-number distribution of one spatial mode, support 0..n."""

    mode: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.shape[0] < 1:
            raise ValueError("marginal needs a 1-d probability vector")
        if probs.min() < -fock.PROB_SUM_TOL:
            raise ValueError(f"negative probability {probs.min()}")
        if abs(probs.sum() - 1.0) > fock.PROB_SUM_TOL:
            raise ValueError(f"marginal sums to {probs.sum()!r}, expected 1")
        object.__setattr__(self, "probs", np.clip(probs, 0.0, None))


def marginal(dist: fock.FockDistribution, mode: int) -> MarginalDistribution:
    """Photon-number marginal of one mode (0-based) of a full distribution."""
    if not 0 <= mode < dist.m:
        raise ValueError(f"mode {mode} out of range for {dist.m} modes")
    probs = np.zeros(dist.n + 1)
    for occ, p in zip(dist.basis, dist.probs):
        probs[occ[mode]] += p
    return MarginalDistribution(mode, probs)


def geometric_photon_probability(k: int, density: float) -> float:
    """Raw stationary single-mode law D^k / (D + 1)^(k + 1) at photon density D."""
    if k < 0:
        raise ValueError(f"photon count must be >= 0, got {k}")
    if density < 0:
        raise ValueError(f"density must be >= 0, got {density}")
    return density**k / (density + 1.0) ** (k + 1)


def gge_marginal(n: int, m: int, mode: int = 0) -> MarginalDistribution:
    """Stationary single-mode reference for n photons in m modes, support 0..n.

    Bins k < n carry the raw geometric values; bin n absorbs the whole
    geometric tail (D/(D+1))^n so the truncated law sums to exactly 1.
    """
    if n < 0 or m < 1:
        raise ValueError(f"need n >= 0 and m >= 1, got n={n}, m={m}")
    d = n / m
    probs = np.array([geometric_photon_probability(k, d) for k in range(n)]
                     + [(d / (d + 1.0)) ** n])
    return MarginalDistribution(mode, probs)


def _prob_vector(p) -> np.ndarray:
    if isinstance(p, MarginalDistribution):
        return p.probs
    if isinstance(p, fock.FockDistribution):
        return p.probs
    return np.asarray(p, dtype=float)


def tvd(p, q) -> float:
    """Total variation distance between two distributions on a common support.

    Accepts MarginalDistribution, FockDistribution or plain probability
    vectors; mismatched supports raise.
    """
    pv, qv = _prob_vector(p), _prob_vector(q)
    if pv.shape != qv.shape:
        raise ValueError(f"support mismatch: {pv.shape} vs {qv.shape}")
    return float(0.5 * np.sum(np.abs(pv - qv)))


def momentum_occupations(occ) -> np.ndarray:
    """Mean occupation of each collective Fourier mode for a product input pattern.

    For a Fock product state the cross terms <b_x† b_y> vanish, so every
    Fourier mode carries the same mean n/m. These are the conserved
    charges that pin the stationary reference; the vector is returned in
    full for interface symmetry.
    """
    occ = fock._check_occupation(occ)
    m = len(occ)
    return np.full(m, fock.total(occ) / m)


@dataclass(frozen=True)
class TracePoint:
    t: float
    marginal: MarginalDistribution
    tvd_to_gge: float


def equilibration_trace(spec: hamiltonian.HamiltonianSpec, input_occ, times,
                        model=fock.MODEL_INDISTINGUISHABLE, mode: int = 0,
                        threads: int = 1) -> list[TracePoint]:
    """Single-mode marginal and its distance to the stationary reference over time."""
    input_occ = fock._check_occupation(input_occ, spec.modes, "input pattern")
    n = fock.total(input_occ)
    ref = gge_marginal(n, spec.modes, mode)
    out = []
    for t in times:
        u = hamiltonian.evolution(spec, float(t))
        dist = fock.output_distribution(u, input_occ, model, threads=threads)
        marg = marginal(dist, mode)
        out.append(TracePoint(float(t), marg, tvd(marg, ref)))
    return out


def recurrence_time(spec: hamiltonian.HamiltonianSpec, input_occ,
                    model=fock.MODEL_INDISTINGUISHABLE, t_max: float = 6.0,
                    samples: int = 240, mode: int = 0) -> float:
    """Scan for the first revival of the initial single-mode marginal.

    Coarse grid on (0, t_max], then a bounded scalar minimization of the
    distance to the t=0 marginal around the best grid point.
    """
    input_occ = fock._check_occupation(input_occ, spec.modes, "input pattern")

    def dist_to_start(t: float) -> float:
        u = hamiltonian.evolution(spec, t)
        d = fock.output_distribution(u, input_occ, model)
        return tvd(marginal(d, mode), start)

    u0 = hamiltonian.evolution(spec, 0.0)
    start = marginal(fock.output_distribution(u0, input_occ, model), mode)
    ts = np.linspace(0.0, t_max, samples + 1)[1:]
    vals = np.array([dist_to_start(t) for t in ts])
    # skip the initial departure, then take the best later grid point
    ceiling = 0.5 * vals.max()
    past = np.nonzero(vals >= ceiling)[0]
    if past.size == 0:
        raise ValueError("marginal never departs from its initial value on the scanned grid")
    search = past[0] + np.argmin(vals[past[0]:])
    lo = ts[max(search - 1, 0)]
    hi = ts[min(search + 1, len(ts) - 1)]
    res = minimize_scalar(dist_to_start, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x)
