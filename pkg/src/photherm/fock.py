"""Few-photon Fock states on m modes and their transfer through a linear-optical unitary.

Occupation patterns are tuples of per-mode photon counts. The canonical
basis order used by every distribution, sampler and state vector in the
package is colexicographic: patterns sorted by the last mode count first.
For one photon in two modes that reads [(1, 0), (0, 1)].

Transition laws:
  indistinguishable   P = |perm(M)|^2 / (prod_j r_j! s_j!)
  distinguishable     P = perm(|M|^2) / prod_j s_j!
  species mixture     sum over elementwise splittings of the output
                      pattern, one indistinguishable factor per species
where M is the submatrix of the unitary with columns repeated by the
input pattern r and rows by the output pattern s.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

ModeOccupation = tuple[int, ...]
SpeciesPartition = tuple[ModeOccupation, ...]

PERMANENT_MAX_DIM = 24
PROB_SUM_TOL = 1e-9

MODEL_INDISTINGUISHABLE = "indistinguishable"
MODEL_DISTINGUISHABLE = "distinguishable"


def total(occ: ModeOccupation) -> int:
    return sum(occ)


def _check_occupation(occ, m: int | None = None, name: str = "occupation") -> ModeOccupation:
    occ = tuple(int(x) for x in occ)
    if any(x < 0 for x in occ):
        raise ValueError(f"{name} has negative counts: {occ}")
    if m is not None and len(occ) != m:
        raise ValueError(f"{name} has {len(occ)} modes, expected {m}")
    return occ


@lru_cache(maxsize=None)
def enumerate_basis(n: int, m: int) -> tuple[ModeOccupation, ...]:
    """All patterns of n photons in m modes, colexicographic order.

    The count is C(n + m - 1, n). Cached, so callers may index into the
    returned tuple freely.
    """
    if n < 0 or m < 1:
        raise ValueError(f"need n >= 0 photons and m >= 1 modes, got n={n}, m={m}")
    if m == 1:
        return ((n,),)
    out = []
    for k in range(n + 1):
        for head in enumerate_basis(n - k, m - 1):
            out.append(head + (k,))
    return tuple(out)


def mode_assignment(occ: ModeOccupation) -> tuple[int, ...]:
    """Non-decreasing list of 0-based mode indices, one entry per photon.

    (2, 0, 0, 1) becomes (0, 0, 3).
    """
    occ = _check_occupation(occ)
    return tuple(j for j, c in enumerate(occ) for _ in range(c))


def permanent(a: np.ndarray) -> complex:
    """Matrix permanent by Ryser's formula with Gray-code subset updates.

    O(2^n n) work; dimension is capped at 24 because the sum is exact
    only while the 2^n loop stays affordable. The 0 x 0 permanent is 1.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n > PERMANENT_MAX_DIM:
        raise ValueError(f"dimension {n} exceeds permanent capacity {PERMANENT_MAX_DIM}")
    cols = [a[:, j] for j in range(n)]
    sums = np.zeros(n, dtype=complex)
    totalsum = 0.0 + 0.0j
    gray_prev = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        bit = gray ^ gray_prev
        j = bit.bit_length() - 1
        if gray & bit:
            sums = sums + cols[j]
        else:
            sums = sums - cols[j]
        gray_prev = gray
        term = sums.prod()
        if (n - gray.bit_count()) % 2:
            totalsum -= term
        else:
            totalsum += term
    return complex(totalsum)


def submatrix(u: np.ndarray, input_occ, output_occ) -> np.ndarray:
    """Transition submatrix: columns repeated per input pattern, rows per output pattern."""
    u = np.asarray(u, dtype=complex)
    m = u.shape[0]
    input_occ = _check_occupation(input_occ, m, "input pattern")
    output_occ = _check_occupation(output_occ, m, "output pattern")
    rows = mode_assignment(output_occ)
    cols = mode_assignment(input_occ)
    if len(rows) != len(cols):
        raise ValueError(f"photon number mismatch: input {len(cols)}, output {len(rows)}")
    return u[np.ix_(rows, cols)]


def _occ_factorial(occ: ModeOccupation) -> float:
    out = 1.0
    for c in occ:
        out *= math.factorial(c)
    return out


def prob_indistinguishable(u: np.ndarray, input_occ, output_occ) -> float:
    """Transition probability for fully indistinguishable photons."""
    sub = submatrix(u, input_occ, output_occ)
    norm = _occ_factorial(tuple(input_occ)) * _occ_factorial(tuple(output_occ))
    return float(abs(permanent(sub)) ** 2 / norm)


def prob_distinguishable(u: np.ndarray, input_occ, output_occ) -> float:
    """Transition probability for fully distinguishable photons.

    Permanent of the elementwise |M|^2, i.e. classical independent
    transmission through the mode-coupling graph.
    """
    sub = submatrix(u, input_occ, output_occ)
    return float(permanent(np.abs(sub) ** 2).real / _occ_factorial(tuple(output_occ)))


def _bounded_compositions(n: int, bounds: ModeOccupation):
    """All tuples c with sum(c) == n and 0 <= c_j <= bounds_j."""
    if len(bounds) == 1:
        if 0 <= n <= bounds[0]:
            yield (n,)
        return
    for first in range(min(n, bounds[0]) + 1):
        for rest in _bounded_compositions(n - first, bounds[1:]):
            yield (first,) + rest


def _species_splittings(output_occ: ModeOccupation, totals: tuple[int, ...]):
    """All ways to write the output pattern as an elementwise sum over species."""
    if len(totals) == 1:
        if total(output_occ) == totals[0]:
            yield (output_occ,)
        return
    for head in _bounded_compositions(totals[0], output_occ):
        remainder = tuple(o - h for o, h in zip(output_occ, head))
        for rest in _species_splittings(remainder, totals[1:]):
            yield (head,) + rest


def check_partition(partition, m: int) -> SpeciesPartition:
    """Validate a species partition: each species is a nonempty pattern on m modes."""
    partition = tuple(_check_occupation(s, m, "species pattern") for s in partition)
    if not partition:
        raise ValueError("species partition is empty")
    if any(total(s) == 0 for s in partition):
        raise ValueError("species partition contains an empty species")
    return partition


def partition_input(partition: SpeciesPartition) -> ModeOccupation:
    """Total input pattern of a species partition (elementwise sum)."""
    return tuple(int(x) for x in np.sum(np.asarray(partition, dtype=int), axis=0))


def prob_species(u: np.ndarray, partition, output_occ) -> float:
    """Transition probability for photons split into mutually distinguishable species.

    Photons within one species are indistinguishable, photons of
    different species carry orthogonal internal labels, so the law is a
    sum over all elementwise splittings of the output pattern with one
    indistinguishable factor per species. One species reduces to
    prob_indistinguishable; all single-photon species reduce to
    prob_distinguishable.
    """
    u = np.asarray(u, dtype=complex)
    m = u.shape[0]
    partition = check_partition(partition, m)
    output_occ = _check_occupation(output_occ, m, "output pattern")
    totals = tuple(total(s) for s in partition)
    if sum(totals) != total(output_occ):
        raise ValueError(
            f"partition holds {sum(totals)} photons, output pattern {total(output_occ)}")
    p = 0.0
    for split in _species_splittings(output_occ, totals):
        term = 1.0
        for species_in, species_out in zip(partition, split):
            term *= prob_indistinguishable(u, species_in, species_out)
            if term == 0.0:
                break
        p += term
    return p


@dataclass(frozen=True)
class Mixture:
    """Convex combination of species partitions modelling partial distinguishability."""

    components: tuple[tuple[float, SpeciesPartition], ...]

    def __post_init__(self):
        comps = []
        for w, part in self.components:
            w = float(w)
            if w < 0:
                raise ValueError(f"mixture weight {w} is negative")
            comps.append((w, tuple(tuple(int(x) for x in s) for s in part)))
        object.__setattr__(self, "components", tuple(comps))
        s = sum(w for w, _ in self.components)
        if abs(s - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"mixture weights sum to {s!r}, expected 1")


@dataclass(frozen=True)
class FockDistribution:
    """Probability distribution over the canonical n-photon basis of m modes."""

    basis: tuple[ModeOccupation, ...]
    probs: np.ndarray

    def __post_init__(self):
        basis = tuple(tuple(int(x) for x in occ) for occ in self.basis)
        probs = np.asarray(self.probs, dtype=float)
        if len(basis) != probs.shape[0] or probs.ndim != 1:
            raise ValueError("basis and probability vector lengths differ")
        if probs.min(initial=0.0) < -PROB_SUM_TOL:
            raise ValueError(f"negative probability {probs.min()}")
        if abs(probs.sum() - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, expected 1")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "probs", np.clip(probs, 0.0, None))

    @property
    def m(self) -> int:
        return len(self.basis[0])

    @property
    def n(self) -> int:
        return total(self.basis[0])

    def prob_of(self, occ) -> float:
        occ = tuple(int(x) for x in occ)
        try:
            return float(self.probs[self.basis.index(occ)])
        except ValueError:
            return 0.0

    def to_json(self) -> str:
        payload = {
            "basis": [list(occ) for occ in self.basis],
            "probs": [float(p) for p in self.probs],
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FockDistribution":
        payload = json.loads(text)
        return cls(tuple(tuple(occ) for occ in payload["basis"]),
                   np.asarray(payload["probs"], dtype=float))

    def csv_rows(self):
        """(pattern, probability) rows; the pattern column joins counts with '|'."""
        for occ, p in zip(self.basis, self.probs):
            yield "|".join(str(c) for c in occ), float(p)


def _resolve_model(model, input_occ: ModeOccupation, m: int):
    """Normalize a distinguishability model argument.

    Accepts the two model names, a species partition (sequence of
    patterns) or a Mixture. Returns ("name", None) or ("mixture", Mixture).
    """
    if isinstance(model, str):
        if model in (MODEL_INDISTINGUISHABLE, MODEL_DISTINGUISHABLE):
            return model, None
        raise ValueError(f"unknown distinguishability model {model!r}")
    if isinstance(model, Mixture):
        for _, part in model.components:
            part = check_partition(part, m)
            if partition_input(part) != input_occ:
                raise ValueError(
                    f"mixture component input {partition_input(part)} differs from {input_occ}")
        return "mixture", model
    part = check_partition(model, m)
    if partition_input(part) != input_occ:
        raise ValueError(f"partition input {partition_input(part)} differs from {input_occ}")
    return "mixture", Mixture(((1.0, part),))


def model_tag(model):
    """JSON-friendly description of a distinguishability model argument."""
    if isinstance(model, str):
        return model
    if isinstance(model, Mixture):
        return {"mixture": [[w, [list(p) for p in part]]
                            for w, part in model.components]}
    return {"species": [list(p) for p in model]}


def output_distribution(u: np.ndarray, input_occ, model=MODEL_INDISTINGUISHABLE,
                        threads: int = 1) -> FockDistribution:
    """Full output distribution of an input pattern through a unitary.

    model selects the transition law: "indistinguishable",
    "distinguishable", a species partition, or a Mixture of partitions.
    threads > 1 evaluates output patterns in a thread pool; results are
    assembled in canonical order either way.
    """
    u = np.asarray(u, dtype=complex)
    from . import linalg
    if not linalg.is_unitary(u):
        raise ValueError("transfer matrix is not unitary within tolerance")
    m = u.shape[0]
    input_occ = _check_occupation(input_occ, m, "input pattern")
    n = total(input_occ)
    basis = enumerate_basis(n, m)
    kind, mixture = _resolve_model(model, input_occ, m)

    if kind == MODEL_INDISTINGUISHABLE:
        one = lambda s: prob_indistinguishable(u, input_occ, s)
    elif kind == MODEL_DISTINGUISHABLE:
        one = lambda s: prob_distinguishable(u, input_occ, s)
    else:
        one = lambda s: sum(w * prob_species(u, part, s) for w, part in mixture.components)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            probs = np.fromiter(pool.map(one, basis), dtype=float, count=len(basis))
    else:
        probs = np.fromiter((one(s) for s in basis), dtype=float, count=len(basis))
    s = probs.sum()
    if abs(s - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"output probabilities sum to {s!r}; unitarity loss?")
    return FockDistribution(basis, probs / s)


def sample(dist: FockDistribution, count: int, seed) -> list[ModeOccupation]:
    """Draw occupation patterns i.i.d. from a distribution, reproducible per seed."""
    if count < 0:
        raise ValueError(f"sample count must be >= 0, got {count}")
    rng = np.random.default_rng(seed)
    cum = np.cumsum(dist.probs)
    idx = np.searchsorted(cum, rng.random(count), side="right")
    idx = np.minimum(idx, len(dist.basis) - 1)
    return [dist.basis[i] for i in idx]


def state_vector(u: np.ndarray, input_occ) -> np.ndarray:
    """Output amplitudes of an input pattern over the canonical basis.

    Amplitude on pattern s is perm(M) / sqrt(prod_j r_j! s_j!); the
    squared moduli reproduce the indistinguishable distribution.
    """
    u = np.asarray(u, dtype=complex)
    from . import linalg
    if not linalg.is_unitary(u):
        raise ValueError("transfer matrix is not unitary within tolerance")
    m = u.shape[0]
    input_occ = _check_occupation(input_occ, m, "input pattern")
    basis = enumerate_basis(total(input_occ), m)
    rfac = _occ_factorial(input_occ)
    amps = np.empty(len(basis), dtype=complex)
    for i, s in enumerate(basis):
        amps[i] = permanent(submatrix(u, input_occ, s)) / math.sqrt(rfac * _occ_factorial(s))
    norm = float(np.sum(np.abs(amps) ** 2))
    if abs(norm - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"state vector norm {norm!r} deviates from 1")
    return amps
