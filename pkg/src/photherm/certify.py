"""Two-setting certification of evolved few-photon states.

Setting 1 appends the inverse evolution and accepts exactly the input
pattern, estimating the revival probability p1. Setting 2 appends the
inverse evolution followed by the discrete Fourier transform on the
occupied modes and estimates the weight p2 landing on patterns that are
strictly suppressed for fully indistinguishable photons. A lower
fidelity bound

    f_lower = p1 - p2 / min_i lambda_i - delta(eps1) - delta(eps2)

follows, where lambda_i is the minimum forbidden-pattern weight over the
distinguishability classes and delta is a Chebyshev finite-statistics
penalty. Comparing f_lower against the largest squared Schmidt
coefficient across a mode bipartition certifies entanglement from the
measured data alone.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import apparatus, fock, hamiltonian, linalg

LAMBDA_MAX_PHOTONS = 6
LAMBDA_PLACEMENT_TOL = 1e-12
DEFAULT_VARIANCE = 0.25


@dataclass(frozen=True)
class ForbiddenSet:
    """Output patterns suppressed by the Fourier interference of a periodic input."""

    n: int
    m: int
    period: int
    patterns: tuple[fock.ModeOccupation, ...]

    def __post_init__(self):
        object.__setattr__(self, "patterns", tuple(tuple(p) for p in self.patterns))

    @property
    def allowed(self) -> tuple[fock.ModeOccupation, ...]:
        """Complement of the forbidden patterns among first-n-mode patterns."""
        forb = set(self.patterns)
        tail = (0,) * (self.m - self.n)
        return tuple(p + tail for p in fock.enumerate_basis(self.n, self.n)
                     if p + tail not in forb)


def forbidden_patterns(n: int, m: int, period: int = 1) -> ForbiddenSet:
    """Suppressed output patterns for a period-p input of n photons under fourier(n, m).

    A pattern s on the first n modes is forbidden iff
    p * sum(mode_assignment(s)) is nonzero mod n (1-based mode numbers).
    Patterns placing photons beyond mode n cannot arise from the ideal
    input, the apparatus filter handles them; they are not enumerated.
    """
    if n < 2:
        raise ValueError(f"need at least 2 photons, got {n}")
    if m < n:
        raise ValueError(f"need m >= n modes, got n={n}, m={m}")
    if period < 1 or n % period:
        raise ValueError(f"period {period} must divide the photon number {n}")
    tail = (0,) * (m - n)
    forb = []
    for s in fock.enumerate_basis(n, n):
        d_sum = sum(j + 1 for j in fock.mode_assignment(s))
        if (period * d_sum) % n:
            forb.append(s + tail)
    return ForbiddenSet(n, m, period, tuple(forb))


def _set_partitions(items: tuple[int, ...]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [first]] + part[i + 1:]
        yield [[first]] + part


def _species_exit_table(u: np.ndarray, input_occ, bunched_only: bool):
    """Exit patterns and probabilities for one species entering input_occ.

    With bunched_only the species is restricted to single-mode exits,
    the signature of an intact multi-photon species; singletons always
    exit in a single mode, so the flag is moot for them.
    """
    m = u.shape[0]
    size = fock.total(input_occ)
    outs = []
    for s in fock.enumerate_basis(size, m):
        if bunched_only and max(s) != size:
            continue
        p = fock.prob_indistinguishable(u, input_occ, s)
        if p > 1e-300:
            outs.append((s, p))
    return outs


def lambda_coefficients(n: int, m: int) -> list[tuple[tuple[int, ...], float]]:
    """Forbidden-pattern weight of each distinguishability class under the Fourier.

    Photons sit one per mode on the first n modes. Every way of grouping
    them into >= 2 mutually distinguishable species is classed by its
    multiset of species sizes. The class weight sums, over forbidden
    patterns, the exit routes in which each multi-photon species leaves
    bunched in a single output mode; singleton species are free. For the
    all-singleton class this is the full distinguishable forbidden
    weight. Within a class the weight is independent of which modes host
    which species (checked to 1e-12). Returns (sizes, lambda) pairs
    ordered by species count, e.g. for n = 3:
    [((2, 1), 4/9), ((1, 1, 1), 2/3)].
    """
    if not 2 <= n <= LAMBDA_MAX_PHOTONS:
        raise ValueError(f"photon number {n} outside supported range 2..{LAMBDA_MAX_PHOTONS}")
    if m < n:
        raise ValueError(f"need m >= n modes, got n={n}, m={m}")
    u = linalg.fourier(n, m)
    forb = set(forbidden_patterns(n, m, 1).patterns)
    classes: dict[tuple[int, ...], list[float]] = {}
    for blocks in _set_partitions(tuple(range(n))):
        if len(blocks) < 2:
            continue
        tables = []
        for block in blocks:
            occ = [0] * m
            for mode in block:
                occ[mode] = 1
            tables.append(_species_exit_table(u, tuple(occ), len(block) >= 2))
        weight = 0.0
        for combo in itertools.product(*tables):
            s = combo[0][0]
            p = combo[0][1]
            for t, q in combo[1:]:
                s = tuple(a + b for a, b in zip(s, t))
                p *= q
            if s in forb:
                weight += p
        sizes = tuple(sorted((len(b) for b in blocks), reverse=True))
        classes.setdefault(sizes, []).append(weight)
    out = []
    for sizes in sorted(classes, key=lambda c: (len(c), c)):
        vals = classes[sizes]
        if max(vals) - min(vals) > LAMBDA_PLACEMENT_TOL:
            raise AssertionError(
                f"forbidden weight of class {sizes} varies with placement: {vals}")
        out.append((sizes, float(np.mean(vals))))
    return out


def lambda_monte_carlo(n: int, m: int, sizes, shots: int, seed=None) -> tuple[float, float]:
    """Sampling cross-check of one class coefficient.

    Draws each species' exit independently from its interference law
    through fourier(n, m) and counts events where the summed pattern is
    forbidden and every multi-photon species exited bunched. Returns the
    frequency and its binomial standard error.
    """
    sizes = tuple(int(x) for x in sizes)
    if sum(sizes) != n:
        raise ValueError(f"species sizes {sizes} do not total {n} photons")
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    u = linalg.fourier(n, m)
    forb = set(forbidden_patterns(n, m, 1).patterns)
    rng = np.random.default_rng(seed)
    total = np.zeros((shots, m), dtype=np.int64)
    bunched = np.ones(shots, dtype=bool)
    mode = 0
    for size in sizes:
        occ = [0] * m
        for j in range(mode, mode + size):
            occ[j] = 1
        mode += size
        dist = fock.output_distribution(u, tuple(occ), fock.MODEL_INDISTINGUISHABLE)
        draws = np.asarray(fock.sample(dist, shots, rng), dtype=np.int64)
        total += draws
        if size >= 2:
            bunched &= draws.max(axis=1) == size
    hits = bunched & np.fromiter(
        (tuple(row) in forb for row in total), dtype=bool, count=shots)
    freq = float(hits.mean())
    return freq, math.sqrt(max(freq * (1.0 - freq), 1e-12) / shots)


def estimate_p1(samples, target) -> tuple[float, int]:
    """Fraction of samples exactly equal to the target pattern, plus the sample count."""
    target = tuple(int(x) for x in target)
    k = len(samples)
    if k == 0:
        raise ValueError("no samples")
    hits = sum(1 for s in samples if tuple(s) == target)
    return hits / k, k


def estimate_p2(samples, fs: ForbiddenSet) -> tuple[float, int]:
    """Fraction of samples landing on forbidden patterns, plus the sample count."""
    k = len(samples)
    if k == 0:
        raise ValueError("no samples")
    forb = set(fs.patterns)
    hits = sum(1 for s in samples if tuple(s) in forb)
    return hits / k, k


def chebyshev_delta(variance: float, k: int, epsilon: float) -> float:
    """Finite-statistics penalty sqrt(2 * variance / (k * log(1 / epsilon))).

    epsilon is the confidence parameter in (0, 1); variance defaults to
    the Bernoulli worst case 1/4 elsewhere in the package. The formula
    is applied exactly as stated; the report exposes both epsilon
    factors so either reading of the combined confidence can be made.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if k < 1:
        raise ValueError(f"sample count must be >= 1, got {k}")
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    return math.sqrt(2.0 * variance / (k * math.log(1.0 / epsilon)))


@dataclass(frozen=True)
class CertificationResult:
    """Everything needed to audit one certification run."""

    p1: float
    p2: float
    k1: int
    k2: int
    epsilon1: float
    epsilon2: float
    epsilon: float
    delta: float
    f_lower: float
    lambda_min: float
    lambdas: tuple = field(default=())
    witness_threshold: float | None = None
    entangled: bool | None = None
    inputs: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "p1": self.p1, "p2": self.p2, "k1": self.k1, "k2": self.k2,
            "epsilon1": self.epsilon1, "epsilon2": self.epsilon2,
            "epsilon": self.epsilon, "delta": self.delta,
            "f_lower": self.f_lower, "lambda_min": self.lambda_min,
            "lambdas": [[list(sizes), lam] for sizes, lam in self.lambdas],
            "witness_threshold": self.witness_threshold,
            "entangled": self.entangled,
        }
        if self.inputs is not None:
            d["inputs"] = self.inputs
        return d


def fidelity_bound(p1: float, k1: int, p2: float, k2: int, lambdas,
                   eps1: float, eps2: float, variance: float = DEFAULT_VARIANCE,
                   witness: float | None = None) -> CertificationResult:
    """Assemble the certified fidelity lower bound from the two estimates.

    lambdas may be the list returned by lambda_coefficients or a bare
    sequence of weights; only the minimum enters the bound. The combined
    confidence is reported as the product eps1 * eps2.
    """
    vals = [lam if isinstance(lam, float) else float(lam[1]) for lam in lambdas]
    if not vals or min(vals) <= 0:
        raise ValueError("need at least one positive forbidden-pattern weight")
    for name, p in (("p1", p1), ("p2", p2)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name}={p} outside [0, 1]")
    lam_min = min(vals)
    d1 = chebyshev_delta(variance, k1, eps1)
    d2 = chebyshev_delta(variance, k2, eps2)
    f_lower = p1 - p2 / lam_min - d1 - d2
    pairs = tuple(lam if not isinstance(lam, float) else ((), lam) for lam in lambdas)
    return CertificationResult(
        p1=p1, p2=p2, k1=k1, k2=k2, epsilon1=eps1, epsilon2=eps2,
        epsilon=eps1 * eps2, delta=d1 + d2, f_lower=f_lower, lambda_min=lam_min,
        lambdas=pairs, witness_threshold=witness,
        entangled=None if witness is None else bool(f_lower > witness))


def witness_threshold(u: np.ndarray, input_occ, split: int = 1) -> float:
    """Largest squared Schmidt coefficient of the output state across a mode cut.

    split is the number of leading modes on one side of the bipartition,
    0 < split < m. Any product state scores 1; a certified fidelity
    above this value implies entanglement across the cut.
    """
    u = np.asarray(u, dtype=complex)
    m = u.shape[0]
    if not 0 < split < m:
        raise ValueError(f"bipartition must be nontrivial: 0 < split < {m}, got {split}")
    input_occ = fock._check_occupation(input_occ, m, "input pattern")
    n = fock.total(input_occ)
    psi = fock.state_vector(u, input_occ)
    basis = fock.enumerate_basis(n, m)
    rows = [occ for k in range(n + 1) for occ in fock.enumerate_basis(k, split)]
    cols = [occ for k in range(n + 1) for occ in fock.enumerate_basis(k, m - split)]
    ri = {occ: i for i, occ in enumerate(rows)}
    ci = {occ: i for i, occ in enumerate(cols)}
    t = np.zeros((len(rows), len(cols)), dtype=complex)
    for occ, amp in zip(basis, psi):
        t[ri[occ[:split]], ci[occ[split:]]] = amp
    return float(np.linalg.svd(t, compute_uv=False)[0] ** 2)


def collect_setting_samples(spec: hamiltonian.HamiltonianSpec, t: float, model,
                            shots: int, seed, app: apparatus.Apparatus | None = None,
                            input_occ=None) -> tuple[list, list]:
    """Post-selected output patterns for both measurement settings.

    Setting 1 programs the evolution followed by its inverse; setting 2
    additionally applies the Fourier transform on the occupied modes.
    With an Apparatus the chip sections are decomposed, jittered and
    recomposed, and samples pass through source heralding and quasi
    photon-number detection; otherwise sampling is exact.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    m = spec.modes
    if input_occ is None:
        input_occ = (1,) * (m - 1) + (0,)
    input_occ = fock._check_occupation(input_occ, m, "input pattern")
    n = fock.total(input_occ)
    u = hamiltonian.evolution(spec, t)
    u_f = linalg.fourier(n, m)
    settings = (u.conj().T @ u, u_f @ u.conj().T @ u)
    out = []
    for idx, ideal in enumerate(settings):
        rng = np.random.default_rng(np.random.SeedSequence((seed, idx)))
        if app is None or app.is_trivial():
            dist = fock.output_distribution(ideal, input_occ, model)
            out.append(fock.sample(dist, shots, rng))
        else:
            sections = (u, u.conj().T) if idx == 0 else (u, u_f @ u.conj().T)
            realized = apparatus.programmed_unitary(sections, app.mesh_jitter, rng)
            out.append(apparatus.simulate_setting(
                realized, model, app.source, app.detection, shots, rng,
                target=input_occ))
    return out[0], out[1]


def certify(spec: hamiltonian.HamiltonianSpec, t: float, model, shots: int, seed,
            eps1: float, eps2: float, app: apparatus.Apparatus | None = None,
            split: int = 1, input_occ=None,
            variance: float = DEFAULT_VARIANCE) -> CertificationResult:
    """Run both settings and return the assembled certification record."""
    m = spec.modes
    if input_occ is None:
        input_occ = (1,) * (m - 1) + (0,)
    input_occ = fock._check_occupation(input_occ, m, "input pattern")
    n = fock.total(input_occ)
    samples1, samples2 = collect_setting_samples(
        spec, t, model, shots, seed, app, input_occ)
    p1, k1 = estimate_p1(samples1, input_occ)
    p2, k2 = estimate_p2(samples2, forbidden_patterns(n, m))
    lambdas = lambda_coefficients(n, m)
    thresh = witness_threshold(hamiltonian.evolution(spec, t), input_occ, split)
    result = fidelity_bound(p1, k1, p2, k2, lambdas, eps1, eps2,
                            variance=variance, witness=thresh)
    inputs = {
        "hamiltonian": spec.to_dict(), "t": t, "model": fock.model_tag(model),
        "shots": shots, "seed": seed, "eps1": eps1, "eps2": eps2,
        "split": split, "input": list(input_occ),
    }
    return CertificationResult(**{**result.__dict__, "inputs": inputs})
