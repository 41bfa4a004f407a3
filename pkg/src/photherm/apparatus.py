"""Hardware model: pair sources, heralding, multiplexed click detection, mesh programming.

The source is a pair of identical downconversion crystals. Crystal 1
sends signal and idler into chip modes 0 and 1, crystal 2 sends its
signal into mode 2 and its idler to the herald detector, so the wanted
heralded input is one photon in each of the first three modes. Higher
pair numbers inject by-products such as (2, 2, 0, 0) without a herald.

Each chip output mode is read by three multiplexed threshold detectors
("channels"). A mode with k photons resolves them only when every
photon lands in a distinct live channel, which happens with probability
1 for k=0, w_p+w_q+w_r for k=1, 2(w_p w_q + w_q w_r + w_r w_p) for k=2
and 6 w_p w_q w_r for k=3; dividing observed counts by these factors
and renormalizing undoes the multiplexing bias.

Detector blinding by by-product light is folded into a linear survival
factor for revival-pattern events as a function of pump power, not a
microscopic dead-time model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import fock, linalg

CHANNELS_PER_MODE = 3
WEIGHT_SUM_TOL = 1e-9

BLINDING_SLOPE = -0.0020   # per mW, fitted survival of revival events
BLINDING_INTERCEPT = 0.9534


@dataclass(frozen=True)
class SourceModel:
    """Two-crystal downconversion source with heralding.

    squeezing is the TMSV amplitude lambda, so each crystal emits j
    pairs with probability (1 - lambda^2) lambda^(2j). pump_power is in
    mW and only drives the blinding survival factor. The pairwise
    visibilities bound the mutual overlaps of the three injected
    photons: one same-crystal pair (0, 1) and two cross-crystal pairs.
    """

    squeezing: float = 0.1
    pump_power: float = 5.0
    heralding_efficiency: float = 0.5
    pairwise_visibilities: tuple = (((0, 1), 0.932), ((0, 2), 0.885), ((1, 2), 0.885))

    def __post_init__(self):
        if not 0.0 <= self.squeezing < 1.0:
            raise ValueError(f"squeezing amplitude must lie in [0, 1), got {self.squeezing}")
        if self.pump_power < 0:
            raise ValueError(f"pump power must be >= 0, got {self.pump_power}")
        if not 0.0 <= self.heralding_efficiency <= 1.0:
            raise ValueError(f"heralding efficiency must lie in [0, 1], got {self.heralding_efficiency}")
        vis = tuple((tuple(int(i) for i in pair), float(v))
                    for pair, v in self.pairwise_visibilities)
        for pair, v in vis:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"visibility {v} for pair {pair} outside [0, 1]")
        object.__setattr__(self, "pairwise_visibilities", vis)

    def visibility(self, i: int, j: int) -> float:
        key = (min(i, j), max(i, j))
        for pair, v in self.pairwise_visibilities:
            if tuple(sorted(pair)) == key:
                return v
        raise KeyError(f"no visibility recorded for photon pair {key}")

    def to_dict(self) -> dict:
        return {"squeezing": self.squeezing, "pump_power": self.pump_power,
                "heralding_efficiency": self.heralding_efficiency,
                "pairwise_visibilities": [[list(p), v] for p, v in self.pairwise_visibilities]}

    @classmethod
    def from_dict(cls, d: dict) -> "SourceModel":
        kwargs = dict(d)
        if "pairwise_visibilities" in kwargs:
            kwargs["pairwise_visibilities"] = tuple(
                (tuple(p), v) for p, v in kwargs["pairwise_visibilities"])
        return cls(**kwargs)


@dataclass(frozen=True)
class DetectionModel:
    """Per-mode multiplexing weights and detection pathologies.

    weights[mode] = (w_p, w_q, w_r) are the routing probabilities into
    the three channels of that mode; 1 - sum(weights) is lumped loss.
    """

    weights: tuple
    dark_count_prob: float = 0.0
    blinding_slope: float = BLINDING_SLOPE
    blinding_intercept: float = BLINDING_INTERCEPT

    def __post_init__(self):
        w = tuple(tuple(float(x) for x in row) for row in self.weights)
        for mode, row in enumerate(w):
            if len(row) != CHANNELS_PER_MODE:
                raise ValueError(f"mode {mode} has {len(row)} channel weights, expected 3")
            if any(x < 0 for x in row):
                raise ValueError(f"mode {mode} has a negative weight: {row}")
            if sum(row) > 1.0 + WEIGHT_SUM_TOL:
                raise ValueError(f"mode {mode} weights sum to {sum(row)} > 1")
        if not 0.0 <= self.dark_count_prob < 1.0:
            raise ValueError(f"dark count probability must lie in [0, 1), got {self.dark_count_prob}")
        object.__setattr__(self, "weights", w)

    @property
    def modes(self) -> int:
        return len(self.weights)

    @cached_property
    def _cum(self) -> tuple:
        return tuple((row[0], row[0] + row[1], row[0] + row[1] + row[2])
                     for row in self.weights)

    @classmethod
    def ideal(cls, m: int) -> "DetectionModel":
        """Lossless balanced multiplexing, no dark counts, blinding switched off."""
        third = 1.0 / 3.0
        return cls(weights=((third,) * 3,) * m, dark_count_prob=0.0,
                   blinding_slope=0.0, blinding_intercept=1.0)

    @classmethod
    def uniform(cls, m: int, loss: float = 0.0, **kwargs) -> "DetectionModel":
        """Equal channel weights (1 - loss)/3 per mode."""
        if not 0.0 <= loss <= 1.0:
            raise ValueError(f"loss must lie in [0, 1], got {loss}")
        w = (1.0 - loss) / 3.0
        return cls(weights=((w,) * 3,) * m, **kwargs)

    def to_dict(self) -> dict:
        return {"weights": [list(row) for row in self.weights],
                "dark_count_prob": self.dark_count_prob,
                "blinding_slope": self.blinding_slope,
                "blinding_intercept": self.blinding_intercept}

    @classmethod
    def from_dict(cls, d: dict) -> "DetectionModel":
        kwargs = dict(d)
        kwargs["weights"] = tuple(tuple(row) for row in kwargs["weights"])
        return cls(**kwargs)


@dataclass(frozen=True)
class ClickRecord:
    """Threshold-detector outcome of one shot: fired channel ids plus the herald flag.

    Channel 3 * mode + slot belongs to the given output mode.
    """

    fired: tuple[int, ...]
    herald: bool = True

    def __post_init__(self):
        object.__setattr__(self, "fired", tuple(sorted(int(c) for c in set(self.fired))))


@dataclass(frozen=True)
class Apparatus:
    """Bundle of the optional hardware imperfections used by a run."""

    source: SourceModel | None = None
    detection: DetectionModel | None = None
    mesh_jitter: float = 0.0

    def is_trivial(self) -> bool:
        return self.source is None and self.detection is None and self.mesh_jitter == 0.0


def _pair_counts(src: SourceModel, count: int, rng) -> tuple[np.ndarray, np.ndarray]:
    # geometric pair-number law of a two-mode squeezer, vectorized
    p = 1.0 - src.squeezing**2
    return rng.geometric(p, size=count) - 1, rng.geometric(p, size=count) - 1


def herald_input(src: SourceModel, seed, m: int = 4) -> tuple[fock.ModeOccupation, bool]:
    """Draw one source shot: injected chip pattern and whether the herald fired.

    The pattern is (j1, j1, j2, 0, ...) for crystal pair numbers j1, j2;
    the herald sees the j2 crystal-2 idlers, each detected with the
    heralding efficiency. Weak pumping makes (1, 1, 1, 0) dominate among
    heralded three-photon events, while e.g. a double pair in crystal 1
    injects (2, 2, 0, 0) with no herald photon at all.
    """
    if m < 3:
        raise ValueError(f"source geometry needs at least 3 chip modes, got {m}")
    rng = np.random.default_rng(seed)
    j1, j2 = _pair_counts(src, 1, rng)
    j1, j2 = int(j1[0]), int(j2[0])
    occ = (j1, j1, j2) + (0,) * (m - 3)
    p_herald = 1.0 - (1.0 - src.heralding_efficiency) ** j2
    return occ, bool(rng.random() < p_herald)


def qpnr_detect(pattern, det: DetectionModel, seed, herald: bool = True) -> ClickRecord:
    """Route each photon of a pattern through its mode's multiplexed channels.

    Photons route independently with the mode's channel weights, the
    remainder is loss; channels are threshold detectors, so multiple
    photons in one channel give one click. Dark counts then fire unlit
    channels independently.
    """
    rng = np.random.default_rng(seed)
    pattern = fock._check_occupation(pattern, det.modes, "pattern")
    fired = set()
    n = fock.total(pattern)
    if n:
        u = rng.random(n)
        i = 0
        for mode, count in enumerate(pattern):
            c1, c2, c3 = det._cum[mode]
            for _ in range(count):
                x = u[i]
                i += 1
                if x < c1:
                    fired.add(CHANNELS_PER_MODE * mode)
                elif x < c2:
                    fired.add(CHANNELS_PER_MODE * mode + 1)
                elif x < c3:
                    fired.add(CHANNELS_PER_MODE * mode + 2)
    if det.dark_count_prob > 0.0:
        dark = rng.random(CHANNELS_PER_MODE * det.modes) < det.dark_count_prob
        fired.update(int(c) for c in np.nonzero(dark)[0])
    return ClickRecord(tuple(fired), herald)


def pattern_from_clicks(record: ClickRecord, m: int) -> fock.ModeOccupation:
    """Occupation estimate from a click record: one photon per fired channel."""
    occ = [0] * m
    for ch in record.fired:
        mode = ch // CHANNELS_PER_MODE
        if mode >= m:
            raise ValueError(f"channel {ch} outside {m} modes")
        occ[mode] += 1
    return tuple(occ)


def resolve_probability(det: DetectionModel, mode: int, k: int) -> float:
    """Probability that k photons in one mode produce exactly k clicks there."""
    if k < 0:
        raise ValueError(f"photon count must be >= 0, got {k}")
    if k > CHANNELS_PER_MODE:
        return 0.0
    wp, wq, wr = det.weights[mode]
    if k == 0:
        return 1.0
    if k == 1:
        return wp + wq + wr
    if k == 2:
        return 2.0 * (wp * wq + wq * wr + wr * wp)
    return 6.0 * wp * wq * wr


def correct_counts(records, det: DetectionModel) -> fock.FockDistribution:
    """Multiplexing-corrected pattern distribution from post-selected click records.

    Records must all carry the herald and the same click total n. Counts
    of each reconstructed pattern are divided by the product of per-mode
    resolution probabilities and renormalized; with no dark counts the
    n-click reconstruction equals the true pattern, so this estimator is
    consistent.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to correct")
    n = len(records[0].fired)
    m = det.modes
    counts: dict[fock.ModeOccupation, int] = {}
    for rec in records:
        if not rec.herald:
            raise ValueError("records must be post-selected on the herald")
        if len(rec.fired) != n:
            raise ValueError(f"record click total {len(rec.fired)} != {n}; post-select first")
        occ = pattern_from_clicks(rec, m)
        counts[occ] = counts.get(occ, 0) + 1
    basis = fock.enumerate_basis(n, m)
    weights = np.zeros(len(basis))
    for i, occ in enumerate(basis):
        c = counts.get(occ, 0)
        if not c:
            continue
        resolve = 1.0
        for mode, k in enumerate(occ):
            resolve *= resolve_probability(det, mode, k)
        if resolve <= 0.0:
            raise ValueError(f"pattern {occ} cannot be resolved by 3 channels per mode")
        weights[i] = c / resolve
    return fock.FockDistribution(basis, weights / weights.sum())


def blinding_probability(pump_power: float, det: DetectionModel) -> float:
    """Survival factor of revival-pattern events at a given pump power (mW), clamped to [0, 1]."""
    if pump_power < 0:
        raise ValueError(f"pump power must be >= 0, got {pump_power}")
    return float(min(1.0, max(0.0, det.blinding_intercept + det.blinding_slope * pump_power)))


# ---------------------------------------------------------------------------
# Rectangular mesh programming


@dataclass(frozen=True)
class MeshParams:
    """Rectangular mesh: output phases followed by m(m-1)/2 two-mode crossings.

    Each crossing (c, theta, phi) couples modes (c, c + 1) with the block
    [[e^{i phi} cos t, -sin t], [e^{i phi} sin t, cos t]]; mesh_compose
    multiplies the crossings in stored order after the phase layer.
    """

    modes: int
    crossings: tuple[tuple[int, float, float], ...]
    phases: tuple[float, ...]


def _crossing(m: int, c: int, theta: float, phi: float) -> np.ndarray:
    t = np.eye(m, dtype=complex)
    ct, st, ph = math.cos(theta), math.sin(theta), np.exp(1j * phi)
    t[c, c] = ph * ct
    t[c, c + 1] = -st
    t[c + 1, c] = ph * st
    t[c + 1, c + 1] = ct
    return t


def _null_angles(num: complex, den: complex) -> tuple[float, float]:
    # theta in [0, pi/2], phi in [0, 2 pi) solving num * e^{-i phi} cos - den * sin = 0
    if abs(den) == 0.0:
        if abs(num) == 0.0:
            return 0.0, 0.0
        return 0.5 * math.pi, 0.0
    theta = math.atan2(abs(num), abs(den))
    phi = (np.angle(num) - np.angle(den)) % (2.0 * math.pi)
    return theta, phi


def mesh_decompose(u: np.ndarray) -> MeshParams:
    """Decompose a unitary into the rectangular crossing mesh.

    Nulls anti-diagonals of the lower triangle alternately from the
    right (input side) and the left (output side), then commutes the
    residual diagonal through the left factors so all crossings end up
    behind a single output phase layer. The identity maps to every
    crossing in the bar state and a balanced two-mode splitter to a
    single theta = pi/4 crossing.
    """
    u = np.asarray(u, dtype=complex)
    if not linalg.is_unitary(u):
        raise ValueError("mesh target is not unitary within tolerance")
    n = u.shape[0]
    v = u.copy()
    right: list[tuple[int, float, float]] = []
    left: list[tuple[int, float, float]] = []
    for i in range(1, n):
        if i % 2:
            for j in range(i):
                r, c = n - 1 - j, i - 1 - j
                theta, phi = _null_angles(v[r, c], v[r, c + 1])
                v = v @ _crossing(n, c, theta, phi).conj().T
                right.append((c, theta, phi))
        else:
            for j in range(1, i + 1):
                r, c = n + j - i - 1, j - 1
                if abs(v[r - 1, c]) == 0.0:
                    theta = 0.0 if abs(v[r, c]) == 0.0 else 0.5 * math.pi
                    phi = 0.0
                else:
                    theta = math.atan2(abs(v[r, c]), abs(v[r - 1, c]))
                    phi = (np.angle(-v[r, c]) - np.angle(v[r - 1, c])) % (2.0 * math.pi)
                v = _crossing(n, r - 1, theta, phi) @ v
                left.append((r - 1, theta, phi))
    diag = np.diagonal(v).copy()
    # push each left crossing through the diagonal: T† D = D' T with the same theta
    commuted: list[tuple[int, float, float]] = []
    for c, theta, phi in reversed(left):
        dm, dn = diag[c], diag[c + 1]
        phi_new = float(np.angle(-dm / dn) % (2.0 * math.pi))
        diag[c] = -np.exp(-1j * phi) * dn
        commuted.append((c, theta, phi_new))
    commuted.reverse()
    crossings = tuple(commuted) + tuple(reversed(right))
    phases = tuple(float(np.angle(d)) for d in diag)
    return MeshParams(modes=n, crossings=crossings, phases=phases)


def mesh_compose(params: MeshParams) -> np.ndarray:
    """Multiply the phase layer and crossings of a MeshParams back into a unitary."""
    u = np.diag(np.exp(1j * np.asarray(params.phases)))
    for c, theta, phi in params.crossings:
        u = u @ _crossing(params.modes, c, theta, phi)
    return u


def mesh_perturb(params: MeshParams, sd: float, seed) -> MeshParams:
    """Add independent Gaussian jitter of width sd to every coupling angle.

    Models static reflectivity error of the crossings; the phase shifters
    are interferometrically calibrated and stay exact. Perturbed angles
    may leave the canonical ranges, which mesh_compose does not require.
    """
    if sd < 0:
        raise ValueError(f"jitter width must be >= 0, got {sd}")
    if sd == 0.0:
        return params
    rng = np.random.default_rng(seed)
    noisy = tuple((c, theta + sd * rng.standard_normal(), phi)
                  for c, theta, phi in params.crossings)
    return MeshParams(params.modes, noisy, params.phases)


def programmed_unitary(sections, mesh_jitter: float, seed) -> np.ndarray:
    """Realized transfer matrix of chip sections traversed in order.

    The processor compiles the composed circuit into a single mesh per
    program, so one jitter draw perturbs the whole setting; light passes
    sections[0] first.
    """
    rng = np.random.default_rng(seed)
    total = sections[0]
    for section in sections[1:]:
        total = section @ total
    return mesh_compose(mesh_perturb(mesh_decompose(total), mesh_jitter, rng))


def jitter_for_fidelity(target: float, m: int, seed=0, samples: int = 24,
                        sd_max: float = 1.0, iters: int = 40) -> float:
    """Jitter width whose mean amplitude fidelity over Haar targets hits the target value."""
    if not 0.0 < target < 1.0:
        raise ValueError(f"target fidelity must lie in (0, 1), got {target}")
    meshes = [(linalg.haar_random(m, (seed, k)), mesh_decompose(linalg.haar_random(m, (seed, k))))
              for k in range(samples)]

    def mean_fidelity(sd: float) -> float:
        rng = np.random.default_rng((seed, 987, int(sd * 1e9)))
        return float(np.mean([
            linalg.amplitude_fidelity(u, mesh_compose(mesh_perturb(p, sd, rng)))
            for u, p in meshes]))

    lo, hi = 0.0, sd_max
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mean_fidelity(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Full measurement chain


def _blind_corrupt(record: ClickRecord, det: DetectionModel, rng) -> ClickRecord:
    # a blinded detector eats one click while by-product light adds one elsewhere
    fired = list(record.fired)
    dropped = fired.pop(int(rng.integers(len(fired))))
    busy = set(fired)
    candidates = [ch for ch in range(CHANNELS_PER_MODE * det.modes)
                  if ch // CHANNELS_PER_MODE != dropped // CHANNELS_PER_MODE and ch not in busy]
    fired.append(candidates[int(rng.integers(len(candidates)))])
    return ClickRecord(tuple(fired), record.herald)


INTERFERENCE_PHOTON_CAP = 8


def _event_stream(total_u: np.ndarray, model, src: SourceModel | None,
                  det: DetectionModel | None, shots: int, rng, target,
                  max_attempts: int | None = None):
    """Yield (record, reconstructed_pattern) for post-selected events until shots collected.

    Post-selection keeps heralded records with exactly n clicks, n the
    target photon number. Without a source the target pattern itself is
    injected every shot; without a detection model an ideal balanced
    multiplexer stands in. By-product inputs brighter than
    INTERFERENCE_PHOTON_CAP route their photons independently: their
    exact interference law costs exponentially in the pair number, and
    the click post-selection removes nearly all of them regardless.
    """
    m = total_u.shape[0]
    target = fock._check_occupation(target, m, "target pattern")
    n = fock.total(target)
    det_eff = det if det is not None else DetectionModel.ideal(m)
    blinding_active = src is not None and det is not None
    survival = blinding_probability(src.pump_power, det_eff) if blinding_active else 1.0
    if max_attempts is None:
        max_attempts = max(10_000_000, 20_000 * shots)

    dist_cache: dict = {}
    mode_cdf = np.cumsum(np.abs(total_u.T) ** 2, axis=1)

    def route_independent(occ):
        out = [0] * m
        for mode, count in enumerate(occ):
            for x in rng.random(count):
                out[min(int(np.searchsorted(mode_cdf[mode], x, side="right")), m - 1)] += 1
        return tuple(out)

    def dist_for(occ):
        if occ not in dist_cache:
            use_model = model
            if not isinstance(model, str):
                mix = model if isinstance(model, fock.Mixture) else fock.Mixture(((1.0, tuple(model)),))
                implied = fock.partition_input(mix.components[0][1])
                if implied != occ:
                    # by-products carry no calibrated species structure
                    use_model = fock.MODEL_INDISTINGUISHABLE
                else:
                    use_model = mix
            dist = fock.output_distribution(total_u, occ, use_model)
            dist_cache[occ] = (dist.basis, np.cumsum(dist.probs))
        return dist_cache[occ]

    produced = 0
    attempts = 0
    batch = 8192
    while produced < shots:
        if attempts >= max_attempts:
            raise RuntimeError(
                f"collected {produced}/{shots} events after {attempts} source attempts; "
                "acceptance rate too low")
        if src is None:
            inputs = [target] * min(batch, shots - produced)
            heralded = [True] * len(inputs)
            attempts += len(inputs)
        else:
            j1, j2 = _pair_counts(src, batch, rng)
            attempts += batch
            p_herald = 1.0 - (1.0 - src.heralding_efficiency) ** j2
            fired = rng.random(batch) < p_herald
            inputs, heralded = [], []
            for a, b, h in zip(j1, j2, fired):
                if h:
                    inputs.append((int(a), int(a), int(b)) + (0,) * (m - 3))
                    heralded.append(True)
        for occ, herald in zip(inputs, heralded):
            n_in = fock.total(occ)
            if n_in == 0:
                continue
            if n_in > INTERFERENCE_PHOTON_CAP:
                true_pattern = route_independent(occ)
            else:
                basis, cum = dist_for(occ)
                idx = int(np.searchsorted(cum, rng.random(), side="right"))
                true_pattern = basis[min(idx, len(basis) - 1)]
            record = qpnr_detect(true_pattern, det_eff, rng, herald=herald)
            if survival < 1.0 and true_pattern == target and rng.random() > survival:
                record = _blind_corrupt(record, det_eff, rng)
            if record.herald and len(record.fired) == n:
                yield record, pattern_from_clicks(record, m)
                produced += 1
                if produced >= shots:
                    return


def simulate_setting(total_u: np.ndarray, model, src: SourceModel | None,
                     det: DetectionModel | None, shots: int, rng, target) -> list:
    """Post-selected reconstructed patterns of one measurement setting."""
    return [occ for _, occ in _event_stream(total_u, model, src, det, shots, rng, target)]


def run_experiment(spec, t: float, model, src: SourceModel | None,
                   det: DetectionModel | None, mesh_jitter: float, shots: int,
                   seed, input_occ=None):
    """Full chain for one evolution time: source, jittered mesh, detection, correction.

    Returns (records, corrected) where records are the post-selected
    ClickRecords and corrected is the multiplexing-corrected pattern
    distribution. Deterministic for a fixed seed.
    """
    from . import hamiltonian as _ham
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    m = spec.modes
    if input_occ is None:
        input_occ = (1,) * (m - 1) + (0,)
    input_occ = fock._check_occupation(input_occ, m, "input pattern")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    ideal = _ham.evolution(spec, t)
    realized = programmed_unitary((ideal,), mesh_jitter, rng) if mesh_jitter > 0 else ideal
    pairs = list(_event_stream(realized, model, src, det, shots, rng, input_occ))
    records = [rec for rec, _ in pairs]
    det_eff = det if det is not None else DetectionModel.ideal(m)
    return records, correct_counts(records, det_eff)


def distinguishability_mixture(src: SourceModel, input_occ=(1, 1, 1, 0)) -> fock.Mixture:
    """Species mixture for the three-photon input implied by the pairwise visibilities.

    A deliberately coarse map, the weights are free parameters at heart:
    the cross-crystal photon stays coherent with the crystal-1 pair with
    weight v_cross (mean of the two cross visibilities), the crystal-1
    pair itself splits with weight v_same, and residual weight goes to
    fully distinguishable photons.
    """
    input_occ = fock._check_occupation(input_occ)
    m = len(input_occ)
    if m < 3 or input_occ[:3] != (1, 1, 1) or fock.total(input_occ) != 3:
        raise ValueError("mixture map is defined for one photon in each of the first three modes")
    v_same = src.visibility(0, 1)
    v_cross = 0.5 * (src.visibility(0, 2) + src.visibility(1, 2))
    tail = (0,) * (m - 3)
    all_three = (1, 1, 1) + tail
    pair = (1, 1, 0) + tail
    third = (0, 0, 1) + tail
    singles = tuple(tuple(1 if j == k else 0 for j in range(m)) for k in range(3))
    components = []
    if v_same * v_cross > 0:
        components.append((v_same * v_cross, (all_three,)))
    if v_same * (1.0 - v_cross) > 0:
        components.append((v_same * (1.0 - v_cross), (pair, third)))
    if 1.0 - v_same > 0:
        components.append((1.0 - v_same, singles))
    return fock.Mixture(tuple(components))


# ---------------------------------------------------------------------------
# Serialization helpers


def write_click_records(path, records) -> None:
    """Newline-delimited JSON, one {"fired": [...], "herald": bool} object per record."""
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps({"fired": list(rec.fired), "herald": rec.herald},
                                sort_keys=True))
            fh.write("\n")


def read_click_records(path) -> list[ClickRecord]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            out.append(ClickRecord(tuple(d["fired"]), bool(d["herald"])))
    return out


def write_weight_csv(path, det: DetectionModel) -> None:
    """Channel weight calibration table, columns (channel, weight)."""
    with open(path, "w") as fh:
        fh.write("channel,weight\n")
        for mode, row in enumerate(det.weights):
            for slot, w in enumerate(row):
                fh.write(f"{CHANNELS_PER_MODE * mode + slot},{w!r}\n")


def read_weight_csv(path, **kwargs) -> DetectionModel:
    """DetectionModel from a (channel, weight) calibration table."""
    rows = {}
    with open(path) as fh:
        header = fh.readline()
        if not header.lower().startswith("channel"):
            raise ValueError(f"unexpected weight table header: {header.strip()!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            ch, w = line.split(",")
            rows[int(ch)] = float(w)
    if len(rows) % CHANNELS_PER_MODE:
        raise ValueError(f"weight table has {len(rows)} channels, not a multiple of 3")
    m = len(rows) // CHANNELS_PER_MODE
    weights = tuple(tuple(rows[CHANNELS_PER_MODE * mode + slot] for slot in range(3))
                    for mode in range(m))
    return DetectionModel(weights=weights, **kwargs)
