"""Source, detection and mesh-programming hardware models."""

from __future__ import annotations

import math

import numpy as np
import pytest

from photherm import apparatus, fock, hamiltonian, linalg


def test_source_model_validation():
    with pytest.raises(ValueError):
        apparatus.SourceModel(squeezing=1.0)
    with pytest.raises(ValueError):
        apparatus.SourceModel(heralding_efficiency=1.2)
    src = apparatus.SourceModel()
    assert src.visibility(1, 0) == 0.932
    assert src.visibility(2, 1) == 0.885
    with pytest.raises(KeyError):
        src.visibility(0, 3)
    assert apparatus.SourceModel.from_dict(src.to_dict()) == src


def test_pair_number_law():
    """Crystal pair counts follow the squeezed-vacuum geometric law (1-x) x^j."""
    src = apparatus.SourceModel(squeezing=0.45)
    rng = np.random.default_rng(2)
    j1, _ = apparatus._pair_counts(src, 400_000, rng)
    x = 0.45**2
    for j in range(4):
        expect = (1.0 - x) * x**j
        freq = np.mean(j1 == j)
        assert abs(freq - expect) < 4 * math.sqrt(expect * (1 - expect) / 400_000)


def test_herald_input_geometry():
    src = apparatus.SourceModel(squeezing=0.3, heralding_efficiency=1.0)
    seen_herald = False
    for seed in range(200):
        occ, herald = apparatus.herald_input(src, seed)
        assert occ[0] == occ[1] and occ[3] == 0
        if occ[2] == 0:
            assert not herald
        seen_herald |= herald
    assert seen_herald
    with pytest.raises(ValueError):
        apparatus.herald_input(src, 0, m=2)


def test_detection_model_validation():
    with pytest.raises(ValueError):
        apparatus.DetectionModel(weights=((0.5, 0.6, 0.2),) * 2)
    with pytest.raises(ValueError):
        apparatus.DetectionModel(weights=((0.5, 0.5),) * 2)
    with pytest.raises(ValueError):
        apparatus.DetectionModel(weights=((1 / 3,) * 3,) * 2, dark_count_prob=1.0)
    det = apparatus.DetectionModel.uniform(4, loss=0.1)
    assert apparatus.DetectionModel.from_dict(det.to_dict()) == det


def test_resolve_probability_closed_forms():
    det = apparatus.DetectionModel(weights=((0.5, 0.3, 0.15), (0.2, 0.2, 0.2),
                                            (1 / 3, 1 / 3, 1 / 3), (0.4, 0.3, 0.3)))
    assert apparatus.resolve_probability(det, 0, 0) == 1.0
    assert abs(apparatus.resolve_probability(det, 0, 1) - 0.95) < 1e-14
    expect2 = 2 * (0.5 * 0.3 + 0.3 * 0.15 + 0.15 * 0.5)
    assert abs(apparatus.resolve_probability(det, 0, 2) - expect2) < 1e-14
    assert abs(apparatus.resolve_probability(det, 0, 3) - 6 * 0.5 * 0.3 * 0.15) < 1e-14
    assert apparatus.resolve_probability(det, 0, 4) == 0.0


def test_resolve_probability_against_sampling():
    """The closed forms must match direct simulation of photon routing."""
    det = apparatus.DetectionModel(weights=((0.5, 0.3, 0.15),) * 1)
    rng = np.random.default_rng(9)
    shots = 100_000
    for k in (1, 2, 3):
        hits = 0
        for _ in range(shots):
            rec = apparatus.qpnr_detect((k,), det, rng)
            hits += len(rec.fired) == k
        p = apparatus.resolve_probability(det, 0, k)
        assert abs(hits / shots - p) < 4 * math.sqrt(p * (1 - p) / shots)


def test_pattern_from_clicks():
    rec = apparatus.ClickRecord((0, 4, 8, 7))
    assert apparatus.pattern_from_clicks(rec, 4) == (1, 1, 2, 0)
    with pytest.raises(ValueError):
        apparatus.pattern_from_clicks(apparatus.ClickRecord((13,)), 4)


def test_correction_recovers_truth():
    """Unequal channel weights bias raw click patterns; dividing them out repairs the estimate."""
    u = linalg.fourier(3, 4)
    truth = fock.output_distribution(u, (1, 1, 1, 0), fock.MODEL_DISTINGUISHABLE)
    det = apparatus.DetectionModel(weights=((0.5, 0.3, 0.15), (0.25, 0.25, 0.25),
                                            (0.4, 0.4, 0.1), (0.3, 0.3, 0.3)))
    rng = np.random.default_rng(4)
    records = []
    for occ in fock.sample(truth, 150_000, rng):
        rec = apparatus.qpnr_detect(occ, det, rng)
        if len(rec.fired) == 3:
            records.append(rec)
    corrected = apparatus.correct_counts(records, det)
    raw = np.zeros(len(corrected.basis))
    for rec in records:
        raw[corrected.basis.index(apparatus.pattern_from_clicks(rec, 4))] += 1
    raw /= raw.sum()
    tvd_corr = 0.5 * np.sum(np.abs(corrected.probs - truth.probs))
    tvd_raw = 0.5 * np.sum(np.abs(raw - truth.probs))
    assert tvd_corr < 0.02
    assert tvd_raw > 3 * tvd_corr


def test_correct_counts_validation():
    det = apparatus.DetectionModel.ideal(4)
    with pytest.raises(ValueError):
        apparatus.correct_counts([], det)
    with pytest.raises(ValueError):
        apparatus.correct_counts([apparatus.ClickRecord((0,), herald=False)], det)
    with pytest.raises(ValueError):
        apparatus.correct_counts([apparatus.ClickRecord((0, 3)),
                                  apparatus.ClickRecord((0,))], det)


def test_blinding_probability_line():
    det = apparatus.DetectionModel.uniform(4)
    assert abs(apparatus.blinding_probability(40.0, det) - 0.8734) < 1e-12
    assert apparatus.blinding_probability(0.0, det) == 0.9534
    assert apparatus.blinding_probability(1e6, det) == 0.0
    with pytest.raises(ValueError):
        apparatus.blinding_probability(-1.0, det)


def test_blind_corrupt_moves_click():
    det = apparatus.DetectionModel.ideal(4)
    rng = np.random.default_rng(3)
    rec = apparatus.ClickRecord((0, 3, 6))
    for _ in range(50):
        out = apparatus._blind_corrupt(rec, det, rng)
        assert len(out.fired) == 3
        assert out.fired != rec.fired
        assert apparatus.pattern_from_clicks(out, 4) != (1, 1, 1, 0)


def test_mesh_round_trip():
    for m in (2, 3, 4, 6, 8, 12):
        u = linalg.haar_random(m, (41, m))
        params = apparatus.mesh_decompose(u)
        assert len(params.crossings) == m * (m - 1) // 2
        assert np.max(np.abs(apparatus.mesh_compose(params) - u)) < 1e-10
        for _, theta, phi in params.crossings:
            assert -1e-12 <= theta <= math.pi / 2 + 1e-12
            assert -1e-12 <= phi < 2 * math.pi + 1e-12


def test_mesh_identity_is_all_bar():
    params = apparatus.mesh_decompose(np.eye(5, dtype=complex))
    for _, theta, _ in params.crossings:
        assert min(abs(theta), abs(theta - math.pi / 2)) < 1e-12
    assert np.max(np.abs(apparatus.mesh_compose(params) - np.eye(5))) < 1e-12


def test_mesh_balanced_splitter_single_crossing():
    bs = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
    params = apparatus.mesh_decompose(bs)
    assert len(params.crossings) == 1
    _, theta, _ = params.crossings[0]
    assert abs(theta - math.pi / 4) < 1e-12


def test_mesh_rejects_non_unitary():
    with pytest.raises(ValueError):
        apparatus.mesh_decompose(np.ones((3, 3)))


def test_mesh_perturb_is_seeded_and_scaled():
    u = linalg.haar_random(4, 44)
    params = apparatus.mesh_decompose(u)
    a = apparatus.mesh_perturb(params, 0.05, 10)
    b = apparatus.mesh_perturb(params, 0.05, 10)
    assert a == b
    assert apparatus.mesh_perturb(params, 0.0, 10) is params
    small = apparatus.mesh_compose(apparatus.mesh_perturb(params, 1e-3, 10))
    large = apparatus.mesh_compose(apparatus.mesh_perturb(params, 0.3, 10))
    assert np.max(np.abs(small - u)) < np.max(np.abs(large - u))


def test_programmed_unitary_noise_free_sections():
    u1 = linalg.haar_random(3, 1)
    u2 = linalg.haar_random(3, 2)
    rng = np.random.default_rng(0)
    total = apparatus.programmed_unitary((u1, u2), 0.0, rng)
    assert np.max(np.abs(total - u2 @ u1)) < 1e-9


def test_jitter_calibration_hits_target():
    sd = apparatus.jitter_for_fidelity(0.98, 4, seed=1)
    assert sd > 0.0
    fids = []
    for k in range(40):
        u = linalg.haar_random(4, (71, k))
        params = apparatus.mesh_decompose(u)
        noisy = apparatus.mesh_compose(apparatus.mesh_perturb(params, sd, (72, k)))
        fids.append(linalg.amplitude_fidelity(u, noisy))
    assert abs(float(np.mean(fids)) - 0.98) < 0.01


def test_simulate_setting_noiseless_revival():
    spec = hamiltonian.HamiltonianSpec(kind="hopping", modes=4)
    u = hamiltonian.evolution(spec, 0.9)
    total = u.conj().T @ u
    rng = np.random.default_rng(6)
    got = apparatus.simulate_setting(total, fock.MODEL_INDISTINGUISHABLE, None, None,
                                     200, rng, target=(1, 1, 1, 0))
    assert got == [(1, 1, 1, 0)] * 200


def test_event_stream_guard():
    src = apparatus.SourceModel(squeezing=1e-4, heralding_efficiency=1e-3)
    rng = np.random.default_rng(1)
    stream = apparatus._event_stream(np.eye(4, dtype=complex),
                                     fock.MODEL_INDISTINGUISHABLE, src, None, 50, rng,
                                     target=(1, 1, 1, 0), max_attempts=2000)
    with pytest.raises(RuntimeError):
        list(stream)


def test_run_experiment_deterministic():
    spec = hamiltonian.HamiltonianSpec(kind="hopping", modes=4)
    src = apparatus.SourceModel(squeezing=0.25, heralding_efficiency=0.9)
    det = apparatus.DetectionModel.uniform(4, loss=0.05)
    rec1, dist1 = apparatus.run_experiment(spec, 0.4, fock.MODEL_INDISTINGUISHABLE,
                                           src, det, 0.0, 300, seed=13)
    rec2, dist2 = apparatus.run_experiment(spec, 0.4, fock.MODEL_INDISTINGUISHABLE,
                                           src, det, 0.0, 300, seed=13)
    assert rec1 == rec2
    assert dist1.to_json() == dist2.to_json()
    assert all(len(r.fired) == 3 and r.herald for r in rec1)


def test_distinguishability_mixture_weights():
    src = apparatus.SourceModel()
    mix = apparatus.distinguishability_mixture(src)
    weights = [w for w, _ in mix.components]
    assert abs(sum(weights) - 1.0) < 1e-9
    assert weights[0] == pytest.approx(0.932 * 0.885)
    assert len(mix.components[2][1]) == 3
    with pytest.raises(ValueError):
        apparatus.distinguishability_mixture(src, (2, 1, 0, 0))


def test_click_record_io_round_trip(tmp_path):
    records = [apparatus.ClickRecord((0, 5, 9)), apparatus.ClickRecord((2,), herald=False)]
    path = tmp_path / "records.ndjson"
    apparatus.write_click_records(path, records)
    assert apparatus.read_click_records(path) == records


def test_weight_csv_round_trip(tmp_path):
    det = apparatus.DetectionModel(weights=((0.5, 0.3, 0.15), (0.2, 0.3, 0.4)))
    path = tmp_path / "weights.csv"
    apparatus.write_weight_csv(path, det)
    clone = apparatus.read_weight_csv(path)
    assert clone.weights == det.weights
    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n1,0.5\n")
    with pytest.raises(ValueError):
        apparatus.read_weight_csv(bad)
