"""Experiment runner: evolve / gge / certify / selftest subcommands.

Each run reads one JSON config, resolves defaults and flag overrides,
and writes its files into a directory named by the hash of the resolved
config, so identical configs land in identical directories with
byte-identical contents. Existing run directories are never overwritten
without --force.

Exit codes: 0 success, 1 config validation error, 2 I/O error,
3 selftest failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import shutil
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, apparatus, certify, fock, gge, hamiltonian, linalg

DEFAULT_EPSILON_GRID = (0.7, 0.8, 0.9)
CONVERGENCE_BATCHES = 16


class ConfigError(ValueError):
    """Config validation failure; the message carries the offending path."""


def _expect(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(f"{path}: {message}")


def _get_number(d: dict, key: str, path: str, default=None, required=False):
    if key not in d:
        _expect(not required, f"{path}.{key}", "missing required value")
        return default
    v = d[key]
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool),
            f"{path}.{key}", f"expected a number, got {v!r}")
    return float(v)


def _get_int(d: dict, key: str, path: str, default=None, required=False, minimum=None):
    if key not in d:
        _expect(not required, f"{path}.{key}", "missing required value")
        return default
    v = d[key]
    _expect(isinstance(v, int) and not isinstance(v, bool),
            f"{path}.{key}", f"expected an integer, got {v!r}")
    if minimum is not None:
        _expect(v >= minimum, f"{path}.{key}", f"must be >= {minimum}, got {v}")
    return v


def _occupation(v, path: str) -> tuple:
    _expect(isinstance(v, list) and v and all(isinstance(x, int) and x >= 0 for x in v),
            path, f"expected a list of non-negative integers, got {v!r}")
    return tuple(v)


def _parse_model(v, path: str):
    if isinstance(v, str):
        _expect(v in (fock.MODEL_INDISTINGUISHABLE, fock.MODEL_DISTINGUISHABLE),
                path, f"unknown model name {v!r}")
        return v
    if isinstance(v, dict) and "species" in v:
        return tuple(_occupation(s, f"{path}.species[{i}]") for i, s in enumerate(v["species"]))
    if isinstance(v, dict) and "mixture" in v:
        comps = []
        for i, item in enumerate(v["mixture"]):
            _expect(isinstance(item, list) and len(item) == 2,
                    f"{path}.mixture[{i}]", "expected [weight, species-list]")
            w, part = item
            comps.append((float(w), tuple(_occupation(s, f"{path}.mixture[{i}][1][{j}]")
                                          for j, s in enumerate(part))))
        try:
            return fock.Mixture(tuple(comps))
        except ValueError as exc:
            raise ConfigError(f"{path}.mixture: {exc}") from None
    raise ConfigError(f"{path}: expected a model name, species or mixture, got {v!r}")


def _parse_hamiltonians(d, path: str) -> list[hamiltonian.HamiltonianSpec]:
    _expect(isinstance(d, dict), path, f"expected an object, got {d!r}")
    d = dict(d)
    seeds = d.pop("seeds", None)
    if seeds is not None:
        _expect("seed" not in d, f"{path}.seeds", "give either seed or seeds, not both")
        _expect(d.get("kind") == "long_range", f"{path}.seeds",
                "a seed list only makes sense for kind long_range")
        _expect(isinstance(seeds, list) and seeds and all(isinstance(s, int) for s in seeds),
                f"{path}.seeds", f"expected a non-empty list of integers, got {seeds!r}")
    else:
        seeds = [d.get("seed")]
    specs = []
    for s in seeds:
        try:
            specs.append(hamiltonian.HamiltonianSpec.from_dict({**d, "seed": s}
                                                               if s is not None else d))
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return specs


def _parse_apparatus(d, path: str) -> apparatus.Apparatus:
    _expect(isinstance(d, dict), path, f"expected an object, got {d!r}")
    src = det = None
    if d.get("source") is not None:
        try:
            src = apparatus.SourceModel.from_dict(d["source"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{path}.source: {exc}") from None
    if d.get("detection") is not None:
        try:
            det = apparatus.DetectionModel.from_dict(d["detection"])
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"{path}.detection: {exc}") from None
    jitter = _get_number(d, "mesh_jitter", path, default=0.0)
    _expect(jitter >= 0.0, f"{path}.mesh_jitter", f"must be >= 0, got {jitter}")
    return apparatus.Apparatus(source=src, detection=det, mesh_jitter=jitter)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated run description with every default resolved."""

    specs: tuple
    input_occ: tuple
    times: tuple
    model: object
    shots: int
    seed: int
    threads: int
    app: apparatus.Apparatus | None
    eps1: float | None
    eps2: float | None
    split: int
    epsilon_grid: tuple
    resolved: dict

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.resolved, sort_keys=True).encode()).hexdigest()[:12]


def load_config(path, seed_override=None, threads: int = 1) -> ExperimentConfig:
    """Parse and validate a config file; flag overrides are applied before hashing."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    _expect(isinstance(raw, dict), "config", "top level must be an object")

    specs = _parse_hamiltonians(raw.get("hamiltonian"), "config.hamiltonian")
    m = specs[0].modes
    _expect(all(s.modes == m for s in specs), "config.hamiltonian", "mode counts differ")

    times_raw = raw.get("times", [0.0])
    _expect(isinstance(times_raw, list) and times_raw, "config.times",
            f"expected a non-empty list, got {times_raw!r}")
    for i, t in enumerate(times_raw):
        _expect(isinstance(t, (int, float)) and not isinstance(t, bool),
                f"config.times[{i}]", f"expected a number, got {t!r}")
    times = tuple(float(t) for t in times_raw)

    if "input" in raw:
        input_occ = _occupation(raw["input"], "config.input")
        _expect(len(input_occ) == m, "config.input", f"expected {m} modes, got {len(input_occ)}")
    else:
        input_occ = (1,) * (m - 1) + (0,)

    model = _parse_model(raw.get("model", fock.MODEL_INDISTINGUISHABLE), "config.model")
    shots = _get_int(raw, "shots", "config", default=1000, minimum=1)
    seed = _get_int(raw, "seed", "config", default=0)
    if seed_override is not None:
        seed = int(seed_override)

    app = None
    if raw.get("apparatus") is not None:
        app = _parse_apparatus(raw["apparatus"], "config.apparatus")

    eps1 = eps2 = None
    split = 1
    grid = DEFAULT_EPSILON_GRID
    if raw.get("certification") is not None:
        cert = raw["certification"]
        _expect(isinstance(cert, dict), "config.certification",
                f"expected an object, got {cert!r}")
        eps1 = _get_number(cert, "eps1", "config.certification", required=True)
        eps2 = _get_number(cert, "eps2", "config.certification", required=True)
        for name, eps in (("eps1", eps1), ("eps2", eps2)):
            _expect(0.0 < eps < 1.0, f"config.certification.{name}",
                    f"must lie in (0, 1), got {eps}")
        split = _get_int(cert, "split", "config.certification", default=1, minimum=1)
        _expect(split < m, "config.certification.split",
                f"bipartition must leave modes on both sides of {m}")
        grid_raw = cert.get("epsilon_grid", list(DEFAULT_EPSILON_GRID))
        _expect(isinstance(grid_raw, list) and grid_raw, "config.certification.epsilon_grid",
                f"expected a non-empty list, got {grid_raw!r}")
        grid = tuple(float(e) for e in grid_raw)
        for i, e in enumerate(grid):
            _expect(0.0 < e < 1.0, f"config.certification.epsilon_grid[{i}]",
                    f"must lie in (0, 1), got {e}")

    resolved = {
        "version": __version__,
        "hamiltonian": [s.to_dict() for s in specs],
        "input": list(input_occ),
        "times": list(times),
        "model": fock.model_tag(model),
        "shots": shots,
        "seed": seed,
        "threads": threads,
        "apparatus": None if app is None else {
            "source": None if app.source is None else app.source.to_dict(),
            "detection": None if app.detection is None else app.detection.to_dict(),
            "mesh_jitter": app.mesh_jitter,
        },
        "certification": None if eps1 is None else {
            "eps1": eps1, "eps2": eps2, "split": split, "epsilon_grid": list(grid),
        },
    }
    return ExperimentConfig(specs=tuple(specs), input_occ=input_occ, times=times,
                            model=model, shots=shots, seed=seed, threads=threads,
                            app=app, eps1=eps1, eps2=eps2, split=split,
                            epsilon_grid=grid, resolved=resolved)


# ---------------------------------------------------------------------------
# Output plumbing


def _prepare_run_dir(base, command: str, cfg: ExperimentConfig, force: bool) -> Path:
    run = Path(base) / f"{command}-{cfg.digest()}"
    if run.exists():
        if not force:
            raise OSError(f"run directory {run} exists; pass --force to overwrite")
        shutil.rmtree(run)
    run.mkdir(parents=True)
    return run


def _write_json(path: Path, payload: dict, cfg: ExperimentConfig):
    body = {"config": cfg.resolved, **payload}
    path.write_text(json.dumps(body, sort_keys=True, indent=1) + "\n")


def _write_csv(path: Path, header: str, rows, cfg: ExperimentConfig):
    lines = [f"# config-digest: {cfg.digest()}", f"# config: {json.dumps(cfg.resolved, sort_keys=True)}",
             header]
    lines.extend(rows)
    path.write_text("\n".join(lines) + "\n")


def _spec_tag(cfg: ExperimentConfig, idx: int) -> str:
    return f"h{idx:02d}" if len(cfg.specs) > 1 else "h"


def _derived_seed(cfg: ExperimentConfig, *branch: int) -> int:
    return int(np.random.SeedSequence((cfg.seed,) + branch).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Subcommands


def cmd_evolve(cfg: ExperimentConfig, run: Path) -> None:
    """Exact output distributions per Hamiltonian and time, with the ideal reference."""
    for si, spec in enumerate(cfg.specs):
        tag = _spec_tag(cfg, si)
        for ti, t in enumerate(cfg.times):
            u = hamiltonian.evolution(spec, t)
            dist = fock.output_distribution(u, cfg.input_occ, cfg.model,
                                            threads=cfg.threads)
            exact = fock.output_distribution(u, cfg.input_occ,
                                             fock.MODEL_INDISTINGUISHABLE,
                                             threads=cfg.threads)
            stem = f"evolve_{tag}_t{ti:03d}"
            _write_csv(run / f"{stem}.csv", "pattern,probability",
                       (f"{p},{q!r}" for p, q in dist.csv_rows()), cfg)
            _write_json(run / f"{stem}.json", {
                "hamiltonian": spec.to_dict(), "t": t,
                "distribution": json.loads(dist.to_json()),
                "exact_reference": json.loads(exact.to_json()),
            }, cfg)
            _write_csv(run / f"{stem}_exact.csv", "pattern,probability",
                       (f"{p},{q!r}" for p, q in exact.csv_rows()), cfg)


def cmd_gge(cfg: ExperimentConfig, run: Path) -> None:
    """Marginal traces and distances to the stationary reference, per transition law."""
    n = fock.total(cfg.input_occ)
    m = cfg.specs[0].modes
    ref = gge.gge_marginal(n, m)
    _write_csv(run / "gge_reference.csv", "k,probability",
               (f"{k},{float(p)!r}" for k, p in enumerate(ref.probs)), cfg)
    models: list = [fock.MODEL_INDISTINGUISHABLE, fock.MODEL_DISTINGUISHABLE]
    if not isinstance(cfg.model, str):
        models.append(cfg.model)
    for si, spec in enumerate(cfg.specs):
        tag = _spec_tag(cfg, si)
        for model in models:
            name = model if isinstance(model, str) else "mixture"
            trace = gge.equilibration_trace(spec, cfg.input_occ, cfg.times, model,
                                            threads=cfg.threads)
            _write_csv(run / f"gge_{tag}_{name}_marginal.csv", "t,k,probability",
                       (f"{pt.t!r},{k},{float(p)!r}"
                        for pt in trace for k, p in enumerate(pt.marginal.probs)), cfg)
            _write_csv(run / f"gge_{tag}_{name}_tvd.csv", "t,tvd",
                       (f"{pt.t!r},{pt.tvd_to_gge!r}" for pt in trace), cfg)


def cmd_certify(cfg: ExperimentConfig, run: Path) -> None:
    """Certification records per time step plus the batch convergence trace."""
    if cfg.eps1 is None:
        raise ConfigError("config.certification: required for the certify command")
    n = fock.total(cfg.input_occ)
    m = cfg.specs[0].modes
    lambdas = certify.lambda_coefficients(n, m)
    fs = certify.forbidden_patterns(n, m)
    for si, spec in enumerate(cfg.specs):
        tag = _spec_tag(cfg, si)
        for ti, t in enumerate(cfg.times):
            seed = _derived_seed(cfg, si, ti)
            s1, s2 = certify.collect_setting_samples(
                spec, t, cfg.model, cfg.shots, seed, cfg.app, cfg.input_occ)
            p1, k1 = certify.estimate_p1(s1, cfg.input_occ)
            p2, k2 = certify.estimate_p2(s2, fs)
            thresh = certify.witness_threshold(hamiltonian.evolution(spec, t),
                                               cfg.input_occ, cfg.split)
            res = certify.fidelity_bound(p1, k1, p2, k2, lambdas,
                                         cfg.eps1, cfg.eps2, witness=thresh)
            grid = []
            for eps in cfg.epsilon_grid:
                g = certify.fidelity_bound(p1, k1, p2, k2, lambdas, eps, eps,
                                           witness=thresh)
                grid.append({"epsilon_label": eps, "epsilon_product": eps * eps,
                             "delta": g.delta, "f_lower": g.f_lower,
                             "entangled": g.entangled})
            stem = f"certify_{tag}_t{ti:03d}"
            _write_json(run / f"{stem}.json", {
                "hamiltonian": spec.to_dict(), "t": t, "derived_seed": seed,
                "result": res.to_dict(), "epsilon_grid": grid,
            }, cfg)

            rows = []
            per = max(1, cfg.shots // CONVERGENCE_BATCHES)
            for b in range(1, CONVERGENCE_BATCHES + 1):
                cut = min(cfg.shots, b * per)
                bp1, bk1 = certify.estimate_p1(s1[:cut], cfg.input_occ)
                bp2, bk2 = certify.estimate_p2(s2[:cut], fs)
                part = certify.fidelity_bound(bp1, bk1, bp2, bk2, lambdas,
                                              cfg.eps1, cfg.eps2, witness=thresh)
                rows.append(f"{cut},{1.0 / math.sqrt(cut)!r},{bp1!r},{bp2!r},"
                            f"{part.f_lower!r}")
                if cut == cfg.shots:
                    break
            _write_csv(run / f"{stem}_convergence.csv",
                       "samples,inv_sqrt_samples,p1,p2,f_lower", rows, cfg)


def cmd_selftest() -> int:
    """Oracle suite printed as pass/fail lines; returns the count of failures."""
    failures = 0

    def report(name: str, ok: bool, detail: str):
        nonlocal failures
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")

    import itertools

    def naive_permanent(a):
        n = a.shape[0]
        out = 0.0 + 0.0j
        for perm in itertools.permutations(range(n)):
            term = 1.0 + 0.0j
            for i, j in enumerate(perm):
                term *= a[i, j]
            out += term
        return out

    rng = np.random.default_rng(20_240_101)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 7))
        a = rng.uniform(-1.0, 1.0, (n, n)) + 1j * rng.uniform(-1.0, 1.0, (n, n))
        worst = max(worst, abs(fock.permanent(a) - naive_permanent(a)))
    report("permanent-vs-naive-sum", worst < 1e-12, f"max residual {worst:.3e}")

    worst = 0.0
    for k in range(5):
        u = linalg.haar_random(5, (101, k))
        h = linalg.logm_unitary(u)
        worst = max(worst, float(np.max(np.abs(linalg.expm_hermitian(h) - u))))
    report("unitary-log-exp-round-trip", worst < 1e-12, f"max residual {worst:.3e}")

    bs = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
    hom = fock.prob_indistinguishable(bs, (1, 1), (1, 1))
    report("two-photon-coincidence-suppression", hom < 1e-14, f"residual {hom:.3e}")

    dist = fock.output_distribution(linalg.fourier(3, 4), (1, 1, 1, 0))
    allowed = {(1, 1, 1, 0), (3, 0, 0, 0), (0, 3, 0, 0), (0, 0, 3, 0)}
    leak = max((p for occ, p in zip(dist.basis, dist.probs) if occ not in allowed),
               default=0.0)
    report("fourier-suppressed-patterns", leak < 1e-12, f"max forbidden prob {leak:.3e}")

    lams = certify.lambda_coefficients(3, 4)
    targets = {(2, 1): 4.0 / 9.0, (1, 1, 1): 2.0 / 3.0}
    for sizes, lam in lams:
        err = abs(lam - targets[sizes])
        label = "+".join(str(s) for s in sizes)
        report(f"class-weight-exact-{label}", err < 1e-12, f"lambda {lam:.12f} err {err:.3e}")
        est, sigma = certify.lambda_monte_carlo(3, 4, sizes, 20_000, seed=5)
        dev = abs(est - lam)
        report(f"class-weight-sampled-{label}", dev < 3 * sigma,
               f"estimate {est:.4f} dev {dev:.4f} (3 sigma {3 * sigma:.4f})")

    ref = gge.gge_marginal(3, 4)
    err = max(abs(ref.probs[0] - 4 / 7), abs(ref.probs[1] - 12 / 49),
              abs(ref.probs[2] - 36 / 343))
    report("stationary-marginal-values", err < 1e-12, f"max err {err:.3e}")

    return failures


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="photherm",
        description="Few-photon thermalization and certification experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("evolve", "exact output distributions over time"),
                           ("gge", "single-mode marginals vs the stationary reference"),
                           ("certify", "two-setting fidelity and entanglement bounds")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default="out", help="parent directory for run outputs")
        p.add_argument("--force", action="store_true", help="replace an existing run directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads for distributions")
    sub.add_parser("selftest", help="run the built-in oracle checks")
    args = parser.parse_args(argv)

    if args.command == "selftest":
        failures = cmd_selftest()
        if failures:
            print(f"{failures} check(s) failed")
            return 3
        print("all checks passed")
        return 0

    try:
        cfg = load_config(args.config, seed_override=args.seed, threads=args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        run = _prepare_run_dir(args.out, args.command, cfg, args.force)
        if args.command == "evolve":
            cmd_evolve(cfg, run)
        elif args.command == "gge":
            cmd_gge(cfg, run)
        else:
            cmd_certify(cfg, run)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(run)
    return 0


if __name__ == "__main__":
    sys.exit(main())
