"""Experiment orchestration: configuration, the init -> burn-in -> solve ->
verify pipeline, baseline comparisons, geometry reports, and machine-readable
trace/report emission."""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .errors import ConfigError, NonConvergenceError
from .geometry import (build_convex_region, nonconvexity_certificate,
                       probe_strong_convexity, rayleigh, rayleigh_hessian,
                       tightness_counterexample)
from .initialization import gaussian_init, power_warm_start
from .io import load_dataset
from .matrix import (DataMatrix, OrthonormalFrame, potential,
                     rayleigh_residual, rescale_dataset)
from .oracle import (DENSE_GUARD, SpectrumSpec, dense_eigh, leading_subspace,
                     synthesize_dataset)
from .solvers import (ConvergenceTrace, SolverConfig, burn_in,
                      deflation_solve, oja_baseline, orthogonal_iteration,
                      select_parameters, vrpca_block, vrpca_vector)

SOLVERS = ("vrpca_vector", "vrpca_block", "oja", "orthogonal_iteration",
           "deflation")
INITS = ("gaussian", "power")

#: epsilon used by the runtime model when the config leaves it unset
MODEL_EPSILON = 1e-6

TRACE_KEYS = ("epoch", "iter", "potential", "residual", "samples", "elapsed_s")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a dataset source (file or inline spectrum), a solver,
    its parameters, and the seed list for repetitions."""

    dataset_path: str | None = None
    dataset_format: str = "csv"
    spectrum: tuple | None = None
    gap_index: int = 1
    n: int | None = None
    synth_seed: int = 0

    solver: str = "vrpca_vector"
    k: int = 1
    eta: float | None = None
    m: int | None = None
    epochs: int = 10
    delta: float = 0.25
    epsilon: float | None = None
    use_rotation: bool = True
    sweeps: int = 50
    oja_eta0: float | None = None
    oja_iters: int | None = None

    init: str = "power"
    run_burn_in: bool = False
    zeta: float | None = None
    rescale: bool = True
    oracle_check: bool = True
    lambda_hat: float | None = None

    seeds: tuple = (0,)
    out_dir: str | None = None

    def __post_init__(self):
        sources = (self.dataset_path is not None) + (self.spectrum is not None)
        if sources != 1:
            raise ConfigError(
                "exactly one dataset source (dataset_path or spectrum) required")
        if self.spectrum is not None and self.n is None:
            raise ConfigError("synthetic datasets need the column count n")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; one of {SOLVERS}")
        if self.init not in INITS:
            raise ConfigError(f"unknown init {self.init!r}; one of {INITS}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if not self.seeds:
            raise ConfigError("at least one seed required")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw = dict(raw)
        if "spectrum" in raw and raw["spectrum"] is not None:
            raw["spectrum"] = tuple(float(v) for v in raw["spectrum"])
        if "seeds" in raw:
            raw["seeds"] = tuple(int(s) for s in raw["seeds"])
        return cls(**raw)


@dataclass
class RunReport:
    """Per-seed outcome of the pipeline, JSON-serializable."""

    seed: int
    solver: str
    d: int
    n: int
    k: int
    realized_r: float
    eigengap: float | None
    init_alignment_sq: float | None
    burn_in_iterations: int
    burn_in_converged: bool
    eta: float
    m: int
    epochs_run: int
    epoch_potentials: list
    final_potential: float | None
    final_residual: float
    samples: int
    elapsed_s: float
    runtime_model: float | None
    numerical_rank: float | None = None

    def to_dict(self):
        return asdict(self)


def runtime_model(d: int, k: int, n: int, r: float, eigengap: float,
                  epsilon: float) -> float:
    """Cost-model prediction d k (n + r^2 k^3 / eigengap^2) log(1/epsilon);
    a pure function of the instance parameters, no timing involved."""
    return float(d * k * (n + r**2 * k**3 / eigengap**2)
                 * np.log(1.0 / epsilon))


def _materialize(cfg: ExperimentConfig) -> DataMatrix:
    if cfg.dataset_path is not None:
        return load_dataset(cfg.dataset_path, cfg.dataset_format)
    spec = SpectrumSpec(eigenvalues=cfg.spectrum, k=cfg.gap_index)
    return synthesize_dataset(spec, cfg.n, cfg.synth_seed)


def _write_trace(path: Path, trace: ConvergenceTrace) -> None:
    with path.open("w", encoding="ascii") as fh:
        for r in trace.records:
            fh.write(json.dumps({
                "epoch": r.epoch, "iter": r.iteration,
                "potential": r.potential, "residual": r.residual,
                "samples": r.samples, "elapsed_s": r.elapsed_s}))
            fh.write("\n")


def read_trace(path) -> list:
    """Parse a JSONL trace back into a list of record dicts."""
    out = []
    with Path(path).open("r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def trace_fingerprint(path) -> bytes:
    """Canonical bytes of a trace with the wall-clock field dropped.

    Runs with identical (data, config, seed) are bit-identical on every
    field except elapsed_s, which is what this fingerprint compares.
    """
    rows = []
    for rec in read_trace(path):
        rec = {k: v for k, v in rec.items() if k != "elapsed_s"}
        rows.append(json.dumps(rec, sort_keys=True))
    return "\n".join(rows).encode("ascii")


def _single_run(X: DataMatrix, original_r: float, scale: float,
                reference: OrthonormalFrame | None, gap: float | None,
                cfg: ExperimentConfig, seed: int) -> tuple:
    t_start = time.perf_counter()
    d, n = X.d, X.n
    k = cfg.k

    if cfg.init == "gaussian":
        frame = gaussian_init(d, k, seed)
        align = None
        if reference is not None and k == 1:
            align = float((reference.column(0) @ frame.column(0)) ** 2)
    else:
        report = power_warm_start(X, seed, k=k, reference=reference)
        frame, align = report.frame, report.alignment_sq

    burn_iters = 0
    burn_ok = True
    if cfg.run_burn_in and k == 1:
        if gap is None:
            raise ConfigError("burn-in needs an eigengap estimate "
                              "(enable oracle_check or set lambda_hat)")
        zeta = cfg.zeta if cfg.zeta is not None else 1.0 / d
        try:
            frame, burn_iters = burn_in(X, frame, zeta, cfg.delta, gap,
                                        reference=reference)
        except NonConvergenceError as exc:
            burn_ok = False
            burn_iters = len(exc.trace.records) if exc.trace else 0
            if exc.frame is not None:
                frame = exc.frame

    if cfg.eta is not None and cfg.m is not None:
        eta, m = cfg.eta, cfg.m
    else:
        if gap is None:
            raise ConfigError(
                "set eta and m explicitly, or provide an eigengap estimate "
                "(oracle_check or lambda_hat) for parameter selection")
        eta, m = select_parameters(gap, X.r, k, cfg.delta)

    solver_cfg = SolverConfig(k=k, eta=eta, m=m, epochs=cfg.epochs, seed=seed,
                              delta=cfg.delta, epsilon=cfg.epsilon,
                              use_rotation=cfg.use_rotation)
    if cfg.solver == "vrpca_vector":
        trace = vrpca_vector(X, frame, solver_cfg, reference)
    elif cfg.solver == "vrpca_block":
        trace = vrpca_block(X, frame, solver_cfg, reference)
    elif cfg.solver == "oja":
        iters = cfg.oja_iters if cfg.oja_iters is not None else m * cfg.epochs
        eta0 = cfg.oja_eta0 if cfg.oja_eta0 is not None else (
            1.0 / gap if gap else 1.0)
        trace = oja_baseline(X, frame, eta0, iters, reference)
    elif cfg.solver == "orthogonal_iteration":
        trace = orthogonal_iteration(X, frame, cfg.sweeps, reference)
    else:  # deflation returns a frame; wrap the final state minimally
        final = deflation_solve(X, k, solver_cfg)
        trace = ConvergenceTrace(records=[], final_frame=final, inner_len=m)

    boundaries = trace.boundary_records()
    final_pot = None
    final_res = rayleigh_residual(X, trace.final_frame)
    if boundaries:
        final_pot = boundaries[-1].potential
        final_res = boundaries[-1].residual
    if final_pot is None and reference is not None and \
            reference.k == trace.final_frame.k:
        final_pot = potential(reference, trace.final_frame)

    model = None
    if gap is not None:
        model = runtime_model(d, k, n, original_r, gap * scale,
                              cfg.epsilon or MODEL_EPSILON)
    report = RunReport(
        seed=seed, solver=cfg.solver, d=d, n=n, k=k,
        realized_r=original_r,
        eigengap=(gap * scale) if gap is not None else None,
        init_alignment_sq=align,
        burn_in_iterations=burn_iters, burn_in_converged=burn_ok,
        eta=eta, m=m,
        epochs_run=max((r.epoch for r in trace.records), default=0),
        epoch_potentials=[b.potential for b in boundaries],
        final_potential=final_pot, final_residual=final_res,
        samples=trace.samples,
        elapsed_s=time.perf_counter() - t_start,
        runtime_model=model)
    return report, trace


def run_experiment(cfg: ExperimentConfig):
    """Full pipeline: load/synthesize -> optional rescale -> init ->
    optional burn-in -> parameter selection -> solve -> optional oracle
    verification. Returns a list of RunReport, one per seed; when out_dir
    is set, writes trace_seed<seed>.jsonl and report.json there.

    Burn-in non-convergence is reported in the run report, not raised.
    """
    X0 = _materialize(cfg)
    original_r = X0.r
    if cfg.rescale:
        X, scale = rescale_dataset(X0)
    else:
        X, scale = X0, 1.0

    reference = None
    gap = None
    if cfg.oracle_check and X.d <= DENSE_GUARD:
        spec = dense_eigh(X)
        if cfg.k < X.d:
            reference = leading_subspace(spec, cfg.k)
            gap = spec.gap_at(cfg.k)
        else:
            reference = spec.eigenvectors
            gap = float(spec.eigenvalues[-1])
    elif cfg.lambda_hat is not None:
        gap = cfg.lambda_hat / scale  # estimate refers to the original data

    runs = []
    if len(cfg.seeds) == 1:
        runs.append(_single_run(X, original_r, scale, reference, gap, cfg,
                                cfg.seeds[0]))
    else:
        with ThreadPoolExecutor(max_workers=min(len(cfg.seeds), 8)) as pool:
            futures = [pool.submit(_single_run, X, original_r, scale,
                                   reference, gap, cfg, s)
                       for s in cfg.seeds]
            runs = [f.result() for f in futures]

    reports = [r for r, _ in runs]
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for report, trace in runs:
            _write_trace(out / f"trace_seed{report.seed}.jsonl", trace)
        with (out / "report.json").open("w", encoding="ascii") as fh:
            json.dump([r.to_dict() for r in reports], fh, indent=2)
            fh.write("\n")
    return reports


def compare_baselines(cfg: ExperimentConfig):
    """Run the variance-reduced solver, the Oja baseline, and orthogonal
    iteration at matched sample budgets; returns aligned potential-vs-samples
    series plus the k=1 block/vector equivalence check."""
    X0 = _materialize(cfg)
    original_r = X0.r
    X, scale = rescale_dataset(X0) if cfg.rescale else (X0, 1.0)
    if X.d > DENSE_GUARD:
        raise ConfigError("baseline comparison is desk-scale only")
    spec = dense_eigh(X)
    reference = leading_subspace(spec, cfg.k)
    gap = spec.gap_at(cfg.k)
    eta, m = (cfg.eta, cfg.m) if (cfg.eta is not None and cfg.m is not None) \
        else select_parameters(gap, X.r, cfg.k, cfg.delta)
    seed = cfg.seeds[0]
    solver_cfg = SolverConfig(k=cfg.k, eta=eta, m=m, epochs=cfg.epochs,
                              seed=seed, delta=cfg.delta,
                              use_rotation=cfg.use_rotation)

    if cfg.k == 1:
        start = power_warm_start(X, seed, reference=reference).frame
        vr_trace = vrpca_vector(X, start, solver_cfg, reference)
    else:
        start = power_warm_start(X, seed, k=cfg.k).frame
        vr_trace = vrpca_block(X, start, solver_cfg, reference)
    budget = vr_trace.samples

    series = {"vrpca": _series(vr_trace)}
    if cfg.k == 1:
        oja_trace = oja_baseline(X, start, 1.0 / gap, budget, reference)
        series["oja"] = _series(oja_trace)
    sweeps = max(int(np.ceil(budget / X.n)), 1)
    oi_trace = orthogonal_iteration(X, start, sweeps, reference)
    series["orthogonal_iteration"] = _series(oi_trace)

    result = {
        "d": X.d, "n": X.n, "k": cfg.k, "realized_r": original_r,
        "eigengap": gap * scale, "eta": eta, "m": m, "seed": seed,
        "sample_budget": budget, "series": series,
    }
    if cfg.k == 1:
        # identity check against the aligned-anchor-free variant, whose k=1
        # update is literally the vector update
        plain_cfg = SolverConfig(k=1, eta=eta, m=m, epochs=cfg.epochs,
                                 seed=seed, delta=cfg.delta,
                                 use_rotation=False)
        vec = vrpca_vector(X, start, plain_cfg, reference)
        blk = vrpca_block(X, start, plain_cfg, reference)
        diff = float(np.max(np.abs(blk.final_frame.entries
                                   - vec.final_frame.entries)))
        result["k1_equivalence_max_diff"] = diff
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "comparison.json").open("w", encoding="ascii") as fh:
            json.dump(result, fh, indent=2)
            fh.write("\n")
    return result


def _series(trace: ConvergenceTrace):
    return [{"samples": r.samples, "potential": r.potential,
             "residual": r.residual} for r in trace.records]


def geometry_report(lam: float, eps: float, out=None, samples: int = 10000,
                    seed: int = 0):
    """Diagnostics bundle: Hessian-determinant sweep on the 2-D projector
    instance, extremal curvatures over the convexity region, and the
    tightness-counterexample values. JSON-serializable."""
    # 2-D instance with covariance diag(1, 0): determinant of the Hessian
    # is -4 w1^2 w2^2 / ||w||^8, nonpositive everywhere
    X2 = DataMatrix(np.array([[1.0], [0.0]]))
    rng = np.random.Generator(np.random.Philox(key=seed))
    dets = []
    negative_curvature = 0
    eligible = 0
    for _ in range(200):
        w = rng.standard_normal(2)
        h = rayleigh_hessian(X2, w)
        dets.append(float(np.linalg.det(h)))
        if abs(w[0] * w[1]) > 1e-3:
            eligible += 1
            if not nonconvexity_certificate(X2, w)[0]:
                negative_curvature += 1
    det_sweep = {"max_det": max(dets), "num_samples": 200,
                 "non_psd_fraction_off_axes": negative_curvature / max(eligible, 1)}

    # convexity probe on a spectral-norm-1 instance with the requested gap
    d = 8
    eigs = [1.0, 1.0 - lam] + [max(1.0 - lam, 0.0) * 0.5 ** j
                               for j in range(1, d - 1)]
    spec_req = SpectrumSpec(eigenvalues=tuple(eigs), k=1)
    Xp = synthesize_dataset(spec_req, 4 * d, seed=seed + 1)
    spec = dense_eigh(Xp)
    v1 = spec.eigenvectors.entries[:, 0].copy()
    gap = spec.gap_at(1)
    rngp = np.random.Generator(np.random.Philox(key=seed + 2))
    tang = rngp.standard_normal(d)
    tang -= (tang @ v1) * v1
    tang /= np.linalg.norm(tang)
    w0 = v1 + (0.8 * gap / 44.0) * tang
    w0 /= np.linalg.norm(w0)
    region = build_convex_region(spec, w0)
    lo, hi = probe_strong_convexity(region, Xp, samples, seed + 3)

    cx = tightness_counterexample(lam, eps)
    v1_dist = float(np.linalg.norm(np.array([1.0, 0.0, 0.0]) - cx.w0))
    report = {
        "determinant_sweep": det_sweep,
        "convexity_probe": {
            "eigengap": gap, "radius": region.radius,
            "min_curvature": lo, "max_curvature": hi,
            "samples": samples,
            "projected_optimum_in_region":
                region.contains(region.projected_optimum),
        },
        "counterexample": {
            "eigengap": lam, "eps": eps,
            "second_derivative_at_0": cx.second_derivative_at_0,
            "v1_distance": v1_dist,
            "v1_distance_bound": float(np.sqrt(2.0 * (1.0 + eps) * lam)),
            "rayleigh_at_w0": rayleigh(cx.dataset, cx.w0),
        },
    }
    if out is not None:
        with Path(out).open("w", encoding="ascii") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return report
