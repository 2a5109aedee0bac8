"""Config-driven Monte Carlo experiment harness.

Each experiment is described by a single JSON document (unknown keys are
errors, to catch typos in scientific configs) and produces CSV tables,
derived SVG figures, and a ``run_meta.json`` echo in the output
directory. CSV is the canonical output: replicate tasks are merged in
deterministic submission order and every task derives all of its
randomness from ``rng_seed + replicate``, so re-running a config yields
byte-identical tables regardless of worker scheduling.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dsinit import (
    barycenter,
    block_diag_barycenter,
    blocks_partition,
    sample_partition_with_confusion,
    soft_seed_partition,
)
from .randgraphs import (
    ModelSpec,
    build_params,
    expected_trace,
    model_from_json,
    sample_corr_er,
    theory_thresholds,
)
from .solver import FaqOptions, error_breakdown, faq, random_restart_probe, two_step_check

__all__ = [
    "EXPERIMENT_KINDS",
    "ExperimentConfig",
    "load_experiment_config",
    "resolve_workers",
    "run_experiment",
]

EXPERIMENT_KINDS = (
    "trajectory",
    "phase_transition",
    "disagreement",
    "expectation_check",
    "two_step_check",
    "restart_probe",
)

_COMMON_KEYS = {"experiment", "replicates", "rng_seed", "workers", "faq", "expected_runtime"}
_KIND_KEYS = {
    "trajectory": {"model", "s_grid", "detail_s", "plot_iterations"},
    "phase_transition": {"model", "n_grid", "s_grid"},
    "disagreement": {"n", "blocks", "within_p", "between_p", "r", "delta_grid"},
    "expectation_check": {"models", "samples", "pairs"},
    "two_step_check": {"model", "trace_grid", "delta_exponent"},
    "restart_probe": {"model", "restarts", "init_method"},
}
_REQUIRED_KEYS = {
    "trajectory": {"model", "s_grid", "replicates", "rng_seed"},
    "phase_transition": {"model", "n_grid", "s_grid", "replicates", "rng_seed"},
    "disagreement": {"n", "blocks", "within_p", "between_p", "r", "delta_grid", "replicates", "rng_seed"},
    "expectation_check": {"models", "samples", "pairs", "rng_seed"},
    "two_step_check": {"model", "trace_grid", "replicates", "rng_seed"},
    "restart_probe": {"model", "restarts", "replicates", "rng_seed"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment document."""

    kind: str
    rng_seed: int
    replicates: int = 1
    workers: int | None = None
    faq: FaqOptions = field(default_factory=FaqOptions)
    model: ModelSpec | None = None
    models: tuple = ()
    s_grid: tuple = ()
    n_grid: tuple = ()
    delta_grid: tuple = ()
    trace_grid: tuple = ()
    detail_s: int | None = None
    plot_iterations: int = 20
    n: int | None = None
    blocks: int | None = None
    within_p: float | None = None
    between_p: float | None = None
    r: float | None = None
    samples: int | None = None
    pairs: int | None = None
    restarts: int | None = None
    init_method: str = "sinkhorn-of-uniform"
    delta_exponent: float = 0.1
    raw: dict = field(default_factory=dict, repr=False)


def load_experiment_config(source) -> ExperimentConfig:
    """Parse an experiment document from a dict or a JSON file path."""
    if isinstance(source, dict):
        doc = dict(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    kind = doc.get("experiment")
    if kind not in EXPERIMENT_KINDS:
        raise ValueError(f"unknown experiment kind {kind!r}; expected one of {EXPERIMENT_KINDS}")
    allowed = _COMMON_KEYS | _KIND_KEYS[kind]
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(f"unknown config keys for {kind}: {sorted(unknown)}")
    missing = _REQUIRED_KEYS[kind] - set(doc)
    if missing:
        raise ValueError(f"missing config keys for {kind}: {sorted(missing)}")
    replicates = int(doc.get("replicates", 1))
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    try:
        faq_opts = FaqOptions(**doc.get("faq", {}))
    except TypeError as exc:
        raise ValueError(f"bad 'faq' options: {exc}") from exc

    model = None
    if "model" in doc:
        model_doc = dict(doc["model"])
        if kind == "phase_transition":
            if model_doc.get("model") != "hom":
                raise ValueError("phase_transition requires a hom model")
            model_doc.setdefault("n", 0)  # n comes from n_grid
        model = model_from_json(model_doc)

    models = tuple(model_from_json(dict(m)) for m in doc.get("models", ()))

    def grid(key):
        vals = doc.get(key, ())
        out = tuple(int(v) for v in vals)
        if key in _REQUIRED_KEYS[kind] and not out:
            raise ValueError(f"{key} must be non-empty")
        return out

    return ExperimentConfig(
        kind=kind,
        rng_seed=int(doc["rng_seed"]),
        replicates=replicates,
        workers=int(doc["workers"]) if "workers" in doc else None,
        faq=faq_opts,
        model=model,
        models=models,
        s_grid=grid("s_grid"),
        n_grid=grid("n_grid"),
        delta_grid=grid("delta_grid"),
        trace_grid=grid("trace_grid"),
        detail_s=int(doc["detail_s"]) if "detail_s" in doc else None,
        plot_iterations=int(doc.get("plot_iterations", 20)),
        n=int(doc["n"]) if "n" in doc else None,
        blocks=int(doc["blocks"]) if "blocks" in doc else None,
        within_p=float(doc["within_p"]) if "within_p" in doc else None,
        between_p=float(doc["between_p"]) if "between_p" in doc else None,
        r=float(doc["r"]) if "r" in doc else None,
        samples=int(doc["samples"]) if "samples" in doc else None,
        pairs=int(doc["pairs"]) if "pairs" in doc else None,
        restarts=int(doc["restarts"]) if "restarts" in doc else None,
        init_method=doc.get("init_method", "sinkhorn-of-uniform"),
        delta_exponent=float(doc.get("delta_exponent", 0.1)),
        raw=doc,
    )


def resolve_workers(config: ExperimentConfig) -> int:
    """Worker count: GM_WORKERS env var, else the config, else the CPU count."""
    env = os.environ.get("GM_WORKERS")
    if env:
        return max(1, int(env))
    if config.workers:
        return max(1, config.workers)
    return os.cpu_count() or 1


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if np.isnan(value):
            return ""
        return repr(value)
    return str(value)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_meta(out_dir, config: ExperimentConfig, workers: int) -> None:
    import scipy

    from . import __version__

    meta = {
        "config": config.raw,
        "workers": workers,
        "gmatch_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "blas_threads": os.environ.get("OMP_NUM_THREADS") or os.environ.get("OPENBLAS_NUM_THREADS") or "default",
    }
    if config.kind in ("trajectory", "phase_transition"):
        meta["conventions"] = (
            "runs stop early; per-iteration accuracy series carry the last value "
            "forward when averaged or plotted past termination"
        )
    with open(os.path.join(out_dir, "run_meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_tasks(fn, args_list, workers: int, chunk_hint: int = 4):
    """Execute tasks and return results in submission order."""
    if workers <= 1 or len(args_list) <= 1:
        return [fn(args) for args in args_list]
    chunksize = max(1, len(args_list) // (workers * chunk_hint))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args_list, chunksize=chunksize))


def _accuracy_series(traj_rows, length: int):
    """Per-iteration accuracy, last value carried forward to ``length + 1`` entries."""
    accs = [row[0] for row in traj_rows]
    out = []
    for k in range(length + 1):
        out.append(accs[k] if k < len(accs) else accs[-1])
    return out


# --------------------------------------------------------------------------
# trajectory


def _trajectory_task(args):
    model, s, replicate, base_seed, faq_opts = args
    rng = np.random.default_rng(base_seed + replicate)
    params = build_params(model, rng)
    A, B = sample_corr_er(params, rng)
    D0 = block_diag_barycenter(params.n, s)
    res = faq(A, B, D0, faq_opts)
    traj = [(p.accuracy, p.objective, p.alpha) for p in res.trajectory]
    return s, replicate, traj, res.accuracy, res.iterations, res.converged_at_permutation


def run_trajectory(config: ExperimentConfig, out_dir: str) -> dict:
    """Accuracy-over-iterations study for one model across initialization traces."""
    workers = resolve_workers(config)
    model = config.model
    tasks = [
        (model, s, rep, config.rng_seed, config.faq)
        for s in config.s_grid
        for rep in range(config.replicates)
    ]
    results = _run_tasks(_trajectory_task, tasks, workers)

    rows = []
    for s, rep, traj, _, _, _ in results:
        for k, (acc, obj, alpha) in enumerate(traj):
            rows.append((model.kind, s, rep, k, acc, obj, alpha))
    _write_csv(
        os.path.join(out_dir, "trajectory.csv"),
        ["model", "s", "replicate", "iteration", "accuracy", "objective", "alpha"],
        rows,
    )

    final_rows = [
        (model.kind, s, rep, final_acc, iters, at_perm)
        for s, rep, _, final_acc, iters, at_perm in results
    ]
    _write_csv(
        os.path.join(out_dir, "trajectory_final.csv"),
        ["model", "s", "replicate", "final_accuracy", "iterations", "converged_at_permutation"],
        final_rows,
    )

    length = config.plot_iterations
    mean_rows = []
    mean_series = []
    for s in config.s_grid:
        batch = [r for r in results if r[0] == s]
        series = np.array([_accuracy_series(r[2], length) for r in batch])
        means = series.mean(axis=0)
        mean_series.append((f"trace {s}", list(range(length + 1)), means))
        for k in range(length + 1):
            mean_rows.append((model.kind, s, k, float(means[k]), len(batch)))
    _write_csv(
        os.path.join(out_dir, "trajectory_mean.csv"),
        ["model", "s", "iteration", "mean_accuracy", "replicates"],
        mean_rows,
    )

    from .plots import render_line_plot

    with open(os.path.join(out_dir, "trajectory_mean.svg"), "w", encoding="utf-8") as fh:
        fh.write(
            render_line_plot(
                mean_series,
                xlabel="iteration",
                ylabel="mean accuracy",
                title=f"{model.kind}: mean accuracy by initialization trace",
                ylim=(0, 1.02),
            )
        )
    detail_s = config.detail_s if config.detail_s is not None else config.s_grid[0]
    detail = [
        (f"rep {rep}", list(range(length + 1)), _accuracy_series(traj, length))
        for s, rep, traj, _, _, _ in results
        if s == detail_s
    ]
    if detail:
        with open(os.path.join(out_dir, "trajectory_replicates.svg"), "w", encoding="utf-8") as fh:
            fh.write(
                render_line_plot(
                    detail,
                    xlabel="iteration",
                    ylabel="accuracy",
                    title=f"{model.kind}: replicate trajectories at trace {detail_s}",
                    ylim=(0, 1.02),
                )
            )
    _write_meta(out_dir, config, workers)
    return {"rows": len(rows)}


# --------------------------------------------------------------------------
# phase transition


def _phase_task(args):
    model, n, s, replicate, base_seed, faq_opts = args
    rng = np.random.default_rng(base_seed + replicate)
    spec = ModelSpec(kind="hom", n=n, p=model.p, r=model.r)
    params = build_params(spec, rng)
    A, B = sample_corr_er(params, rng)
    res = faq(A, B, block_diag_barycenter(n, s), faq_opts)
    accs = [p.accuracy for p in res.trajectory]
    acc_at = lambda k: accs[k] if k < len(accs) else accs[-1]
    return n, s, replicate, acc_at(1), acc_at(2), res.accuracy


def run_phase_transition(config: ExperimentConfig, out_dir: str) -> dict:
    """Seed-count / graph-size accuracy grid after steps 1, 2, and termination."""
    workers = resolve_workers(config)
    tasks = [
        (config.model, n, s, rep, config.rng_seed, config.faq)
        for n in config.n_grid
        for s in config.s_grid
        for rep in range(config.replicates)
    ]
    results = _run_tasks(_phase_task, tasks, workers, chunk_hint=8)

    _write_csv(
        os.path.join(out_dir, "phase_transition_runs.csv"),
        ["n", "s", "replicate", "accuracy_iter1", "accuracy_iter2", "accuracy_final"],
        results,
    )

    by_cell: dict = {}
    for n, s, _, a1, a2, af in results:
        by_cell.setdefault((n, s), []).append((a1, a2, af))
    heat_rows = []
    for n in config.n_grid:
        for s in config.s_grid:
            cell = np.array(by_cell[(n, s)])
            for idx, stage in enumerate(("iter1", "iter2", "final")):
                heat_rows.append((n, s, stage, float(cell[:, idx].mean()), cell.shape[0]))
    _write_csv(
        os.path.join(out_dir, "heatmap.csv"),
        ["n", "s", "stage", "mean_accuracy", "replicates"],
        heat_rows,
    )

    from .plots import render_heatmap

    for idx, stage in enumerate(("iter1", "iter2", "final")):
        grid = np.array(
            [[np.mean([c[idx] for c in by_cell[(n, s)]]) for n in config.n_grid] for s in config.s_grid]
        )
        svg = render_heatmap(
            grid,
            x_ticks=list(config.n_grid),
            y_ticks=list(config.s_grid),
            xlabel="graph size n",
            ylabel="initialization trace s",
            title=f"mean accuracy after {stage}",
        )
        with open(os.path.join(out_dir, f"heatmap_{stage}.svg"), "w", encoding="utf-8") as fh:
            fh.write(svg)
    _write_meta(out_dir, config, workers)
    return {"rows": len(heat_rows)}


# --------------------------------------------------------------------------
# disagreement


def _disagreement_task(args):
    n, K, within_p, between_p, r, delta, replicate, base_seed, faq_opts = args
    rng = np.random.default_rng(base_seed + replicate)
    spec = ModelSpec(kind="sbm", n=n, r=r, blocks=(n // K,) * K, within_p=within_p, between_p=between_p)
    params = build_params(spec, rng)
    A, B = sample_corr_er(params, rng)
    beta = blocks_partition([n // K] * K)
    eta = sample_partition_with_confusion(n, K, delta, beta, rng)
    D0 = soft_seed_partition(eta, eta)
    res = faq(A, B, D0, faq_opts)
    w_d0, b_d0, w_sbm, b_sbm = error_breakdown(res.sigma, eta, beta)
    acc = res.accuracy
    return delta, replicate, acc, acc == 1.0, w_d0, b_d0, w_sbm, b_sbm


def run_disagreement(config: ExperimentConfig, out_dir: str) -> dict:
    """Blockmodel study of initialization partitions that disagree with the blocks."""
    workers = resolve_workers(config)
    n, K = config.n, config.blocks
    tasks = [
        (n, K, config.within_p, config.between_p, config.r, delta, rep, config.rng_seed, config.faq)
        for delta in config.delta_grid
        for rep in range(config.replicates)
    ]
    results = _run_tasks(_disagreement_task, tasks, workers)

    _write_csv(
        os.path.join(out_dir, "disagreement.csv"),
        ["delta", "replicate", "accuracy", "perfect", "within_d0", "between_d0", "within_sbm", "between_sbm"],
        results,
    )

    summary_rows = []
    mean_acc = []
    for delta in config.delta_grid:
        batch = [r for r in results if r[0] == delta]
        accs = np.array([r[2] for r in batch])
        perfect = np.array([r[3] for r in batch], dtype=bool)
        imperfect = ~perfect
        cond = lambda vals: float(np.mean([v for v, m in zip(vals, imperfect) if m])) if imperfect.any() else float("nan")
        summary_rows.append(
            (
                delta,
                len(batch),
                float(perfect.mean()),
                cond(accs),
                cond([r[4] for r in batch]),
                cond([r[5] for r in batch]),
                cond([r[6] for r in batch]),
                cond([r[7] for r in batch]),
            )
        )
        mean_acc.append(float(accs.mean()))
    _write_csv(
        os.path.join(out_dir, "disagreement_summary.csv"),
        [
            "delta",
            "replicates",
            "perfect_rate",
            "imperfect_mean_accuracy",
            "imperfect_within_d0",
            "imperfect_between_d0",
            "imperfect_within_sbm",
            "imperfect_between_sbm",
        ],
        summary_rows,
    )

    from .plots import render_line_plot

    with open(os.path.join(out_dir, "disagreement_accuracy.svg"), "w", encoding="utf-8") as fh:
        fh.write(
            render_line_plot(
                [("mean final accuracy", list(config.delta_grid), mean_acc)],
                xlabel="partition disagreement",
                ylabel="mean final accuracy",
                title=f"{K}-block alignment vs initialization disagreement",
                ylim=(0, 1.02),
            )
        )
    _write_meta(out_dir, config, workers)
    return {"rows": len(results)}


# --------------------------------------------------------------------------
# expectation check


def _expectation_task(args):
    model, model_idx, samples, pairs, base_seed = args
    rng = np.random.default_rng(base_seed + model_idx)
    params = build_params(model, rng)
    n = params.n
    pq = [(rng.permutation(n), rng.permutation(n)) for _ in range(pairs)]
    A = np.empty((samples, n, n))
    B = np.empty((samples, n, n))
    for s_idx in range(samples):
        A[s_idx], B[s_idx] = sample_corr_er(params, rng)
    rows = []
    for pair_idx, (sp, sq) in enumerate(pq):
        # trace(A P B Q^T) = sum_{u,k} A[u,k] B[sp(k), sq(u)]
        Bp = B[:, sp[:, None], sq[None, :]]
        traces = np.einsum("suk,sku->s", A, Bp)
        expected = expected_trace(params, sp, sq)
        mc_mean = float(traces.mean())
        se = float(traces.std(ddof=1) / np.sqrt(samples))
        z = (mc_mean - expected) / se if se > 0 else 0.0
        rows.append((model.kind, pair_idx, expected, mc_mean, se, float(z)))
    return rows


def run_expectation_check(config: ExperimentConfig, out_dir: str) -> dict:
    """Monte Carlo verification of the exact pair-trace expectation identity."""
    workers = resolve_workers(config)
    too_big = [m.kind for m in config.models if m.n > 30]
    if too_big:
        raise ValueError("expectation_check is meant for small models (n <= 30)")
    tasks = [
        (model, idx, config.samples, config.pairs, config.rng_seed)
        for idx, model in enumerate(config.models)
    ]
    results = _run_tasks(_expectation_task, tasks, workers)
    rows = [row for batch in results for row in batch]
    _write_csv(
        os.path.join(out_dir, "expectation_check.csv"),
        ["model", "pair", "expected", "mc_mean", "mc_se", "z"],
        rows,
    )
    _write_meta(out_dir, config, workers)
    return {"rows": len(rows), "max_abs_z": max(abs(r[5]) for r in rows)}


# --------------------------------------------------------------------------
# two-step check


def _two_step_task(args):
    model, t, replicate, base_seed, _faq_opts = args
    rng = np.random.default_rng(base_seed + replicate)
    params = build_params(model, rng)
    A, B = sample_corr_er(params, rng)
    n = params.n
    w = (t - 1.0) / (n - 1.0)
    D0 = w * np.eye(n) + (1.0 - w) * barycenter(n)
    res = two_step_check(A, B, D0)
    return t, replicate, res.reached_identity, res.steps_used


def run_two_step(config: ExperimentConfig, out_dir: str) -> dict:
    """Empirical two-step convergence rates across initialization traces."""
    workers = resolve_workers(config)
    tasks = [
        (config.model, t, rep, config.rng_seed, config.faq)
        for t in config.trace_grid
        for rep in range(config.replicates)
    ]
    results = _run_tasks(_two_step_task, tasks, workers)
    _write_csv(
        os.path.join(out_dir, "two_step.csv"),
        ["trace_target", "replicate", "reached_identity", "steps_used"],
        results,
    )

    params = build_params(config.model, np.random.default_rng(config.rng_seed))
    th = theory_thresholds(params, config.delta_exponent)
    summary = []
    for t in config.trace_grid:
        batch = [r for r in results if r[0] == t]
        rate = float(np.mean([r[2] for r in batch]))
        summary.append((t, len(batch), rate, th.ell, th.m, th.C, th.epsilon, th.delta, th.binding))
    _write_csv(
        os.path.join(out_dir, "two_step_summary.csv"),
        ["trace_target", "replicates", "two_step_rate", "ell", "m", "C", "epsilon", "delta", "ell_binding"],
        summary,
    )
    _write_meta(out_dir, config, workers)
    return {"rows": len(results)}


# --------------------------------------------------------------------------
# restart probe


def _restart_task(args):
    model, restarts, init_method, replicate, base_seed, faq_opts = args
    rng = np.random.default_rng(base_seed + replicate)
    params = build_params(model, rng)
    A, B = sample_corr_er(params, rng)
    runs = random_restart_probe(A, B, restarts, faq_opts, rng, method=init_method)
    best = runs[0][1]
    return [
        (replicate, rank, obj, res.accuracy, res.converged_at_permutation, best - obj)
        for rank, (res, obj) in enumerate(runs)
    ]


def run_restart_probe(config: ExperimentConfig, out_dir: str) -> dict:
    """Random-restart exploration of local maxima and their objective gaps."""
    workers = resolve_workers(config)
    tasks = [
        (config.model, config.restarts, config.init_method, rep, config.rng_seed, config.faq)
        for rep in range(config.replicates)
    ]
    results = _run_tasks(_restart_task, tasks, workers)
    rows = [row for batch in results for row in batch]
    _write_csv(
        os.path.join(out_dir, "restart_probe.csv"),
        ["replicate", "rank", "objective", "accuracy", "converged_at_permutation", "gap_to_best"],
        rows,
    )
    _write_meta(out_dir, config, workers)
    return {"rows": len(rows)}


_RUNNERS = {
    "trajectory": run_trajectory,
    "phase_transition": run_phase_transition,
    "disagreement": run_disagreement,
    "expectation_check": run_expectation_check,
    "two_step_check": run_two_step,
    "restart_probe": run_restart_probe,
}


def run_experiment(config: ExperimentConfig, out_dir: str) -> dict:
    """Run one experiment, writing CSV tables and SVG figures to ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    return _RUNNERS[config.kind](config, out_dir)
