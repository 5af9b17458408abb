"""
Reference solutions, run comparisons and the two classification case studies.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import data as ds
from .netgraph import DirectedNetwork, generate_graph, read_edge_list
from .objective import (FiniteSumObjective, QuadraticObjective, make_logistic,
                        make_svm_smoothed_hinge, make_synthetic_quadratic, predict_accuracy)
from .solver import AlgoConfig, Classification, interval_trigger_probs, run
from .theory import compute_constants, theorem_step_bound
from .trace import Trace, consensus_error, residual

log = logging.getLogger(__name__)

__all__ = ["ReferenceSolution", "solve_reference", "residual", "consensus_error",
           "fit_log_linear", "compare_traces", "CaseStudyConfig", "run_case_study",
           "build_problem", "Problem"]


class HarnessError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# reference solution
# ---------------------------------------------------------------------------

@dataclass
class ReferenceSolution:
    z_star: np.ndarray
    grad_norm_at_star: float
    solver_iterations: int


def objective_digest(obj: FiniteSumObjective) -> str:
    h = hashlib.sha256()
    h.update(f"{obj.kind}|{obj.q.tolist()}|{obj.n}".encode())
    if isinstance(obj, QuadraticObjective):
        arrays = (obj.curvatures, obj.targets)
    else:
        arrays = (obj.features, obj.labels)
        h.update(repr(getattr(obj, "beta", getattr(obj, "lam", None))).encode())
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:20]


def solve_reference(obj: FiniteSumObjective, tol=1e-12, max_iter=200_000,
                    cache_dir=None, use_closed_form=True) -> ReferenceSolution:
    """Minimise the global objective by full gradient descent with step ``1/L``.

    For quadratics the closed-form minimiser is returned unless
    ``use_closed_form`` is False. With ``cache_dir`` the result is stored
    as ``<digest>.npz`` holding ``z_star``, ``grad_norm`` and ``iterations``.
    """
    if not tol > 0:
        raise HarnessError(f"tolerance must be positive, got {tol}")
    cache = None
    if cache_dir is not None:
        cache = Path(cache_dir) / f"{objective_digest(obj)}.npz"
        if cache.exists():
            with np.load(cache) as f:
                return ReferenceSolution(f["z_star"].copy(), float(f["grad_norm"]),
                                         int(f["iterations"]))

    if use_closed_form and isinstance(obj, QuadraticObjective):
        z = obj.minimizer()
        ref = ReferenceSolution(z, float(np.linalg.norm(obj.global_gradient(z))), 0)
    else:
        z = np.zeros(obj.n)
        step = 1.0 / obj.lipschitz
        for it in range(max_iter + 1):
            g = obj.global_gradient(z)
            gn = float(np.linalg.norm(g))
            if gn <= tol:
                break
            z = z - step * g
        else:
            raise HarnessError(f"gradient descent did not reach {tol:g} in {max_iter} steps "
                               f"(last gradient norm {gn:.3g})")
        ref = ReferenceSolution(z, gn, it)

    if cache is not None:
        cache.parent.mkdir(parents=True, exist_ok=True)
        np.savez(cache, z_star=ref.z_star, grad_norm=ref.grad_norm_at_star,
                 iterations=ref.solver_iterations)
    return ref


# ---------------------------------------------------------------------------
# trace analysis
# ---------------------------------------------------------------------------

def fit_log_linear(values, start_fraction=0.4):
    """Least-squares line through ``log(values)`` from ``start_fraction`` onward.

    Returns ``(slope, intercept, r2)`` with the slope per index step.
    """
    v = np.asarray(values, dtype=float)
    i0 = int(start_fraction * v.size)
    y = np.log(v[i0:])
    x = np.arange(i0, v.size, dtype=float)
    if y.size < 3 or not np.all(np.isfinite(y)):
        return float("nan"), float("nan"), float("nan")
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def epochs_to(trace: Trace, threshold) -> float:
    r = trace.column("residual")
    hit = np.flatnonzero(r <= threshold)
    return float(trace.column("epoch")[hit[0]]) if hit.size else float("nan")


def compare_traces(traces: dict, tail_fraction=0.2, threshold=1e-6) -> list[dict]:
    """One summary row per trace.

    Columns: final and tail-median residual, log-residual slope per
    iteration and its R^2 over the tail, epochs until ``threshold``, and
    the tail-median ratio against the first trace.
    """
    rows = []
    base = None
    for name, tr in traces.items():
        r = tr.column("residual")
        n_tail = max(1, int(np.ceil(tail_fraction * r.size)))
        tail = float(np.median(r[-n_tail:]))
        slope, _, r2 = fit_log_linear(np.maximum(r, 1e-300), 1 - tail_fraction)
        base = tail if base is None else base
        rows.append({"name": name, "iterations": int(tr.final.iter),
                     "epochs": float(tr.final.epoch), "final_residual": float(r[-1]),
                     "tail_median_residual": tail, "tail_slope": slope, "tail_r2": r2,
                     "epochs_to_threshold": epochs_to(tr, threshold),
                     "tail_ratio_to_first": tail / base if base > 0 else float("nan")})
    return rows


def summary_csv(rows, path=None) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


# ---------------------------------------------------------------------------
# problems and case studies
# ---------------------------------------------------------------------------

@dataclass
class CaseStudyConfig:
    """Everything needed to build a network, an objective and a set of runs.

    Defaults are desk-scale; see :data:`FULL_SCALE` for the published sizes.
    """

    # network
    graph: str = "out_regular"
    m: int = 10
    graph_seed: int = 1
    connectivity_ratio: float = 0.2
    out_degree: int = 4
    undirected: bool = False
    edge_list: str | None = None
    # objective / data
    objective: str = "logistic"
    dataset: str | None = None
    data_format: str = "svmlight"
    label_column: str = "label"
    positive_label: float | None = None
    keep_labels: tuple | None = None
    n_samples: int | None = 800
    n_train: int = 600
    n_features: int = 20
    beta: float = 5.0
    lam: float = 0.01
    scale: bool = False
    quad_n: int = 10
    quad_q: int = 32
    quad_mu: float = 1.0
    quad_L: float = 2.0
    quad_target_scale: float = 1.0
    data_seed: int = 0
    # algorithms
    algorithms: tuple = ("push_lsvrg_up",)
    alpha: float | str = 0.05
    alpha_multiplier: float = 1.0
    trigger: str | float | tuple = "interval"
    trigger_seed: int = 0
    # run
    seed: int = 0
    max_iters: int = 2000
    max_epochs: float = float("inf")
    stop_residual: float = 0.0
    record_every: int = 1
    eval_every: int = 0
    # output
    out_dir: str | None = None
    cache_dir: str | None = None


FULL_SCALE = {
    "logistic_mushroom": dict(graph="out_regular", m=30, out_degree=6, objective="logistic",
                              n_samples=None, n_train=6000, beta=5.0),
    "svm_mnist": dict(graph="random_strongly_connected", m=100, connectivity_ratio=0.2,
                      undirected=True, objective="svm", keep_labels=(1, 7), positive_label=7,
                      n_samples=12000, n_train=8000, lam=0.01),
}

DESK_SCALE = {
    "logistic_mushroom": dict(objective="logistic"),
    "svm_mnist": dict(objective="svm", graph="random_strongly_connected",
                      connectivity_ratio=0.3, undirected=True, n_samples=1000, n_train=800,
                      n_features=20, lam=0.01),
    "synthetic": dict(objective="quadratic", graph="directed_exponential", m=8),
}


@dataclass
class Problem:
    network: DirectedNetwork
    objective: FiniteSumObjective
    train: ds.Dataset | None = None
    test: ds.Dataset | None = None
    reference: ReferenceSolution | None = None
    notes: dict = field(default_factory=dict)

    @property
    def classification(self):
        return None if self.train is None else Classification(self.train, self.test)


def build_network(cfg: CaseStudyConfig) -> DirectedNetwork:
    if cfg.edge_list:
        return read_edge_list(cfg.edge_list)
    return generate_graph(cfg.graph, cfg.m, connectivity_ratio=cfg.connectivity_ratio,
                          seed=cfg.graph_seed, out_degree=cfg.out_degree,
                          undirected=cfg.undirected)


def load_dataset(cfg: CaseStudyConfig) -> ds.Dataset:
    if cfg.dataset in (None, "", "synthetic"):
        n = cfg.n_samples or (cfg.n_train * 4 // 3)
        if cfg.objective == "logistic":
            return ds.make_categorical_dataset(n, seed=cfg.data_seed)
        return ds.make_gaussian_blobs(n, cfg.n_features, seed=cfg.data_seed)
    keep = set(cfg.keep_labels) if cfg.keep_labels else None
    if cfg.data_format == "csv":
        data = ds.load_csv(cfg.dataset, cfg.label_column, cfg.positive_label, keep)
    elif cfg.data_format == "svmlight":
        data = ds.load_svmlight(cfg.dataset, cfg.positive_label, keep_labels=keep)
    else:
        raise HarnessError(f"unknown data format {cfg.data_format!r}")
    if cfg.n_samples is not None and cfg.n_samples < len(data):
        pick = np.random.default_rng(cfg.data_seed).choice(len(data), cfg.n_samples,
                                                           replace=False)
        data = data.subset(np.sort(pick))
    return data


def build_problem(cfg: CaseStudyConfig, solve=True) -> Problem:
    net = build_network(cfg)
    if cfg.objective == "quadratic":
        obj = make_synthetic_quadratic(net.m, cfg.quad_n, cfg.quad_q, seed=cfg.data_seed,
                                       mu_target=cfg.quad_mu, L_target=cfg.quad_L,
                                       target_scale=cfg.quad_target_scale)
        prob = Problem(net, obj)
    else:
        data = load_dataset(cfg)
        train, test = ds.train_test_split(data, cfg.n_train, seed=cfg.data_seed)
        if cfg.scale:
            train, test = ds.minmax_scale(train, test)
        train = ds.partition(train, net.m, seed=cfg.data_seed)
        if cfg.objective == "logistic":
            obj = make_logistic(train, cfg.beta)
        elif cfg.objective == "svm":
            obj = make_svm_smoothed_hinge(train, cfg.lam)
        else:
            raise HarnessError(f"unknown objective {cfg.objective!r}")
        prob = Problem(net, obj, train, test)
    if solve:
        prob.reference = solve_reference(prob.objective, cache_dir=cfg.cache_dir)
    return prob


def resolve_trigger_probs(cfg: CaseStudyConfig, obj: FiniteSumObjective) -> np.ndarray:
    t = cfg.trigger
    m = obj.m
    if isinstance(t, str):
        if t == "interval":
            return interval_trigger_probs(m, obj.condition_number, cfg.trigger_seed)
        if t == "inverse_q":
            return np.minimum(1.0, 1.0 / obj.q)
        if t == "inverse_cond":
            return np.full(m, min(1.0, 1.0 / obj.condition_number))
        t = [float(s) for s in t.split(",")]
    p = np.atleast_1d(np.asarray(t, dtype=float))
    return np.full(m, p[0]) if p.size == 1 else p


def resolve_alpha(cfg: CaseStudyConfig, prob: Problem, probs) -> tuple[float, dict]:
    if isinstance(cfg.alpha, str):
        if cfg.alpha != "auto":
            raise HarnessError(f"step-size must be a number or 'auto', got {cfg.alpha!r}")
        c = compute_constants(prob.network, prob.objective.mu, prob.objective.lipschitz, probs)
        bound = theorem_step_bound(c)
        return bound * cfg.alpha_multiplier, {"alpha_mode": "auto", "theorem_bound": repr(bound),
                                              "alpha_multiplier": repr(cfg.alpha_multiplier)}
    alpha = float(cfg.alpha)
    if alpha < 0:
        raise HarnessError(f"step-size must be nonnegative, got {alpha}")
    return alpha, {"alpha_mode": "fixed"}


def run_algorithms(cfg: CaseStudyConfig, prob: Problem, algorithms=None) -> dict:
    """Run each algorithm on the same problem with the same seed."""
    probs = resolve_trigger_probs(cfg, prob.objective)
    alpha, meta = resolve_alpha(cfg, prob, probs)
    traces = {}
    for name in algorithms or cfg.algorithms:
        ac = AlgoConfig(algorithm=name, alpha=alpha, trigger_probs=probs, seed=cfg.seed,
                        max_iters=cfg.max_iters, stop_residual=cfg.stop_residual,
                        max_epochs=cfg.max_epochs, record_every=cfg.record_every,
                        eval_every=cfg.eval_every)
        traces[name] = run(ac, prob.network, prob.objective, prob.reference.z_star,
                           classification=prob.classification, meta=meta)
        log.info("%s: %d iterations, final residual %.3e", name, traces[name].final.iter,
                 traces[name].final.residual)
    return traces


def run_case_study(which, config: CaseStudyConfig | None = None, full_scale=False, **overrides):
    """Build, solve and run one of ``logistic_mushroom``, ``svm_mnist``, ``synthetic``.

    Desk-scale defaults apply unless ``full_scale``; keyword overrides win
    over both. Traces are written to ``out_dir`` if it is set.

    Returns
    -------
    traces : dict
        Algorithm name to :class:`Trace`.
    problem : Problem
    """
    if which not in DESK_SCALE:
        raise HarnessError(f"unknown case study {which!r}; choose from {sorted(DESK_SCALE)}")
    cfg = config or CaseStudyConfig()
    if config is None:
        preset = FULL_SCALE.get(which, {}) if full_scale else DESK_SCALE[which]
        cfg = replace(cfg, **{**DESK_SCALE[which], **preset})
    cfg = replace(cfg, **overrides)
    if full_scale and which != "synthetic" and not cfg.dataset:
        raise HarnessError(f"full-scale {which} needs a dataset path")
    prob = build_problem(cfg)
    traces = run_algorithms(cfg, prob)
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, tr in traces.items():
            tr.to_csv(out / f"{which}_{name}.csv")
        summary_csv(compare_traces(traces), out / f"{which}_summary.csv")
    return traces, prob


def oracle_accuracy(prob: Problem) -> tuple[float, float]:
    """Train and test accuracy of the centralised reference model."""
    z = prob.reference.z_star
    return (predict_accuracy(prob.objective, z, prob.train),
            predict_accuracy(prob.objective, z, prob.test))
