"""
Run configuration files.

Grammar (UTF-8, one entry per line)::

    line    := blank | comment | entry
    comment := '#' anything
    entry   := section '.' key '=' value

Whitespace around keys and values is ignored; a ``#`` after a value starts
a trailing comment. Lists are comma separated. Unknown keys are an error.
"""

from __future__ import annotations

import hashlib
from dataclasses import replace
from pathlib import Path

from .harness import CaseStudyConfig


class ConfigError(ValueError):
    pass


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _opt_float(s):
    return None if s.strip().lower() in ("", "none") else float(s)


def _opt_int(s):
    return None if s.strip().lower() in ("", "none", "all") else int(s)


def _opt_str(s):
    return None if s.strip().lower() in ("", "none") else s.strip()


def _alpha(s):
    s = s.strip()
    return "auto" if s == "auto" else float(s)


def _str_list(s):
    return tuple(t.strip() for t in s.split(",") if t.strip())


def _num_list(s):
    return tuple(float(t) for t in _str_list(s))


def _trigger(s):
    s = s.strip()
    if s in ("interval", "inverse_q", "inverse_cond"):
        return s
    vals = _num_list(s)
    return vals[0] if len(vals) == 1 else vals


# key -> (CaseStudyConfig field or None, parser, description)
CONFIG_KEYS = {
    "network.kind": ("graph", str, "ring | mesh | directed_exponential | symmetric_exponential | "
                     "full | random_strongly_connected | out_regular"),
    "network.m": ("m", int, "number of agents"),
    "network.seed": ("graph_seed", int, "seed for random topologies"),
    "network.ratio": ("connectivity_ratio", float, "edge probability for random_strongly_connected"),
    "network.out_degree": ("out_degree", int, "out-neighbours per agent for out_regular"),
    "network.undirected": ("undirected", _bool, "sample symmetric edges (random kind)"),
    "network.edge_list": ("edge_list", _opt_str, "read the graph from an edge-list file instead"),
    "objective.kind": ("objective", str, "logistic | svm | quadratic"),
    "objective.dataset": ("dataset", _opt_str, "data file path, or 'synthetic'"),
    "objective.format": ("data_format", str, "svmlight | csv"),
    "objective.label_column": ("label_column", str, "label column name for csv data"),
    "objective.positive_label": ("positive_label", _opt_float, "raw label mapped to +1"),
    "objective.keep_labels": ("keep_labels", _num_list, "raw labels to keep, e.g. 1,7"),
    "objective.n_samples": ("n_samples", _opt_int, "samples drawn from the data (train + test)"),
    "objective.n_train": ("n_train", int, "training samples; the rest are held out"),
    "objective.n_features": ("n_features", int, "feature count of the synthetic svm data"),
    "objective.beta": ("beta", float, "logistic regularisation weight"),
    "objective.lambda": ("lam", float, "smoothed-hinge penalty weight"),
    "objective.scale": ("scale", _bool, "min-max scale features"),
    "objective.n": ("quad_n", int, "quadratic: dimension"),
    "objective.q": ("quad_q", int, "quadratic: components per agent"),
    "objective.mu": ("quad_mu", float, "quadratic: smallest curvature"),
    "objective.L": ("quad_L", float, "quadratic: largest curvature"),
    "objective.target_scale": ("quad_target_scale", float, "quadratic: spread of the targets"),
    "objective.seed": ("data_seed", int, "seed for data generation, splits and partitions"),
    "algorithm.name": ("algorithms", _str_list, "push_lsvrg_up | s_addopt | addopt | push_saga "
                       "(comma list for compare)"),
    "algorithm.alpha": ("alpha", _alpha, "step-size, or 'auto' for the theorem bound"),
    "algorithm.alpha_multiplier": ("alpha_multiplier", float, "scales the 'auto' step-size"),
    "algorithm.p": ("trigger", _trigger, "trigger probabilities: scalar, comma list, 'interval' "
                    "(uniform in [1/Q, m/Q], clamped), 'inverse_q' or 'inverse_cond'"),
    "algorithm.p_seed": ("trigger_seed", int, "seed for the 'interval' draw"),
    "run.seed": ("seed", int, "run seed (initial point and sampling streams)"),
    "run.max_iters": ("max_iters", int, "iteration cap"),
    "run.max_epochs": ("max_epochs", float, "epoch cap"),
    "run.stop_residual": ("stop_residual", float, "stop once the residual falls to this value"),
    "run.record_every": ("record_every", int, "write every k-th iteration to the trace"),
    "run.eval_every": ("eval_every", int, "accuracy evaluation period (0: first/last only)"),
    "output.trace": (None, str, "trace CSV path (run)"),
    "output.dir": ("out_dir", _opt_str, "directory for traces and summaries (compare)"),
    "output.cache_dir": ("cache_dir", _opt_str, "reference-solution cache directory"),
    "output.report": (None, str, "certificate report CSV path (theory)"),
    "output.reference": (None, str, "reference solution CSV path (solve-ref)"),
    "theory.alpha_grid": (None, _num_list, "step-sizes to certify; default is multiples of the "
                          "theorem bound"),
    "theory.epsilon": (None, float, "accuracy for the iteration-count estimate"),
}


def config_keys_help() -> str:
    width = max(len(k) for k in CONFIG_KEYS)
    return "\n".join(f"  {k:<{width}}  {d}" for k, (_, _, d) in CONFIG_KEYS.items())


class RunConfigFile:
    """Parsed config: a :class:`CaseStudyConfig` plus the output/theory extras."""

    def __init__(self, study: CaseStudyConfig, extras: dict, raw: dict, text: str):
        self.study, self.extras, self.raw, self.text = study, extras, raw, text

    @property
    def digest(self) -> str:
        canon = "\n".join(f"{k}={self.raw[k]}" for k in sorted(self.raw))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def get(self, key, default=None):
        return self.extras.get(key, default)


def parse_config(text: str, source="<config>") -> RunConfigFile:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value'")
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    fields, extras = {}, {}
    for key, value in raw.items():
        target, conv, _ = CONFIG_KEYS[key]
        try:
            parsed = conv(value)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{source}: bad value for {key}: {value!r} ({exc})") from None
        if target is None:
            extras[key] = parsed
        else:
            fields[target] = parsed
    study = replace(CaseStudyConfig(), **fields)
    if isinstance(study.alpha, float) and study.alpha < 0:
        raise ConfigError(f"{source}: algorithm.alpha must be nonnegative")
    return RunConfigFile(study, extras, raw, text)


def load_config(path) -> RunConfigFile:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), source=str(path))
