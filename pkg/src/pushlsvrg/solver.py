"""
Round-synchronous push-sum solvers over a column-stochastic network.

All four methods share the same skeleton per round ``k``::

    x_{k+1} = A x_k - alpha v_k
    y_{k+1} = A y_k
    z_{k+1} = x_{k+1} / y_{k+1}
    v_{k+1} = A v_k + g_{k+1} - g_k

and differ only in how the local gradient ``g_{k+1}`` is formed from the
round-``k`` estimate ``z_k``:

``push_lsvrg_up``
    loopless SVRG with a cached anchor that agent ``i`` refreshes with
    probability ``p_i``;
``s_addopt``
    one sampled component gradient;
``addopt``
    the exact local batch gradient;
``push_saga``
    the SAGA estimator with a per-agent table of component gradients.

Agents are simulated jointly: the per-agent vectors are rows of ``m x n``
arrays and mixing is ``A @ X``, which never forms ``A kron I_n``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .netgraph import DirectedNetwork
from .objective import FiniteSumObjective
from .trace import Trace, TraceRecord, consensus_error, residual

log = logging.getLogger(__name__)

ALGORITHMS = ("push_lsvrg_up", "s_addopt", "addopt", "push_saga")

# purpose tags for the per-agent random streams
_SAMPLE, _TRIGGER, _INIT = 0, 1, 2


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------

class AgentStreams:
    """One independent uniform stream per (run seed, agent, purpose).

    Draw ``k`` of agent ``i`` always comes from position ``k`` of that
    agent's own stream, so results do not depend on how agents are
    scheduled. Draws are buffered in blocks for speed.
    """

    def __init__(self, seed, m, purpose, block=1024):
        self.seed, self.m, self.purpose, self.block = int(seed), int(m), int(purpose), block
        self._gens = [np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(self.seed, spawn_key=(i, self.purpose)))) for i in range(m)]
        self._buf = np.empty((m, 0))
        self._pos = 0

    def next(self) -> np.ndarray:
        """The next uniform in [0, 1) for every agent."""
        if self._pos >= self._buf.shape[1]:
            self._buf = np.stack([g.random(self.block) for g in self._gens])
            self._pos = 0
        u = self._buf[:, self._pos]
        self._pos += 1
        return u

    def get_state(self):
        return {"seed": self.seed, "m": self.m, "purpose": self.purpose, "block": self.block,
                "gens": [g.bit_generator.state for g in self._gens],
                "buf": self._buf.tolist(), "pos": self._pos}

    @classmethod
    def from_state(cls, st):
        obj = cls(st["seed"], st["m"], st["purpose"], st["block"])
        for g, s in zip(obj._gens, st["gens"]):
            g.bit_generator.state = s
        obj._buf = np.array(st["buf"], dtype=float).reshape(st["m"], -1)
        obj._pos = st["pos"]
        return obj


def draw_samples(u, q):
    """Map uniforms to indices uniform on ``{0, ..., q_i - 1}``."""
    return np.minimum((u * q).astype(int), q - 1)


# ---------------------------------------------------------------------------
# configuration and state
# ---------------------------------------------------------------------------

@dataclass
class AlgoConfig:
    algorithm: str = "push_lsvrg_up"
    alpha: float = 0.01
    trigger_probs: object = 1.0
    batch_size: int = 1
    seed: int = 0
    max_iters: int = 1000
    stop_residual: float = 0.0
    max_epochs: float = float("inf")
    init_scale: float = 1.0
    record_every: int = 1
    eval_every: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise SolverError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if not self.alpha >= 0:
            raise SolverError(f"step-size must be nonnegative, got {self.alpha}")
        if self.batch_size != 1:
            raise SolverError("only batch_size=1 is supported")
        p = np.atleast_1d(np.asarray(self.trigger_probs, dtype=float))
        if np.any(p <= 0) or np.any(p > 1):
            raise SolverError("trigger probabilities must lie in (0, 1]")

    def probs(self, m) -> np.ndarray:
        p = np.atleast_1d(np.asarray(self.trigger_probs, dtype=float))
        if p.size == 1:
            p = np.full(m, p[0])
        if p.size != m:
            raise SolverError(f"{p.size} trigger probabilities for {m} agents")
        return p

    def digest(self) -> str:
        d = asdict(self)
        d["trigger_probs"] = np.atleast_1d(np.asarray(self.trigger_probs, dtype=float)).tolist()
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def interval_trigger_probs(m, cond_q, seed=0) -> np.ndarray:
    """Uncoordinated probabilities drawn uniformly from ``[1/Q, m/Q]``, clamped to (0, 1]."""
    lo, hi = 1.0 / cond_q, m / cond_q
    p = np.random.default_rng(seed).uniform(lo, hi, size=m)
    return np.minimum(p, 1.0)


@dataclass
class SystemState:
    """Stacked per-agent variables; row ``i`` belongs to agent ``i``."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    v: np.ndarray
    w: np.ndarray
    anchor_grad: np.ndarray
    g: np.ndarray
    k: int = 0
    evals: np.ndarray = None
    table: np.ndarray | None = None
    table_mean: np.ndarray | None = None
    table_rows: np.ndarray | None = None
    fired: np.ndarray | None = None

    def copy(self) -> "SystemState":
        return replace(self, **{f: (None if getattr(self, f) is None else getattr(self, f).copy())
                                for f in ("x", "y", "z", "v", "w", "anchor_grad", "g", "evals",
                                          "table", "table_mean", "table_rows", "fired")})

    def gradient_memory(self) -> np.ndarray:
        """Reals each agent stores for its gradient estimator.

        The SAGA table costs ``q_i * n`` per agent; the loopless SVRG
        estimator needs the anchor point and its batch gradient, ``2 n``.
        """
        m, n = self.z.shape
        if self.table is not None:
            return self.table_rows * n
        return np.full(m, 2 * n)


def init_state(obj: FiniteSumObjective, algorithm="push_lsvrg_up", seed=0, x0=None,
               init_scale=1.0) -> SystemState:
    """``z_0 = x_0`` (seeded standard normal unless given), ``w_0 = z_0``,
    ``v_0 = g_0 = grad f_i(z_0)``, ``y_0 = 1``."""
    m, n = obj.m, obj.n
    if x0 is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(_INIT,))))
        x0 = init_scale * rng.standard_normal((m, n))
    x0 = np.array(np.broadcast_to(x0, (m, n)), dtype=float)
    g0 = obj.batch_gradients(x0)
    st = SystemState(x=x0.copy(), y=np.ones(m), z=x0.copy(), v=g0.copy(), w=x0.copy(),
                     anchor_grad=g0.copy(), g=g0.copy(), k=0, evals=obj.q.copy())
    if algorithm == "push_saga":
        rows = np.arange(obj.n_components)
        owner = np.repeat(np.arange(m), obj.q)
        st.table = obj._grads(rows, x0[owner])
        st.table_mean = g0.copy()
        st.table_rows = obj.q.copy()
    return st


# ---------------------------------------------------------------------------
# iterations
# ---------------------------------------------------------------------------

def _mix(state, A, alpha, g_new):
    x = A @ state.x - alpha * state.v
    y = A @ state.y
    if np.any(y < 1e-300):
        raise SolverError(f"push-sum weight underflow at iteration {state.k}: min y = {y.min()}")
    z = x / y[:, None]
    v = A @ state.v + g_new - state.g
    return x, y, z, v


def lsvrg_gradient_estimate(obj, samples, z, w, anchor_grad):
    """Loopless SVRG estimate ``grad f_{i,s}(z) - grad f_{i,s}(w) + grad f_i(w)`` for all agents.

    Evaluated as ``grad f_{i,s}(z) + (anchor - grad f_{i,s}(w))`` so the
    correction vanishes exactly when ``q_i = 1``.
    """
    return obj.component_grads(samples, z) + (anchor_grad - obj.component_grads(samples, w))


def trigger_update(z, w, anchor_grad, probs, u, obj):
    """Refresh anchors where ``u < p_i``; returns ``(w, anchor, fired, evals)``."""
    fired = u < probs
    w = np.where(fired[:, None], z, w)
    anchor_grad = anchor_grad.copy()
    idx = np.flatnonzero(fired)
    if idx.size:
        anchor_grad[idx] = obj.batch_gradients(z, agents=idx)
    return w, anchor_grad, fired, np.where(fired, obj.q, 0)


def push_lsvrg_up_iteration(state, network, obj, alpha, trigger_probs, sample_stream,
                            trigger_stream) -> SystemState:
    A = network.weights
    s = draw_samples(sample_stream.next(), obj.q)
    g_new = lsvrg_gradient_estimate(obj, s, state.z, state.w, state.anchor_grad)
    w, anchor, fired, extra = trigger_update(state.z, state.w, state.anchor_grad,
                                             trigger_probs, trigger_stream.next(), obj)
    x, y, z, v = _mix(state, A, alpha, g_new)
    return replace(state, x=x, y=y, z=z, v=v, w=w, anchor_grad=anchor, g=g_new, k=state.k + 1,
                   evals=state.evals + 2 + extra, fired=fired)


def s_addopt_iteration(state, network, obj, alpha, sample_stream) -> SystemState:
    s = draw_samples(sample_stream.next(), obj.q)
    g_new = obj.component_grads(s, state.z)
    x, y, z, v = _mix(state, network.weights, alpha, g_new)
    return replace(state, x=x, y=y, z=z, v=v, g=g_new, k=state.k + 1, evals=state.evals + 1)


def addopt_iteration(state, network, obj, alpha) -> SystemState:
    g_new = obj.batch_gradients(state.z)
    x, y, z, v = _mix(state, network.weights, alpha, g_new)
    return replace(state, x=x, y=y, z=z, v=v, g=g_new, k=state.k + 1, evals=state.evals + obj.q)


def saga_gradient_estimate(obj, samples, z, table, table_mean):
    """``grad f_{i,s}(z) - table_i[s] + mean(table_i)``; returns the estimate and the fresh gradients."""
    rows = obj.offsets + samples
    fresh = obj.component_grads(samples, z)
    return fresh - table[rows] + table_mean, fresh


def push_saga_iteration(state, network, obj, alpha, sample_stream) -> SystemState:
    s = draw_samples(sample_stream.next(), obj.q)
    rows = obj.offsets + s
    g_new, fresh = saga_gradient_estimate(obj, s, state.z, state.table, state.table_mean)
    table = state.table.copy()
    table_mean = state.table_mean + (fresh - table[rows]) / obj.q[:, None]
    table[rows] = fresh
    x, y, z, v = _mix(state, network.weights, alpha, g_new)
    return replace(state, x=x, y=y, z=z, v=v, g=g_new, k=state.k + 1, evals=state.evals + 1,
                   table=table, table_mean=table_mean)


class Stepper:
    """Binds an algorithm to its network, objective and random streams."""

    def __init__(self, config: AlgoConfig, network: DirectedNetwork, obj: FiniteSumObjective):
        if network.m != obj.m:
            raise SolverError(f"network has {network.m} agents, objective has {obj.m}")
        self.config, self.network, self.obj = config, network, obj
        self.probs = config.probs(obj.m)
        self.samples = AgentStreams(config.seed, obj.m, _SAMPLE)
        self.triggers = AgentStreams(config.seed, obj.m, _TRIGGER)

    def init(self, x0=None) -> SystemState:
        return init_state(self.obj, self.config.algorithm, self.config.seed, x0,
                          self.config.init_scale)

    def step(self, state: SystemState) -> SystemState:
        c, net, obj = self.config, self.network, self.obj
        if c.algorithm == "push_lsvrg_up":
            return push_lsvrg_up_iteration(state, net, obj, c.alpha, self.probs,
                                           self.samples, self.triggers)
        if c.algorithm == "s_addopt":
            return s_addopt_iteration(state, net, obj, c.alpha, self.samples)
        if c.algorithm == "addopt":
            return addopt_iteration(state, net, obj, c.alpha)
        return push_saga_iteration(state, net, obj, c.alpha, self.samples)

    def get_state(self):
        return {"samples": self.samples.get_state(), "triggers": self.triggers.get_state()}

    def set_state(self, st):
        self.samples = AgentStreams.from_state(st["samples"])
        self.triggers = AgentStreams.from_state(st["triggers"])


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------

@dataclass
class Classification:
    """Train/test sets whose accuracy is logged at the network-average model."""

    train: object
    test: object = None


def run(config: AlgoConfig, network: DirectedNetwork, obj: FiniteSumObjective, z_star,
        metrics_sink=None, classification: Classification | None = None, x0=None,
        meta=None, return_state=False):
    """Iterate until ``max_iters``, ``max_epochs`` or ``residual <= stop_residual``.

    Parameters
    ----------
    z_star : ndarray
        Reference minimiser used for the residual column.
    metrics_sink : callable, optional
        Called with every :class:`TraceRecord` as it is produced.
    classification : Classification, optional
        When given, train/test accuracy of the average model is recorded
        every ``config.eval_every`` iterations (and at the last one).

    Returns
    -------
    Trace, or ``(Trace, SystemState)`` if ``return_state``.
    """
    if z_star is None:
        raise SolverError("a reference solution is required to compute the residual")
    from .objective import predict_accuracy

    z_star = np.asarray(z_star, dtype=float)
    stepper = Stepper(config, network, obj)
    state = stepper.init(x0)
    total_q = float(obj.q.sum())
    trace = Trace(meta={"algorithm": config.algorithm, "alpha": repr(float(config.alpha)),
                        "seed": config.seed, "config_hash": config.digest(),
                        "network": network.describe(), "objective": obj.describe(),
                        **(meta or {})})
    t0 = time.perf_counter()

    def record(st, force_eval=False):
        tr = te = float("nan")
        if classification is not None and (force_eval or (
                config.eval_every and st.k % config.eval_every == 0)):
            zbar = st.z.mean(axis=0)
            tr = predict_accuracy(obj, zbar, classification.train)
            if classification.test is not None:
                te = predict_accuracy(obj, zbar, classification.test)
        rec = TraceRecord(st.k, float(st.evals.sum()) / total_q, int(st.evals.sum()),
                          residual(st.z, z_star), consensus_error(st.z), tr, te,
                          (time.perf_counter() - t0) * 1e3)
        trace.append(rec)
        if metrics_sink is not None:
            metrics_sink(rec)
        return rec

    rec = record(state, force_eval=True)
    while True:
        done = (state.k >= config.max_iters or rec.residual <= config.stop_residual
                or rec.epoch >= config.max_epochs)
        if done:
            break
        state = stepper.step(state)
        res = residual(state.z, z_star)
        last = (state.k >= config.max_iters or res <= config.stop_residual
                or state.evals.sum() / total_q >= config.max_epochs)
        if last or state.k % config.record_every == 0:
            rec = record(state, force_eval=last)
        else:
            rec = replace(rec, residual=res, epoch=float(state.evals.sum()) / total_q)
    if not np.all(np.isfinite(state.z)):
        log.warning("non-finite iterates; step-size %g is likely too large", config.alpha)
    return (trace, state) if return_state else trace


# ---------------------------------------------------------------------------
# checkpointing
# ---------------------------------------------------------------------------

_STATE_ARRAYS = ("x", "y", "z", "v", "w", "anchor_grad", "g", "evals", "table", "table_mean",
                 "table_rows")


def save_checkpoint(path, state: SystemState, stepper: Stepper | None = None):
    """Write ``state`` to an ``.npz`` archive.

    Layout: one array per field in ``_STATE_ARRAYS`` (absent ones skipped),
    scalar ``k``, and ``streams`` holding the JSON-encoded random-stream
    positions so a restored run continues bit-identically.
    """
    arrays = {k: getattr(state, k) for k in _STATE_ARRAYS if getattr(state, k) is not None}
    streams = json.dumps(stepper.get_state()) if stepper is not None else "{}"
    np.savez(path, k=np.array(state.k), streams=np.array(streams), **arrays)


def load_checkpoint(path, stepper: Stepper | None = None) -> SystemState:
    with np.load(path, allow_pickle=False) as f:
        kw = {k: f[k].copy() for k in _STATE_ARRAYS if k in f.files}
        st = SystemState(k=int(f["k"]), **kw)
        streams = json.loads(str(f["streams"]))
    if stepper is not None and streams:
        stepper.set_state(streams)
    return st
