"""
Directed communication networks and their column-stochastic weights.

A network is stored as a dense ``m x m`` weight matrix ``A`` with
``A[i, j] > 0`` iff agent ``j`` sends to agent ``i`` (edge ``j -> i``).
Every agent keeps a self-loop, and each column of ``A`` sums to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

GRAPH_KINDS = (
    "ring",
    "mesh",
    "directed_exponential",
    "symmetric_exponential",
    "full",
    "random_strongly_connected",
    "out_regular",
)


class NetworkError(ValueError):
    """Raised when a graph violates the network assumptions."""


# ---------------------------------------------------------------------------
# connectivity / weights
# ---------------------------------------------------------------------------

def _reachable(adj, start):
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        u = stack.pop()
        for v in np.flatnonzero(adj[u]):
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return seen


def check_strong_connectivity(adjacency) -> bool:
    """Return True if the digraph is strongly connected.

    ``adjacency[i, j]`` nonzero means an edge ``i -> j``. Strong
    connectivity holds iff node 0 reaches every node both in the graph and
    in its transpose.
    """
    adj = np.asarray(adjacency) != 0
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise NetworkError("adjacency must be square")
    if adj.shape[0] == 0:
        return False
    return bool(_reachable(adj, 0).all() and _reachable(adj.T, 0).all())


def build_column_stochastic_weights(adjacency) -> np.ndarray:
    """Uniform out-degree weights for a strongly connected digraph.

    Parameters
    ----------
    adjacency : (m, m) array_like
        ``adjacency[i, j]`` nonzero means agent ``i`` sends to agent ``j``.
        The diagonal must be nonzero.

    Returns
    -------
    weights : (m, m) ndarray
        ``weights[j, i] = 1 / |N_i^out|`` for every out-neighbour ``j`` of
        ``i``; columns sum to one.
    """
    adj = np.asarray(adjacency) != 0
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise NetworkError("adjacency must be square")
    m = adj.shape[0]
    if m < 2:
        raise NetworkError(f"need at least 2 agents, got m={m}")
    if not adj.diagonal().all():
        raise NetworkError("every agent needs a self-loop")
    if not check_strong_connectivity(adj):
        raise NetworkError("graph is not strongly connected")
    out_deg = adj.sum(axis=1)
    return (adj / out_deg[:, None]).T.astype(float)


# ---------------------------------------------------------------------------
# spectral quantities
# ---------------------------------------------------------------------------

def perron_vector(weights, tol=1e-12, max_iter=None) -> np.ndarray:
    """Right Perron vector of a primitive column-stochastic matrix.

    Power iteration from the uniform vector, renormalised by the entry sum
    each step, stopped once successive iterates differ by less than ``tol``
    in the max-norm.
    """
    A = np.asarray(weights, dtype=float)
    m = A.shape[0]
    if not check_strong_connectivity(A.T):
        raise NetworkError("weights have a zero Perron entry; graph is not strongly connected")
    if max_iter is None:
        max_iter = int(10 * m * math.log(max(m, 2)) + 1000)
    pi = np.full(m, 1.0 / m)
    for _ in range(max_iter):
        nxt = A @ pi
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < tol:
            pi = nxt
            break
        pi = nxt
    else:
        raise NetworkError(
            f"power iteration did not converge in {max_iter} steps; "
            "weights are probably not primitive")
    if np.any(pi <= 0):
        raise NetworkError("Perron vector has a zero entry; graph is not strongly connected")
    return pi


def pi_norm(obj, pi) -> float:
    """pi-weighted norm of a stacked vector or an ``m x m`` matrix.

    Vectors of length ``m * n`` are treated as ``m`` blocks of size ``n``;
    block ``i`` is scaled by ``1 / sqrt(pi_i)`` before taking the 2-norm.
    A matrix ``B`` is conjugated as ``diag(sqrt(pi))^-1 B diag(sqrt(pi))``
    and its spectral norm returned.
    """
    pi = np.asarray(pi, dtype=float)
    if np.any(pi <= 0):
        raise NetworkError("pi must be strictly positive")
    m = pi.size
    obj = np.asarray(obj, dtype=float)
    s = np.sqrt(pi)
    if obj.ndim == 2 and obj.shape == (m, m):
        return float(np.linalg.norm(obj / s[:, None] * s[None, :], 2))
    flat = obj.ravel()
    if flat.size % m:
        raise NetworkError(f"vector of length {flat.size} is not a multiple of m={m}")
    blocks = flat.reshape(m, -1)
    return float(np.linalg.norm(blocks / s[:, None]))


def sigma_a(weights, pi) -> float:
    """Contraction factor ``||A - pi 1^T||_pi``."""
    A = np.asarray(weights, dtype=float)
    val = pi_norm(A - np.outer(pi, np.ones(A.shape[0])), pi)
    if val >= 1.0:
        raise NetworkError(f"sigma_A = {val:.6g} >= 1; weights violate the mixing assumption")
    return val


@dataclass(frozen=True)
class SpectralBundle:
    pi: np.ndarray
    a_infinity: np.ndarray
    sigma_a: float

    @property
    def pi_max(self) -> float:
        return float(self.pi.max())

    @property
    def pi_min(self) -> float:
        return float(self.pi.min())

    @property
    def theta_ratio(self) -> float:
        return self.pi_max / self.pi_min

    @property
    def t_const(self) -> float:
        """Decay constant ``sqrt(theta) * ||1 - m pi||_2`` of the push-sum weights."""
        m = self.pi.size
        return math.sqrt(self.theta_ratio) * float(np.linalg.norm(1.0 - m * self.pi))


# ---------------------------------------------------------------------------
# network container
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DirectedNetwork:
    """Strongly connected digraph with column-stochastic mixing weights."""

    weights: np.ndarray
    name: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        A = np.array(self.weights, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise NetworkError("weights must be a square matrix")
        if A.shape[0] < 2:
            raise NetworkError(f"need at least 2 agents, got m={A.shape[0]}")
        if np.any(A < 0):
            raise NetworkError("weights must be nonnegative")
        if not np.allclose(A.sum(axis=0), 1.0, rtol=0, atol=1e-12):
            raise NetworkError("weights are not column-stochastic")
        if np.any(A.diagonal() <= 0):
            raise NetworkError("every agent needs a self-loop")
        if not check_strong_connectivity(A.T):
            raise NetworkError("graph is not strongly connected")
        A.setflags(write=False)
        object.__setattr__(self, "weights", A)

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    @cached_property
    def out_neighbors(self) -> list[list[int]]:
        return [np.flatnonzero(self.weights[:, i]).tolist() for i in range(self.m)]

    @cached_property
    def in_neighbors(self) -> list[list[int]]:
        return [np.flatnonzero(self.weights[i]).tolist() for i in range(self.m)]

    @cached_property
    def spectral(self) -> SpectralBundle:
        pi = perron_vector(self.weights)
        return SpectralBundle(pi=pi, a_infinity=np.outer(pi, np.ones(self.m)),
                              sigma_a=sigma_a(self.weights, pi))

    @property
    def n_edges(self) -> int:
        """Directed edges excluding self-loops."""
        return int(np.count_nonzero(self.weights)) - self.m

    @classmethod
    def from_adjacency(cls, adjacency, name="custom", **meta):
        return cls(build_column_stochastic_weights(adjacency), name=name, meta=meta)

    def describe(self) -> str:
        extra = ",".join(f"{k}={v}" for k, v in sorted(self.meta.items()))
        return f"{self.name}(m={self.m}{',' + extra if extra else ''})"


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _add_self_loops(adj):
    np.fill_diagonal(adj, True)
    return adj


def _mesh_shape(m):
    r = int(math.isqrt(m))
    while m % r:
        r -= 1
    return r, m // r


def _random_adjacency(m, ratio, rng, undirected):
    adj = rng.random((m, m)) < ratio
    if undirected:
        adj = np.triu(adj, 1)
        adj = adj | adj.T
    return _add_self_loops(adj)


def _out_regular_adjacency(m, degree, rng):
    adj = np.zeros((m, m), dtype=bool)
    for i in range(m):
        others = np.delete(np.arange(m), i)
        adj[i, rng.choice(others, size=degree, replace=False)] = True
    return _add_self_loops(adj)


def generate_graph(kind, m, connectivity_ratio=0.2, seed=0, out_degree=6,
                   undirected=False, max_retries=100) -> DirectedNetwork:
    """Build one of the standard test topologies.

    Parameters
    ----------
    kind : str
        One of ``GRAPH_KINDS``. ``ring`` is the directed cycle
        ``i -> i+1``; ``mesh`` is an undirected near-square grid;
        ``directed_exponential`` links ``i -> i + 2^t``;
        ``symmetric_exponential`` adds the reverse links;
        ``random_strongly_connected`` samples each edge with probability
        ``connectivity_ratio`` (symmetric pairs if ``undirected``);
        ``out_regular`` gives every agent ``out_degree`` random
        out-neighbours.
    m : int
        Number of agents, at least 2.
    seed : int
        Seed for the random kinds.
    """
    if kind not in GRAPH_KINDS:
        raise NetworkError(f"unknown graph kind {kind!r}; choose from {', '.join(GRAPH_KINDS)}")
    m = int(m)
    if m < 2:
        raise NetworkError(f"need at least 2 agents, got m={m}")
    adj = np.zeros((m, m), dtype=bool)
    idx = np.arange(m)
    meta = {}

    if kind == "ring":
        adj[idx, (idx + 1) % m] = True
    elif kind == "mesh":
        r, c = _mesh_shape(m)
        meta["grid"] = f"{r}x{c}"
        for i in range(m):
            a, b = divmod(i, c)
            if b + 1 < c:
                adj[i, i + 1] = adj[i + 1, i] = True
            if a + 1 < r:
                adj[i, i + c] = adj[i + c, i] = True
    elif kind in ("directed_exponential", "symmetric_exponential"):
        for t in range(int(math.floor(math.log2(m - 1))) + 1):
            adj[idx, (idx + 2 ** t) % m] = True
        if kind == "symmetric_exponential":
            adj |= adj.T
    elif kind == "full":
        adj[:] = True
    else:
        rng = np.random.default_rng(seed)
        meta["seed"] = seed
        if kind == "random_strongly_connected":
            if not 0 < connectivity_ratio <= 1:
                raise NetworkError("connectivity_ratio must lie in (0, 1]")
            meta["ratio"] = connectivity_ratio
            make = lambda: _random_adjacency(m, connectivity_ratio, rng, undirected)
        else:
            if not 1 <= out_degree < m:
                raise NetworkError(f"out_degree must lie in [1, {m - 1}]")
            meta["out_degree"] = out_degree
            make = lambda: _out_regular_adjacency(m, out_degree, rng)
        for _ in range(max_retries):
            adj = make()
            if check_strong_connectivity(adj):
                break
        else:
            raise NetworkError(f"no strongly connected {kind} graph after {max_retries} tries")

    _add_self_loops(adj)
    return DirectedNetwork.from_adjacency(adj, name=kind, **meta)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def write_edge_list(network: DirectedNetwork, path) -> None:
    """Write ``m`` on the first line, then ``i j`` for each edge ``j -> i``."""
    A = network.weights
    with open(path, "w") as fh:
        fh.write(f"{network.m}\n")
        for i, j in zip(*np.nonzero(A)):
            fh.write(f"{i} {j}\n")


def read_edge_list(path, name=None) -> DirectedNetwork:
    """Inverse of :func:`write_edge_list`; missing self-loops are added."""
    with open(path) as fh:
        lines = [ln.split("#", 1)[0].strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise NetworkError(f"{path}: empty edge list")
    m = int(lines[0])
    adj = np.zeros((m, m), dtype=bool)
    for ln in lines[1:]:
        i, j = (int(t) for t in ln.split())
        if not (0 <= i < m and 0 <= j < m):
            raise NetworkError(f"{path}: edge {j}->{i} out of range for m={m}")
        adj[j, i] = True
    _add_self_loops(adj)
    return DirectedNetwork.from_adjacency(adj, name=name or str(path))


def write_weights_csv(network: DirectedNetwork, path) -> None:
    np.savetxt(path, network.weights, delimiter=",", fmt="%.17g")


def read_weights_csv(path, name=None) -> DirectedNetwork:
    return DirectedNetwork(np.loadtxt(path, delimiter=",", ndmin=2), name=name or str(path))
