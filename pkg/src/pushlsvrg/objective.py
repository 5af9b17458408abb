"""
Finite-sum objectives with per-component gradient access.

Agent ``i`` owns ``q_i`` components ``f_{i,j}``; its local objective is the
average of those, and the global objective averages the ``m`` local ones.
All component data is stored row-wise in one array, agent ``i`` owning
rows ``offsets[i] : offsets[i] + q[i]``, so the solver can evaluate one
sampled component per agent in a single vectorised call.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .data import Dataset


class ObjectiveError(ValueError):
    pass


class FiniteSumObjective:
    """Base class. Subclasses implement ``_values`` and ``_grads``.

    ``_grads(rows, Z)`` returns the gradients of the components ``rows`` at
    the points ``Z`` (one point per row, or a single point broadcast over
    all rows). Every gradient the package computes goes through it, which
    keeps batch and single-component results bit-consistent.
    """

    kind = "abstract"

    def __init__(self, q, n, mu, lipschitz):
        self.q = np.asarray(q, dtype=int)
        if self.q.ndim != 1 or self.q.size < 1 or np.any(self.q < 1):
            raise ObjectiveError("every agent needs at least one sample")
        self.offsets = np.concatenate([[0], np.cumsum(self.q)[:-1]])
        self.n = int(n)
        self.mu = float(mu)
        self.lipschitz = float(lipschitz)
        if not 0 < self.mu <= self.lipschitz:
            raise ObjectiveError(f"need 0 < mu <= L, got mu={self.mu}, L={self.lipschitz}")

    @property
    def m(self) -> int:
        return self.q.size

    @property
    def n_components(self) -> int:
        return int(self.q.sum())

    @property
    def condition_number(self) -> float:
        return self.lipschitz / self.mu

    def agent_rows(self, i):
        return np.arange(self.offsets[i], self.offsets[i] + self.q[i])

    def _check(self, i, j):
        if not 0 <= i < self.m:
            raise ObjectiveError(f"agent {i} out of range")
        if not 0 <= j < self.q[i]:
            raise ObjectiveError(f"sample {j} out of range for agent {i} (q={self.q[i]})")

    # -- component access ---------------------------------------------------
    def component_eval(self, i, j, z) -> float:
        self._check(i, j)
        return float(self._values(np.array([self.offsets[i] + j]), np.atleast_2d(z))[0])

    def component_grad(self, i, j, z) -> np.ndarray:
        self._check(i, j)
        return self._grads(np.array([self.offsets[i] + j]), np.atleast_2d(z))[0]

    def component_grads(self, samples, Z) -> np.ndarray:
        """Gradient of ``f_{i, samples[i]}`` at ``Z[i]`` for every agent ``i``."""
        return self._grads(self.offsets + np.asarray(samples), Z)

    # -- local / global -----------------------------------------------------
    def local_value(self, i, z) -> float:
        return float(self._values(self.agent_rows(i), np.atleast_2d(z)).sum() / self.q[i])

    def batch_gradient(self, i, z) -> np.ndarray:
        return self._grads(self.agent_rows(i), np.atleast_2d(z)).sum(axis=0) / self.q[i]

    def batch_gradients(self, Z, agents=None) -> np.ndarray:
        """Stacked local batch gradients ``grad f_i(Z[i])`` (rows for ``agents`` only)."""
        agents = range(self.m) if agents is None else agents
        return np.array([self.batch_gradient(i, Z[i]) for i in agents]).reshape(-1, self.n)

    def global_value(self, z) -> float:
        return float(np.mean([self.local_value(i, z) for i in range(self.m)]))

    def global_gradient(self, z) -> np.ndarray:
        return self.batch_gradients(np.broadcast_to(z, (self.m, self.n))).mean(axis=0)

    def _values(self, rows, Z):
        raise NotImplementedError

    def _grads(self, rows, Z):
        raise NotImplementedError

    def describe(self) -> str:
        return f"{self.kind}(m={self.m},n={self.n},N={self.n_components})"


class _LinearModelObjective(FiniteSumObjective):
    """Components that depend on ``z`` through the margin ``b c^T z``."""

    def __init__(self, dataset: Dataset, augment: bool):
        if dataset.partition is None:
            raise ObjectiveError("dataset must be partitioned among agents first")
        order = np.concatenate(dataset.partition)
        C = dataset.features[order]
        if augment:
            C = np.hstack([C, np.ones((C.shape[0], 1))])
        self.features = C
        self.labels = dataset.labels[order]
        self._bc = self.labels[:, None] * C
        self._sqnorm_max = float(np.max(np.einsum("ij,ij->i", C, C)))
        self.augment = augment
        self._q = [len(p) for p in dataset.partition]

    def _margins(self, rows, Z):
        return (self._bc[rows] * Z).sum(axis=1)

    def predict(self, z, features):
        features = np.atleast_2d(features)
        if self.augment:
            features = np.hstack([features, np.ones((features.shape[0], 1))])
        return np.where(features @ z >= 0, 1.0, -1.0)


class LogisticObjective(_LinearModelObjective):
    """``f_ij(z) = beta/2 ||z||^2 + log(1 + exp(-b_ij c_ij^T z))``."""

    kind = "logistic"

    def __init__(self, dataset: Dataset, beta: float):
        if not beta > 0:
            raise ObjectiveError(f"beta must be positive, got {beta}")
        super().__init__(dataset, augment=False)
        self.beta = float(beta)
        FiniteSumObjective.__init__(self, self._q, dataset.n_features, self.beta,
                                    self.beta + self._sqnorm_max / 4.0)

    def _values(self, rows, Z):
        u = self._margins(rows, Z)
        return 0.5 * self.beta * (Z * Z).sum(axis=1) + np.logaddexp(0.0, -u)

    def _grads(self, rows, Z):
        u = self._margins(rows, Z)
        return self.beta * Z - self._bc[rows] * expit(-u)[:, None]


def smoothed_hinge(u):
    u = np.asarray(u, dtype=float)
    return np.where(u < 0, -0.5 - u, np.where(u < 1, 0.5 * (1 - u) ** 2, 0.0))


def smoothed_hinge_deriv(u):
    u = np.asarray(u, dtype=float)
    return np.where(u < 0, -1.0, np.where(u < 1, u - 1.0, 0.0))


class SmoothedHingeSVMObjective(_LinearModelObjective):
    """``f_ij(z) = 1/2 ||z||^2 + lam * h(b_ij [c_ij; 1]^T z)`` over ``z = [w; v]``."""

    kind = "svm"

    def __init__(self, dataset: Dataset, lam: float):
        if not lam > 0:
            raise ObjectiveError(f"lambda must be positive, got {lam}")
        super().__init__(dataset, augment=True)
        self.lam = float(lam)
        FiniteSumObjective.__init__(self, self._q, dataset.n_features + 1, 1.0,
                                    1.0 + self.lam * self._sqnorm_max)

    def _values(self, rows, Z):
        u = self._margins(rows, Z)
        return 0.5 * (Z * Z).sum(axis=1) + self.lam * smoothed_hinge(u)

    def _grads(self, rows, Z):
        u = self._margins(rows, Z)
        return Z + self._bc[rows] * (self.lam * smoothed_hinge_deriv(u))[:, None]


class QuadraticObjective(FiniteSumObjective):
    """``f_ij(z) = 1/2 (z - t_ij)^T diag(d_ij) (z - t_ij)`` with a closed-form minimiser."""

    kind = "quadratic"

    def __init__(self, curvatures, targets, q):
        D = np.atleast_2d(np.asarray(curvatures, dtype=float))
        t = np.atleast_2d(np.asarray(targets, dtype=float))
        q = np.atleast_1d(np.asarray(q, dtype=int))
        if D.shape != t.shape or D.shape[0] != q.sum():
            raise ObjectiveError("curvatures, targets and q disagree in shape")
        if np.any(D <= 0):
            raise ObjectiveError("curvatures must be positive")
        self.curvatures, self.targets = D, t
        offsets = np.concatenate([[0], np.cumsum(q)[:-1]])
        local_curv = np.add.reduceat(D, offsets, axis=0) / q[:, None]
        super().__init__(q, D.shape[1], local_curv.min(), D.max())

    def _values(self, rows, Z):
        r = Z - self.targets[rows]
        return 0.5 * (self.curvatures[rows] * r * r).sum(axis=1)

    def _grads(self, rows, Z):
        return self.curvatures[rows] * (Z - self.targets[rows])

    def minimizer(self) -> np.ndarray:
        """Solve ``sum_i mean_j d_ij (z - t_ij) = 0`` coordinate-wise."""
        w = np.repeat(1.0 / self.q, self.q)[:, None]
        num = (w * self.curvatures * self.targets).sum(axis=0)
        den = (w * self.curvatures).sum(axis=0)
        return num / den


def make_logistic(dataset: Dataset, beta=5.0) -> LogisticObjective:
    return LogisticObjective(dataset, beta)


def make_svm_smoothed_hinge(dataset: Dataset, lam=0.01) -> SmoothedHingeSVMObjective:
    return SmoothedHingeSVMObjective(dataset, lam)


def make_synthetic_quadratic(m, n, q, seed=0, mu_target=1.0, L_target=10.0,
                             target_scale=1.0) -> QuadraticObjective:
    """Random diagonal quadratics with curvatures drawn in ``[mu_target, L_target]``.

    ``q`` is a per-agent count or a single count shared by all agents.
    Targets are standard normal times ``target_scale``; larger values make
    the components disagree more, i.e. raise the stochastic-gradient
    variance at the optimum.
    """
    if not 0 < mu_target <= L_target:
        raise ObjectiveError("need 0 < mu_target <= L_target")
    q = np.broadcast_to(np.asarray(q, dtype=int), (m,)).copy()
    rng = np.random.default_rng(seed)
    N = int(q.sum())
    D = rng.uniform(mu_target, L_target, size=(N, n))
    t = target_scale * rng.normal(size=(N, n))
    return QuadraticObjective(D, t, q)


def batch_gradient(obj: FiniteSumObjective, i, z):
    return obj.batch_gradient(i, z)


def global_gradient(obj: FiniteSumObjective, z):
    return obj.global_gradient(z)


def global_value(obj: FiniteSumObjective, z):
    return obj.global_value(z)


def predict_accuracy(obj: FiniteSumObjective, z, eval_dataset: Dataset) -> float:
    """Fraction of ``eval_dataset`` classified correctly by ``sign(c^T z)``.

    Ties (score exactly 0) are predicted as +1. For the SVM objective the
    last entry of ``z`` is the bias.
    """
    if not isinstance(obj, _LinearModelObjective):
        raise ObjectiveError(f"{obj.kind} objective has no classifier")
    pred = obj.predict(np.asarray(z, dtype=float), eval_dataset.features)
    return float(np.mean(pred == eval_dataset.labels))
