"""
Numerical side of the linear-convergence analysis.

The error vector (network agreement, optimality, gradient-learning and
tracking errors) obeys ``t_{k+1} <= H_alpha t_k + G_k tau_k`` with the
nonnegative 4x4 matrices built here. Linear convergence follows from
``rho(H_alpha) < 1``; a positive vector ``theta`` with
``H_alpha theta <= eta theta`` certifies ``rho(H_alpha) <= eta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .netgraph import DirectedNetwork


@dataclass(frozen=True)
class TheoryConstants:
    mu: float
    lipschitz: float
    m: int
    sigma_a: float
    pi_max: float
    pi_min: float
    t_const: float
    y_sup: float
    y_inv_sup: float
    p_max: float
    p_min: float

    @property
    def cond_q(self) -> float:
        return self.lipschitz / self.mu

    @property
    def theta_ratio(self) -> float:
        return self.pi_max / self.pi_min

    @property
    def delta(self) -> float:
        """Directivity constant ``Y (1 + T) vartheta Ytilde^2``."""
        return self.y_sup * (1 + self.t_const) * self.theta_ratio * self.y_inv_sup ** 2

    @property
    def d1(self) -> float:
        return (1 + self.t_const) * self.y_inv_sup ** 2

    @property
    def d2(self) -> float:
        return self.t_const * (1 + self.t_const) * self.y_inv_sup ** 2

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out.update(cond_q=self.cond_q, theta_ratio=self.theta_ratio, delta=self.delta,
                   d1=self.d1, d2=self.d2)
        return out


def estimate_y_bounds(network: DirectedNetwork, k_max=None):
    """Measure ``Y = sup_k max_i y_k^i`` and ``Ytilde = sup_k max_i 1/y_k^i``.

    Runs ``y_{k+1} = A y_k`` from ``y_0 = 1`` for ``k_max`` rounds (default:
    until ``sigma_A^k < 1e-12``) and folds in the limit ``m pi``.
    """
    A = network.weights
    sb = network.spectral
    if k_max is None:
        s = sb.sigma_a
        k_max = 1 if s <= 0 else min(100_000, int(math.ceil(math.log(1e-12) / math.log(s))))
    y = np.ones(network.m)
    hi, lo = 1.0, 1.0
    for _ in range(int(k_max)):
        y = A @ y
        hi, lo = max(hi, y.max()), min(lo, y.min())
    y_inf = network.m * sb.pi
    hi, lo = max(hi, y_inf.max()), min(lo, y_inf.min())
    return float(hi), float(1.0 / lo)


def compute_constants(network: DirectedNetwork, mu, lipschitz, trigger_probs,
                      k_max=None) -> TheoryConstants:
    sb = network.spectral
    p = np.broadcast_to(np.asarray(trigger_probs, dtype=float), (network.m,))
    Y, Yt = estimate_y_bounds(network, k_max)
    return TheoryConstants(mu=float(mu), lipschitz=float(lipschitz), m=network.m,
                           sigma_a=sb.sigma_a, pi_max=sb.pi_max, pi_min=sb.pi_min,
                           t_const=sb.t_const, y_sup=Y, y_inv_sup=Yt,
                           p_max=float(p.max()), p_min=float(p.min()))


def build_h_alpha(c: TheoryConstants, alpha) -> np.ndarray:
    s2 = c.sigma_a ** 2
    L2, mu, m = c.lipschitz ** 2, c.mu, c.m
    gap = 1 - s2
    return np.array([
        [(1 + s2) / 2, 0.0, 0.0, 2 * alpha ** 2 / gap],
        [2 * c.pi_max * c.delta * alpha * L2 / mu, 1 - mu * alpha / 2, 2 * alpha ** 2 / m, 0.0],
        [2 * c.p_max * c.pi_max * c.d1 * L2, 2 * m * c.p_max * L2, 1 - c.p_min, 0.0],
        [194 * c.delta * L2 / gap, 169 * L2 / (c.pi_min * gap), 110 / (3 * c.pi_min * gap),
         (3 + s2) / 4],
    ])


def build_g_k(c: TheoryConstants, alpha, k) -> np.ndarray:
    s2 = c.sigma_a ** 2
    L2 = c.lipschitz ** 2
    col = np.array([0.0,
                    2 * c.delta * alpha * L2 / c.mu,
                    2 * c.p_max * c.d2 * L2,
                    194 * L2 * c.delta ** 2 / (c.pi_min * (1 - s2))])
    G = np.zeros((4, 4))
    G[:, 0] = col * c.t_const * c.sigma_a ** k
    return G


def spectral_radius(matrix) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(matrix, dtype=float)))))


def theorem_step_bound(c: TheoryConstants) -> float:
    """``min{(1-s) p_min / (6 mu), (1-s)^2 p_min / (480 delta L Q p_max)}``."""
    gap = 1 - c.sigma_a
    return min(gap * c.p_min / (6 * c.mu),
               gap ** 2 * c.p_min / (480 * c.delta * c.lipschitz * c.cond_q * c.p_max))


def proposition_step_bound(c: TheoryConstants) -> float:
    """Step-size hypothesis under which the 4x4 error recursion is derived."""
    return ((1 - c.sigma_a ** 2) * math.sqrt(c.p_min)
            / (28 * c.lipschitz * c.cond_q * c.delta * math.sqrt(c.p_max)))


def theta_statement(c: TheoryConstants) -> np.ndarray:
    d, Q2, L2 = c.delta, c.cond_q ** 2, c.lipschitz ** 2
    r = c.p_max / c.p_min
    return np.array([1.0, 9 * c.pi_max * d * Q2, 60 * c.pi_max * d * L2 * Q2 * r,
                     20165 * r * c.theta_ratio * d * L2 * Q2 / (1 - c.sigma_a ** 2) ** 2])


def theta_proof(c: TheoryConstants) -> np.ndarray:
    d, Q2, L2 = c.delta, c.cond_q ** 2, c.lipschitz ** 2
    r = c.p_max / c.p_min
    return np.array([1.0, 9 * c.pi_max * d * Q2, 22 * c.m * c.pi_max * d * L2 * Q2 * r,
                     25300 * r * c.theta_ratio * d * L2 * Q2 / (1 - c.sigma_a ** 2) ** 2])


def theta_resolvent(H, eta) -> np.ndarray | None:
    """``theta = (eta I - H)^{-1} 1`` scaled to ``theta_1 = 1``.

    For nonnegative ``H`` this vector is positive and satisfies
    ``H theta = eta theta - 1 < eta theta`` exactly when ``rho(H) < eta``,
    so it certifies whenever any weight vector can, with a margin that
    survives rounding. Returns None if the solve fails or the result is
    not strictly positive.
    """
    try:
        th = np.linalg.solve(eta * np.eye(H.shape[0]) - H, np.ones(H.shape[0]))
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(th)) or np.any(th <= 0):
        return None
    return th / th[0]


def _dominated(H, theta, eta, rtol=1e-12):
    return bool(np.all(H @ theta <= eta * theta * (1 + rtol)))


@dataclass
class CertificateReport:
    alpha: float
    h_matrix: np.ndarray
    rho: float
    eta: float
    theta: np.ndarray
    elementwise_ok: bool
    admissible: bool
    checks: dict = field(default_factory=dict)
    step_bound: float = float("nan")
    proposition_bound: float = float("nan")

    @property
    def certified_by(self) -> list:
        return [k for k, ok in self.checks.items() if ok]

    @property
    def outside_hypothesis(self) -> bool:
        """Warning flag: ``alpha`` exceeds the range the 4x4 recursion was derived for.

        The matrix is still built and checked; the verdict just carries
        less weight.
        """
        return self.alpha > self.proposition_bound


def check_lemma7_certificate(c: TheoryConstants, alpha, include_resolvent=True) -> CertificateReport:
    """Test ``H_alpha theta <= eta theta`` with ``eta = 1 - mu alpha / 4``.

    Three weight vectors are tried: the one stated with the lemma, the one
    picked in its proof (they differ in the third and fourth entries), and
    the resolvent vector of :func:`theta_resolvent`. ``admissible`` requires
    ``0 < alpha <=`` the theorem bound and at least one passing ``theta``.
    """
    alpha = float(alpha)
    if alpha < 0:
        raise ValueError(f"step-size must be nonnegative, got {alpha}")
    H = build_h_alpha(c, alpha)
    eta = 1 - c.mu * alpha / 4
    cands = {"statement": theta_statement(c), "proof": theta_proof(c)}
    if include_resolvent and alpha > 0:
        tr = theta_resolvent(H, eta)
        if tr is not None:
            cands["resolvent"] = tr
    checks = {k: _dominated(H, th, eta) for k, th in cands.items()}
    if include_resolvent and "resolvent" not in checks:
        checks["resolvent"] = False
    ok = [k for k in cands if checks[k]]
    theta = cands[ok[0]] if ok else cands["statement"]
    bound = theorem_step_bound(c)
    return CertificateReport(alpha=alpha, h_matrix=H, rho=spectral_radius(H), eta=eta,
                             theta=theta, elementwise_ok=bool(ok),
                             admissible=bool(ok) and 0 < alpha <= bound, checks=checks,
                             step_bound=bound, proposition_bound=proposition_step_bound(c))


def iteration_complexity_estimate(c: TheoryConstants, epsilon) -> float:
    """Order estimate ``max{1/((1-s)p_min), delta Q^2 p_max/((1-s)^2 p_min)} ln(1/eps)``.

    The constant hidden in the O(.) is taken as 1; this is not a bound.
    """
    gap = 1 - c.sigma_a
    pre = max(1 / (gap * c.p_min), c.delta * c.cond_q ** 2 * c.p_max / (gap ** 2 * c.p_min))
    return pre * math.log(1 / epsilon)


def alpha_scan(c: TheoryConstants, alphas) -> list[CertificateReport]:
    return [check_lemma7_certificate(c, a) for a in alphas]


def largest_certified_alpha(c: TheoryConstants, which="any", hi=None, iters=60) -> float:
    """Bisection for the largest ``alpha`` whose certificate passes.

    ``which`` selects a single theta (``statement``, ``proof``,
    ``resolvent``) or ``any``. Returns 0.0 if nothing in ``(0, hi]`` passes
    at the probe points. Bisection assumes the passing set is an interval
    starting at 0, which holds for the resolvent test in practice since
    ``rho(H_alpha) - eta`` changes sign once.
    """
    def ok(a):
        rep = check_lemma7_certificate(c, a)
        return rep.elementwise_ok if which == "any" else rep.checks.get(which, False)

    hi = hi if hi is not None else 4 * c.mu / c.lipschitz ** 2
    lo = 0.0
    probe = hi
    while probe > 1e-14 and not ok(probe):
        hi, probe = probe, probe / 4
    if probe <= 1e-14:
        return 0.0
    lo = probe
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo
