# coding: utf-8

# # The step-size certificate
#
# The error analysis stacks four quantities (agreement, optimality,
# gradient-learning and tracking errors) into a vector that contracts by a
# 4x4 nonnegative matrix `H_alpha`. If some positive `theta` satisfies
# `H_alpha theta <= eta theta` with `eta = 1 - mu alpha / 4`, then
# `rho(H_alpha) <= eta < 1`.

# In[1]:

import numpy as np

from pushlsvrg import theory
from pushlsvrg.netgraph import generate_graph
from pushlsvrg.objective import make_synthetic_quadratic

np.set_printoptions(precision=4, linewidth=110)

net = generate_graph("directed_exponential", 8)
obj = make_synthetic_quadratic(8, 10, 32, seed=0, mu_target=1.0, L_target=2.0)
c = theory.compute_constants(net, obj.mu, obj.lipschitz, np.full(8, 1 / 32))
for k, v in c.as_dict().items():
    print(f"{k:<12} {v:.6g}")


# In[2]:

bound = theory.theorem_step_bound(c)
print("theorem step bound        ", bound)
print("proposition hypothesis    ", theory.proposition_step_bound(c))
print("iterations for eps = 1e-8 ", round(theory.iteration_complexity_estimate(c, 1e-8)))
print(theory.build_h_alpha(c, bound))


# Three weight vectors are tried: the one given with the lemma, the one
# used in its proof, and the resolvent vector `(eta I - H)^{-1} 1`, which
# works whenever `rho < eta`. With eight agents only the last succeeds.

# In[3]:

print(f"{'alpha/bound':>11} {'rho':>12} {'eta':>12}  statement  proof  resolvent")
for f in (0.01, 0.1, 0.5, 1, 2, 3, 4, 10):
    r = theory.check_lemma7_certificate(c, f * bound)
    ck = r.checks
    print(f"{f:>11} {r.rho:>12.8f} {r.eta:>12.8f}  {ck['statement']!s:>9}  "
          f"{ck['proof']!s:>5}  {ck['resolvent']!s:>9}")


# Why the closed-form weights fail: check the third row of
# `H theta <= eta theta` in the limit of small alpha. The lemma's theta
# gives a left side that grows like `18 m` against a right side of 60,
# which breaks from m = 4 on.

# In[4]:

for m in (2, 3, 4, 8, 16):
    g = generate_graph("full", m)
    cm = theory.compute_constants(g, 1.0, 1.0, np.full(m, 0.5))
    a = 1e-3 * theory.theorem_step_bound(cm)
    H = theory.build_h_alpha(cm, a)
    th = theory.theta_statement(cm)
    lhs, rhs = (H @ th)[2], (1 - a / 4) * th[2]
    print(f"m={m:>2}  row 3: lhs/rhs = {lhs / rhs:.3f}")


# The largest step-size the resolvent certificate accepts, against the
# closed-form bound.

# In[5]:

amax = theory.largest_certified_alpha(c, "resolvent")
print(f"largest certified alpha {amax:.4e} = {amax / bound:.2f} x theorem bound")
