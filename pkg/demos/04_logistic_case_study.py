# coding: utf-8

# # Logistic regression on a random directed network
#
# Ten agents, each with four random out-neighbours, share 600 training
# samples of one-hot categorical data (112 binary columns, 22 attributes,
# the shape of the encoded mushroom table). The regularisation is
# beta = 5. With a real data file, pass its path as the first argument,
# e.g. `python demos/04_logistic_case_study.py data/mushrooms 2`, where
# the second argument is the raw label that maps to +1.

# In[1]:

import sys
from dataclasses import replace

import numpy as np

from pushlsvrg.harness import (CaseStudyConfig, build_problem, compare_traces,
                               oracle_accuracy, resolve_trigger_probs, summary_csv)
from pushlsvrg.solver import AlgoConfig, run

cfg = CaseStudyConfig()
if len(sys.argv) > 1:
    cfg = replace(cfg, dataset=sys.argv[1],
                  positive_label=float(sys.argv[2]) if len(sys.argv) > 2 else None)
prob = build_problem(cfg)
obj = prob.objective
print(prob.network.describe(), obj.describe())
print(f"mu = {obj.mu}, L = {obj.lipschitz:.3f}, Q = {obj.condition_number:.3f}")


# The centralised reference model, found by full gradient descent, sets
# the accuracy to aim for.

# In[2]:

train_acc, test_acc = oracle_accuracy(prob)
print(f"oracle: train {train_acc:.4f}, test {test_acc:.4f}, "
      f"gradient norm {prob.reference.grad_norm_at_star:.1e}")


# Trigger probabilities follow the uncoordinated rule: uniform on
# [1/Q, m/Q], clamped at one. With Q close to 2 most agents refresh their
# anchor every iteration, so an iteration of Push-LSVRG-UP costs about as
# much as one of ADD-OPT and the two trace each other per epoch.

# In[3]:

probs = resolve_trigger_probs(cfg, obj)
print("p_i", np.round(probs, 3))

traces = {}
for algo in ("push_lsvrg_up", "s_addopt", "push_saga", "addopt"):
    ac = AlgoConfig(algo, alpha=0.02, trigger_probs=probs, seed=0, max_iters=10 ** 6,
                    max_epochs=60, eval_every=25)
    traces[algo] = run(ac, prob.network, obj, prob.reference.z_star,
                       classification=prob.classification)


# In[4]:

print(f"{'method':<14} {'epochs':>7} {'residual':>10} {'train':>7} {'test':>7}")
for algo, tr in traces.items():
    f = tr.final
    print(f"{algo:<14} {f.epoch:>7.1f} {f.residual:>10.2e} {f.train_acc:>7.4f} "
          f"{f.test_acc:>7.4f}")

print()
print(summary_csv(compare_traces(traces)))
