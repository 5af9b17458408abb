# coding: utf-8

# # Directed networks and push-sum weights
#
# Every agent splits what it sends evenly over its out-neighbours (itself
# included), which makes the weight matrix column-stochastic but, on a
# directed graph, not row-stochastic. The right Perron vector `pi` then is
# not uniform, and the push-sum weights `y_k = A^k 1` converge to `m pi`
# instead of staying at one.

# In[1]:

import numpy as np

from pushlsvrg.netgraph import DirectedNetwork, generate_graph

np.set_printoptions(precision=4, suppress=True)


# The standard topologies at m = 12. `sigma_A` is the contraction factor in
# the pi-weighted norm, `theta` = pi_max / pi_min measures imbalance and `T`
# bounds how far the push-sum weights start from their limit.

# In[2]:

kinds = ["ring", "mesh", "directed_exponential", "symmetric_exponential", "full",
         "random_strongly_connected", "out_regular"]
print(f"{'network':<48} {'edges':>5} {'sigma_A':>8} {'theta':>7} {'T':>7}")
for kind in kinds:
    net = generate_graph(kind, 12, connectivity_ratio=0.25, seed=1, out_degree=3)
    sb = net.spectral
    print(f"{net.describe():<48} {net.n_edges:>5} {sb.sigma_a:>8.4f} "
          f"{sb.theta_ratio:>7.3f} {sb.t_const:>7.3f}")


# When every agent has the same out-degree and the same in-degree (ring,
# both exponential graphs, full) the weights are doubly stochastic and pi
# is uniform. The mesh is undirected but corner agents have fewer
# neighbours, so pi is proportional to degree. A graph where one agent
# broadcasts to everybody while the rest pass messages along a chain is
# far from balanced.

# In[3]:

m = 8
adj = np.eye(m, dtype=bool)
adj[np.arange(m - 1), np.arange(1, m)] = True
adj[m - 1, 0] = True
adj[0, :] = True
hub = DirectedNetwork.from_adjacency(adj, name="hub_chain")
sb = hub.spectral
print("pi       ", sb.pi)
print("m * pi   ", m * sb.pi)
print("sigma_A  ", round(sb.sigma_a, 4), " theta", round(sb.theta_ratio, 3))


# Push-sum weights approach `m pi` geometrically; the gap never exceeds
# `T sigma_A^k`.

# In[4]:

y = np.ones(m)
print(f"{'k':>3} {'max|y_k - m pi|':>16} {'T sigma^k':>12}")
for k in range(0, 41):
    if k % 5 == 0:
        gap = np.max(np.abs(y - m * sb.pi))
        print(f"{k:>3} {gap:>16.3e} {sb.t_const * sb.sigma_a ** k:>12.3e}")
    y = hub.weights @ y

# Column sums are exactly one, so the total push-sum mass stays at m.

# In[5]:

print("column sums", hub.weights.sum(axis=0))
print("sum of y_40", y.sum())
