"""Exact optimal-transport distances between small discrete measures.

Compares the network-simplex Wasserstein-1 solver against the brute-force
oracle, and the bounded-Lipschitz LP against its flow-based reformulation,
on a batch of random instances.
"""

import numpy as np

from flocksim import DiscreteMeasure, GroundMetric, bounded_lipschitz, w1, w1_bruteforce
from flocksim.transport import bl_flow_oracle

rng = np.random.default_rng(0)
metric = GroundMetric("euclidean")


def random_measure(m):
    w = rng.random(m) + 0.1
    return DiscreteMeasure(rng.standard_normal((m, 2)), w / w.sum())


print(f"{'m':>3} {'n':>3} {'W1':>10} {'oracle gap':>12} "
      f"{'BL':>10} {'oracle gap':>12}")
for _ in range(10):
    m, n = int(rng.integers(2, 6)), int(rng.integers(2, 6))
    mu, nu = random_measure(m), random_measure(n)
    value, plan = w1(mu, nu, metric)
    gap = abs(value - w1_bruteforce(mu, nu, metric))
    bl = bounded_lipschitz(mu, nu, metric)
    bl_gap = abs(bl - bl_flow_oracle(mu, nu, metric))
    print(f"{m:3d} {n:3d} {value:10.6f} {gap:12.2e} {bl:10.6f} {bl_gap:12.2e}")

# the plan is a certificate: its marginals and cost can be rechecked
mu, nu = random_measure(4), random_measure(5)
value, plan = w1(mu, nu, metric)
ma, mb = plan.marginals(4, 5)
print(f"\nplan marginal error: {max(np.max(np.abs(ma - mu.weights)), np.max(np.abs(mb - nu.weights))):.2e}")
print(f"plan cost vs reported value: {abs(plan.recompute_cost(metric.pairwise(mu.points, nu.points)) - value):.2e}")
