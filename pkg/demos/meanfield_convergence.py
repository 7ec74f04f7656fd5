"""Mean-field convergence: nested particle clouds approach each other.

Clouds of increasing size share one seed through nested sampling, so each
smaller cloud is literally the first slice of the larger one.  The W1
distance from each cloud to the largest one shrinks as N grows, at t = 0
(pure sampling error) and after a unit of dynamics (stability transfer).
"""

import numpy as np

from flocksim import (DiscreteMeasure, GroundMetric, InitialSpec,
                      IntegratorConfig, KernelSpec, ModelSpec, RepulsionSpec,
                      integrate, sample_initial, w1)

model = ModelSpec(
    dimension=2,
    kernel=KernelSpec("cucker_smale", amplitude=1.0, decay=0.25),
    repulsion=RepulsionSpec("saturated", cap=0.1, softening=1.0),
    phi_star=0.25,
)
config = IntegratorConfig(dt=0.05, t_end=1.0, error_tol=1e-7,
                          observer_stride=10 ** 9)
metric = GroundMetric("euclidean")
n_list = (64, 128, 256, 512)


def as_measure(state):
    pts = np.concatenate([state.positions, state.velocities], axis=1)
    return DiscreteMeasure(pts, np.full(state.n, 1.0 / state.n))


clouds0, clouds1 = {}, {}
for n in n_list:
    spec = InitialSpec("uniform_ball", n=n, d=2, seed=3,
                       radius_x=1.0, radius_v=1.0)
    state = sample_initial(spec)
    clouds0[n] = as_measure(state)
    clouds1[n] = as_measure(integrate(state, model, config).states[-1])

ref = n_list[-1]
print(f"reference cloud: N = {ref}")
print(f"{'N':>5} {'W1 at t=0':>12} {'W1 at t=1':>12}")
for n in n_list[:-1]:
    d0, _ = w1(clouds0[n], clouds0[ref], metric)
    d1, _ = w1(clouds1[n], clouds1[ref], metric)
    print(f"{n:5d} {d0:12.6f} {d1:12.6f}")
