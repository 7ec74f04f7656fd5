"""A full flocking run: 256 particles with collision avoidance.

Integrates the reference configuration (Cucker-Smale kernel, saturated
repulsion) and reports the conserved momentum, the decaying velocity
fluctuation with its analytic envelope, and the Wasserstein-1 distance to
the fully aligned limit measure.
"""

import math

import numpy as np

from flocksim import (InitialSpec, IntegratorConfig, KernelSpec, ModelSpec,
                      RepulsionSpec, integrate, sample_initial)
from flocksim.diagnostics import (DecayEnvelope, effective_phi_star,
                                  envelope_value, flocking_study)

model = ModelSpec(
    dimension=2,
    kernel=KernelSpec("cucker_smale", amplitude=1.0, decay=0.25),
    repulsion=RepulsionSpec("saturated", cap=0.1, softening=1.0),
    phi_star=0.25,
)
initial = InitialSpec("uniform_ball", n=256, d=2, seed=1,
                      radius_x=1.0, radius_v=1.0)
config = IntegratorConfig(dt=0.05, t_end=10.0, error_tol=1e-8,
                          observer_stride=20)

state = sample_initial(initial)
traj = integrate(state, model, config)

v1_0 = traj.moments[0].V1
drift = max(float(np.max(np.abs(mm.V1 - v1_0))) for mm in traj.moments)
print(f"momentum drift over the run: {drift:.2e}")

phi_eff = effective_phi_star(model, traj)
cstar_eff = 2.0 * phi_eff - math.sqrt(2.0) * model.f_star
env = DecayEnvelope(alpha=1.0, cstar=cstar_eff, g0=traj.moments[0].Gf)
print(f"kernel minimum on the visited ball: {phi_eff:.4f} "
      f"(decay rate {cstar_eff:.4f})")

print(f"\n{'t':>6} {'Gf':>12} {'envelope':>12} {'W1 to aligned':>14}")
rows = flocking_study(traj)
for (t, dist, _), mm in zip(rows, traj.moments):
    print(f"{t:6.2f} {mm.Gf:12.4e} {envelope_value(env, t):12.4e} {dist:14.4e}")
