"""Collision-avoiding flocking simulator with kinetic diagnostics and
exact optimal-transport distances."""

from .model import (CouplingSpec, KernelSpec, ModelSpec, RepulsionSpec,
                    check_assumptions, cstar, eval_g, eval_phi, eval_repulsion)
from .dynamics import (IntegratorConfig, ParticleState, Trajectory,
                       accelerations, alignment_measure, integrate, step)
from .kinetic import (EmpiricalMeasure, InitialSpec, MomentSet, field_H,
                      flow_characteristic, from_particles, moments,
                      sample_initial, support_radius)
from .transport import (DiscreteMeasure, GroundMetric, TransportPlan,
                        bounded_lipschitz, dirac_flocking_distance, w1,
                        w1_bruteforce)

__version__ = "0.1.0"
