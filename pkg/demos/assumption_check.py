"""Structural assumptions behind the decay guarantees, checked by sampling.

The decay rate C* = 2^alpha phi* - sqrt(2) F* is only positive when the
repulsion cap is small against the kernel lower bound.  This script runs
the sampled assumption checks on a passing model and shows how an
oversized cap is rejected outright.
"""

from flocksim import (KernelSpec, ModelSpec, RepulsionSpec,
                      check_assumptions, cstar)
from flocksim.model import ValidationError

model = ModelSpec(
    dimension=2,
    kernel=KernelSpec("cucker_smale", amplitude=1.0, decay=0.25),
    repulsion=RepulsionSpec("saturated", cap=0.1, softening=1.0),
    phi_star=0.25,
)

report = check_assumptions(model, sample_budget=2000, radius=5.0, seed=1)
for check in report.checks:
    print(f"{check.name:24s} {'pass' if check.passed else 'FAIL'} "
          f"(witness value {check.value:.6g})")
print(f"decay rate C* = {cstar(model):.6g}")

# a cap at 3 violates the smallness condition F* < 2^(alpha - 1/2) phi*
try:
    ModelSpec(dimension=2,
              repulsion=RepulsionSpec("saturated", cap=3.0, softening=1.0))
except ValidationError as exc:
    print(f"\noversized cap rejected: {exc}")
