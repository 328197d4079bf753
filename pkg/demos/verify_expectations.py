"""
Checking the expectations by simulation
=======================================

Runs the full verification suite on a small configuration and prints one line
per check, then looks at the angle between training error and instability for
nearest-neighbor averaging, which has no closed form.
"""

from cvdecomp.simharness import HarnessConfig, run_suite

config = HarnessConfig(trials=5000, seed=1)
checks, angle = run_suite(config)
for check in checks:
    print(check.summary())
print(angle.summary())

# heavier-tailed noise gives the same verdicts
checks, _ = run_suite(HarnessConfig(trials=5000, seed=1, distribution="rademacher"), which=("T6", "T10"))
for check in checks:
    print("rademacher", check.summary())
