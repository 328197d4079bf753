"""
Measuring instability by simulation
===================================

Fit a model to two noisy replicates of the same inputs and compare the fits.
The mean squared difference tracks 2 sigma^2 r for least squares and
2 sigma^2 n / k for k-nearest-neighbor averaging.
"""

from cvdecomp import NoiseSpec, monte_carlo_instability, parse_blackbox
from cvdecomp.blackbox import generate_outputs, uniform_inputs
from cvdecomp.estimate import IblSpec, LinearSpec

box = parse_blackbox("sin")
n, sigma = 30, 0.4
X = uniform_inputs(n)
noise = NoiseSpec(sigma)
y1 = generate_outputs(box, X, noise, seed=1)

print(f"{'model':<8}{'simulated':>12}{'+/-':>8}{'expected':>12}")
for spec in [LinearSpec(r) for r in (1, 3, 6)] + [IblSpec(k) for k in (1, 3, 10)]:
    mc = monte_carlo_instability(spec, X, y1, noise, trials=2000, seed=2)
    expected = spec.instability_coefficient(n).value * sigma ** 2
    print(f"{spec.id:<8}{mc.mean_sq:>12.4f}{mc.se_sq:>8.3f}{expected:>12.4f}")

# the noise family does not matter, only its variance
for dist in ("normal", "uniform", "rademacher"):
    mc = monte_carlo_instability(LinearSpec(3), X, y1, NoiseSpec(sigma, dist), trials=2000, seed=3)
    print(f"LR3 under {dist:<10} noise: {mc.mean_sq:.4f}")
