"""
Choosing a model without holding out data
=========================================

Training error plus expected instability estimates the error on a fresh set of
outputs. Here the noise level is estimated from a generous polynomial fit and
then used to rank candidates on a simulated dataset.
"""

from cvdecomp import NoiseSpec, estimate_sigma_sq_residual, parse_blackbox, select_model
from cvdecomp.blackbox import generate_dataset, uniform_inputs
from cvdecomp.estimate import IblSpec, LinearSpec

box = parse_blackbox("poly:0.5,-1.0,2.0")
data = generate_dataset(box, uniform_inputs(40), NoiseSpec(0.3), seed=7)

sigma_sq = estimate_sigma_sq_residual(data.X, data.y, r=6)
print(f"estimated sigma^2 = {sigma_sq:.4f} (true 0.09)")

grid = [LinearSpec(r) for r in range(1, 8)] + [IblSpec(k) for k in (1, 2, 4, 8, 16)]
report = select_model(grid, data, sigma_sq, sigma_sq_source="residual, r=6")
print(report.to_table())

# with a known noise level the three-term model should win
print()
print(select_model(grid, data, 0.09).to_table())
