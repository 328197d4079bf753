"""
Four points, eight models
=========================

Polynomials with 1 to 4 terms and k-nearest-neighbor averages with k = 1 to 4
fitted to the same four noisy points. Training error falls as the models get
more flexible; instability rises.
"""

import numpy as np

from cvdecomp import IblModel, LinearSpec, four_point_example, select_model
from cvdecomp.estimate import IblSpec

data = four_point_example()
print("inputs :", data.X[:, 0])
print("outputs:", data.y)

# least squares fits, lowest degree first
for r in range(1, 5):
    model = LinearSpec(r)(data.X, data.y)
    resid = model.predict(data.X) - data.y
    print(f"LR{r}: coefficients {np.round(model.coefficients, 4)}  sse {resid @ resid:.4f}")

# nearest-neighbor averages; k = 1 recalls the training outputs exactly
for k in range(1, 5):
    model = IblModel.from_dataset(data, k)
    resid = model.predict(data.X) - data.y
    print(f"IBL{k}: fitted {np.round(model.predict(data.X), 4)}  sse {resid @ resid:.4f}")

# which model wins depends on how noisy we believe the outputs are
grid = [LinearSpec(r) for r in range(1, 5)] + [IblSpec(k) for k in range(1, 5)]
for sigma_sq in (1.0, 0.05, 1e-6):
    print()
    print(select_model(grid, data, sigma_sq).to_table())
