"""
How small must the error be?
============================

For a circuit of ``N`` layers, the scalar bound depends only on the error
level ``delta``, the depth and the robustness measure ``gamma``. Solving it
for a target fidelity gives the largest tolerable error per layer.
"""
import numpy as np

from qrobust import bound_gamma, threshold_delta

###############################################################################
# A thousand-layer circuit, target fidelity 0.999. ``gamma = 0`` is a circuit
# whose errors cancel on average; ``gamma = 1`` is the worst possible.

for gamma in (0.0, 0.1, 1.0):
    d = threshold_delta(1000, gamma, 0.999)
    print(f"gamma={gamma:4.1f}  delta <= {d:.3e}")

###############################################################################
# Cancellation buys roughly an order of magnitude here. Both terms depend on
# ``delta`` only through ``delta N``, so the tolerable error shrinks like
# ``1/N`` and the ratio between the two cases does not depend on the depth.

for N in (10, 100, 1000, 10000):
    d0, d1 = threshold_delta(N, 0.0, 0.999), threshold_delta(N, 1.0, 0.999)
    print(f"N={N:6d}  ratio {d0 / d1:7.2f}")

###############################################################################
# The bound itself, on a grid.

for delta in np.logspace(-5, -3, 5):
    print(f"delta={delta:.1e}  F >= {bound_gamma(delta, 1000, 0.5).value:.6f}")
