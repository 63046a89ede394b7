"""
Uncertain dephasing
===================

Errors that are not unitary: a dephasing rate known only up to a bound on
each layer. The averaged generator in the ideal frame plays the role of
``gamma`` again, and sampled minimal fidelities sit above the bounds.
"""
import numpy as np

from qrobust import (bound_channel_instance, bound_channel_worst, build_qft, channel_gamma,
                     circuit_superops, compose, estimate_fmin, model_dephasing, noisy_superops)

c = build_qft(2)
A = circuit_superops(c)
model = model_dephasing(c.n, 0.005).resolve(len(c))
gamma = channel_gamma(A, model).value
worst = bound_channel_worst(c.n, len(c), model.level, gamma).value
print(f"gamma={gamma:.4f}  worst-case bound {worst:.6f}")

###############################################################################
# A few admissible rate assignments (rates are nonnegative so every layer
# stays a channel).

rng = np.random.default_rng(0)
ideal = compose(A)
for _ in range(4):
    theta = rng.uniform(0, 1, model.n_params) * model.coordinate_bounds()
    inst = bound_channel_instance(A, model.hamiltonians(theta)).value
    fmin = estimate_fmin(ideal, compose(noisy_superops(A, model, theta)), samples=300).value
    print(f"instance bound {inst:.6f}  sampled F_min {fmin:.6f}")
