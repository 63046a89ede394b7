"""
Cutting a circuit to get a certified gamma
==========================================

Exact ``gamma`` enumerates the corners of the error box, which is hopeless
beyond a couple of dozen parameters. Cutting the circuit into segments gives
an upper bound that each segment certifies exactly.
"""
import numpy as np

from qrobust import (Circuit, OptSettings, PartitionPlan, gamma_norm, gamma_opt, gamma_partitioned,
                     make_gate, model_pauli)

rng = np.random.default_rng(3)
gates = []
for _ in range(16):
    if rng.uniform() < 0.3:
        gates.append(make_gate("cx", [], [0, 1]))
    else:
        gates.append(make_gate(str(rng.choice(["rx", "ry", "rz"])), [rng.uniform(-3, 3)], [int(rng.integers(2))]))
circuit = Circuit(2, gates)
model = model_pauli(2, "X", 0.01)
print("parameters:", model.resolve(16).n_params)

###############################################################################
# Ascent gives a value that may sit below the true ``gamma``; the norm bound
# and the partition give values above it.

low = gamma_opt(circuit, model, OptSettings(starts=50)).value
auto = gamma_partitioned(circuit, model, PartitionPlan.auto_plan())
fine = gamma_partitioned(circuit, model, PartitionPlan((4, 8, 12)))
print(f"ascent {low:.4f} <= gamma <= partition {auto.value:.4f} (2 segments), "
      f"{fine.value:.4f} (4 segments), norm {gamma_norm(circuit, model).value:.4f}")
