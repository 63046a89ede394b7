"""Worst-case robustness bounds for quantum circuits under set-bounded errors."""
from .chanbound import (LindbladChannel, Superoperator, bound_channel_instance, bound_channel_worst,
                        channel_gamma, circuit_superops, compose, estimate_fmin, kraus_to_superop,
                        lindblad_generator, model_dephasing, noisy_superops)
from .circuit import (Circuit, Gate, PulseSequence, build_jones_pulse, build_qft,
                      build_reference_design_pulse, identity_circuit, make_gate)
from .cohbound import (FidelityBound, GammaResult, bound_direct, bound_gamma, bound_prior,
                       compute_gamma, fidelity, gamma_norm, gamma_opt, gamma_vertex, threshold_delta)
from .design import DesignProblem, Measure, ModelSpec, design, pulse_design_problem
from .errmodel import CoherentErrorModel, model_cce, model_custom, model_pauli, noisy_unitary
from .mcsample import sample_fidelity, sweep, sweep_csv
from .optkit import OptSettings
from .partition import PartitionPlan, gamma_partitioned
from .qasm import format_circuit, parse_circuit

__version__ = "0.1.0"
