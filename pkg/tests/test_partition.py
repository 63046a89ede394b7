import numpy as np
import pytest

from qrobust.circuit import Circuit, build_qft, identity_circuit, make_gate
from qrobust.cohbound import VertexCapacityError, gamma_opt, gamma_vertex
from qrobust.errmodel import interaction_hamiltonians, model_pauli
from qrobust.matcore import ValidationError
from qrobust.optkit import OptSettings
from qrobust.partition import PartitionPlan, gamma_partitioned, segment_norms


def random_circuit(n, N, rng):
    gates = []
    for _ in range(N):
        if rng.uniform() < 0.3:
            gates.append(make_gate("cx", [], list(rng.permutation(n)[:2])))
        else:
            gates.append(make_gate(str(rng.choice(["rx", "ry", "rz"])), [rng.uniform(-3, 3)],
                                   [int(rng.integers(n))]))
    return Circuit(n, gates)


def test_no_cuts_equals_whole():
    q = build_qft(2)
    m = model_pauli(2, "X", 0.1)
    assert gamma_partitioned(q, m, PartitionPlan()).value == pytest.approx(gamma_vertex(q, m).value)


def test_identity_cut_in_half():
    r = gamma_partitioned(identity_circuit(4), model_pauli(1, "Z", 0.1), PartitionPlan((2,)))
    assert r.value == pytest.approx(1.0)
    assert [s["stop"] for s in r.diagnostics["segments"]] == [2, 4]


@pytest.mark.parametrize("seed", range(4))
def test_partition_dominates(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(2, 8, rng)
    m = model_pauli(2, "X", 0.1)
    exact = gamma_vertex(c, m).value
    for cuts in [(4,), (2, 5), (1, 2, 3, 4, 5, 6, 7)]:
        assert gamma_partitioned(c, m, PartitionPlan(cuts)).value >= exact - 1e-9
    # one-layer segments give the average of the per-layer norms
    singles = gamma_partitioned(c, m, PartitionPlan(tuple(range(1, 8)))).value
    assert singles == pytest.approx(1.0)


def test_segment_term_is_prefix_invariant(rng):
    c = random_circuit(2, 6, rng)
    m = model_pauli(2, "Y", 0.1).resolve(6)
    theta = rng.uniform(-1, 1, m.n_params) * m.coordinate_bounds()
    plan = PartitionPlan((3,))
    glob = segment_norms(c, m, theta, plan)
    local = np.linalg.norm(interaction_hamiltonians(c[3:], m.slice(3, 6), theta[6:]).sum(axis=0), 2)
    assert glob[1] == pytest.approx(local, rel=1e-12)


def test_auto_split_fits_cap(rng):
    c = random_circuit(2, 16, rng)
    m = model_pauli(2, "X", 0.1)
    with pytest.raises(VertexCapacityError):
        gamma_vertex(c, m)
    r = gamma_partitioned(c, m, PartitionPlan.auto_plan())
    assert r.diagnostics["certified"]
    assert all(s["stop"] - s["start"] <= 11 for s in r.diagnostics["segments"])
    assert r.value >= gamma_opt(c, m, OptSettings(starts=30)).value - 1e-9
    assert r.value == pytest.approx(gamma_partitioned(c, m, PartitionPlan.auto_plan(), workers=2).value)


def test_plan_validation():
    with pytest.raises(ValidationError):
        PartitionPlan((3, 2))
    with pytest.raises(ValidationError):
        PartitionPlan((0,)).segments(4)
    with pytest.raises(ValidationError):
        PartitionPlan((), "magic")
    with pytest.raises(ValidationError):
        PartitionPlan((2,), ("vertex", "opt", "norm")).method_for(0, 2)
