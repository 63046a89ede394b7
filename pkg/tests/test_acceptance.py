"""Acceptance criteria, each checked at its stated tolerance and runtime.

Every test records one ``criterion K: PASS|FAIL ...`` line, printed in the
terminal summary (and immediately, when run with ``-s``).
"""
import json
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_density, random_unitary
from qrobust.chanbound import (LindbladChannel, bound_channel_instance, bound_channel_worst,
                               channel_gamma, circuit_superops, compose, estimate_fmin, kraus_to_superop,
                               lindblad_generator, model_dephasing, noisy_superops)
from qrobust.circuit import (GATES, Circuit, build_jones_pulse, build_qft, build_reference_design_pulse,
                             identity_circuit, make_gate)
from qrobust.cli import run as cli_run
from qrobust.cohbound import (bound_direct, bound_gamma, bound_prior, exact_worst_fidelity_systematic,
                              fidelity, gamma_norm, gamma_opt, gamma_vertex, threshold_delta, VERTEX_CAP)
from qrobust.design import ModelSpec, design, pulse_design_problem
from qrobust.errmodel import model_cce, model_pauli, noisy_unitary
from qrobust.matcore import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, gen_exp
from qrobust.mcsample import sample_fidelity
from qrobust.optkit import OptSettings
from qrobust.partition import PartitionPlan, gamma_partitioned

pytestmark = pytest.mark.acceptance

OPT = OptSettings(starts=40, seed=1)


def record(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# corpus

def random_circuit(n, N, rng):
    names = [k for k, v in GATES.items() if v[1] <= n and k != "id"]
    gates = []
    for _ in range(N):
        name = str(rng.choice(names))
        npar, nq, _ = GATES[name]
        qubits = [int(q) for q in rng.permutation(n)[:nq]]
        gates.append(make_gate(name, list(rng.uniform(-math.pi, math.pi, npar)), qubits))
    return Circuit(n, gates)


def build_model(kind, circuit, delta, corr):
    if kind == "cce":
        return model_cce(circuit, delta, correlation=corr).resolve(len(circuit))
    return model_pauli(circuit.n, kind, delta, correlation=corr).resolve(len(circuit))


def corpus():
    rng = np.random.default_rng(2024)
    items = []
    kinds = ["X", "Y", "Z", "cce"]
    for i in range(14):
        n = 1 + i % 3
        N = int(rng.integers(3, 13))
        c = random_circuit(n, N, rng)
        corr = "systematic" if i % 4 == 3 else "independent"
        items.append((f"random n={n} N={N} {kinds[i % 4]}/{corr}", c,
                      build_model(kinds[i % 4], c, 0.3 / N, corr)))
    q = build_qft(3)
    J = build_jones_pulse(math.pi / 4).to_circuit()
    R = build_reference_design_pulse().to_circuit()
    for corr in ("independent", "systematic"):
        items.append((f"qft3 cce/{corr}", q, build_model("cce", q, 0.02, corr)))
        items.append((f"jones cce/{corr}", J, build_model("cce", J, 0.05, corr)))
        items.append((f"reference-pulse cce/{corr}", R, build_model("cce", R, 0.05, corr)))
    items.append(("qft3 Y/independent", q, build_model("Y", q, 0.01, "independent")))
    return items


# ---------------------------------------------------------------------------

def test_criterion_1_thresholds():
    t = time.perf_counter()
    d0 = threshold_delta(1000, 0.0, 0.999)
    d1 = threshold_delta(1000, 1.0, 0.999)
    dt = time.perf_counter() - t
    ok = 2.50e-4 <= d0 <= 2.52e-4 and 3.04e-5 <= d1 <= 3.16e-5 and dt < 1
    record(1, ok, f"delta(gamma=0)={d0:.4e} delta(gamma=1)={d1:.4e} in {dt:.3f}s")


def test_criterion_2_closed_form():
    t = time.perf_counter()
    errs_exact, errs_bound = [], []
    N = 10
    for dN in (0.01, 0.1, 0.5):
        c = identity_circuit(N)
        m = model_pauli(1, "Z", dN / N, correlation="systematic").resolve(N)
        F = fidelity(c.unitary(), noisy_unitary(c, m, m.coordinate_bounds()))
        errs_exact.append(abs(F - math.cos(dN) ** 2))
        errs_exact.append(abs(exact_worst_fidelity_systematic(c, m) - math.cos(dN) ** 2))
        errs_bound.append(abs(bound_direct(c, m).value - (1 - dN ** 2)))
    dt = time.perf_counter() - t
    ok = max(errs_exact) <= 1e-12 and max(errs_bound) <= 1e-10 and dt < 1
    record(2, ok, f"max|F-cos^2|={max(errs_exact):.1e} max|bound-(1-(dN)^2)|={max(errs_bound):.1e} "
                  f"in {dt:.2f}s")


def test_criterion_3_soundness():
    t = time.perf_counter()
    failures, count, tightest = [], 0, math.inf
    for name, c, m in corpus():
        count += 1
        bounds = {"direct": bound_direct(c, m, OPT).value}
        N, lvl = len(c), m.level
        if m.n_params <= VERTEX_CAP:
            bounds["gamma_vertex"] = bound_gamma(lvl, N, gamma_vertex(c, m).value).value
        bounds["gamma_opt"] = bound_gamma(lvl, N, gamma_opt(c, m, OPT).value).value
        bounds["gamma_norm"] = bound_gamma(lvl, N, gamma_norm(c, m).value).value
        worst = sample_fidelity(c, m, 10_000, seed=count).worst
        top = max(bounds.values())
        tightest = min(tightest, worst - top)
        for k, v in bounds.items():
            if worst < v - 1e-9:
                failures.append(f"{name}:{k} {worst:.6f}<{v:.6f}")
    dt = time.perf_counter() - t
    ok = count >= 20 and not failures and dt < 600
    record(3, ok, f"{count} instances x 10000 samples, min(sampled worst - best bound)={tightest:.2e}, "
                  f"violations={failures[:3]} in {dt:.1f}s")


def test_criterion_4_gamma_consistency():
    checked, worst_gap, norm_ok = 0, 0.0, True
    for name, c, m in corpus():
        if m.n_params > 12:
            continue
        checked += 1
        gv = gamma_vertex(c, m).value
        go = gamma_opt(c, m, OPT).value
        worst_gap = max(worst_gap, abs(go - gv))
        norm_ok &= gamma_norm(c, m).value >= gv - 1e-9
    singles = []
    rx = Circuit(1, [make_gate("rx", [math.pi / 4], [0])])
    for m in (model_cce(rx, 0.1), model_pauli(1, "X", 0.1), model_pauli(1, "Z", 0.1)):
        singles.append(gamma_opt(rx, m, OPT).value)
        singles.append(gamma_vertex(rx, m).value)
    J = build_jones_pulse(math.pi / 4).to_circuit()
    gj = gamma_opt(J, model_cce(J, 0.05, correlation="systematic"), OPT).value
    single_err = max(abs(s - 1) for s in singles)
    ok = checked > 0 and worst_gap <= 1e-6 and norm_ok and single_err <= 1e-9 and gj <= 1e-8
    record(4, ok, f"{checked} instances max|opt-vertex|={worst_gap:.1e} norm>=vertex={norm_ok}; "
                  f"single gate |gamma-1|<={single_err:.1e}; jones systematic gamma={gj:.1e}")


def test_criterion_5_prior_comparison():
    q = build_qft(3)
    m = model_cce(q, 1e-3).resolve(len(q))
    g = gamma_opt(q, m, OptSettings(starts=200)).value
    ours = bound_gamma(m.level, len(q), g).value
    prior = bound_prior(q, 1e-3).value
    record(5, ours > prior, f"qft3 cce delta=1e-3: gamma bound {ours:.6f} vs prior {prior:.6f} (gamma={g:.4f})")


def _kraus_apply(kraus, rho):
    return sum(E @ rho @ E.conj().T for E in kraus)


def _rhs(K, Ls, rho):
    out = -1j * (K @ rho - rho @ K)
    for L in Ls:
        Ld = L.conj().T
        out += 2 * L @ rho @ Ld - Ld @ L @ rho - rho @ Ld @ L
    return out


def _rk4(K, Ls, rho, steps=1000):
    h = 1.0 / steps
    for _ in range(steps):
        k1 = _rhs(K, Ls, rho)
        k2 = _rhs(K, Ls, rho + h / 2 * k1)
        k3 = _rhs(K, Ls, rho + h / 2 * k2)
        k4 = _rhs(K, Ls, rho + h * k3)
        rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def test_criterion_6_channels():
    t = time.perf_counter()
    rng = np.random.default_rng(6)
    p, g = 0.2, 0.3
    channels = {
        "identity": [PAULI_I],
        "unitary": [random_unitary(rng, 2)],
        "depolarizing": [math.sqrt(1 - 3 * p / 4) * PAULI_I] + [math.sqrt(p / 4) * P for P in (PAULI_X, PAULI_Y, PAULI_Z)],
        "amplitude-damping": [np.array([[1, 0], [0, math.sqrt(1 - g)]]), np.array([[0, math.sqrt(g)], [0, 0]])],
        "dephasing": [math.sqrt(1 - p) * PAULI_I, math.sqrt(p) * PAULI_Z],
    }
    kraus_err = 0.0
    for kraus in channels.values():
        S = kraus_to_superop(kraus)
        for _ in range(20):
            rho = random_density(rng, 2)
            kraus_err = max(kraus_err, np.abs(S.apply(rho) - _kraus_apply(kraus, rho)).max())
    lind_err = 0.0
    for _ in range(3):
        K = 0.5 * (lambda A: A + A.conj().T)(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        Ls = [0.4 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) for _ in range(2)]
        M = gen_exp(lindblad_generator(LindbladChannel(K, tuple(Ls))))
        rho = random_density(rng, 2)
        out = (M @ rho.reshape(-1, order="F")).reshape(2, 2, order="F")
        lind_err = max(lind_err, np.abs(out - _rk4(K, Ls, rho)).max())
    violations, cases = [], 0
    for i in range(8):
        N = 1 + i % 4
        c = random_circuit(1, N, rng)
        A = circuit_superops(c)
        model = model_dephasing(1, 0.05).resolve(N)
        gamma = channel_gamma(A, model, "vertex").value
        worst = bound_channel_worst(1, N, model.level, gamma).value
        ideal = compose(A)
        for _ in range(3):
            theta = rng.uniform(0, 1, model.n_params) * model.coordinate_bounds()
            inst = bound_channel_instance(A, model.hamiltonians(theta)).value
            fmin = estimate_fmin(ideal, compose(noisy_superops(A, model, theta)), samples=300, seed=i)
            cases += 1
            low = fmin.samples.min() if fmin.samples.size else fmin.value
            if min(low, fmin.value) < max(inst, worst) - 1e-12:
                violations.append((i, float(fmin.value), inst, worst))
    dt = time.perf_counter() - t
    ok = kraus_err <= 1e-12 and lind_err <= 1e-6 and not violations and dt < 120
    record(6, ok, f"kraus err={kraus_err:.1e} lindblad vs rk4={lind_err:.1e} "
                  f"{cases} dephasing cases, violations={violations[:2]} in {dt:.1f}s")


def test_criterion_7_partitioning():
    rng = np.random.default_rng(7)
    dominated = True
    for _ in range(5):
        c = random_circuit(2, 8, rng)
        m = model_pauli(2, "X", 0.02).resolve(8)
        gv = gamma_vertex(c, m).value
        for cuts in [(4,), (2, 5), (3,)]:
            dominated &= gamma_partitioned(c, m, PartitionPlan(cuts)).value >= gv - 1e-9
    c = random_circuit(2, 16, rng)
    m = model_pauli(2, "X", 0.01).resolve(16)
    assert m.n_params > VERTEX_CAP
    t = time.perf_counter()
    r = gamma_partitioned(c, m, PartitionPlan.auto_plan())
    dt = time.perf_counter() - t
    b = bound_gamma(m.level, 16, r.value).value
    worst = sample_fidelity(c, m, 10_000, seed=7).worst
    ok = dominated and dt < 30 and worst >= b - 1e-9
    record(7, ok, f"dominance={dominated}; N=16 with {m.n_params} params: auto-partition "
                  f"{len(r.diagnostics['segments'])} segments in {dt:.2f}s, bound {b:.6f} <= sampled {worst:.6f}")


def test_criterion_8_design():
    beta, delta = math.pi / 4, 0.05
    problem = pulse_design_problem(beta, delta)
    x, rep = design(problem, OptSettings(starts=1, max_iters=100, seed=0))
    designed = problem.template(x)
    jones = build_jones_pulse(beta).to_circuit()
    raw = Circuit(1, [make_gate("rx", [beta], [0])])
    settings = OptSettings(starts=50)

    def bound(c, corr):
        return bound_direct(c, model_cce(c, delta, correlation=corr), settings).value

    ind = {k: bound(c, "independent") for k, c in (("designed", designed), ("jones", jones), ("raw", raw))}
    sys_ = {k: bound(c, "systematic") for k, c in (("designed", designed), ("jones", jones), ("raw", raw))}
    core = len(designed) == 5 and ind["designed"] > ind["jones"] and sys_["designed"] >= 0.999995
    indep_order = ind["designed"] > ind["jones"] > ind["raw"]
    syst_order = min(sys_["designed"], sys_["jones"]) > sys_["raw"] and abs(sys_["designed"] - sys_["jones"]) < 1e-5
    ok = core and indep_order and syst_order
    fmt = lambda d: " ".join(f"{k}={v:.6f}" for k, v in d.items())
    record(8, ok, f"improvement&systematic>=0.999995: {core}; independent ordering designed>jones>raw: "
                  f"{indep_order} [{fmt(ind)}]; systematic ordering: {syst_order} [{fmt(sys_)}]")


def test_criterion_9_determinism(tmp_path):
    commands = [
        ["bound", "--circuit", "builtin:qft2", "--model", "cce", "--delta", "0.01", "--starts", "10"],
        ["gamma", "--circuit", "builtin:jones", "--model", "cce", "--delta", "0.05", "--starts", "10"],
        ["sample", "--circuit", "builtin:qft3", "--model", "pauli-x", "--delta", "0.01", "--samples", "500"],
        ["sweep", "--circuit", "builtin:rx", "--model", "cce", "--deltas", "log:1e-3:1e-1:3",
         "--samples", "200", "--starts", "5"],
        ["channel", "--circuit", "builtin:qft2", "--delta", "0.01"],
        ["design", "--delta", "0.05", "--starts", "1"],
    ]
    mismatched = []
    for argv in commands:
        outs = []
        for rep in range(2):
            path = tmp_path / f"{argv[0]}{rep}.out"
            assert cli_run(argv + ["--seed", "7", "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        if outs[0] != outs[1]:
            mismatched.append(argv[0])
    record(9, not mismatched, f"{len(commands)} commands re-run with seed 7, mismatches={mismatched}")
