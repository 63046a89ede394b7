"""``qrobust`` command line.

Every command reads an optional JSON config (blocks ``circuit``, ``model``,
``analysis``, ``design``, ``channel``); flags override config keys. Output is
JSON (or CSV for sweeps) carrying a schema string, the package version, the
seed and a hash of the effective config, and is byte-identical across reruns.

Exit codes: 0 ok, 2 usage or config error, 3 numerical failure.
"""
import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .chanbound import (bound_channel_instance, bound_channel_worst, channel_gamma, circuit_superops,
                        compose, estimate_fmin, model_dephasing, model_generators, noisy_superops,
                        LindbladChannel)
from .circuit import build_jones_pulse, build_qft, build_reference_design_pulse, identity_circuit, make_gate, Circuit
from .cohbound import (VertexCapacityError, bound_direct, bound_gamma, bound_prior, compute_gamma,
                       threshold_delta)
from .design import design, pulse_design_problem
from .errmodel import model_cce, model_custom, model_pauli
from .matcore import ValidationError
from .mcsample import sample_fidelity, sweep, sweep_csv
from .optkit import InfeasibleProblem, OptimizationError, OptSettings
from .partition import PartitionPlan
from .qasm import QasmError, format_circuit, load_circuit, parse_circuit

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# inputs

def _builtin(name):
    if name.startswith("qft") and name[3:].isdigit():
        return build_qft(int(name[3:]))
    if name.startswith("identity") and name[8:].isdigit():
        return identity_circuit(int(name[8:]))
    if name == "jones":
        return build_jones_pulse(math.pi / 4).to_circuit()
    if name == "reference-pulse":
        return build_reference_design_pulse().to_circuit()
    if name == "rx":
        return Circuit(1, [make_gate("rx", [math.pi / 4], [0])])
    raise ConfigError(f"unknown builtin circuit {name!r} "
                      "(known: qft<n>, identity<N>, jones, reference-pulse, rx)")


def load_circuit_spec(spec):
    """Circuit from ``builtin:NAME``, a file path, or a config block."""
    if isinstance(spec, dict):
        if "builtin" in spec:
            return _builtin(spec["builtin"])
        if "text" in spec:
            return _parse(spec["text"], "<config>")
        if "file" in spec:
            spec = spec["file"]
        else:
            raise ConfigError("circuit block needs 'builtin', 'file' or 'text'")
    if not isinstance(spec, str) or not spec:
        raise ConfigError("no circuit given (use --circuit or a config 'circuit' block)")
    if spec.startswith("builtin:"):
        return _builtin(spec[8:])
    if not os.path.exists(spec):
        raise ConfigError(f"{spec}: circuit file not found")
    with open(spec, encoding="utf-8") as fh:
        return _parse(fh.read(), spec)


def _parse(text, where):
    try:
        return parse_circuit(text)
    except QasmError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _matrix(x):
    if isinstance(x, dict):
        return np.asarray(x.get("re", 0.0), dtype=float) + 1j * np.asarray(x.get("im", 0.0), dtype=float)
    return np.asarray(x, dtype=complex)


def build_model(circuit, block):
    kind = block.get("kind", "pauli-z")
    delta = float(block.get("delta", 0.0))
    corr = block.get("correlation", "independent")
    if kind == "cce":
        return model_cce(circuit, delta, correlation=corr)
    if kind.startswith("pauli-"):
        return model_pauli(circuit.n, kind[-1], delta, correlation=corr,
                           bound_norm=block.get("bound_norm", "inf"))
    if kind == "custom":
        mats = [_matrix(m) for m in block.get("basis", [])]
        return model_custom(circuit.n, mats, delta, correlation=corr)
    raise ConfigError(f"unknown model kind {kind!r}")


def _split_list(text, cast=str):
    return [cast(t) for t in str(text).split(",") if t.strip()]


def parse_grid(text):
    """``a,b,c`` or ``log:lo:hi:count`` / ``lin:lo:hi:count``."""
    if isinstance(text, list):
        return [float(x) for x in text]
    text = str(text)
    if text.startswith(("log:", "lin:")):
        kind, lo, hi, num = text.split(":")
        lo, hi, num = float(lo), float(hi), int(num)
        if kind == "log":
            return np.logspace(math.log10(lo), math.log10(hi), num).tolist()
        return np.linspace(lo, hi, num).tolist()
    return _split_list(text, float)


def _plan(spec):
    if spec in (None, "", "auto"):
        return PartitionPlan.auto_plan()
    if isinstance(spec, dict):
        return PartitionPlan(tuple(spec.get("cuts", ())), spec.get("methods", "vertex"),
                             bool(spec.get("auto", False)))
    cuts = spec if isinstance(spec, list) else _split_list(spec, int)
    return PartitionPlan(tuple(cuts), "vertex", auto=True)


# ---------------------------------------------------------------------------
# output

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def config_hash(cfg):
    text = json.dumps(_clean(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def envelope(command, cfg, seed, results):
    return {
        "schema": f"qrobust.{command}/1",
        "version": __version__,
        "seed": seed,
        "config_hash": config_hash(cfg),
        "config": _clean(cfg),
        "results": _clean(results),
    }


def emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def dump(doc):
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# config merging

def load_config(path):
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: config file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def effective_config(args):
    cfg = load_config(args.config)
    for block in ("circuit", "model", "analysis", "design", "channel"):
        cfg.setdefault(block, {})
    if getattr(args, "circuit", None):
        cfg["circuit"] = {"file": args.circuit} if not args.circuit.startswith("builtin:") \
            else {"builtin": args.circuit[8:]}
    m = cfg["model"]
    for key in ("model", "delta", "correlation"):
        val = getattr(args, key, None)
        if val is not None:
            m["kind" if key == "model" else key] = val
    a = cfg["analysis"]
    for key in ("gamma_method", "starts", "samples", "deltas", "partition", "bounds"):
        val = getattr(args, key, None)
        if val is not None:
            a[key] = val
    cfg["seed"] = args.seed if args.seed is not None else cfg.get("seed", 0)
    return cfg


def _settings(cfg, args, default_starts=100):
    a = cfg["analysis"]
    return OptSettings(starts=int(a.get("starts", default_starts)), seed=int(cfg["seed"]),
                       workers=max(1, int(args.threads or 1)))


def _methods(a, default):
    val = a.get("gamma_method", default)
    return _split_list(val) if isinstance(val, str) else list(val)


# ---------------------------------------------------------------------------
# commands

def cmd_bound(args, cfg):
    circuit = load_circuit_spec(cfg["circuit"])
    model = build_model(circuit, cfg["model"]).resolve(len(circuit))
    a = cfg["analysis"]
    settings = _settings(cfg, args)
    N = len(circuit)
    out = {"N": N, "n": circuit.n, "delta": model.delta, "level": model.level, "bounds": {}, "gamma": {}}
    bounds = a.get("bounds", "direct,gamma,prior")
    bounds = _split_list(bounds) if isinstance(bounds, str) else list(bounds)
    if "direct" in bounds:
        b = bound_direct(circuit, model, settings)
        ing = dict(b.ingredients)
        ing.pop("top_values", None)
        out["bounds"]["direct"] = {"value": b.value, "ingredients": ing}
    if "gamma" in bounds:
        for m in _methods(a, "opt,norm"):
            g = compute_gamma(circuit, model, m, settings, plan=_plan(a.get("partition")))
            out["gamma"][m] = {"value": g.value, "diagnostics": _gamma_diag(g)}
            out["bounds"][f"gamma_{m}"] = {"value": bound_gamma(model.level, N, g.value).value}
    if "prior" in bounds and model.kind == "cce":
        out["bounds"]["prior"] = {"value": bound_prior(circuit, model.delta).value}
    return out


def _gamma_diag(g):
    d = dict(g.diagnostics)
    for k in ("best_trace", "top_values"):
        d.pop(k, None)
    if g.argmax_theta is not None:
        d["argmax_theta"] = g.argmax_theta
    return d


def cmd_gamma(args, cfg):
    circuit = load_circuit_spec(cfg["circuit"])
    model = build_model(circuit, cfg["model"]).resolve(len(circuit))
    a = cfg["analysis"]
    settings = _settings(cfg, args)
    out = {"N": len(circuit), "n_params": model.n_params, "gamma": {}}
    for m in _methods(a, "opt,norm,vertex"):
        g = compute_gamma(circuit, model, m, settings, plan=_plan(a.get("partition")))
        out["gamma"][m] = {"value": g.value, "diagnostics": _gamma_diag(g)}
    if "target" in a:
        out["threshold_delta"] = {m: threshold_delta(len(circuit), v["value"], float(a["target"]))
                                  for m, v in out["gamma"].items()}
    return out


def cmd_sample(args, cfg):
    circuit = load_circuit_spec(cfg["circuit"])
    model = build_model(circuit, cfg["model"])
    a = cfg["analysis"]
    st = sample_fidelity(circuit, model, int(a.get("samples", 10_000)), int(cfg["seed"]),
                         workers=max(1, int(args.threads or 1)))
    counts, edges = st.histogram
    return {"worst": st.worst, "mean": st.mean, "n_samples": len(st.fidelities),
            "argmin_theta": st.argmin_theta, "histogram": {"counts": counts, "edges": edges}}


def cmd_sweep(args, cfg):
    circuit = load_circuit_spec(cfg["circuit"])
    model = build_model(circuit, cfg["model"])
    a = cfg["analysis"]
    methods = a.get("bounds", "direct,opt,norm,vertex,prior")
    methods = _split_list(methods) if isinstance(methods, str) else list(methods)
    rows = sweep(circuit, model, parse_grid(a.get("deltas", "log:1e-4:1e-2:5")), methods,
                 int(a.get("samples", 1000)), int(cfg["seed"]), _settings(cfg, args, 20),
                 workers=max(1, int(args.threads or 1)))
    return rows


def cmd_design(args, cfg):
    d = cfg["design"]
    kind = d.get("problem", "pulse")
    if kind != "pulse":
        raise ConfigError(f"unknown design problem {kind!r} (known: pulse)")
    beta = float(d.get("beta", math.pi / 4))
    delta = float(d.get("delta", cfg["model"].get("delta", 0.05) or 0.05))
    problem = pulse_design_problem(beta, delta,
                                   systematic_threshold=float(d.get("systematic_threshold", 0.999995)),
                                   max_target_infidelity=float(d.get("max_target_infidelity", 1e-6)))
    settings = OptSettings(starts=int(d.get("starts", cfg["analysis"].get("starts", 1))),
                           max_iters=int(d.get("max_iters", 100)), seed=int(cfg["seed"]))
    x, report = design(problem, settings)
    circuit = problem.template(x)
    text = format_circuit(circuit)
    if args.emit:
        with open(args.emit, "w", encoding="utf-8") as fh:
            fh.write(text)
    return {"eta": x, "circuit": text, "report": report}


def cmd_channel(args, cfg):
    circuit = load_circuit_spec(cfg["circuit"])
    ch = cfg["channel"]
    delta = float(ch.get("delta", cfg["model"].get("delta", 0.0) or 0.0))
    kind = ch.get("error", "dephasing")
    if kind == "dephasing":
        model = model_dephasing(circuit.n, delta)
    elif kind == "lindblad":
        basis = [LindbladChannel(_matrix(g.get("K", np.zeros((circuit.dim, circuit.dim)))),
                                 tuple(_matrix(L) for L in g.get("dissipators", [])))
                 for g in ch.get("generators", [])]
        if not basis:
            raise ConfigError("channel block with error=lindblad needs 'generators'")
        model = model_generators(circuit.n, basis, delta)
    else:
        raise ConfigError(f"unknown channel error {kind!r} (known: dephasing, lindblad)")
    model = model.resolve(len(circuit))
    A = circuit_superops(circuit)
    settings = _settings(cfg, args)
    method = ch.get("gamma_method", "vertex" if model.n_params <= 22 else "opt")
    g = channel_gamma(A, model, method, settings)
    worst = bound_channel_worst(circuit.n, len(circuit), model.level, g.value)
    out = {"N": len(circuit), "n": circuit.n, "level": model.level, "gamma": g.value,
           "gamma_method": method, "bound_worst": worst.value}
    samples = int(ch.get("samples", 0))
    if samples:
        rng = np.random.Generator(np.random.Philox(int(cfg["seed"])))
        b = model.coordinate_bounds()
        ideal = compose(A)
        est = []
        for _ in range(samples):
            theta = rng.uniform(0.0, 1.0, size=b.size) * b
            noisy = compose(noisy_superops(A, model, theta))
            inst = bound_channel_instance(A, model.hamiltonians(theta))
            f = estimate_fmin(ideal, noisy, samples=int(ch.get("states", 200)),
                              seed=int(cfg["seed"]), polish=2)
            est.append({"theta": theta, "bound_instance": inst.value, "fmin_estimate": f.value})
        out["samples"] = est
    return out


COMMANDS = {
    "bound": cmd_bound,
    "gamma": cmd_gamma,
    "sweep": cmd_sweep,
    "sample": cmd_sample,
    "design": cmd_design,
    "channel": cmd_channel,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), help="output format")
    common.add_argument("--circuit", help="circuit file or builtin:NAME")
    common.add_argument("--model", help="cce, pauli-x, pauli-y, pauli-z")
    common.add_argument("--delta", type=float, help="error level")
    common.add_argument("--correlation", choices=("independent", "systematic"))
    common.add_argument("--starts", type=int, help="optimizer starts")

    p = argparse.ArgumentParser(prog="qrobust", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    b = sub.add_parser("bound", parents=[common], help="worst-case fidelity bounds")
    b.add_argument("--gamma-method", dest="gamma_method", help="comma list of opt,norm,vertex,partition")
    b.add_argument("--bounds", help="comma list of direct,gamma,prior")
    b.add_argument("--partition", help="'auto' or comma-separated cut points")
    g = sub.add_parser("gamma", parents=[common], help="robustness measure gamma")
    g.add_argument("--gamma-method", dest="gamma_method", help="comma list of opt,norm,vertex,partition")
    g.add_argument("--partition", help="'auto' or comma-separated cut points")
    s = sub.add_parser("sweep", parents=[common], help="bounds and sampling over a delta grid")
    s.add_argument("--deltas", help="a,b,c or log:lo:hi:count")
    s.add_argument("--samples", type=int)
    s.add_argument("--bounds", help="comma list of direct,opt,norm,vertex,prior")
    m = sub.add_parser("sample", parents=[common], help="Monte Carlo fidelity statistics")
    m.add_argument("--samples", type=int)
    d = sub.add_parser("design", parents=[common], help="composite-pulse design")
    d.add_argument("--emit", help="write the designed circuit to this file")
    sub.add_parser("channel", parents=[common], help="bounds for Lindblad-type errors")
    return p


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args)
        result = COMMANDS[args.command](args, cfg)
    except (ConfigError, ValidationError, QasmError, VertexCapacityError) as exc:
        print(f"qrobust: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OptimizationError, InfeasibleProblem, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"qrobust: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    fmt = args.format or ("csv" if args.command == "sweep" else "json")
    if fmt == "csv":
        if args.command != "sweep":
            print("qrobust: error: csv output is only available for sweep", file=sys.stderr)
            return EXIT_CONFIG
        text = sweep_csv(result, {"version": __version__, "seed": cfg["seed"],
                                  "config_hash": config_hash(cfg)})
    else:
        if args.command == "sweep":
            result = [dict(r.values, errors=r.errors) for r in result]
        text = dump(envelope(args.command, cfg, cfg["seed"], result))
    emit(args, text)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))
