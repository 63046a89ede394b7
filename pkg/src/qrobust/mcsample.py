"""Monte Carlo fidelity statistics over sampled admissible errors.

Samples are uniform on the admissible box (or ball, for two-norm models) and
are drawn from a Philox counter-based stream keyed by the seed. Unit-scale
coordinates are drawn first and multiplied by the model level, so the same
seed yields the same sample directions at every ``delta`` and a longer run
extends a shorter one.
"""
import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import io
import math

import numpy as np

from .cohbound import bound_direct_frame, bound_gamma, bound_prior, compute_gamma, fidelity
from .errmodel import SYSTEMATIC, interaction_frame, noisy_unitary
from .matcore import ValidationError
from .optkit import OptSettings

SWEEP_COLUMNS = ("delta", "bound_eq14", "bound_eq17_opt", "bound_eq17_norm", "bound_eq17_vertex",
                 "bound_prior", "mc_worst", "mc_mean", "n_samples", "seed")
SWEEP_SCHEMA = "qrobust.sweep/1"


def rng_for(seed):
    """Philox generator for ``seed``; the documented reproducibility contract."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


def unit_samples(model, num_samples, seed):
    """``num_samples`` admissible parameter vectors at unit level."""
    p = model.n_params
    if p == 0 or num_samples == 0:
        return np.zeros((num_samples, p))
    b = model.coordinate_bounds(unit=True)
    rng = rng_for(seed)
    if model.bound_norm == "inf":
        return rng.uniform(-1.0, 1.0, size=(num_samples, p)) * b
    # uniform in each block's unit ball: radius from one stream, direction from another
    rad_rng = rng
    dir_rng = np.random.Generator(np.random.Philox(key=int(seed)).jumped())
    blocks = [p] if model.correlation == SYSTEMATIC else [e for e in model.ells if e]
    out = []
    for ell in blocks:
        z = dir_rng.standard_normal((num_samples, ell))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        r = rad_rng.uniform(size=(num_samples, 1)) ** (1.0 / ell)
        out.append(z * r)
    return np.concatenate(out, axis=1)


@dataclass
class SampleStats:
    worst: float
    mean: float
    histogram: tuple
    argmin_theta: np.ndarray
    fidelities: np.ndarray = field(repr=False)
    seed: int = 0


def sample_fidelity(circuit, model, num_samples=10_000, seed=0, chunk=512, bins=40, workers=1,
                    unit=None):
    """Fidelity of ``num_samples`` sampled noisy circuits against the ideal one.

    ``unit`` may supply the unit-scale samples directly (reused by sweeps).
    Returns worst and mean fidelity, a histogram and the worst parameters
    (normalised basis coordinates).
    """
    model = model.resolve(len(circuit))
    if unit is None:
        unit = unit_samples(model, num_samples, seed)
    theta = unit * model.level
    target = circuit.unitary()
    if len(theta) == 0:
        return SampleStats(math.nan, math.nan, (np.zeros(bins, int), np.zeros(bins + 1)),
                           np.zeros(model.n_params), np.zeros(0), seed)

    def run(start):
        t = theta[start:start + chunk]
        return np.atleast_1d(fidelity(target, noisy_unitary(circuit, model, t)))

    starts = range(0, len(theta), chunk)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    F = np.concatenate(parts)
    k = int(np.argmin(F))
    counts, edges = np.histogram(F, bins=bins)
    return SampleStats(float(F[k]), float(F.mean()), (counts, edges), theta[k], F, seed)


@dataclass
class SweepRow:
    values: dict
    errors: dict = field(default_factory=dict)


def _safe(errors, key, fn):
    try:
        return fn()
    except (ValidationError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        errors[key] = str(exc)
        return math.nan


def sweep(circuit, model, deltas, methods=("direct", "opt", "norm", "vertex", "prior"),
          num_samples=10_000, seed=0, settings=None, workers=1):
    """Bounds and sampled fidelities at every ``delta`` in ``deltas``.

    ``methods`` picks the bound columns: ``direct`` (commutator bound),
    ``opt``/``norm``/``vertex`` (gamma bound with that backend) and ``prior``
    (only for control-error models). Missing or failed cells are NaN and the
    failure is kept in ``row.errors``.
    """
    deltas = [float(d) for d in deltas]
    if not deltas:
        return []
    settings = settings or OptSettings(starts=50)
    model = model.resolve(len(circuit))
    N = len(circuit)
    frame = interaction_frame(circuit, model)

    gammas, gamma_errors = {}, {}
    for m in ("opt", "norm", "vertex"):
        if m in methods:
            gammas[m] = _safe(gamma_errors, m, lambda m=m: compute_gamma(frame, None, m, settings).value)

    unit = unit_samples(model, num_samples, seed) if num_samples else None
    rows, warm = [], []
    for delta in sorted(deltas):
        errors = dict(gamma_errors)
        mdl = model.with_delta(delta)
        level = mdl.level
        v = dict.fromkeys(SWEEP_COLUMNS, math.nan)
        v.update(delta=delta, n_samples=int(num_samples), seed=int(seed))
        if "direct" in methods:
            def direct():
                res = bound_direct_frame(frame, level, settings, initial_points=warm)
                warm[:] = [res.ingredients["unit_theta"]]
                return res.value
            v["bound_eq14"] = _safe(errors, "direct", direct)
        for m, col in (("opt", "bound_eq17_opt"), ("norm", "bound_eq17_norm"),
                       ("vertex", "bound_eq17_vertex")):
            if m in gammas and not math.isnan(gammas[m]):
                v[col] = bound_gamma(level, N, gammas[m]).value
        if "prior" in methods:
            if model.kind == "cce":
                v["bound_prior"] = _safe(errors, "prior", lambda: bound_prior(circuit, delta).value)
            else:
                errors["prior"] = "prior bound needs a control-error model"
        if num_samples:
            st = sample_fidelity(circuit, mdl, num_samples, seed, unit=unit, workers=workers)
            v["mc_worst"], v["mc_mean"] = st.worst, st.mean
        rows.append(SweepRow(v, errors))
    order = {d: i for i, d in enumerate(deltas)}
    rows.sort(key=lambda r: order[r.values["delta"]])
    return rows


def _cell(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def sweep_csv(rows, meta=None):
    """CSV text: a ``# schema=...`` comment line, then the header and rows.

    ``meta`` entries (e.g. version, config hash) are appended to the comment.
    """
    buf = io.StringIO()
    extra = "".join(f" {k}={v}" for k, v in (meta or {}).items())
    buf.write(f"# schema={SWEEP_SCHEMA}{extra}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        vals = r.values if isinstance(r, SweepRow) else r
        w.writerow([_cell(vals[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()


def read_sweep_csv(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return [{k: float(v) for k, v in row.items()} for row in reader]
