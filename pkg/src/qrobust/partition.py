"""Upper bounds on ``gamma`` by cutting a circuit into contiguous segments.

By the triangle inequality ``N ||G|| <= sum_s ||sum_{j in s} G_j||``, and each
segment term equals ``N_s ||G^s||`` where ``G^s`` is the averaged interaction
Hamiltonian of the segment taken as a circuit of its own (the conjugation by
the earlier layers is unitary and drops out of the norm). Segments are small
enough for exact vertex enumeration and can be processed independently.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cohbound import VERTEX_CAP, GammaResult, VertexCapacityError, compute_gamma
from .errmodel import SYSTEMATIC
from .matcore import ValidationError

_METHODS = ("opt", "vertex", "norm")


@dataclass(frozen=True)
class PartitionPlan:
    """Cut points ``0 < c_1 < ... < c_m < N`` and a method per segment.

    ``methods`` is one name for all segments or one per segment. With
    ``auto`` set, segments too large for vertex enumeration are bisected
    until they fit (explicit cuts, if any, are kept).
    """

    cuts: tuple = ()
    methods: tuple | str = "vertex"
    auto: bool = False

    def __post_init__(self):
        object.__setattr__(self, "cuts", tuple(int(c) for c in self.cuts))
        if any(b <= a for a, b in zip(self.cuts, self.cuts[1:])):
            raise ValidationError(f"cut points must be strictly increasing: {self.cuts}")
        methods = (self.methods,) if isinstance(self.methods, str) else tuple(self.methods)
        for m in methods:
            if m not in _METHODS:
                raise ValidationError(f"unknown segment method {m!r}")

    @classmethod
    def auto_plan(cls, method="vertex"):
        return cls((), method, auto=True)

    def segments(self, N):
        if self.cuts and (self.cuts[0] <= 0 or self.cuts[-1] >= N):
            raise ValidationError(f"cut points {self.cuts} must lie strictly inside (0, {N})")
        edges = (0,) + self.cuts + (N,)
        return list(zip(edges[:-1], edges[1:]))

    def method_for(self, i, count):
        if isinstance(self.methods, str):
            return self.methods
        if len(self.methods) == 1:
            return self.methods[0]
        if len(self.methods) != count:
            raise ValidationError(f"{len(self.methods)} methods for {count} segments")
        return self.methods[i]


def _params(model, a, b):
    ells = model.ells[a:b]
    if model.correlation == SYSTEMATIC:
        return model.shared_ell if ells.sum() else 0
    return int(ells.sum())


def _split(model, a, b, cap):
    """Bisect ``[a, b)`` until every piece has at most ``cap`` parameters."""
    if _params(model, a, b) <= cap:
        return [(a, b)]
    if b - a == 1:
        raise VertexCapacityError(f"layer {a} alone has more than {cap} parameters")
    mid = (a + b) // 2
    return _split(model, a, mid, cap) + _split(model, mid, b, cap)


def gamma_partitioned(circuit, model, plan=None, settings=None, cap=VERTEX_CAP, workers=1):
    """``gamma_part = (1/N) sum_s N_s gamma_s >= gamma``.

    ``gamma_s`` comes from the segment's method applied to the segment alone.
    """
    plan = plan or PartitionPlan.auto_plan()
    N = len(circuit)
    model = model.resolve(N)
    if N == 0:
        return GammaResult(0.0, "partition", None, {"segments": []})
    base = plan.segments(N)
    jobs = []
    for i, (a, b) in enumerate(base):
        method = plan.method_for(i, len(base))
        if plan.auto and method == "vertex":
            jobs.extend((a2, b2, method) for a2, b2 in _split(model, a, b, cap))
        else:
            jobs.append((a, b, method))

    def run(job):
        a, b, method = job
        return compute_gamma(circuit[a:b], model.slice(a, b), method, settings, cap)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    total = sum((b - a) * r.value for (a, b, _), r in zip(jobs, results)) / N
    segs = [{"start": a, "stop": b, "method": m, "gamma": r.value}
            for (a, b, m), r in zip(jobs, results)]
    return GammaResult(float(total), "partition", None,
                       {"segments": segs, "certified": all(r.method != "opt" for r in results)})


def segment_norms(circuit, model, theta, plan):
    """``||sum_{j in s} G_j||`` per segment for a fixed ``theta`` (global frame)."""
    from .errmodel import interaction_hamiltonians
    Gj = interaction_hamiltonians(circuit, model, theta)
    return np.array([np.linalg.norm(Gj[a:b].sum(axis=0), 2) for a, b in plan.segments(len(circuit))])
