"""Plain-text interchange formats used by the CLI.

SCM files::

    M N provenance
    re,im re,im ...        (M lines of M entries)

Floats are written with ``repr`` so a read-back is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .array_model import ArrayConfig, CovarianceEstimate
from .beam_sweep import CorrelationSet, SweepPlan


def format_scm(est: CovarianceEstimate, N: int) -> str:
    M = est.M
    lines = [f"{M} {N} {est.provenance}"]
    for row in est.matrix:
        lines.append(" ".join(f"{z.real!r},{z.imag!r}" for z in row.tolist()))
    return "\n".join(lines) + "\n"


def parse_scm(text: str):
    """Return ``(CovarianceEstimate, N)`` parsed from SCM text."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty SCM file")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError("SCM header must read 'M N provenance'")
    M, N, prov = int(head[0]), int(head[1]), head[2]
    if len(lines) != M + 1:
        raise ValueError(f"expected {M} matrix rows, found {len(lines) - 1}")
    R = np.empty((M, M), dtype=np.complex128)
    for i, line in enumerate(lines[1:]):
        entries = line.split()
        if len(entries) != M:
            raise ValueError(f"row {i} has {len(entries)} entries, expected {M}")
        for j, e in enumerate(entries):
            re, im = e.split(",")
            R[i, j] = complex(float(re), float(im))
    return CovarianceEstimate(R, prov), N


def write_scm(path, est: CovarianceEstimate, N: int) -> None:
    Path(path).write_text(format_scm(est, N))


def read_scm(path):
    return parse_scm(Path(path).read_text())


def correlations_to_json(cfg: ArrayConfig, corr: CorrelationSet) -> str:
    if corr.plan is None:
        raise ValueError("correlation set has no plan attached")
    vals = [
        [n1, n2, q, corr.values[n1, n2, q].real.item(), corr.values[n1, n2, q].imag.item()]
        for n1 in range(corr.N)
        for n2 in range(corr.N)
        for q in range(corr.Q)
    ]
    doc = {
        "M": cfg.M,
        "N": cfg.N,
        "d_over_lambda": cfg.d_over_lambda,
        "plan": {"family": corr.plan.family, "angles_deg": list(corr.plan.angles_deg)},
        "samples_per_beam": corr.samples_per_beam,
        "source": corr.source,
        "values": vals,
    }
    return json.dumps(doc, indent=1)


def correlations_from_json(text: str):
    """Return ``(ArrayConfig, CorrelationSet)``."""
    doc = json.loads(text)
    cfg = ArrayConfig(doc["M"], doc["N"], doc.get("d_over_lambda", 0.5))
    plan = SweepPlan(tuple(doc["plan"]["angles_deg"]), doc["plan"]["family"])
    values = np.zeros((cfg.N, cfg.N, plan.Q), dtype=np.complex128)
    for n1, n2, q, re, im in doc["values"]:
        values[n1, n2, q] = complex(re, im)
    return cfg, CorrelationSet(values, doc.get("samples_per_beam"), doc["source"], plan)
