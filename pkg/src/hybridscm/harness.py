"""Seeded Monte Carlo experiments reproducing the accuracy and complexity studies.

Every random draw descends from ``numpy.random.SeedSequence(seed)``: trial ``t``
uses spawn key ``(t,)`` and beam ``q`` of that trial uses ``(t, q)``. Results
are therefore a pure function of the scenario and do not depend on the order in
which trials or beams are executed.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import metrics
from .array_model import ArrayConfig, SourceScene, generate_snapshots, true_scm
from .beam_sweep import PLAN_FAMILIES, make_plan, measure_correlations, oracle_correlations
from .music import default_grid, music_doas
from .reconstruct import IllConditionedError, multiplication_count, reconstruct_scm, sample_average_scm

SCENARIO_ALGORITHMS = ("sample_average", "basic", "low_complexity", "fast_diagonal")


@dataclass(frozen=True)
class Scenario:
    M: int = 16
    N: int = 2
    d_over_lambda: float = 0.5
    L: int = 4
    snr_db: float = -5.0
    power: float = 1.0
    K: int = 500
    Q: int = 15
    plan_family: str = "uniform_spatial_freq"
    algorithm: str = "low_complexity"
    sigma2: float = 1.0
    trials: int = 20
    seed: int = 1
    music_grid_step_deg: float = 0.1
    dwell: str = "fresh"
    correlation_source: str = "measured"
    run_music: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.algorithm not in SCENARIO_ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.plan_family not in PLAN_FAMILIES:
            raise ValueError(f"unknown plan family {self.plan_family!r}")
        if self.dwell not in ("fresh", "shared"):
            raise ValueError(f"unknown dwell mode {self.dwell!r}")
        if self.correlation_source not in ("measured", "oracle"):
            raise ValueError(f"unknown correlation source {self.correlation_source!r}")
        self.cfg  # validates M, N, spacing

    @property
    def cfg(self) -> ArrayConfig:
        return ArrayConfig(self.M, self.N, self.d_over_lambda)

    @property
    def scene(self) -> SourceScene:
        return SourceScene.equispaced(self.L, self.snr_db, self.power)

    @property
    def knee_Q(self) -> int:
        """Smallest sweep size that identifies every lag, ``2M/N - 1``."""
        return self.cfg.lag_count

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**d)


def trial_seed(seed: int, trial_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(trial_index,))


def run_trial(scenario: Scenario, trial_index: int) -> metrics.TrialResult:
    cfg, scene = scenario.cfg, scenario.scene
    truth = true_scm(cfg, scene)
    ss = trial_seed(scenario.seed, trial_index)
    truths = list(scene.doas_deg)
    if scenario.algorithm == "sample_average":
        est = sample_average_scm(generate_snapshots(cfg, scene, scenario.K, ss))
    else:
        plan = make_plan(scenario.plan_family, scenario.Q)
        if scenario.correlation_source == "oracle":
            corr = oracle_correlations(cfg, truth, plan)
        else:
            corr = measure_correlations(cfg, plan, scene, scenario.K, ss, dwell=scenario.dwell)
        try:
            est = reconstruct_scm(cfg, corr, scenario.algorithm, scenario.sigma2, plan)
        except IllConditionedError as exc:
            return metrics.TrialResult(math.nan, math.nan, [], truths, True, f"ill-conditioned: {exc}")
    err = metrics.nse(est, truth)
    if not scenario.run_music:
        return metrics.TrialResult(err, math.nan, [], truths, False, "")
    doa, _ = music_doas(cfg, est, scene.L, default_grid(scenario.music_grid_step_deg))
    est_list = doa.angles_deg.tolist()
    reason = "fewer spectral peaks than sources" if doa.degenerate else ""
    return metrics.TrialResult(err, metrics.doa_mse(est_list, truths), est_list, truths, doa.degenerate, reason)


def run_trials(scenario: Scenario) -> list:
    idx = range(scenario.trials)
    if scenario.workers <= 1:
        return [run_trial(scenario, i) for i in idx]
    with ThreadPoolExecutor(max_workers=scenario.workers) as pool:
        return list(pool.map(lambda i: run_trial(scenario, i), idx))


class Table:
    """Experiment output: fixed column order, rows sorted by the key columns."""

    def __init__(self, columns, rows, key_columns, trial_count=0, degenerate_count=0):
        self.columns = list(columns)
        self.rows = sorted(rows, key=lambda r: tuple(r[c] for c in key_columns))
        self.trial_count = trial_count
        self.degenerate_count = degenerate_count

    @property
    def all_degenerate(self) -> bool:
        return self.trial_count > 0 and self.degenerate_count == self.trial_count

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow(["" if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in self.columns])
        return buf.getvalue()

    def lookup(self, **key):
        for r in self.rows:
            if all(r[k] == v for k, v in key.items()):
                return r
        return None


def _summarize(scenario: Scenario):
    trials = run_trials(scenario)
    return metrics.aggregate(trials), trials


def experiment_nse_vs_q(base: Scenario, q_list) -> Table:
    """Mean NSE against the sweep size for the basic and lag solvers and both plans."""
    q_list = sorted(set(int(q) for q in q_list))
    if not q_list:
        raise ValueError("q_list is empty")
    base = replace(base, run_music=False)
    rows, total, degen = [], 0, 0
    variants = [
        ("basic", "uniform_spatial_freq"),
        ("low_complexity", "uniform_spatial_freq"),
        ("basic", "uniform_theta"),
    ]
    for alg, fam in variants:
        for Q in q_list:
            if alg == "low_complexity" and Q < base.knee_Q:
                continue
            summary, _ = _summarize(replace(base, algorithm=alg, plan_family=fam, Q=Q))
            total += summary["trial_count"]
            degen += summary["degenerate_count"]
            rows.append({
                "algorithm": alg, "plan_family": fam, "Q": Q,
                "mean_nse": summary["mean_nse"], "trial_count": summary["trial_count"],
            })
    cols = ["algorithm", "plan_family", "Q", "mean_nse", "trial_count"]
    return Table(cols, rows, ["algorithm", "plan_family", "Q"], total, degen)


def experiment_nse_vs_k(base: Scenario, k_list, n_list) -> Table:
    """Mean NSE against samples per beam at ``Q = 2M/N - 1``, with the sample-average baseline."""
    k_list, n_list = list(k_list), list(n_list)
    if not k_list or not n_list:
        raise ValueError("k_list and n_list must be nonempty")
    base = replace(base, run_music=False, plan_family="uniform_spatial_freq")
    rows, total, degen = [], 0, 0
    for N in n_list:
        for K in k_list:
            sc = replace(base, N=int(N), K=int(K))
            sc = replace(sc, Q=sc.knee_Q)
            for alg in ("basic", "low_complexity", "sample_average"):
                summary, _ = _summarize(replace(sc, algorithm=alg))
                total += summary["trial_count"]
                degen += summary["degenerate_count"]
                rows.append({"algorithm": alg, "N": int(N), "K": int(K), "mean_nse": summary["mean_nse"]})
    return Table(["algorithm", "N", "K", "mean_nse"], rows, ["algorithm", "N", "K"], total, degen)


def experiment_music_mse(base: Scenario, snr_list_db, n_list=None) -> Table:
    """MUSIC DOA mean square error on reconstructed versus sample-average SCMs."""
    snr_list_db = list(snr_list_db)
    if not snr_list_db:
        raise ValueError("snr_list_db is empty")
    n_list = list(n_list) if n_list else [base.N]
    recon_alg = base.algorithm if base.algorithm != "sample_average" else "low_complexity"
    base = replace(base, run_music=True, plan_family="uniform_spatial_freq")
    rows, total, degen = [], 0, 0
    for N in n_list:
        for snr in snr_list_db:
            sc = replace(base, N=int(N), snr_db=float(snr))
            sc = replace(sc, Q=sc.knee_Q)
            for alg in (recon_alg, "sample_average"):
                summary, _ = _summarize(replace(sc, algorithm=alg))
                total += summary["trial_count"]
                degen += summary["degenerate_count"]
                rows.append({
                    "algorithm": alg, "N": int(N), "SNR_dB": float(snr),
                    "mean_mse_deg2": summary["mean_mse"], "degenerate_count": summary["degenerate_count"],
                })
    cols = ["algorithm", "N", "SNR_dB", "mean_mse_deg2", "degenerate_count"]
    return Table(cols, rows, ["algorithm", "N", "SNR_dB"], total, degen)


def knee_rule(M: int, N: int) -> int:
    return 2 * M // N - 1


def experiment_complexity(cfg_list, q_rule=knee_rule) -> Table:
    """Online multiplication counts per sub-SCM; exact integers, nothing simulated."""
    cfg_list = list(cfg_list)
    if not cfg_list:
        raise ValueError("cfg_list is empty")
    rows = []
    for cfg in cfg_list:
        Q = int(q_rule(cfg.M, cfg.N))
        rows.append({
            "M": cfg.M, "N": cfg.N, "Q": Q,
            "basic_count": multiplication_count(cfg, Q, "basic"),
            "low_complexity_count": multiplication_count(cfg, Q, "low_complexity"),
        })
    cols = ["M", "N", "Q", "basic_count", "low_complexity_count"]
    return Table(cols, rows, ["M", "N", "Q"])
