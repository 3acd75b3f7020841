"""Simulation protocols S1-S4 and their error metrics.

S1: three vMF components (kappa 10, equal weights) centred on e1, e2, e3.
S2: six vMF components (kappa 20, equal weights) centred on -e1..-e3, e1..e3.
S3: five vMF components (kappa 10, equal weights) with Haar-random frames;
    the number of components is chosen over g = 2..10.
S4: S1 data, clustered with the plug-in MAP rule and scored with the ARI.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Literal

import numpy as np

from kentmix.errors import DomainError, FitError
from kentmix.fitter import FitConfig, fit
from kentmix.model import KentParams, MixtureModel
from kentmix.sampling import generate_mixture_sample, sample_uniform_frame
from kentmix.selection import adjusted_rand_index, map_classify, select_g
from kentmix.stiefel import complete_frame

Study = Literal["S1", "S2", "S3", "S4"]
S3_G_RANGE = (2, 10)


@dataclass(frozen=True)
class StudySpec:
    study: Study
    n: int = 1000
    reps: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.study not in ("S1", "S2", "S3", "S4"):
            raise DomainError(f"unknown study {self.study!r}")
        if self.n < 1 or self.reps < 1:
            raise DomainError("n and reps must be positive")
        if self.seed < 0:
            raise DomainError("seed must be nonnegative")


@dataclass
class RepRecord:
    rep: int
    sq_err_pi: list[float] = field(default_factory=list)
    sq_err_kappa: list[float] = field(default_factory=list)
    sq_err_xi: list[float] = field(default_factory=list)
    match_angle_deg: list[float] = field(default_factory=list)
    ari: float | None = None
    selected_g: int | None = None
    criteria: dict[int, float] = field(default_factory=dict)
    final_loglik: float | None = None
    monotonicity_violations: int = 0


@dataclass
class StudyResult:
    study: str
    n: int
    reps: int
    seed: int
    failures: int = 0
    mse_pi: float | None = None
    mse_kappa: float | None = None
    mse_xi: list[float] | None = None
    ari_mean: float | None = None
    bic_selection_counts: dict[int, int] | None = None
    mean_criterion: dict[int, float] | None = None
    per_rep: list[RepRecord] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _vmf_model(means, kappa: float, weights=None) -> MixtureModel:
    g = len(means)
    weights = np.full(g, 1.0 / g) if weights is None else weights
    # beta = 0: the component is von Mises-Fisher and xi2, xi3 are arbitrary.
    return MixtureModel(weights, [KentParams(0.0, kappa, complete_frame(m)) for m in means])


def truth_model(study: Study, rng: np.random.Generator | None = None) -> MixtureModel:
    """Generative model for a study; S3 draws its frames from ``rng``."""
    eye = np.eye(3)
    if study in ("S1", "S4"):
        return _vmf_model(list(eye), 10.0)
    if study == "S2":
        return _vmf_model(list(-eye) + list(eye), 20.0)
    if study == "S3":
        if rng is None:
            raise DomainError("S3 needs a generator for its random frames")
        frames = [sample_uniform_frame(rng) for _ in range(5)]
        return MixtureModel(np.full(5, 0.2), [KentParams(0.0, 10.0, f) for f in frames])
    raise DomainError(f"unknown study {study!r}")


def match_components(fitted_means: np.ndarray, true_means: np.ndarray) -> list[int]:
    """Greedy matching by largest ``|cos|`` between mean directions.

    Returns, for each true component, the index of its fitted partner.
    """
    fitted_means = np.asarray(fitted_means)
    true_means = np.asarray(true_means)
    sims = np.abs(true_means @ fitted_means.T)
    match = [-1] * len(true_means)
    free_t, free_f = set(range(len(true_means))), set(range(len(fitted_means)))
    while free_t and free_f:
        t, f = max(((t, f) for t in sorted(free_t) for f in sorted(free_f)), key=lambda tf: sims[tf])
        match[t] = f
        free_t.discard(t)
        free_f.discard(f)
    return match


def _rep_seeds(seed: int, rep: int) -> tuple[np.random.Generator, int]:
    data_rng = np.random.default_rng([seed, rep, 0])
    fit_seed = int(np.random.SeedSequence([seed, rep, 1]).generate_state(1, dtype=np.uint64)[0])
    return data_rng, fit_seed


def _parameter_errors(record: RepRecord, est: MixtureModel, truth: MixtureModel) -> None:
    true_means = np.array([c.mean_direction for c in truth.components])
    est_means = np.array([c.mean_direction for c in est.components])
    for z, f in enumerate(match_components(est_means, true_means)):
        xi_hat = est_means[f]
        xi = true_means[z]
        cos = float(xi_hat @ xi)
        aligned = xi_hat if cos >= 0.0 else -xi_hat
        record.sq_err_pi.append(float((est.weights[f] - truth.weights[z]) ** 2))
        record.sq_err_kappa.append(float((est.components[f].kappa - truth.components[z].kappa) ** 2))
        record.sq_err_xi.append(float(np.sum((aligned - xi) ** 2)))
        record.match_angle_deg.append(math.degrees(math.acos(min(1.0, abs(cos)))))


def run_rep(spec: StudySpec, cfg: FitConfig, rep: int) -> RepRecord:
    data_rng, fit_seed = _rep_seeds(spec.seed, rep)
    truth = truth_model(spec.study, data_rng)
    points, labels = generate_mixture_sample(truth, spec.n, data_rng)
    record = RepRecord(rep=rep)
    rcfg = replace(cfg, seed=fit_seed, g=truth.g)
    if spec.study == "S3":
        table = select_g(points, *S3_G_RANGE, rcfg)
        record.selected_g = table.selected_g
        record.criteria = table.criteria()
        record.final_loglik = table.selected.loglik
        record.monotonicity_violations = sum(r.report.monotonicity_violations for r in table.rows)
        return record
    report = fit(points, rcfg)
    record.final_loglik = report.final_loglik
    record.monotonicity_violations = report.monotonicity_violations
    _parameter_errors(record, report.model, truth)
    if spec.study == "S4":
        record.ari = adjusted_rand_index(labels, map_classify(points, report.model))
    return record


def summarize(spec: StudySpec, records: list[RepRecord], failures: int) -> StudyResult:
    result = StudyResult(spec.study, spec.n, spec.reps, spec.seed, failures=failures, per_rep=records)
    if not records:
        return result
    if spec.study == "S3":
        counts: dict[int, int] = {}
        for r in records:
            counts[r.selected_g] = counts.get(r.selected_g, 0) + 1
        result.bic_selection_counts = dict(sorted(counts.items()))
        gs = sorted({g for r in records for g in r.criteria})
        result.mean_criterion = {
            g: float(np.mean([r.criteria[g] for r in records if g in r.criteria])) for g in gs
        }
        return result
    result.mse_pi = float(np.mean([e for r in records for e in r.sq_err_pi]))
    result.mse_kappa = float(np.mean([e for r in records for e in r.sq_err_kappa]))
    result.mse_xi = np.mean([r.sq_err_xi for r in records], axis=0).tolist()
    if spec.study == "S4":
        result.ari_mean = float(np.mean([r.ari for r in records]))
    return result


def run_study(spec: StudySpec, cfg: FitConfig) -> StudyResult:
    """Run every repetition of a study and aggregate its metrics.

    Each repetition derives its own generators from ``(spec.seed, rep)``,
    so results do not depend on execution order. Failed repetitions are
    counted and left out of the aggregates.
    """
    records, failures = [], 0
    for rep in range(spec.reps):
        try:
            records.append(run_rep(spec, cfg, rep))
        except FitError:
            failures += 1
    return summarize(spec, records, failures)
