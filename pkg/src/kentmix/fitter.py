"""Block successive lower-bound maximization of the approximate likelihood.

Each iteration runs two block updates, each minorizing the approximate
log-likelihood at the current parameters:

* shapes: mixing weights in closed form, then each component's
  ``(beta, kappa)`` from its concave subproblem;
* frames: each component's orientation by monotone Stiefel ascent.

Both blocks can only raise the approximate log-likelihood, which is
tracked per iteration and checked for monotonicity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from kentmix.errors import (
    DegenerateDataError,
    DomainError,
    FitError,
    RetractionError,
    UnboundedObjectiveError,
)
from kentmix.model import (
    DEFAULT_BBAR,
    DEFAULT_KBAR,
    KentParams,
    MixtureModel,
    approx_log_likelihood,
    as_points,
    fsum_columns,
    responsibilities,
)
from kentmix.sampling import sample_uniform_frame
from kentmix.shape import ShapeCoefficients, solve_shape
from kentmix.stiefel import AscentConfig, FrameObjective, ascend_frame, moment_init_frame

logger = logging.getLogger(__name__)

KAPPA_MAX = 700.0
# Components whose total responsibility is below this are treated as empty.
EMPTY_MASS = 1e-10
MONOTONE_SLACK = 1e-8
STOP_WINDOW = 3
LLOYD_ITERATIONS = 10

InitMethod = Literal["spherical_kmeans", "random_frames"]


@dataclass(frozen=True)
class FitConfig:
    g: int = 1
    max_iterations: int = 100
    rel_tol: float = 1e-8
    restarts: int = 10
    seed: int = 0
    bbar: float = DEFAULT_BBAR
    kbar: float = DEFAULT_KBAR
    init_method: InitMethod = "spherical_kmeans"
    kappa_max: float = KAPPA_MAX
    ascent: AscentConfig = field(default_factory=AscentConfig)
    record_iterates: bool = False

    def __post_init__(self):
        if self.g < 1:
            raise DomainError("g must be at least 1")
        if self.max_iterations < 0:
            raise DomainError("max_iterations must be nonnegative")
        if self.rel_tol < 0.0:
            raise DomainError("rel_tol must be nonnegative")
        if self.restarts < 1:
            raise DomainError("restarts must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if not (self.bbar > 0.0 and self.kbar > 0.0):
            raise DomainError("floors bbar and kbar must be positive")
        if self.init_method not in ("spherical_kmeans", "random_frames"):
            raise DomainError(f"unknown init_method {self.init_method!r}")
        if not self.kappa_max > self.kbar + 2.0 * self.bbar:
            raise DomainError("kappa_max must exceed kbar + 2 * bbar")


@dataclass
class FitReport:
    model: MixtureModel
    loglik_trace: list[float]
    iterations_run: int
    converged: bool
    monotonicity_violations: int
    restart_index_of_best: int
    initial_loglik: float = math.nan
    restart_logliks: list[float] = field(default_factory=list)
    param_drift: list[float] = field(default_factory=list)
    degenerate_components: list[int] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    iterates: list[MixtureModel] = field(default_factory=list)

    @property
    def final_loglik(self) -> float:
        return self.loglik_trace[-1] if self.loglik_trace else self.initial_loglik


# -- block pieces -------------------------------------------------------------


def compute_block_coefficients(points, resp: np.ndarray, model: MixtureModel) -> list[ShapeCoefficients | None]:
    """Per-component coefficients ``(a, b, c)`` of the shape subproblem.

    ``a = sum tau / 2``, ``b = sum tau (x.xi1 - 1)``,
    ``c = sum tau ((x.xi2)^2 - (x.xi3)^2)``. Components with (numerically)
    zero total responsibility get ``None``.
    """
    pts = as_points(points)
    resp = np.asarray(resp, dtype=np.float64)
    if resp.shape != (pts.shape[0], model.g):
        raise DomainError("responsibilities must have shape (n, g)")
    mass = fsum_columns(resp)
    out: list[ShapeCoefficients | None] = []
    for z, comp in enumerate(model.components):
        if mass[z] <= EMPTY_MASS:
            out.append(None)
            continue
        proj = pts @ comp.frame
        tau = resp[:, z]
        b = math.fsum((tau * (proj[:, 0] - 1.0)).tolist())
        c = math.fsum((tau * (proj[:, 1] ** 2 - proj[:, 2] ** 2)).tolist())
        out.append(ShapeCoefficients(0.5 * mass[z], b, c))
    return out


def update_weights(resp: np.ndarray) -> np.ndarray:
    """Mixing weights as column means of the responsibilities."""
    resp = np.asarray(resp, dtype=np.float64)
    weights = fsum_columns(resp) / resp.shape[0]
    return weights / math.fsum(weights.tolist())


def _clamp_to_cap(current: KentParams, beta: float, kappa: float, kappa_max: float) -> tuple[float, float]:
    # Walk from the current (feasible) point towards the optimum and stop at the
    # cap; concavity keeps the objective at least at its current value.
    if kappa <= kappa_max or current.kappa > kappa_max:
        return beta, kappa
    lam = (kappa_max - current.kappa) / (kappa - current.kappa)
    return current.beta + lam * (beta - current.beta), kappa_max


def _shapes_block(pts, model, cfg, resp, degenerate):
    weights = update_weights(resp)
    comps = []
    for z, (comp, coef) in enumerate(zip(model.components, compute_block_coefficients(pts, resp, model))):
        if coef is None:
            degenerate.add(z)
            comps.append(comp)
            continue
        try:
            sol = solve_shape(coef, cfg.bbar, cfg.kbar)
        except UnboundedObjectiveError:
            # Only possible when all weighted mass sits exactly on xi1 (b = 0):
            # the objective then rises with kappa and falls with beta.
            degenerate.add(z)
            comps.append(comp.replace(beta=cfg.bbar, kappa=max(comp.kappa, cfg.kappa_max)))
            continue
        beta, kappa = _clamp_to_cap(comp, sol.beta, sol.kappa, cfg.kappa_max)
        if kappa - 2.0 * beta < cfg.kbar or beta < cfg.bbar:
            comps.append(comp)
            continue
        comps.append(comp.replace(beta=beta, kappa=kappa))
    return MixtureModel(weights, comps)


def _frames_block(pts, model, cfg, resp, degenerate):
    mass = fsum_columns(resp)
    comps = []
    for z, comp in enumerate(model.components):
        if mass[z] <= EMPTY_MASS:
            degenerate.add(z)
            comps.append(comp)
            continue
        obj = FrameObjective.from_data(pts, resp[:, z], comp.kappa, comp.beta)
        frame = ascend_frame(comp.frame, obj, cfg.ascent)
        comps.append(comp.replace(frame=frame))
    return MixtureModel(model.weights, comps)


def bslm_step(
    points,
    model: MixtureModel,
    block: Literal["shapes", "frames"],
    cfg: FitConfig | None = None,
    degenerate: set[int] | None = None,
) -> MixtureModel:
    """One block update. The other block is copied verbatim.

    Responsibilities are recomputed from ``model`` first. Degenerate
    components (empty, or with an unbounded shape problem) keep their
    parameters and are added to ``degenerate`` when a set is passed.
    """
    pts = as_points(points)
    cfg = cfg or FitConfig(g=model.g)
    degenerate = set() if degenerate is None else degenerate
    resp = responsibilities(pts, model)
    if block == "shapes":
        return _shapes_block(pts, model, cfg, resp, degenerate)
    if block == "frames":
        return _frames_block(pts, model, cfg, resp, degenerate)
    raise DomainError(f"unknown block {block!r}")


# -- initialization -----------------------------------------------------------


def _kappa_from_resultant(rbar: float, cfg: FitConfig) -> float:
    lo = cfg.kbar + 2.0 * cfg.bbar + 1e-3
    if rbar >= 1.0:
        return cfg.kappa_max
    kappa = rbar * (3.0 - rbar * rbar) / (1.0 - rbar * rbar)
    return float(min(max(kappa, lo), cfg.kappa_max))


def _spherical_kmeans(pts: np.ndarray, g: int, rng: np.random.Generator) -> np.ndarray:
    n = pts.shape[0]
    centers = np.empty((g, 3))
    centers[0] = pts[rng.integers(n)]
    for k in range(1, g):
        dissim = np.clip(1.0 - np.max(pts @ centers[:k].T, axis=1), 0.0, None)
        total = dissim.sum()
        idx = rng.integers(n) if total <= 0.0 else rng.choice(n, p=dissim / total)
        centers[k] = pts[idx]
    labels = np.argmax(pts @ centers.T, axis=1)
    for _ in range(LLOYD_ITERATIONS):
        sims = pts @ centers.T
        labels = np.argmax(sims, axis=1)
        farthest = np.argsort(-(1.0 - sims[np.arange(n), labels]), kind="stable")
        used = 0
        for k in range(g):
            members = labels == k
            resultant = pts[members].sum(axis=0)
            norm = np.linalg.norm(resultant)
            if members.any() and norm > 1e-12:
                centers[k] = resultant / norm
            else:
                centers[k] = pts[farthest[used % n]]
                used += 1
    return np.argmax(pts @ centers.T, axis=1)


def initialize(points, cfg: FitConfig, restart_index: int = 0) -> MixtureModel:
    """Starting model for one restart; deterministic in ``(cfg.seed, restart_index)``."""
    pts = as_points(points)
    n = pts.shape[0]
    if n < cfg.g:
        raise DomainError(f"need at least g={cfg.g} points, got {n}")
    rng = np.random.default_rng([cfg.seed, restart_index])
    g = cfg.g
    if cfg.init_method == "random_frames":
        comps = [KentParams(1.0, 10.0, sample_uniform_frame(rng)) for _ in range(g)]
        return MixtureModel(np.full(g, 1.0 / g), comps)

    labels = _spherical_kmeans(pts, g, rng)
    counts = np.bincount(labels, minlength=g).astype(float)
    comps = []
    for k in range(g):
        members = (labels == k).astype(float)
        if counts[k] == 0:
            comps.append(KentParams(1.0, 10.0, sample_uniform_frame(rng)))
            continue
        try:
            frame = moment_init_frame(pts, members)
        except DegenerateDataError:
            frame = sample_uniform_frame(rng)
        rbar = float(np.linalg.norm(members @ pts) / counts[k])
        kappa = _kappa_from_resultant(rbar, cfg)
        comps.append(KentParams(min(kappa / 4.0, 1.0), kappa, frame))
    weights = np.maximum(counts, 1.0)
    return MixtureModel(weights / weights.sum(), comps)


# -- driver -----------------------------------------------------------------


def _param_distance(a: MixtureModel, b: MixtureModel) -> float:
    diff = [a.weights - b.weights, a.betas - b.betas, a.kappas - b.kappas, (a.frames - b.frames).ravel()]
    return float(np.linalg.norm(np.concatenate([d.ravel() for d in diff])))


def _run_once(pts: np.ndarray, model: MixtureModel, cfg: FitConfig) -> FitReport:
    degenerate: set[int] = set()
    prev = approx_log_likelihood(pts, model)
    report = FitReport(
        model=model,
        loglik_trace=[],
        iterations_run=0,
        converged=False,
        monotonicity_violations=0,
        restart_index_of_best=0,
        initial_loglik=prev,
    )
    quiet = 0
    for _ in range(cfg.max_iterations):
        new = bslm_step(pts, model, "shapes", cfg, degenerate)
        new = bslm_step(pts, new, "frames", cfg, degenerate)
        ll = approx_log_likelihood(pts, new)
        if ll < prev - MONOTONE_SLACK * (1.0 + abs(prev)):
            report.monotonicity_violations += 1
            logger.warning("log-likelihood decreased from %r to %r", prev, ll)
        report.param_drift.append(_param_distance(new, model))
        report.loglik_trace.append(ll)
        if cfg.record_iterates:
            report.iterates.append(new)
        report.iterations_run += 1
        model = new
        if cfg.rel_tol > 0.0:
            quiet = quiet + 1 if abs(ll - prev) <= cfg.rel_tol * abs(prev) else 0
            if quiet >= STOP_WINDOW:
                report.converged = True
                prev = ll
                break
        prev = ll
    report.model = model
    report.degenerate_components = sorted(degenerate)
    if degenerate:
        report.warnings.append(f"degenerate components held fixed: {sorted(degenerate)}")
    return report


def fit(points, cfg: FitConfig, init_model: MixtureModel | None = None) -> FitReport:
    """Fit a ``cfg.g``-component Kent mixture; best of ``cfg.restarts`` runs.

    With ``init_model`` the restarts are skipped and the run starts there.
    A restart in which any component became degenerate (empty, or with
    all of its mass on its mean direction) is not eligible as the best.

    Raises:
        DomainError: if there are fewer points than components.
        FitError: if every restart fails or is degenerate.
    """
    pts = as_points(points)
    if pts.shape[0] < cfg.g:
        raise DomainError(f"need at least g={cfg.g} points, got {pts.shape[0]}")
    if init_model is not None:
        if init_model.g != cfg.g:
            raise DomainError("init_model has the wrong number of components")
        report = _run_once(pts, init_model, cfg)
        report.restart_logliks = [report.final_loglik]
        return report

    best: FitReport | None = None
    logliks: list[float] = []
    failures: list[str] = []
    for r in range(cfg.restarts):
        try:
            report = _run_once(pts, initialize(pts, cfg, r), cfg)
        except (DomainError, ArithmeticError, RetractionError, FloatingPointError) as exc:
            failures.append(f"restart {r} failed: {exc}")
            logliks.append(-math.inf)
            continue
        report.restart_index_of_best = r
        logliks.append(report.final_loglik)
        if report.degenerate_components:
            failures.append(f"restart {r} degenerate: components {report.degenerate_components}")
            continue
        if best is None or report.final_loglik > best.final_loglik:
            best = report
    if best is None:
        raise FitError("all restarts failed or were degenerate: " + "; ".join(failures))
    best.restart_logliks = logliks
    best.warnings.extend(failures)
    return best


def with_g(cfg: FitConfig, g: int) -> FitConfig:
    return replace(cfg, g=g)
