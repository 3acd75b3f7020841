"""Order selection with a BIC-like criterion, MAP clustering and the ARI."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from kentmix.errors import DomainError, FitError
from kentmix.fitter import FitConfig, FitReport, fit
from kentmix.model import MixtureModel, as_points, weighted_log_densities

logger = logging.getLogger(__name__)

# Free parameters counted per component (weight, beta, kappa and the full
# 3x3 frame, as in the criterion's derivation).
PARAMS_PER_COMPONENT = 11


def penalty(g: int, n: int) -> float:
    return PARAMS_PER_COMPONENT * g / 2.0 * math.log(n)


def bic_criterion(loglik: float, g: int, n: int) -> float:
    """``-loglik + (11 g / 2) log n``; smaller is better."""
    if g < 1 or n < 1:
        raise DomainError("g and n must be positive")
    return -loglik + penalty(g, n)


@dataclass
class SelectionRow:
    g: int
    loglik: float
    penalty: float
    criterion: float
    report: FitReport


@dataclass
class SelectionTable:
    rows: list[SelectionRow]
    selected_g: int
    warnings: list[str] = field(default_factory=list)

    @property
    def selected(self) -> SelectionRow:
        return next(r for r in self.rows if r.g == self.selected_g)

    def criteria(self) -> dict[int, float]:
        return {r.g: r.criterion for r in self.rows}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["g", "loglik", "penalty", "criterion", "selected"])
        for r in self.rows:
            writer.writerow(
                [r.g, format(r.loglik, ".17g"), format(r.penalty, ".17g"),
                 format(r.criterion, ".17g"), int(r.g == self.selected_g)]
            )
        return buf.getvalue()


def choose_g(criteria: dict[int, float]) -> int:
    """Argmin of the criterion; ties go to the smallest g."""
    return min(sorted(criteria), key=lambda g: criteria[g])


def select_g(points, g_min: int, g_max: int, cfg: FitConfig) -> SelectionTable:
    """Fit every ``g`` in ``[g_min, g_max]`` and pick the criterion minimizer.

    A ``g`` whose fit fails is left out of the table with a warning.

    Raises:
        DomainError: on an empty or invalid range, or ``n < g_max``.
        FitError: if every ``g`` fails.
    """
    pts = as_points(points)
    n = pts.shape[0]
    if not 1 <= g_min <= g_max:
        raise DomainError(f"need 1 <= g_min <= g_max, got {g_min}, {g_max}")
    if n < g_max:
        raise DomainError(f"need at least g_max={g_max} points, got {n}")
    rows, warnings = [], []
    for g in range(g_min, g_max + 1):
        try:
            report = fit(pts, replace(cfg, g=g))
        except (FitError, DomainError, ArithmeticError) as exc:
            msg = f"g={g} excluded: {exc}"
            logger.warning(msg)
            warnings.append(msg)
            continue
        ll = report.final_loglik
        rows.append(SelectionRow(g, ll, penalty(g, n), bic_criterion(ll, g, n), report))
    if not rows:
        raise FitError("no value of g could be fitted")
    selected = choose_g({r.g: r.criterion for r in rows})
    return SelectionTable(rows, selected, warnings)


def map_classify(points, model: MixtureModel) -> np.ndarray:
    """1-based plug-in MAP labels, ``argmax_z log pi_z + log f~(x; psi_z)``.

    ``np.argmax`` returns the first maximizer, so ties go to the smallest index.
    """
    pts = as_points(points)
    return np.argmax(weighted_log_densities(pts, model), axis=1) + 1


def _pairs(x):
    return x * (x - 1) / 2.0


def adjusted_rand_index(a, b) -> float:
    """Adjusted Rand index of two labelings from their contingency table.

    Returns 1.0 when both partitions are trivial in the same way (the
    chance-corrected index is 0/0 there).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError("labelings must be 1-D and of equal length")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max(initial=-1) + 1, ib.max(initial=-1) + 1))
    np.add.at(table, (ia, ib), 1.0)
    index = _pairs(table).sum()
    rows = _pairs(table.sum(axis=1)).sum()
    cols = _pairs(table.sum(axis=0)).sum()
    total = _pairs(float(a.size))
    if total == 0:
        return 1.0
    expected = rows * cols / total
    max_index = 0.5 * (rows + cols)
    if max_index == expected:
        return 1.0
    return float((index - expected) / (max_index - expected))
