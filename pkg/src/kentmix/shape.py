"""Exact solver for the per-component (beta, kappa) subproblem.

Maximize ``a log(kappa^2 - 4 beta^2) + b kappa + c beta`` subject to
``beta >= bbar`` and ``kappa - 2 beta >= kbar``.

In the coordinates ``u = kappa - 2 beta`` and ``w = kappa + 2 beta`` the
objective separates into ``a log u + alpha u + a log w + gamma w`` with
``alpha = b/2 - c/4`` and ``gamma = b/2 + c/4``, and the constraints become
``u >= kbar`` and ``w - u >= 4 bbar``. Every KKT case therefore has a
closed form; the candidates are enumerated and the best feasible one kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from kentmix.errors import DomainError, UnboundedObjectiveError


@dataclass(frozen=True)
class ShapeCoefficients:
    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"coefficient {name} must be finite")
        if not self.a > 0.0:
            raise DomainError("coefficient a must be positive")


@dataclass(frozen=True)
class ShapeSolution:
    beta: float
    kappa: float
    objective: float
    on_boundary: tuple[bool, bool]
    """``(beta at its floor, kappa - 2 beta at its floor)``."""


def shape_objective(coef: ShapeCoefficients, beta: float, kappa: float) -> float:
    gap = (kappa - 2.0 * beta) * (kappa + 2.0 * beta)
    if gap <= 0.0:
        return -math.inf
    return coef.a * math.log(gap) + coef.b * kappa + coef.c * beta


def is_bounded(coef: ShapeCoefficients) -> bool:
    """Whether the objective has a finite supremum on the feasible set."""
    return coef.b < 0.0 and coef.c < -2.0 * coef.b


def _positive_root(qa: float, qb: float, qc: float) -> float:
    # qa*x^2 + qb*x + qc = 0 with qa*qc < 0: exactly one positive root.
    disc = math.sqrt(qb * qb - 4.0 * qa * qc)
    q = -0.5 * (qb + math.copysign(disc, qb))
    r1, r2 = q / qa, qc / q
    return r1 if r1 > 0.0 else r2


def _nudge_feasible(beta: float, kappa: float, bbar: float, kbar: float) -> tuple[float, float]:
    beta = max(beta, bbar)
    while kappa - 2.0 * beta < kbar:
        kappa = math.nextafter(kappa, math.inf)
    return beta, kappa


def solve_shape(coef: ShapeCoefficients, bbar: float = 1e-5, kbar: float = 1e-5) -> ShapeSolution:
    """Global maximizer of the concave shape objective over the feasible set.

    Raises:
        UnboundedObjectiveError: when ``b >= 0`` or ``c >= -2 b``; the
            objective then grows without bound along the feasible set. The
            fitter's coefficients always satisfy ``|c| < -2 b`` unless every
            weighted point sits exactly on the mean direction.
        DomainError: for non-positive floors.
    """
    if not (bbar > 0.0 and kbar > 0.0):
        raise DomainError("floors must be positive")
    if not is_bounded(coef):
        raise UnboundedObjectiveError(
            f"objective unbounded for a={coef.a}, b={coef.b}, c={coef.c}"
        )
    a, b, c = coef.a, coef.b, coef.c
    alpha = 0.5 * b - 0.25 * c
    gamma = 0.5 * b + 0.25 * c

    # Interior stationary point exists when both linear coefficients are negative.
    if alpha < 0.0:
        u, w = -a / alpha, -a / gamma
        beta, kappa = 0.25 * (w - u), 0.5 * (u + w)
        if beta > bbar and kappa - 2.0 * beta > kbar:
            return ShapeSolution(beta, kappa, shape_objective(coef, beta, kappa), (False, False))

    candidates = []

    # beta = bbar: stationarity of a log u + a log(u + 4 bbar) + b u.
    u = _positive_root(b, 2.0 * a + 4.0 * b * bbar, 4.0 * a * bbar)
    u = max(u, kbar)
    beta, kappa = _nudge_feasible(bbar, u + 2.0 * bbar, bbar, kbar)
    candidates.append((beta, kappa, (True, u == kbar)))

    # kappa - 2 beta = kbar: stationarity of a log w + gamma w, with w - kbar >= 4 bbar.
    w = max(-a / gamma, kbar + 4.0 * bbar)
    beta, kappa = _nudge_feasible(0.25 * (w - kbar), 0.5 * (w + kbar), bbar, kbar)
    candidates.append((beta, kappa, (beta == bbar, True)))

    best = None
    for beta, kappa, flags in candidates:
        value = shape_objective(coef, beta, kappa)
        if best is None or value > best.objective or (value == best.objective and kappa < best.kappa):
            best = ShapeSolution(beta, kappa, value, flags)
    return best
