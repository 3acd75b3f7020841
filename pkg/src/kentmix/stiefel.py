"""Monotone ascent for the frame subproblem on the Stiefel manifold V3(R^3).

The frame block of the minorizer, after dropping terms that do not depend
on the frame, reads

    kappa * m.xi1 + beta * (xi2' S xi2 - xi3' S xi3)

with ``m = sum_i tau_i x_i`` and ``S = sum_i tau_i x_i x_i'``. Only a strict
increase is needed for the outer algorithm to stay monotone, so projected
gradient steps with a QR retraction and backtracking suffice. Exact
rotations within each coordinate plane of the frame are interleaved
because some directions (notably the spin about ``xi1``) are far more
weakly curved than others, which stalls plain gradient steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from kentmix.errors import DegenerateDataError, DomainError, RetractionError


@dataclass(frozen=True, eq=False)
class FrameObjective:
    kappa: float
    beta: float
    m: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64).reshape(3)
        S = np.asarray(self.S, dtype=np.float64).reshape(3, 3)
        if self.kappa < 0.0 or self.beta < 0.0:
            raise DomainError("kappa and beta must be nonnegative")
        if np.max(np.abs(S - S.T)) > 1e-12 * max(1.0, np.max(np.abs(S))):
            raise DomainError("S must be symmetric")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "S", S)

    @classmethod
    def from_data(cls, points, weights, kappa: float, beta: float) -> "FrameObjective":
        """Build the sufficient statistics ``m`` and ``S`` from weighted points.

        Sums are taken with ``math.fsum`` so they are order independent.
        """
        pts = np.asarray(points, dtype=np.float64)
        w = np.asarray(weights, dtype=np.float64)
        wx = pts * w[:, None]
        m = np.array([math.fsum(col) for col in wx.T.tolist()])
        S = np.empty((3, 3))
        for j in range(3):
            for k in range(j, 3):
                S[j, k] = S[k, j] = math.fsum((wx[:, j] * pts[:, k]).tolist())
        return cls(kappa=kappa, beta=beta, m=m, S=S)

    @property
    def curvature_scale(self) -> float:
        """Rough Lipschitz constant of the gradient, used to scale steps."""
        eig = np.linalg.eigvalsh(self.S)
        return self.kappa * float(np.linalg.norm(self.m)) + 2.0 * self.beta * float(eig[-1] - eig[0])


@dataclass(frozen=True)
class AscentConfig:
    max_steps: int = 50
    initial_step: float = 1.0
    backtrack_factor: float = 0.5
    grad_tol: float = 1e-8
    max_halvings: int = 30
    armijo: float = 1e-4

    def __post_init__(self):
        if self.max_steps < 0 or self.max_halvings < 1:
            raise DomainError("step counts must be positive")
        if not self.initial_step > 0.0 or not self.grad_tol > 0.0:
            raise DomainError("initial_step and grad_tol must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise DomainError("backtrack_factor must lie in (0, 1)")


def frame_objective_value(frame: np.ndarray, obj: FrameObjective) -> float:
    xi1, xi2, xi3 = frame[:, 0], frame[:, 1], frame[:, 2]
    S = obj.S
    return float(obj.kappa * (obj.m @ xi1) + obj.beta * (xi2 @ S @ xi2 - xi3 @ S @ xi3))


def euclidean_gradient(frame: np.ndarray, obj: FrameObjective) -> np.ndarray:
    S = obj.S
    return np.column_stack(
        (obj.kappa * obj.m, 2.0 * obj.beta * (S @ frame[:, 1]), -2.0 * obj.beta * (S @ frame[:, 2]))
    )


def riemannian_gradient(frame: np.ndarray, obj: FrameObjective) -> np.ndarray:
    """Tangent-space projection ``G - X sym(X'G)`` of the Euclidean gradient."""
    G = euclidean_gradient(frame, obj)
    XtG = frame.T @ G
    return G - frame @ (0.5 * (XtG + XtG.T))


def retract(frame: np.ndarray, tangent_step: np.ndarray) -> np.ndarray:
    """QR retraction of ``frame + tangent_step`` back onto the manifold.

    The columns of ``Q`` are sign-flipped so that ``R`` has a positive
    diagonal, which makes the retraction continuous and ``retract(X, 0) = X``.

    Raises:
        RetractionError: if ``frame + tangent_step`` is (numerically) rank deficient.
    """
    frame = np.asarray(frame, dtype=np.float64)
    step = np.asarray(tangent_step, dtype=np.float64)
    if not np.any(step):
        return frame.copy()
    Q, R = np.linalg.qr(frame + step)
    diag = np.diag(R)
    if np.min(np.abs(diag)) <= 1e-12 * max(1.0, np.max(np.abs(diag))) or not np.all(np.isfinite(diag)):
        raise RetractionError("rank-deficient retraction")
    return Q * np.sign(diag)


_SIGNS = (0.0, 1.0, -1.0)
PLANES = ((1, 2), (0, 1), (0, 2))


def rotate_in_plane(frame: np.ndarray, obj: FrameObjective, plane: tuple[int, int] = (1, 2)) -> np.ndarray:
    """Best rotation of columns ``(i, j)`` within their span, all others fixed.

    Along ``xi_i <- c xi_i + s xi_j``, ``xi_j <- -s xi_i + c xi_j`` the
    objective is ``p cos t + q sin t + r cos 2t + w sin 2t`` plus a constant.
    Its stationary angles are the unit-circle roots of a quartic in
    ``z = exp(i t)``; the best of them (or ``t = 0``) is returned.
    Orientation is preserved.
    """
    i, j = plane
    xi, xj = frame[:, i], frame[:, j]
    S = obj.S
    p = q = 0.0
    if i == 0:
        p, q = obj.kappa * float(obj.m @ xi), obj.kappa * float(obj.m @ xj)
    A, B, C = float(xi @ S @ xi), float(xj @ S @ xj), float(xi @ S @ xj)
    coef = obj.beta * (_SIGNS[i] - _SIGNS[j])
    r, w = 0.5 * coef * (A - B), coef * C

    def value(t):
        return p * math.cos(t) + q * math.sin(t) + r * math.cos(2 * t) + w * math.sin(2 * t)

    if i != 0:
        # Pure quadratic: closed-form Jacobi angle.
        angles = [0.5 * math.atan2(w, r)]
    else:
        poly = [2 * w + 2j * r, q + 1j * p, 0.0, q - 1j * p, 2 * w - 2j * r]
        angles = [] if not any(poly) else [float(np.angle(z)) for z in np.roots(poly)]
    best_t, best_v = 0.0, value(0.0)
    for t in angles:
        v = value(t)
        if v > best_v:
            best_t, best_v = t, v
    if best_t == 0.0:
        return frame.copy()
    c, s_ = math.cos(best_t), math.sin(best_t)
    out = frame.copy()
    out[:, i] = c * xi + s_ * xj
    out[:, j] = -s_ * xi + c * xj
    return out


def ascend_frame(frame: np.ndarray, obj: FrameObjective, cfg: AscentConfig = AscentConfig()) -> np.ndarray:
    """Monotone ascent: a sweep of exact plane rotations alternated with a
    projected gradient step under backtracking.

    A move is kept only if it strictly increases the objective (gradient
    steps also need an Armijo margin), so the returned frame never scores
    below the input. Gradient steps are measured in units of
    ``1 / curvature_scale`` and ``grad_tol`` is relative to that scale.
    """
    current = np.asarray(frame, dtype=np.float64)
    value = frame_objective_value(current, obj)
    scale = obj.curvature_scale
    if not scale > 0.0:
        return current.copy()
    for _ in range(cfg.max_steps):
        for plane in PLANES:
            rotated = rotate_in_plane(current, obj, plane)
            rotated_value = frame_objective_value(rotated, obj)
            if rotated_value > value:
                current, value = rotated, rotated_value
        grad = riemannian_gradient(current, obj)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= cfg.grad_tol * scale:
            break
        t = cfg.initial_step / scale
        accepted = False
        for _ in range(cfg.max_halvings):
            try:
                candidate = retract(current, t * grad)
            except RetractionError:
                t *= cfg.backtrack_factor
                continue
            cand_value = frame_objective_value(candidate, obj)
            if cand_value > value and cand_value - value >= cfg.armijo * t * gnorm * gnorm:
                accepted = True
                break
            t *= cfg.backtrack_factor
        if not accepted:
            break
        current, value = candidate, cand_value
    return current


def complete_frame(xi1: np.ndarray, xi2: np.ndarray | None = None) -> np.ndarray:
    """Orthonormal frame with first column ``xi1`` (and ``xi2`` if given) via Gram-Schmidt."""
    xi1 = np.asarray(xi1, dtype=np.float64)
    xi1 = xi1 / np.linalg.norm(xi1)
    if xi2 is None:
        xi2 = np.eye(3)[int(np.argmin(np.abs(xi1)))]
    v = np.asarray(xi2, dtype=np.float64) - (xi1 @ xi2) * xi1
    norm = np.linalg.norm(v)
    if norm < 1e-8:
        v = np.eye(3)[int(np.argmin(np.abs(xi1)))]
        v = v - (xi1 @ v) * xi1
        norm = np.linalg.norm(v)
    xi2 = v / norm
    xi3 = np.cross(xi1, xi2)
    return np.column_stack((xi1, xi2, xi3 / np.linalg.norm(xi3)))


def moment_init_frame(points, weights) -> np.ndarray:
    """Moment-based frame: weighted mean direction, then the principal axes of
    the weighted scatter projected onto the plane orthogonal to it.

    Raises:
        DomainError: if the weights sum to zero.
        DegenerateDataError: if the weighted resultant vanishes.
    """
    pts = np.asarray(points, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    total = math.fsum(w.tolist())
    if not total > 0.0:
        raise DomainError("weights must have a positive sum")
    m = (w @ pts) / total
    norm = float(np.linalg.norm(m))
    if norm < 1e-12:
        raise DegenerateDataError("weighted mean resultant is zero")
    xi1 = m / norm
    P = np.eye(3) - np.outer(xi1, xi1)
    scatter = (pts * w[:, None]).T @ pts / total
    B = P @ scatter @ P
    evals, evecs = np.linalg.eigh(0.5 * (B + B.T))
    # Drop the eigenvector closest to xi1; keep the other two, largest first.
    drop = int(np.argmax(np.abs(evecs.T @ xi1)))
    keep = [k for k in range(3)[::-1] if k != drop]
    frame = complete_frame(xi1, evecs[:, keep[0]])
    if frame[:, 2] @ evecs[:, keep[1]] < 0.0:
        frame[:, 2] = -frame[:, 2]
    return frame
