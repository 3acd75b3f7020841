"""Seeded random generation on S^2 and on the Stiefel manifold V3(R^3)."""

from __future__ import annotations

import numpy as np

from kentmix.errors import DomainError, UnsupportedSamplingError
from kentmix.model import DEFAULT_BBAR, MixtureModel


def _rotation_to(mu: np.ndarray) -> np.ndarray:
    # Orthonormal basis whose third column is mu.
    mu = mu / np.linalg.norm(mu)
    helper = np.eye(3)[int(np.argmin(np.abs(mu)))]
    e1 = helper - (helper @ mu) * mu
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(mu, e1)
    return np.column_stack((e1, e2, mu))


def sample_vmf(mu, kappa: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` points from the von Mises-Fisher distribution on S^2.

    The cosine to the mean has the closed-form inverse CDF
    ``w = 1 + log(u + (1 - u) e^{-2 kappa}) / kappa``; the longitude is uniform.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (3,) or not np.linalg.norm(mu) > 0.0:
        raise DomainError("mu must be a nonzero 3-vector")
    if not kappa > 0.0:
        raise DomainError("kappa must be positive")
    u = 1.0 - rng.random(n)  # in (0, 1], keeps the log finite
    e = np.exp(-2.0 * kappa)
    w = 1.0 + np.log(e + u * (1.0 - e)) / kappa
    w = np.clip(w, -1.0, 1.0)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    r = np.sqrt(np.clip(1.0 - w * w, 0.0, None))
    local = np.column_stack((r * np.cos(phi), r * np.sin(phi), w))
    pts = local @ _rotation_to(mu).T
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def sample_uniform_frame(rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform orthonormal 3x3 matrix: QR of a Gaussian matrix with the
    signs of R's diagonal moved into Q."""
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    return Q * np.sign(np.diag(R))


def generate_mixture_sample(
    model: MixtureModel, n: int, rng: np.random.Generator, beta_tol: float = DEFAULT_BBAR
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` points and their 1-based component labels.

    Components are sampled as von Mises-Fisher; a component whose beta
    exceeds ``beta_tol`` is rejected since exact Kent sampling is not
    provided.

    Raises:
        UnsupportedSamplingError: for components with ``beta > beta_tol``.
    """
    if n < 0:
        raise DomainError("n must be nonnegative")
    for z, comp in enumerate(model.components):
        if comp.beta > beta_tol:
            raise UnsupportedSamplingError(f"component {z + 1} has beta={comp.beta} > {beta_tol}")
    labels = rng.choice(model.g, size=n, p=model.weights)
    points = np.empty((n, 3))
    for z, comp in enumerate(model.components):
        idx = np.flatnonzero(labels == z)
        if idx.size:
            points[idx] = sample_vmf(comp.mean_direction, comp.kappa, idx.size, rng)
    return points, labels + 1
