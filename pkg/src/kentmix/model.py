"""Kent components and finite mixtures of them.

Points on the sphere are handled as ``(n, 3)`` float arrays, frames as
``3 x 3`` arrays whose columns are the mean direction, major axis and minor
axis. Densities come in two flavours: the exact one (series normalizer)
and the approximate one used for fitting (large-concentration normalizer).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from kentmix.errors import DomainError, FormatError
from kentmix.special import LOG_2PI, log_kent_normalizer_exact

UNIT_TOL = 1e-9
FRAME_TOL = 1e-9
WEIGHT_TOL = 1e-12

# Floors on beta and on kappa - 2*beta used by the fitter.
DEFAULT_BBAR = 1e-5
DEFAULT_KBAR = 1e-5


def as_points(x, tol: float = UNIT_TOL) -> np.ndarray:
    """Coerce ``x`` to an ``(n, 3)`` array of unit vectors.

    A single 3-vector becomes a ``(1, 3)`` array.

    Raises:
        DomainError: on a wrong shape, non-finite entries or a norm that
            differs from one by more than ``tol``.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DomainError(f"expected points of shape (n, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("points must be finite")
    norms = np.linalg.norm(arr, axis=1)
    if arr.shape[0] and np.max(np.abs(norms - 1.0)) > tol:
        raise DomainError("points must have unit norm")
    return arr


def check_frame(frame, tol: float = FRAME_TOL) -> np.ndarray:
    """Validate an orthonormal 3x3 frame and return it as a float array."""
    arr = np.array(frame, dtype=np.float64)
    if arr.shape != (3, 3):
        raise DomainError(f"frame must be 3x3, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("frame must be finite")
    if np.max(np.abs(arr.T @ arr - np.eye(3))) > tol:
        raise DomainError("frame columns must be orthonormal")
    return arr


@dataclass(frozen=True, eq=False)
class KentParams:
    """Shape, concentration and orientation of one Kent component.

    Only the distribution's own constraint ``0 <= 2 beta < kappa`` is
    enforced here; the fitting floors are the fitter's business.
    """

    beta: float
    kappa: float
    frame: np.ndarray

    def __post_init__(self):
        beta = float(self.beta)
        kappa = float(self.kappa)
        if not (math.isfinite(beta) and math.isfinite(kappa)):
            raise DomainError("beta and kappa must be finite")
        if beta < 0.0 or kappa <= 0.0 or not 2.0 * beta < kappa:
            raise DomainError(f"need 0 <= 2*beta < kappa, got beta={beta}, kappa={kappa}")
        frame = check_frame(self.frame)
        frame.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "frame", frame)

    @property
    def mean_direction(self) -> np.ndarray:
        return self.frame[:, 0]

    def replace(self, **changes) -> "KentParams":
        values = {"beta": self.beta, "kappa": self.kappa, "frame": self.frame}
        values.update(changes)
        return KentParams(**values)

    def __eq__(self, other):
        if not isinstance(other, KentParams):
            return NotImplemented
        return (
            self.beta == other.beta
            and self.kappa == other.kappa
            and np.array_equal(self.frame, other.frame)
        )


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """Mixing weights plus one :class:`KentParams` per component."""

    weights: np.ndarray
    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64).reshape(-1)
        components = tuple(self.components)
        if len(components) < 1:
            raise DomainError("a mixture needs at least one component")
        if weights.shape[0] != len(components):
            raise DomainError("one weight per component is required")
        if not all(isinstance(c, KentParams) for c in components):
            raise DomainError("components must be KentParams")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0.0):
            raise DomainError("weights must be finite and nonnegative")
        if abs(math.fsum(weights) - 1.0) > WEIGHT_TOL:
            raise DomainError(f"weights must sum to 1, got {math.fsum(weights)!r}")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", components)

    @property
    def g(self) -> int:
        return len(self.components)

    @property
    def betas(self) -> np.ndarray:
        return np.array([c.beta for c in self.components])

    @property
    def kappas(self) -> np.ndarray:
        return np.array([c.kappa for c in self.components])

    @property
    def frames(self) -> np.ndarray:
        """Stacked frames, shape ``(g, 3, 3)``."""
        return np.stack([c.frame for c in self.components])

    def permuted(self, order) -> "MixtureModel":
        order = list(order)
        return MixtureModel(self.weights[order], [self.components[i] for i in order])

    def __eq__(self, other):
        if not isinstance(other, MixtureModel):
            return NotImplemented
        return np.array_equal(self.weights, other.weights) and self.components == other.components


def _kernel(points: np.ndarray, p: KentParams, fold: bool) -> np.ndarray:
    proj = points @ p.frame
    shift = 1.0 if fold else 0.0
    return p.kappa * (proj[:, 0] - shift) + p.beta * (proj[:, 1] ** 2 - proj[:, 2] ** 2)


def _scalar_or_array(values: np.ndarray, x):
    return float(values[0]) if np.ndim(x) == 1 else values


def log_density_exact(x, p: KentParams):
    """Exact Kent log-density at one point (3-vector) or at ``(n, 3)`` points."""
    pts = as_points(x)
    out = _kernel(pts, p, fold=False) - log_kent_normalizer_exact(p.beta, p.kappa)
    return _scalar_or_array(out, x)


def log_density_approx(x, p: KentParams):
    """Kent log-density with the approximate normalizer.

    Evaluated in the folded form
    ``kappa (x.xi1 - 1) + beta ((x.xi2)^2 - (x.xi3)^2) + log(kappa^2 - 4 beta^2)/2 - log 2pi``
    so ``e^kappa`` cancels analytically.
    """
    pts = as_points(x)
    out = _kernel(pts, p, fold=True) + _approx_log_norm_folded(p.beta, p.kappa)
    return _scalar_or_array(out, x)


def _approx_log_norm_folded(beta: float, kappa: float) -> float:
    # kappa - log C~(beta, kappa), without going through e^kappa
    return 0.5 * math.log((kappa - 2.0 * beta) * (kappa + 2.0 * beta)) - LOG_2PI


def weighted_log_densities(points: np.ndarray, model: MixtureModel) -> np.ndarray:
    """``(n, g)`` matrix of ``log pi_z + log f~(x_i; psi_z)``.

    Zero weights give ``-inf`` entries.
    """
    pts = np.asarray(points, dtype=np.float64)
    frames = model.frames
    proj = np.einsum("nk,gkj->ngj", pts, frames)
    kappas = model.kappas
    betas = model.betas
    lognorm = np.array([_approx_log_norm_folded(b, k) for b, k in zip(betas, kappas)])
    dens = kappas * (proj[:, :, 0] - 1.0) + betas * (proj[:, :, 1] ** 2 - proj[:, :, 2] ** 2) + lognorm
    with np.errstate(divide="ignore"):
        logw = np.log(model.weights)
    return dens + logw


def fsum_columns(values: np.ndarray) -> np.ndarray:
    """Correctly rounded column sums of a 2-D array.

    ``math.fsum`` is order independent, so sums (and everything built on
    them) are reproducible and exactly double when the data are duplicated.
    """
    values = np.asarray(values, dtype=np.float64)
    return np.array([math.fsum(col) for col in values.T.tolist()])


def approx_log_likelihood(points, model: MixtureModel) -> float:
    """Approximate mixture log-likelihood ``sum_i log sum_z pi_z f~(x_i; psi_z)``.

    Raises:
        DomainError: on empty data.
    """
    pts = as_points(points)
    if pts.shape[0] == 0:
        raise DomainError("log-likelihood of an empty dataset is undefined")
    per_point = logsumexp(weighted_log_densities(pts, model), axis=1)
    return math.fsum(per_point.tolist())


def responsibilities(points, model: MixtureModel) -> np.ndarray:
    """Posterior membership probabilities, an ``(n, g)`` row-stochastic matrix."""
    pts = as_points(points)
    logw = weighted_log_densities(pts, model)
    return np.exp(logw - logsumexp(logw, axis=1, keepdims=True))


# -- serialization ---------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def model_to_json(model: MixtureModel) -> str:
    """Canonical JSON text for a model: fixed key order, 17 significant digits."""
    comps = []
    for c in model.components:
        rows = ", ".join("[" + ", ".join(_fmt(v) for v in row) + "]" for row in c.frame)
        comps.append(
            f'    {{"beta": {_fmt(c.beta)}, "kappa": {_fmt(c.kappa)}, "frame": [{rows}]}}'
        )
    weights = ", ".join(_fmt(w) for w in model.weights)
    return (
        "{\n"
        f'  "g": {model.g},\n'
        f'  "weights": [{weights}],\n'
        '  "components": [\n' + ",\n".join(comps) + "\n  ]\n}\n"
    )


def model_from_json(text: str) -> MixtureModel:
    """Parse and validate model JSON.

    Raises:
        FormatError: on malformed JSON, a schema mismatch or any violated
            model invariant.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid model JSON: {exc}") from exc
    try:
        g = obj["g"]
        if not isinstance(g, int) or isinstance(g, bool) or g < 1:
            raise FormatError("'g' must be a positive integer")
        weights = obj["weights"]
        comps = obj["components"]
        if len(weights) != g or len(comps) != g:
            raise FormatError("'weights' and 'components' must each have g entries")
        components = [
            KentParams(float(c["beta"]), float(c["kappa"]), np.array(c["frame"], dtype=float))
            for c in comps
        ]
        return MixtureModel(np.array(weights, dtype=float), components)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"model JSON does not match the schema: {exc}") from exc
    except DomainError as exc:
        raise FormatError(f"model JSON violates an invariant: {exc}") from exc
