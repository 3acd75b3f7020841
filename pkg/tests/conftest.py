import numpy as np
import pytest
from scipy.stats import special_ortho_group

from kentmix.model import KentParams, MixtureModel

# Filled by test_acceptance.py; printed once at the end of the session.
ACCEPTANCE_LINES: dict[int, str] = {}


def random_frame(rng: np.random.Generator) -> np.ndarray:
    return special_ortho_group.rvs(3, random_state=rng)


def random_model(rng: np.random.Generator, g: int, kappa_range=(2.0, 30.0)) -> MixtureModel:
    weights = rng.dirichlet(np.ones(g))
    weights = weights / weights.sum()
    comps = []
    for _ in range(g):
        kappa = rng.uniform(*kappa_range)
        beta = rng.uniform(0.0, 0.45) * kappa
        comps.append(KentParams(beta, kappa, random_frame(rng)))
    return MixtureModel(weights, comps)


def random_points(rng: np.random.Generator, n: int) -> np.ndarray:
    x = rng.standard_normal((n, 3))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


FOUR_COLOURS = np.array([[200, 40, 40], [40, 180, 60], [50, 60, 210], [210, 200, 40]])


def four_colour_image(seed: int = 0, size: int = 64, jitter: int = 12):
    """Quadrant image in four colours with uniform per-channel jitter.

    Returns ``(width, height, pixels (size*size, 3) uint8, labels 1..4)``.
    """
    rng = np.random.default_rng(seed)
    rows, cols = np.indices((size, size))
    labels = 1 + (rows >= size // 2) * 2 + (cols >= size // 2)
    labels = labels.ravel()
    noise = rng.integers(-jitter, jitter + 1, size=(labels.size, 3))
    pixels = np.clip(FOUR_COLOURS[labels - 1] + noise, 0, 255).astype(np.uint8)
    return size, size, pixels, labels
