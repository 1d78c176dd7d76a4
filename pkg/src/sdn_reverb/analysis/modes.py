"""Modal density of the network backbone."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .predictors import sabine_t60

# Schroeder's minimum: modes per Hz needed for a given T60
MIN_DENSITY_FACTOR = 6.7


@dataclass
class ModeDensity:
    density: float
    threshold: float
    t60: float

    @property
    def sufficient(self) -> bool:
        return self.density > self.threshold


def mode_density(net, t60: float | None = None) -> ModeDensity:
    """Total internode delay divided by the sample rate, against ``T60 / 6.7``.

    Sabine's prediction for the network's scene stands in for ``t60`` when
    it is not given.
    """
    density = float(np.sum(net.internode_delays)) / net.sample_rate
    if t60 is None:
        scene = net.scene
        try:
            t60 = sabine_t60(scene.room_dims, scene.wall_absorption)
        except ValueError:
            t60 = float("inf")
    return ModeDensity(density, t60 / MIN_DENSITY_FACTOR, t60)


def cubic_mode_density(edge: float, c: float = 343.0) -> float:
    """Centred source and microphone in a cube: six opposite-wall lines of
    length L and twenty-four adjacent-wall lines of length L/sqrt(2)."""
    return (6 + 24 * np.sqrt(2) / 2) * edge / c


def min_cube_edge(t60: float, c: float = 343.0) -> float:
    """Smallest cube edge with sufficient mode density for ``t60``."""
    return c / (MIN_DENSITY_FACTOR * 23) * t60


@dataclass
class MonteCarloResult:
    pass_rate: float
    trials: int
    failing_alphas: np.ndarray


def mode_density_monte_carlo(
    trials: int = 1000,
    seed: int = 0,
    sample_rate: float = 44100.0,
    dims_range=(2.0, 10.0),
    c: float = 343.0,
) -> MonteCarloResult:
    """Random boxes with a common absorption and random interior positions,
    thresholded with Sabine's T60."""
    from ..geometry import SceneConfig
    from ..network import _scene_geometry

    rng = np.random.default_rng(seed)
    passed = 0
    failing = []
    for _ in range(trials):
        dims = rng.uniform(*dims_range, 3)
        alpha = rng.uniform(0.0, 1.0)
        src = rng.uniform(0, 1, 3) * dims
        mic = rng.uniform(0, 1, 3) * dims
        scene = SceneConfig.uniform(dims, src, mic, alpha, sample_rate=sample_rate, sound_speed=c)
        density = float(np.sum(_scene_geometry(scene).internode)) / sample_rate
        t60 = sabine_t60(dims, alpha) if alpha > 0 else float("inf")
        if density > t60 / MIN_DENSITY_FACTOR:
            passed += 1
        else:
            failing.append(alpha)
    return MonteCarloResult(passed / trials, trials, np.array(failing))
