import logging

import numpy as np

from .mechanics import sample_points

logger = logging.getLogger(__name__)


class PointSampler:
    """Seeded source of randomness shared by every command."""

    def __init__(self, app=None):
        self.seed = 0
        if app is not None:
            self.init_app(app)

    def init_app(self, app):
        self.seed = int(app.config.get('SEED', 0))
        app.extensions['sampler'] = self

    def rng(self, seed=None):
        return np.random.default_rng(self.seed if seed is None else seed)

    def initial_points(self, sys, count, rng):
        """``count`` points in [-2, 2]^d where the structure is defined."""
        points = sample_points(sys, rng, count)
        logger.debug('%s: drew %d initial point(s)', sys.name, count)
        return points

    def gauges(self, sys, count, rng):
        """Random kernel admixtures for presymplectic systems."""
        return [tuple(rng.uniform(-1.0, 1.0, size=len(sys.kernel))) for _ in range(count)]


sampler = PointSampler()
