"""
Synthetic class-templated multivariate series.

Each class gets a smooth random template (a cubic spline through random
knots, scaled by `separation`); samples are the template plus i.i.d.
Gaussian noise.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from cksc.errors import DomainError
from cksc.kernelcore import TimeSeries

logger = logging.getLogger(__name__)

KNOTS = 6


@dataclass(frozen=True)
class SyntheticSpec:
    classes: int = 3
    samples_per_class: int = 20
    channels: int = 2
    length: int = 20
    separation: float = 3.0
    noise: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("classes", "samples_per_class", "channels", "length"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.length < 2:
            raise DomainError(f"length must be >= 2, got {self.length}")
        if not self.separation > 0:
            raise DomainError(f"separation must be positive, got {self.separation}")
        if not self.noise >= 0:
            raise DomainError(f"noise must be non-negative, got {self.noise}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def class_label(q: int) -> str:
    return f"class_{q}"


def _template(rng: np.random.Generator, spec: SyntheticSpec) -> np.ndarray:
    knots_t = np.linspace(0.0, 1.0, KNOTS)
    knots = rng.normal(size=(spec.channels, KNOTS))
    t = np.linspace(0.0, 1.0, spec.length)
    return spec.separation * CubicSpline(knots_t, knots, axis=1)(t)


def generate(spec: SyntheticSpec) -> List[Tuple[TimeSeries, str]]:
    """Samples in class-major order: all of class_0, then class_1, ..."""
    rng = np.random.default_rng(spec.seed)
    templates = [_template(rng, spec) for _ in range(spec.classes)]
    samples: List[Tuple[TimeSeries, str]] = []
    for q, template in enumerate(templates):
        for _ in range(spec.samples_per_class):
            values = template + spec.noise * rng.normal(size=template.shape)
            samples.append((TimeSeries(values), class_label(q)))
    logger.info("Generated %d series (%d classes, %d channels, length %d)",
                len(samples), spec.classes, spec.channels, spec.length)
    return samples
