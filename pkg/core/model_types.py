from __future__ import annotations

from typing import Optional, Union

import numpy as np
from typing_extensions import Protocol

ArrayLike = Union[float, np.ndarray]


class ExactLaw(Protocol):
    """Summand law whose density and tail are available without asymptotic error."""

    beta: float

    def log_density(self, x: float) -> float: ...

    def log_tail(self, x: float) -> float: ...

    def log_density_array(self, xs: np.ndarray) -> np.ndarray: ...

    def log_tail_array(self, xs: np.ndarray) -> np.ndarray: ...

    def tail_array(self, xs: np.ndarray) -> np.ndarray: ...

    def hazard_rate(self, x: float) -> float: ...

    def hazard_slope(self, x: float) -> float: ...

    def hazard_scale(self, x: float) -> float: ...

    def sample(
        self, rng: np.random.Generator, size: Optional[int] = None
    ) -> ArrayLike: ...

    @property
    def mean(self) -> float: ...
