"""Parameters of the initial-data, semiconcave and monotone-field classes."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..errors import ConfigurationError


@dataclass(frozen=True)
class ClassParams:
    """Budgets shared by the function classes.

    Attributes:
        support: half-width of the support cube ``[-support, support]^dim``.
        lipschitz: Lipschitz bound of scalar members, sup bound of vector fields.
        semiconcavity: semiconcavity constant.
        variation: total-variation budget of monotone fields.
        horizon: final time of the evolution.
        dim: space dimension.
    """

    support: float = 1.0
    lipschitz: float = 1.0
    semiconcavity: float = 1.0
    variation: float = 1.0
    horizon: float = 1.0
    dim: int = 1

    def __post_init__(self):
        for name in ("support", "lipschitz", "semiconcavity", "variation", "horizon"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise ConfigurationError(f"class parameter {name} must be positive, got {value!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ConfigurationError(f"dimension must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))

    def with_(self, **changes) -> "ClassParams":
        return replace(self, **changes)
