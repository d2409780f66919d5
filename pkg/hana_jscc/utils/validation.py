"""Shared value-range models for validation"""

from pydantic import BaseModel, root_validator


class MinMax(BaseModel):
    minimum: float
    maximum: float

    class Config:
        extra = "forbid"
        frozen = True

    @root_validator(skip_on_failure=True)
    def _ordered(cls, values):
        if values["minimum"] > values["maximum"]:
            raise ValueError(
                f"minimum {values['minimum']} exceeds maximum {values['maximum']}"
            )
        return values

    def contains(self, x: float) -> bool:
        """Inclusive containment, so [0, 1] images may hit both ends."""
        return self.minimum <= x <= self.maximum

    def width(self) -> float:
        return self.maximum - self.minimum


UNIT_INTERVAL = MinMax(minimum=0.0, maximum=1.0)

# Training draws sigma_e^2 uniformly from this interval
SIGMA_E_SQ_RANGE = MinMax(minimum=0.01, maximum=0.1)
