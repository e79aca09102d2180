from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings loaded from environment variables (prefix ``FSAC_``)."""

    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False
    N_JOBS: int = 1
    PROGRESS: bool = True

    model_config = SettingsConfigDict(env_prefix="FSAC_", env_file=".env", extra="ignore")


class EstimationOptions(BaseModel):
    """Knobs of the concentrated-likelihood maximization."""

    grid_points: int = Field(default=21, ge=2)
    bound_margin: float = Field(default=1e-4, gt=0.0, lt=0.5)
    xatol: float = Field(default=1e-8, gt=0.0)
    fatol: float = Field(default=1e-10, gt=0.0)
    max_iter: int = Field(default=500, ge=1)
    fix_rho: float | None = Field(default=None, gt=-1.0, lt=1.0)
    fix_lambda: float | None = Field(default=None, gt=-1.0, lt=1.0)
    log_det_method: Literal["eigen", "lu"] = "eigen"
    center: bool = False
    # parameter count of the score columns in the K scan
    bic_df: Literal["effective", "nominal"] = "effective"

    @property
    def lower(self) -> float:
        return -1.0 + self.bound_margin

    @property
    def upper(self) -> float:
        return 1.0 - self.bound_margin


class SmoothingOptions(BaseModel):
    n_basis: int | None = Field(default=None, ge=2)
    order: int = Field(default=4, ge=2)
    cv_candidates: list[int] = Field(default_factory=lambda: list(range(4, 16)))

    @model_validator(mode="after")
    def _check_candidates(self) -> SmoothingOptions:
        if not self.cv_candidates:
            raise ValueError("cv_candidates must not be empty")
        return self


settings = Settings()
