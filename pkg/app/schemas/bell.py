"""
Pydantic схемы корреляций дискриминированных квадратур
"""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

BELL_BOUND = 2.0**-0.5


class BellConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    threshold: float = Field(default=0.85, ge=0.0)
    n_phase_bins: int = Field(default=24, ge=2)
    # бины с меньшим числом отобранных событий не участвуют в подгонке
    min_events: int = Field(default=50, ge=1)
    bootstrap_resamples: int = Field(default=0, ge=0)


class BellBin(BaseModel):
    phase_bin: int
    delta_theta: float
    correlation: Optional[float] = None
    stderr: Optional[float] = None
    retained: int
    total: int
    flagged: bool = False


class BellCurve(BaseModel):
    threshold: float
    bins: List[BellBin] = Field(default_factory=list)
    amplitude: float = Field(ge=0.0)
    sigma_amplitude: float
    phase_offset: float
    fit_residual: float
    retained_fraction: float


class SweepRow(BaseModel):
    threshold: float
    amplitude: float
    sigma_amplitude: Optional[float] = None
    retained_fraction: float
    violation: bool


class BellSummary(BaseModel):
    threshold: float
    amplitude: float
    sigma_amplitude: float
    s_value: float
    retained_fraction: float
    violation: bool
    significance: float
    bootstrap_sigma: Optional[float] = None
    analytic_amplitude_corrected: Optional[float] = None
    analytic_amplitude_raw: Optional[float] = None
