"""Request schemas for the HTTP service.

Bodies carry data inline (CSV text, prior documents, feed lines) so the
service never reads the caller's filesystem; the CLI inlines local files
before posting.  Responses that must be byte-deterministic are emitted as
pre-serialized canonical JSON rather than re-encoded models.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class CalibrateRequest(BaseModel):
    config: dict
    seed: int | None = Field(default=None, ge=0, lt=2**64)


class SimulateRequest(BaseModel):
    scenario: dict
    seed: int | None = Field(default=None, ge=0, lt=2**64)
    quantile_levels: list[float] = Field(default_factory=lambda: [0.9])


class ValidateRequest(BaseModel):
    config: dict
    trials: int = 1000
    jobs: int = Field(default=1, ge=1)
    seed: int | None = Field(default=None, ge=0, lt=2**64)


class ReportRequest(BaseModel):
    input_csv: str
    bins: int = Field(default=20, ge=1)
    format: str = "json"
