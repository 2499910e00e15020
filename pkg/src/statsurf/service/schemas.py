"""Request bodies for the HTTP surface.

Model, deformation, and region documents travel as raw JSON objects and
are validated by their parsers, so their error messages match the library
and the CLI exactly; pydantic handles the envelope types only.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class _Body(BaseModel):
    model_config = ConfigDict(extra="forbid", protected_namespaces=())


class GeomAtRequest(_Body):
    model: dict
    point: list[float]


class DeformReportRequest(_Body):
    model: dict
    point: list[float]
    deformation: dict
    as_printed: bool = False


class ReplicatorRunRequest(_Body):
    model: dict
    point: list[float]
    steps: int = Field(ge=0)
    shift: float | str = "auto"


class PotentialVerifyRequest(_Body):
    m: int = Field(ge=2)
    seed: int


class SweepS2Request(_Body):
    c_min: float
    c_max: float
    steps: int = Field(ge=1)
    tol: float = 1e-8


class VolumeCheckRequest(_Body):
    region: dict
    samples: int = Field(ge=64)
    seed: int


class VerifyAllRequest(_Body):
    seed: int
