from typing import Any, Literal

from pydantic import BaseModel, model_validator

from omega_orbits.core.cohomology import FiberBoundReport, SixTermReport, TwistedFiberReport
from omega_orbits.core.descent import DescentReport
from omega_orbits.core.errors import DomainError

Command = Literal[
    "enumerate", "orbits", "omega-test", "reduce", "h1", "six-term", "descent-report", "schemas"
]

REQUIRED_PARAMETERS: dict[str, tuple[str, ...]] = {
    "enumerate": ("degree", "s", "height"),
    "orbits": ("forms", "s", "bound"),
    "omega-test": ("points", "s"),
    "reduce": ("form", "p"),
    "h1": ("group", "module"),
    "six-term": ("sequence",),
    "descent-report": ("n", "q", "k"),
    "schemas": ("directory",),
}


class RunConfig(BaseModel):
    command: Command
    parameters: dict[str, Any] = {}
    output: str | None = None
    format: Literal["json", "csv", "text"] = "json"
    verbose: bool = False

    @model_validator(mode="after")
    def _check_parameters(self) -> "RunConfig":
        missing = [p for p in REQUIRED_PARAMETERS[self.command] if p not in self.parameters]
        if missing:
            raise DomainError(f"Command {self.command} is missing parameters {missing}")
        if self.format == "csv" and self.command != "enumerate":
            raise DomainError(
                f"CSV output is only available for enumerate, not for {self.command}"
            )
        return self


class OmegaTestResult(BaseModel):
    points: list[str]
    S: list[int]
    member: bool
    colliding_primes: list[int]
    form: list[int]
    discriminant: int
    is_omega_form: bool


class EnumerationResult(BaseModel):
    degree: int
    S: list[int]
    height: int
    count: int
    forms: list[list[int]]
    orbit_count: int | None = None
    orbits: list[list[list[int]]] | None = None


class OrbitsResult(BaseModel):
    S: list[int]
    bound: int
    forms: list[list[int]]
    orbit_count: int
    orbits: list[list[list[int]]]


class FactorRecord(BaseModel):
    coeffs: list[int]
    mult: int


class ReduceResult(BaseModel):
    form: list[int]
    p: int
    degree: int
    factors: list[FactorRecord]


class H1Result(BaseModel):
    group: str
    module: str
    h1_order: int
    elementary_divisors: list[int] | None = None
    classes: list[list[str]] | None = None


class SixTermResult(BaseModel):
    reports: list[SixTermReport]
    fiber_bounds: list[FiberBoundReport]
    twisted: list[TwistedFiberReport] = []
    passed: bool


ARTIFACTS: dict[str, type[BaseModel]] = {
    "omega_test": OmegaTestResult,
    "enumeration": EnumerationResult,
    "orbits": OrbitsResult,
    "reduce": ReduceResult,
    "h1": H1Result,
    "six_term": SixTermResult,
    "descent_report": DescentReport,
}


class SchemasResult(BaseModel):
    available_schemas: list[str]
