"""Experiment configuration: a single JSON document validated with pydantic.

Every model rejects unknown keys. Strategies form a tagged union keyed on
``strategy``.
"""

from __future__ import annotations

from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .core import Generator, InputDomain, RandomTesting
from .hybrid import DivideAndConquer, ForgettingFSCS, ForgettingKind, ForgettingPolicy, Mirror, MirrorScheme
from .pbs import PBS, PartitionSchema, SelectionCriterion
from .qrs import QRS, RandomizerKind, SequenceKind
from .sbs import SearchAlgorithm, SearchBased, SearchConfig
from .simlab.regions import FailurePattern, PatternKind, ProfileSpec
from .stfcs import FSCS, MCMC, RRT, FitnessKind, FscsConfig, McmcConfig, RrtConfig
from .tpbs import TPBS, ProfileKind

__all__ = [
    "DomainConfig",
    "GeneratorConfig",
    "ProfileConfig",
    "CampaignConfig",
    "ExperimentConfig",
    "METRIC_NAMES",
    "load_config",
]

METRIC_NAMES = ("discrepancy", "dispersion", "diversity", "divergence", "edge_center_ratio", "center_distance")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DomainConfig(_Strict):
    d: int = Field(2, ge=1)
    bounds: list[tuple[float, float]] | None = None

    @model_validator(mode="after")
    def _check(self):
        if self.bounds is not None and len(self.bounds) != self.d:
            raise ValueError(f"bounds has {len(self.bounds)} entries for d={self.d}")
        return self

    def build(self) -> InputDomain:
        if self.bounds is None:
            return InputDomain.unit(self.d)
        return InputDomain.from_bounds(self.bounds)


class _StrategyBase(_Strict):
    label: str | None = None

    @property
    def name(self) -> str:
        return self.label or self.strategy  # type: ignore[attr-defined]


class RTConfig(_StrategyBase):
    strategy: Literal["rt"] = "rt"

    def build(self, domain, n=None):
        return RandomTesting(domain)


class FSCSConfig(_StrategyBase):
    strategy: Literal["fscs"] = "fscs"
    k: int = Field(10, ge=1)
    fitness: FitnessKind = FitnessKind.MIN_DISTANCE
    epsilon: float | None = Field(None, ge=0)

    def fscs(self) -> FscsConfig:
        return FscsConfig(k=self.k, fitness=self.fitness, epsilon=self.epsilon)

    def build(self, domain, n=None):
        return FSCS(domain, self.fscs())


class RRTConfig(_StrategyBase):
    strategy: Literal["rrt"] = "rrt"
    R: float = Field(0.75, gt=0)

    def build(self, domain, n=None):
        return RRT(domain, RrtConfig(R=self.R))


class MCMCConfig(_StrategyBase):
    strategy: Literal["mcmc"] = "mcmc"
    beta1: float | None = Field(None, gt=0)

    def build(self, domain, n=None):
        return MCMC(domain, McmcConfig(beta1=self.beta1))


class PBSConfig(_StrategyBase):
    strategy: Literal["pbs"] = "pbs"
    schema_: PartitionSchema = Field(PartitionSchema.BISECTION_ALL_DIMS, alias="schema")
    criterion: SelectionCriterion = SelectionCriterion.FEWEST_TESTS
    static_divisions: int = Field(2, ge=1)

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    def build(self, domain, n=None):
        return PBS(domain, schema=self.schema_, criterion=self.criterion, static_divisions=self.static_divisions)


class TPBSConfig(_StrategyBase):
    strategy: Literal["tpbs"] = "tpbs"
    profile: ProfileKind = ProfileKind.TRIANGLE
    exponent: float = Field(2.0, gt=0)

    def build(self, domain, n=None):
        return TPBS(domain, profile=self.profile, exponent=self.exponent)


class QRSConfig(_StrategyBase):
    strategy: Literal["halton", "sobol", "van_der_corput"] = "halton"
    randomizer: RandomizerKind = RandomizerKind.NONE
    bases: list[int] | None = None
    amplitude: float | None = Field(None, ge=0)

    def build(self, domain, n=None):
        return QRS(
            domain,
            sequence=SequenceKind(self.strategy),
            randomizer=self.randomizer,
            bases=tuple(self.bases) if self.bases else None,
            amplitude=self.amplitude,
            planned_n=n,
        )


class SBSConfig(_StrategyBase):
    strategy: Literal["sbs"] = "sbs"
    algorithm: SearchAlgorithm = SearchAlgorithm.RBCVT
    iterations: int = Field(200, ge=1)
    batch: int = Field(100, ge=2)

    def build(self, domain, n=None):
        return SearchBased(domain, algorithm=self.algorithm, config=SearchConfig(iterations=self.iterations), planned_n=self.batch)


class ForgettingConfig(FSCSConfig):
    strategy: Literal["fscs_forgetting"] = "fscs_forgetting"  # type: ignore[assignment]
    kind: ForgettingKind = ForgettingKind.RECENT_WINDOW
    size: int = Field(30, ge=1)

    def build(self, domain, n=None):
        return ForgettingFSCS(domain, self.fscs(), policy=ForgettingPolicy(self.kind, self.size))


class DivideConquerConfig(FSCSConfig):
    strategy: Literal["fscs_dc"] = "fscs_dc"  # type: ignore[assignment]
    quota: int = Field(10, ge=1)

    def build(self, domain, n=None):
        return DivideAndConquer(domain, self.fscs(), quota=self.quota)


class MirrorConfig(FSCSConfig):
    strategy: Literal["fscs_mirror"] = "fscs_mirror"  # type: ignore[assignment]
    divisions: list[int] | None = None

    def build(self, domain, n=None):
        div = self.divisions or [2] * domain.dims
        scheme = MirrorScheme(domain, tuple(div))
        return Mirror(domain, scheme=scheme, inner=FSCS(scheme.source, self.fscs()))


GeneratorConfig = Annotated[
    Union[
        RTConfig,
        FSCSConfig,
        RRTConfig,
        MCMCConfig,
        PBSConfig,
        TPBSConfig,
        QRSConfig,
        SBSConfig,
        ForgettingConfig,
        DivideConquerConfig,
        MirrorConfig,
    ],
    Field(discriminator="strategy"),
]


class ProfileConfig(_Strict):
    theta: float = Field(0.01, gt=0, lt=1)
    pattern: PatternKind = PatternKind.BLOCK_SQUARE
    count: int = Field(1, ge=1)
    aspect: float = Field(2.0, gt=0)
    q_percent: float = Field(100.0, gt=0, le=100)

    def build(self) -> ProfileSpec:
        return ProfileSpec(self.theta, FailurePattern(self.pattern, self.count, self.aspect, self.q_percent))


class CampaignConfig(_Strict):
    runs: int | Literal["auto"] = "auto"
    cap: int = Field(10**7, ge=1)
    seed: int = Field(0, ge=0)
    m: int = Field(1, ge=1)
    timed: bool = False
    z: float = Field(1.96, gt=0)
    r: float = Field(5.0, gt=0)
    pilot: int = Field(200, ge=2)

    @model_validator(mode="after")
    def _check(self):
        if self.runs != "auto" and self.runs < 1:
            raise ValueError("runs must be >= 1 or 'auto'")
        return self


class ExperimentConfig(_Strict):
    generators: list[GeneratorConfig] = Field(default_factory=lambda: [RTConfig()], min_length=1)
    domain: DomainConfig = DomainConfig()
    profile: ProfileConfig = ProfileConfig()
    campaign: CampaignConfig = CampaignConfig()
    metrics: list[Literal[METRIC_NAMES]] = Field(default_factory=list)  # type: ignore[valid-type]
    n: int = Field(100, ge=1)
    metric_runs: int = Field(30, ge=2)
    runs_csv: str | None = None
    report: str | None = None

    @model_validator(mode="after")
    def _unique_names(self):
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise ValueError(f"generator names must be unique, got {names}; set 'label' to disambiguate")
        return self

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)


def load_config(text: str) -> ExperimentConfig:
    return ExperimentConfig.model_validate_json(text)


def build_generator(cfg, domain: InputDomain, n: int | None = None) -> Generator:
    return cfg.build(domain, n)
