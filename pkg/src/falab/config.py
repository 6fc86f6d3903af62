"""Experiment configuration: a single flat JSON document, strictly validated
(unknown keys rejected) so that a config file is a complete, diff-able record
of a run."""

import dataclasses
import json
from dataclasses import dataclass, field

from .errors import ContractViolation
from .network import Activation
from .trainers import Schedule, _ALGORITHMS

SCHEDULE_KINDS = ("zero", "constant", "cutoff", "exp_decay", "paper_cutoff")


@dataclass(frozen=True)
class ScheduleSpec:
    """Declarative schedule; "paper_cutoff" is resolved at run time from the
    measured data spectrum (see experiments.resolve_schedule)."""
    kind: str = "zero"
    lam: float = 0.0
    T: int = 0
    lam0: float = 0.0
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ContractViolation(f"unknown schedule kind {self.kind!r}")

    def concrete(self):
        """Schedule instance for non-data-dependent kinds."""
        if self.kind == "paper_cutoff":
            raise ContractViolation(
                "paper_cutoff must be resolved against a dataset first")
        return Schedule(kind=self.kind, lam=self.lam, T=self.T,
                        lam0=self.lam0, rate=self.rate)


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 50
    d: int = 150
    p: int = 3200
    activation: str = "identity"
    algorithm: str = "fa_reg"
    eta: float = 1e-4
    steps: int = 1000
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    seed: int = 0
    repeats: int = 1
    sweep_p: tuple = None
    sweep_lambda: tuple = None
    cutoff_cS: float = None      # default taken from calibrated.CUTOFF_CS
    cutoff_L: float = None       # default taken from calibrated.CUTOFF_L
    teacher_p: int = 100
    teacher_act: str = "tanh"

    def __post_init__(self):
        if self.eta <= 0:
            raise ContractViolation("eta must be > 0")
        if self.steps < 1 or self.repeats < 1:
            raise ContractViolation("steps and repeats must be >= 1")
        if self.n < 1 or self.d < 1 or self.p < 1:
            raise ContractViolation("n, d, p must be >= 1")
        if self.algorithm not in _ALGORITHMS:
            raise ContractViolation(f"algorithm must be one of {_ALGORITHMS}")
        Activation(self.activation)
        if not 0 <= self.seed < 2 ** 64:
            raise ContractViolation("seed must fit in 64 bits")

    @property
    def cs(self):
        from . import calibrated
        return self.cutoff_cS if self.cutoff_cS is not None else calibrated.CUTOFF_CS

    @property
    def L(self):
        from . import calibrated
        return self.cutoff_L if self.cutoff_L is not None else calibrated.CUTOFF_L


def config_from_dict(doc):
    if not isinstance(doc, dict):
        raise ContractViolation("config document must be a JSON object")
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(doc) - fields
    if unknown:
        raise ContractViolation(f"unknown config keys: {sorted(unknown)}")
    doc = dict(doc)
    if "schedule" in doc:
        sched = doc["schedule"]
        if not isinstance(sched, dict):
            raise ContractViolation("schedule must be an object")
        sched_fields = {f.name for f in dataclasses.fields(ScheduleSpec)}
        bad = set(sched) - sched_fields
        if bad:
            raise ContractViolation(f"unknown schedule keys: {sorted(bad)}")
        doc["schedule"] = ScheduleSpec(**sched)
    for key in ("sweep_p", "sweep_lambda"):
        if doc.get(key) is not None:
            doc[key] = tuple(doc[key])
    try:
        return ExperimentConfig(**doc)
    except TypeError as exc:
        raise ContractViolation(f"bad config: {exc}") from exc


def load_config(path):
    with open(path, "r") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ContractViolation(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def config_to_dict(config):
    doc = dataclasses.asdict(config)
    for key in ("sweep_p", "sweep_lambda"):
        if doc[key] is not None:
            doc[key] = list(doc[key])
    return doc
