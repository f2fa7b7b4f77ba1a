"""Experiment configuration: dataclasses with lossless dict round-trips."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from ..adversary import ATTACKS
from ..channels import ConstraintSpec
from ..testing import TesterConfig

SOURCE_KINDS = ("uniform", "paninski", "explicit", "worst-of-list")


class ConfigError(ValueError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class SourceSpec:
    """Where the users' samples come from.

    ``paninski`` draws a fresh sign vector per trial when ``z_policy == "fresh"``
    and a single seed-fixed one otherwise. ``worst-of-list`` runs every entry
    of ``sources`` and reports the worst mean.
    """

    kind: str = "uniform"
    alpha: float = 0.1
    z_policy: str = "fresh"
    probs: Optional[tuple] = None
    sources: tuple = ()

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "paninski":
            d.update(alpha=self.alpha, z_policy=self.z_policy)
        if self.kind == "explicit":
            d["probs"] = list(self.probs)
        if self.kind == "worst-of-list":
            d["sources"] = [s.to_dict() for s in self.sources]
        return d

    @classmethod
    def from_dict(cls, d) -> "SourceSpec":
        if isinstance(d, str):
            return cls(kind=d)
        probs = d.get("probs")
        return cls(
            kind=d.get("kind", "uniform"),
            alpha=float(d.get("alpha", 0.1)),
            z_policy=d.get("z_policy", "fresh"),
            probs=tuple(float(p) for p in probs) if probs is not None else None,
            sources=tuple(cls.from_dict(s) for s in d.get("sources", ())),
        )

    def problems(self, k: int) -> list:
        out = []
        if self.kind not in SOURCE_KINDS:
            out.append(f"source.kind must be one of {SOURCE_KINDS}, got {self.kind!r}")
        if self.kind == "paninski":
            if k % 2:
                out.append("paninski source needs even k")
            if not 0 < self.alpha <= 0.5:
                out.append("source.alpha must lie in (0, 1/2]")
            if self.z_policy not in ("fresh", "fixed"):
                out.append("source.z_policy must be 'fresh' or 'fixed'")
        if self.kind == "explicit":
            if self.probs is None or len(self.probs) != k:
                out.append(f"explicit source needs {k} probabilities")
            elif min(self.probs) < 0 or abs(sum(self.probs) - 1) > 1e-9:
                out.append("explicit source probabilities must be nonnegative and sum to 1")
        if self.kind == "worst-of-list":
            if not self.sources:
                out.append("worst-of-list source needs a nonempty 'sources' list")
            for s in self.sources:
                if s.kind == "worst-of-list":
                    out.append("worst-of-list sources cannot nest")
                out.extend(s.problems(k))
        return out


@dataclass(frozen=True)
class AttackSpec:
    """Attack name plus parameters.

    coupling: ``target`` ("paninski" with ``alpha``, or "explicit" with
    ``probs``) and ``strict``; spike: ``target`` symbol; hash_flood:
    ``target_set`` (default: first half of [k]).
    """

    name: str = "null"
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d) -> "AttackSpec":
        if d is None:
            return cls()
        if isinstance(d, str):
            return cls(name=d)
        return cls(d.get("name", "null"), dict(d.get("params", {})))

    @property
    def label(self) -> str:
        if self.name == "coupling" and self.params.get("strict"):
            return "coupling-strict"
        return self.name

    def problems(self) -> list:
        out = []
        if self.name not in ATTACKS:
            out.append(f"attack.name must be one of {ATTACKS}, got {self.name!r}")
        if self.name == "coupling":
            tgt = self.params.get("target", "paninski")
            if tgt not in ("paninski", "explicit"):
                out.append("coupling attack target must be 'paninski' or 'explicit'")
            if tgt == "paninski" and not 0 < float(self.params.get("alpha", 0.1)) <= 0.5:
                out.append("coupling attack alpha must lie in (0, 1/2]")
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "DL"
    k: int = 10
    n: int = 1000
    constraint: ConstraintSpec = ConstraintSpec()
    gammas: tuple = (0.0,)
    source: SourceSpec = SourceSpec()
    attack: AttackSpec = AttackSpec()
    null_attack: AttackSpec = AttackSpec()
    tester: Optional[TesterConfig] = None
    reference: Optional[tuple] = None
    # None: the tester is told each grid point's gamma; a number pins it
    tester_gamma: Optional[float] = None
    trials: int = 200
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if self.reference is not None:
            object.__setattr__(self, "reference", tuple(float(p) for p in self.reference))

    # --- serialisation -------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "task": self.task,
            "k": self.k,
            "n": self.n,
            "constraint": self.constraint.to_dict(),
            "gammas": list(self.gammas),
            "source": self.source.to_dict(),
            "attack": self.attack.to_dict(),
            "trials": self.trials,
            "master_seed": self.master_seed,
        }
        if self.task != "DL":
            d["null_attack"] = self.null_attack.to_dict()
            d["tester"] = (self.tester or default_tester(self)).to_dict()
            if self.reference is not None:
                d["reference"] = list(self.reference)
            if self.tester_gamma is not None:
                d["tester_gamma"] = self.tester_gamma
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError([f"unknown config key {key!r}" for key in sorted(unknown)])
        try:
            tester = d.get("tester")
            ref = d.get("reference")
            return cls(
                task=d.get("task", "DL"),
                k=int(d.get("k", 10)),
                n=int(d.get("n", 1000)),
                constraint=ConstraintSpec.from_dict(d.get("constraint", {})),
                gammas=tuple(float(g) for g in d.get("gammas", (0.0,))),
                source=SourceSpec.from_dict(d.get("source", {})),
                attack=AttackSpec.from_dict(d.get("attack")),
                null_attack=AttackSpec.from_dict(d.get("null_attack")),
                tester=TesterConfig.from_dict(tester) if tester is not None else None,
                reference=tuple(float(p) for p in ref) if ref is not None else None,
                tester_gamma=float(d["tester_gamma"]) if d.get("tester_gamma") is not None else None,
                trials=int(d.get("trials", 200)),
                master_seed=int(d.get("master_seed", 0)),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def with_tester(self) -> "ExperimentConfig":
        if self.task == "DL" or self.tester is not None:
            return self
        return replace(self, tester=default_tester(self))

    # --- validation ----------------------------------------------------

    def problems(self) -> list:
        out = []
        if self.task not in ("DL", "IT", "UT"):
            out.append(f"task must be DL, IT or UT, got {self.task!r}")
        if self.k < 2:
            out.append("k must be >= 2")
        if self.n < 1:
            out.append("n must be >= 1")
        if self.trials < 1:
            out.append("trials must be >= 1")
        if not self.gammas:
            out.append("gammas must be nonempty")
        out.extend(f"gamma {g} outside [0, 1]" for g in self.gammas if not 0 <= g <= 1)
        if self.constraint.kind == "ldp":
            out.append("ldp constraints are supported by the bounds module only")
        out.extend(self.source.problems(self.k))
        out.extend(self.attack.problems())
        out.extend(self.null_attack.problems())
        hashed = self.constraint.kind == "bits" and 2**self.constraint.ell < self.k
        if self.attack.name == "hash_flood" and not (self.task == "DL" and hashed):
            out.append("hash_flood attack needs task DL with a binding bits constraint")
        if self.task == "UT" and self.reference is not None:
            out.append("UT tests against uniform; drop 'reference' or use task IT")
        if self.tester_gamma is not None and not 0 <= self.tester_gamma <= 1:
            out.append("tester_gamma must lie in [0, 1]")
        if self.reference is not None and len(self.reference) != self.k:
            out.append(f"reference needs {self.k} probabilities")
        return out

    def validate(self) -> "ExperimentConfig":
        probs = self.problems()
        if probs:
            raise ConfigError(probs)
        return self


def default_tester(cfg: ExperimentConfig) -> TesterConfig:
    alpha = cfg.source.alpha if cfg.source.kind == "paninski" else 0.1
    return TesterConfig(alpha=alpha)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix in (".yaml", ".yml"):
            import yaml

            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except Exception as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping")
    return ExperimentConfig.from_dict(data)
