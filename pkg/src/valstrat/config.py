from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, fields
from fractions import Fraction


@dataclass
class Config:
    seed: int = 20240611
    precision: Fraction = Fraction(24)
    n_fibers: int = 32
    n_points: int = 1
    n_tuples: int = 64
    witnesses_per_value: int = 2
    placement_attempts: int = 2000
    neighborhood_samples: int = 16

    def __post_init__(self):
        self.precision = Fraction(self.precision)
        if self.precision <= 0:
            raise ValueError("precision must be positive")
        for name in ("n_fibers", "n_points", "n_tuples", "witnesses_per_value",
                     "placement_attempts", "neighborhood_samples"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        self.seed = int(self.seed) & (2 ** 64 - 1)

    def rng(self, *tags) -> random.Random:
        """Independent deterministic stream for the given tags."""
        return random.Random(":".join([str(self.seed), *map(str, tags)]))

    @classmethod
    def from_json(cls, obj: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(obj)
        if "precision" in kw:
            kw["precision"] = Fraction(str(kw["precision"]))
        return cls(**kw)

    @classmethod
    def load(cls, path: str) -> "Config":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        d = asdict(self)
        d["precision"] = str(self.precision)
        return d
