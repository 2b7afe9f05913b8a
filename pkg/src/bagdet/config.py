from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields

from .qcore import Limits

ENV_VAR = "BAGDET_CONFIG"


@dataclass
class Config:
    max_search_nodes: int = 10**6
    max_domain_size: int = 10**5
    max_materialized_size: int = 10**5
    output_format: str = "json"
    seed: int = 0

    def __post_init__(self):
        for name in ("max_search_nodes", "max_domain_size", "max_materialized_size"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.output_format not in ("json", "text"):
            raise ValueError(f"output_format must be json or text, got {self.output_format!r}")

    @property
    def limits(self) -> Limits:
        return Limits(self.max_search_nodes, self.max_domain_size)

    def as_dict(self) -> dict:
        return asdict(self)


def load_config(overrides: dict | None = None, environ=os.environ) -> Config:
    """Defaults, then the JSON file named by ``BAGDET_CONFIG``, then ``overrides`` (non-None values)."""
    values: dict = {}
    path = environ.get(ENV_VAR)
    if path:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in fields(Config)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys in {path}: {sorted(unknown)}")
        values.update(data)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return Config(**values)
