"""Flat key-value experiment configs (INI), lossless round-trips.

A config is an experiment name plus a typed parameter mapping; types come
from the experiment's declared defaults, so parsing a written file
reproduces the exact values (floats are serialized with repr precision).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path


@dataclass
class ExperimentConfig:
    name: str
    out: str
    params: dict

    def write(self, path) -> None:
        # the destination directory is not a parameter; keep configs portable
        cp = configparser.ConfigParser()
        cp["experiment"] = {"name": self.name}
        section = {}
        for key in sorted(self.params):
            v = self.params[key]
            if isinstance(v, bool):
                section[key] = "true" if v else "false"
            elif isinstance(v, float):
                section[key] = format(v, ".17g")
            else:
                section[key] = str(v)
        cp["params"] = section
        with open(path, "w") as fh:
            cp.write(fh)

    @classmethod
    def read(cls, path, defaults: dict, name: str | None = None) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise FileNotFoundError(path)
        exp = cp["experiment"] if "experiment" in cp else {}
        params = dict(defaults)
        raw = cp["params"] if "params" in cp else {}
        for key, sval in raw.items():
            if key not in defaults:
                raise KeyError(f"unknown config key: {key}")
            proto = defaults[key]
            if isinstance(proto, bool):
                params[key] = sval.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(proto, int):
                params[key] = int(sval)
            elif isinstance(proto, float):
                params[key] = float(sval)
            else:
                params[key] = sval
        return cls(name or exp.get("name", ""), exp.get("out", ""), params)
