"""Configuration, structured output, and run manifests for the CLI.

Output contract (stable for diff-based regression):
  bowl profile CSV      header "r,u,v,residual"
  catenoid branch CSV   header "s,r,u,theta,kappa,residual"
  barrier CSV           header "r,w,margin"
Numbers are written with 17 significant digits, so identical runs are
byte-identical; every emitted file is listed in manifest.json with its
sha256.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import time
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import __version__
from .errors import ParameterError

ENV_PREFIX = "TRANSLAB_"

_KNOWN_KEYS = {
    "global": {"out", "seed"},
    "bowl": {"curvature", "rmax", "regime", "fit_lo", "fit_hi"},
    "catenoid": {"curvature", "r", "rmax", "handoff"},
    "verify": {"curvature", "suite"},
}


def load_config(path: Optional[str]) -> dict:
    """Flat key=value sections; environment variables override as
    TRANSLAB_<SECTION>_<KEY>.  Unknown keys are rejected."""
    cfg = {section: {} for section in _KNOWN_KEYS}
    if path:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ParameterError(f"config file {path!r} not readable")
        for section in parser.sections():
            if section not in _KNOWN_KEYS:
                raise ParameterError(f"unknown config section [{section}]")
            for key, val in parser.items(section):
                if key not in _KNOWN_KEYS[section]:
                    raise ParameterError(f"unknown config key {key!r} in [{section}]")
                cfg[section][key] = val
    for env_key, val in os.environ.items():
        if not env_key.startswith(ENV_PREFIX):
            continue
        rest = env_key[len(ENV_PREFIX):].lower()
        section, _, key = rest.partition("_")
        if section in _KNOWN_KEYS and key in _KNOWN_KEYS[section]:
            cfg[section][key] = val
    return cfg


def fmt(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path: Path, header: str, columns: Iterable[np.ndarray]) -> None:
    cols = [np.asarray(c) for c in columns]
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in zip(*cols):
            fh.write(",".join(fmt(x) for x in row) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def sha256_of(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


class RunManifest:
    """Collects outputs and check outcomes for one CLI run."""

    def __init__(self, out_dir: Path, command: str, config_echo: dict):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.config_echo = config_echo
        self.checks = {}
        self.files = []
        self._t0 = time.monotonic()

    def record_file(self, path: Path) -> None:
        self.files.append(Path(path))

    def record_check(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks[name] = {"passed": bool(passed), "detail": detail}

    @property
    def all_passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def write(self) -> Path:
        payload = {
            "tool_version": __version__,
            "command": self.command,
            "config": self.config_echo,
            "wall_time_s": round(time.monotonic() - self._t0, 3),
            "checks": self.checks,
            "files": [
                {"name": p.name, "sha256": sha256_of(p)} for p in sorted(self.files)
            ],
        }
        path = self.out_dir / "manifest.json"
        write_json(path, payload)
        return path


def emit_plot_script(path: Path, title: str, plots: list) -> None:
    """Plain gnuplot script referencing the emitted CSVs."""
    lines = [
        "# gnuplot script",
        "set datafile separator ','",
        f"set title '{title}'",
        "set key left top",
        "set grid",
    ]
    plot_parts = [
        f"'{fname}' every ::1 using {cols} with lines title '{label}'"
        for fname, cols, label in plots
    ]
    lines.append("plot " + ", \\\n     ".join(plot_parts))
    lines.append("pause -1")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
