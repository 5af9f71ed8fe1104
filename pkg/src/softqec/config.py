"""Experiment files.

An experiment file is YAML with one top-level key, ``experiments``, mapping
names to entries::

    experiments:
      fig_avg4_a:
        mode: qec              # zeno | qec | dd_only | free
        noise:                 # one component, or two for bimodal noise
          - {sigma: 0.02, tau_n: 128}
        n_realizations: 25
        n_cycles: 3
        n_rep: 5
        steps_per_tau_p: 256
        seed: 1
        exclusion: true
        output: fig_avg4_a     # file stem for the CSVs

Units are tau_p throughout.  Unknown keys are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from .noise import NoiseSpec
from .protocol import MODES, RunConfig

__all__ = ["ConfigError", "Experiment", "UnresolvedName", "dump_experiments", "load_experiments", "parse_experiments"]


class ConfigError(ValueError):
    """Malformed experiment file."""


class UnresolvedName(ConfigError):
    """A name in the file does not refer to anything known."""


_RUN_KEYS = {"mode", "noise", "n_cycles", "n_rep", "steps_per_tau_p", "seed", "noise_dt"}
_EXP_KEYS = _RUN_KEYS | {"n_realizations", "exclusion", "output"}


@dataclass(frozen=True)
class Experiment:
    name: str
    config: RunConfig
    n_realizations: int = 1
    exclusion: bool = True
    output: str = ""

    def to_dict(self) -> dict:
        c = self.config
        return {
            "mode": c.mode,
            "noise": [{"sigma": s.sigma, "tau_n": s.tau_n} for s in c.noise],
            "n_realizations": self.n_realizations,
            "n_cycles": c.n_cycles,
            "n_rep": c.n_rep,
            "steps_per_tau_p": c.steps_per_tau_p,
            "seed": c.seed,
            "noise_dt": c.noise_dt,
            "exclusion": self.exclusion,
            "output": self.output or self.name,
        }

    def with_seed(self, seed: int) -> "Experiment":
        from dataclasses import replace

        return replace(self, config=replace(self.config, seed=int(seed)))


def _noise(name: str, raw) -> tuple[NoiseSpec, ...]:
    if raw is None:
        return ()
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list):
        raise ConfigError(f"{name}: noise must be a list of {{sigma, tau_n}} entries")
    out = []
    for item in raw:
        if not isinstance(item, dict) or set(item) != {"sigma", "tau_n"}:
            raise ConfigError(f"{name}: each noise entry needs exactly sigma and tau_n")
        try:
            out.append(NoiseSpec(float(item["sigma"]), float(item["tau_n"])))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: {exc}") from exc
    return tuple(out)


def _experiment(name: str, d) -> Experiment:
    if not isinstance(d, dict):
        raise ConfigError(f"{name}: entry must be a mapping")
    extra = set(d) - _EXP_KEYS
    if extra:
        raise UnresolvedName(f"{name}: unknown keys {sorted(extra)}")
    mode = d.get("mode", "qec")
    if mode not in MODES:
        raise UnresolvedName(f"{name}: unknown mode {mode!r}")
    if "seed" not in d:
        raise ConfigError(f"{name}: seed must be explicit")
    kw = {k: d[k] for k in ("n_cycles", "n_rep", "steps_per_tau_p", "seed") if k in d}
    try:
        kw = {k: int(v) for k, v in kw.items()}
        if "noise_dt" in d:
            kw["noise_dt"] = float(d["noise_dt"])
        cfg = RunConfig(noise=_noise(name, d.get("noise")), mode=mode, **kw)
        n = int(d.get("n_realizations", 1))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    if n < 1:
        raise ConfigError(f"{name}: n_realizations must be >= 1")
    excl = d.get("exclusion", True)
    if not isinstance(excl, bool):
        raise ConfigError(f"{name}: exclusion must be true or false")
    return Experiment(name, cfg, n, excl, str(d.get("output", name)))


def parse_experiments(text: str) -> list[Experiment]:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML error: {exc}") from exc
    if not isinstance(doc, dict) or set(doc) != {"experiments"} or not isinstance(doc["experiments"], dict):
        raise ConfigError("file must hold a single 'experiments' mapping")
    if not doc["experiments"]:
        raise ConfigError("no experiments defined")
    return [_experiment(str(k), v) for k, v in doc["experiments"].items()]


def load_experiments(path: str | Path) -> list[Experiment]:
    return parse_experiments(Path(path).read_text())


def dump_experiments(exps: list[Experiment]) -> str:
    doc = {"experiments": {e.name: e.to_dict() for e in exps}}
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)
