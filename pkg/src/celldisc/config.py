"""``key = value`` experiment files.

::

    [experiment]
    n_t = 64
    r_grid = 150, 300, 450
    trials = 500

    [scheme mubb1]
    scheme = mubb
    u = 1

Every ``[scheme NAME]`` section adds one scheme; unknown sections or keys
are rejected.
"""
from __future__ import annotations

import configparser
import dataclasses

from .codebook import Scheme
from .errors import ConfigError
from .scenario import ExperimentConfig, SchemeSpec

_SCHEME_KEYS = {"scheme": str, "u": int, "beta_t": int, "beta_r": int, "n_rf": int}


def _field_parsers():
    out = {}
    for f in dataclasses.fields(ExperimentConfig):
        if f.name == "schemes":
            continue
        default = f.default
        if f.name == "r_grid":
            out[f.name] = lambda s: tuple(float(x) for x in s.split(","))
        elif f.name == "rf_chains":
            out[f.name] = lambda s: tuple(int(x) for x in s.split(","))
        elif f.name in ("calib_trials", "sigma_n2"):
            cast = int if f.name == "calib_trials" else float
            out[f.name] = lambda s, cast=cast: None if s.lower() in ("", "none") else cast(s)
        elif isinstance(default, bool):
            out[f.name] = lambda s: s.lower() in ("1", "true", "yes", "on")
        elif isinstance(default, int):
            out[f.name] = int
        elif isinstance(default, float):
            out[f.name] = float
        else:
            out[f.name] = str
    return out


def parse_config(text: str, default_schemes=None, **overrides) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from config text; ``overrides`` win.

    ``default_schemes`` applies when the text has no scheme sections.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from e
    parsers = _field_parsers()
    values, schemes = {}, []
    for section in cp.sections():
        items = dict(cp.items(section))
        if section == "experiment":
            for k, v in items.items():
                if k not in parsers:
                    raise ConfigError(f"unknown key {k!r} in [experiment]")
                try:
                    values[k] = parsers[k](v.strip())
                except ValueError as e:
                    raise ConfigError(f"bad value for {k}: {v!r}") from e
        elif section.startswith("scheme "):
            name = section[len("scheme "):].strip()
            kw = {}
            for k, v in items.items():
                if k not in _SCHEME_KEYS:
                    raise ConfigError(f"unknown key {k!r} in [{section}]")
                try:
                    kw[k] = _SCHEME_KEYS[k](v.strip())
                except ValueError as e:
                    raise ConfigError(f"bad value for {k}: {v!r}") from e
            if "scheme" not in kw:
                raise ConfigError(f"[{section}] needs a scheme key")
            try:
                schemes.append(SchemeSpec(Scheme.parse(kw.pop("scheme")), name=name, **kw))
            except ValueError as e:
                raise ConfigError(f"[{section}]: {e}") from e
        else:
            raise ConfigError(f"unknown section [{section}]")
    if schemes or default_schemes:
        values["schemes"] = tuple(schemes or default_schemes)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def load_config(path, default_schemes=None, **overrides) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_config(text, default_schemes, **overrides)


def dump_config(cfg: ExperimentConfig) -> str:
    """Config text that parses back to ``cfg``."""
    lines = ["[experiment]"]
    for f in dataclasses.fields(cfg):
        if f.name == "schemes":
            continue
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ", ".join(repr(x) for x in v)
        elif v is None:
            v = "none"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    for s in cfg.schemes:
        lines += ["", f"[scheme {s.name}]", f"scheme = {s.scheme.value}", f"u = {s.u}",
                  f"beta_t = {s.beta_t}", f"beta_r = {s.beta_r}", f"n_rf = {s.n_rf}"]
    return "\n".join(lines) + "\n"
