"""Scenario configuration: a plain-text key = value format with sections.

Grammar (one setting per line):

    # comment                      blank lines and '#' comments are skipped
    key = value                    top-level setting
    [section]                      opens a nested table; subsequent keys
    key = value                    belong to it until the next header

Values are parsed as booleans (``true``/``false``), integers, floats,
comma-separated numeric lists, or bare strings, in that order of
preference.  Unknown keys and malformed lines raise :class:`ConfigError`
with the line number.  ``serialize`` emits a canonical form whose
parse -> serialize -> parse round trip is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ConfigError

MODES = ("spectrum", "run", "shoot", "verify-all")


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated run parameters for the command-line front end."""

    mode: str = "run"
    k: int = 1
    b0: float = 0.01
    grid_n: int = 1024
    ds: float | None = None          # None -> step-size default for (grid, k)
    s_max: float | None = None       # None -> mode-dependent default
    record_ds: float = 2e-3
    seed: int = 1234
    jobs: int = 1
    quick: bool = False
    json_output: bool = False
    out_dir: str = "out"
    b_values: tuple = (0.005, 0.01, 0.02)
    lower_modes: tuple = ()          # b_1(0) .. b_{k-1}(0) for k > 1 runs
    amplitude: float = 0.02          # adiabatic basis amplitude for k > 1
    ceiling: float = 1.0             # trap ceiling D_k
    shoot_tol: float = 1e-12
    mass_tol: float = 1e-6
    rate_tol: float | None = None    # None -> 0.02 (k = 1) / 0.03 (k > 1)
    radius_tol: float = 1e-4

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.mode == "shoot" and self.k not in (2, 3):
            raise ConfigError("shooting supports k in {2, 3} only")
        if self.grid_n < 8 or self.grid_n % 2:
            raise ConfigError("grid must be even and >= 8")
        if self.mode in ("spectrum", "run", "shoot") and self.grid_n < 512:
            raise ConfigError(f"mode {self.mode!r} needs a grid of >= 512")
        if abs(self.b0) > 0.05:
            raise ConfigError("|b0| must be <= 0.05")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.lower_modes and len(self.lower_modes) != self.k - 1:
            raise ConfigError(
                f"lower_modes needs {self.k - 1} entries for k = {self.k}"
            )

    def effective_rate_tol(self) -> float:
        if self.rate_tol is not None:
            return self.rate_tol
        return 0.02 if self.k == 1 else 0.03

    def effective_s_max(self) -> float:
        if self.s_max is not None:
            return self.s_max
        return 6.0 if self.k == 1 else 0.85


# (section, key) -> dataclass field; top-level uses section ""
_KEYMAP = {
    ("", "mode"): "mode",
    ("", "k"): "k",
    ("", "b0"): "b0",
    ("", "grid"): "grid_n",
    ("", "ds"): "ds",
    ("", "s_max"): "s_max",
    ("", "record_ds"): "record_ds",
    ("", "seed"): "seed",
    ("", "jobs"): "jobs",
    ("", "quick"): "quick",
    ("", "json"): "json_output",
    ("", "out"): "out_dir",
    ("", "b_values"): "b_values",
    ("", "lower_modes"): "lower_modes",
    ("shoot", "amplitude"): "amplitude",
    ("shoot", "ceiling"): "ceiling",
    ("shoot", "tol"): "shoot_tol",
    ("tolerances", "mass"): "mass_tol",
    ("tolerances", "rate"): "rate_tol",
    ("tolerances", "radius"): "radius_tol",
}

_INT_FIELDS = {"k", "grid_n", "seed", "jobs"}
_BOOL_FIELDS = {"quick", "json_output"}
_STR_FIELDS = {"mode", "out_dir"}
_TUPLE_FIELDS = {"b_values", "lower_modes"}
_OPTIONAL_FIELDS = {"ds", "s_max", "rate_tol"}


def _parse_value(token: str, fname: str, lineno: int):
    token = token.strip()
    if fname in _STR_FIELDS:
        return token
    if fname in _BOOL_FIELDS:
        if token.lower() in ("true", "yes", "1"):
            return True
        if token.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"line {lineno}: expected boolean, got {token!r}")
    if fname in _OPTIONAL_FIELDS and token.lower() in ("none", "auto"):
        return None
    if fname in _TUPLE_FIELDS:
        if not token:
            return ()
        try:
            return tuple(float(p) for p in token.split(","))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad list {token!r}") from exc
    try:
        if fname in _INT_FIELDS:
            return int(token)
        return float(token)
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad number {token!r}") from exc


def parse_config(text: str) -> ScenarioConfig:
    """Parse configuration text into a validated :class:`ScenarioConfig`."""
    section = ""
    settings = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: unterminated section header")
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        fname = _KEYMAP.get((section, key))
        if fname is None:
            where = f"[{section}] " if section else ""
            raise ConfigError(f"line {lineno}: unknown key {where}{key!r}")
        settings[fname] = _parse_value(value, fname, lineno)
    try:
        return ScenarioConfig(**settings)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _format_value(val, fname: str) -> str:
    if val is None:
        return "none"
    if isinstance(val, bool):
        return "true" if val else "false"
    if fname in _TUPLE_FIELDS:
        return ", ".join(repr(float(x)) for x in val)
    if isinstance(val, float):
        return repr(val)
    return str(val)


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical text form (stable key order, repr floats)."""
    by_section: dict[str, list[str]] = {}
    for (section, key), fname in _KEYMAP.items():
        val = getattr(cfg, fname)
        by_section.setdefault(section, []).append(
            f"{key} = {_format_value(val, fname)}"
        )
    lines = by_section.pop("", [])
    for section in sorted(by_section):
        lines.append(f"[{section}]")
        lines.extend(by_section[section])
    return "\n".join(lines) + "\n"


def with_overrides(cfg: ScenarioConfig, **overrides) -> ScenarioConfig:
    """Replace fields, re-running validation."""
    clean = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **clean)
