"""Flat ``key=value`` run configuration.

One key per line, ``#`` starts a comment, keys are dotted namespaces
(``field.B0``, ``strobe.periods``).  Unknown or duplicated keys are errors.
Real values accept plain floats and multiples of pi (``pi/2``, ``-2pi``,
``0.5*pi``); list values are comma separated.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .errors import ConfigError
from .fields import FieldSpec, QPTerm
from .propagator import StepControl

COMMANDS = ("simulate", "strobe", "fit-gamma", "rwa-scan", "lyapunov", "not-detect", "not-search")

_PI = re.compile(
    r"^(?P<sign>[+-]?)\s*(?P<coef>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*pi(?:\s*/\s*(?P<den>\d+\.?\d*))?$"
)


def parse_real(text: str) -> float:
    t = text.strip()
    m = _PI.match(t)
    if m:
        x = float(m.group("coef") or 1.0) * math.pi
        if m.group("den"):
            den = float(m.group("den"))
            if den == 0.0:
                raise ValueError("division by zero")
            x /= den
        return -x if m.group("sign") == "-" else x
    x = float(t)
    if not math.isfinite(x):
        raise ValueError("not finite")
    return x


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def parse_int(text: str) -> int:
    t = text.strip()
    if not re.fullmatch(r"[+-]?\d+", t):
        raise ValueError("expected an integer")
    return int(t)


def _list(parse):
    def inner(text):
        items = [x for x in text.split(",") if x.strip()]
        if not items:
            raise ValueError("empty list")
        return [parse(x) for x in items]

    return inner


def _str(text):
    return text.strip()


# checks return an error message or None
def _positive(x):
    return None if x > 0 else "must be > 0"


def _nonneg(x):
    return None if x >= 0 else "must be >= 0"


def _at_least(n):
    return lambda x: None if x >= n else f"must be >= {n}"


def _q_range(x):
    xs = x if isinstance(x, list) else [x]
    return None if all(-1.0 <= v <= 1.0 for v in xs) else "q must lie in [-1, 1]"


def _all_positive(xs):
    return None if all(v > 0 for v in xs) else "entries must be > 0"


def _one_of(*options):
    return lambda x: None if x in options else f"must be one of {', '.join(options)}"


ANY = None
# key -> (parser, check, commands or ANY)
SCHEMA = {
    "command": (_str, _one_of(*COMMANDS), ANY),
    "out": (_str, None, ANY),
    "seed": (parse_int, _nonneg, ANY),
    "threads": (parse_int, _at_least(1), ANY),
    "field.kind": (_str, _one_of("Rotating", "NRxDrive", "NRzDrive", "Constant", "Quasiperiodic"), ANY),
    "field.B0": (parse_real, None, ANY),
    "field.B1": (parse_real, None, ANY),
    "field.B2": (parse_real, None, ANY),
    "field.B3": (parse_real, None, ANY),
    "field.Bx": (parse_real, None, ANY),
    "field.By": (parse_real, None, ANY),
    "field.Bz": (parse_real, None, ANY),
    "field.omega": (parse_real, _positive, ANY),
    "step.per_period": (parse_int, _at_least(16), ANY),
    "step.tolerance": (parse_real, _positive, ANY),
    "step.max_refinements": (parse_int, _at_least(1), ANY),
    "sim.q0": (parse_real, _q_range, ("simulate",)),
    "sim.p0": (parse_real, None, ("simulate",)),
    "sim.t_end": (parse_real, _positive, ("simulate",)),
    "sim.samples_per_period": (parse_int, _at_least(1), ("simulate",)),
    "strobe.periods": (parse_int, _at_least(1), ("strobe",)),
    "strobe.grid": (parse_int, _nonneg, ("strobe",)),
    "strobe.q_min": (parse_real, _q_range, ("strobe",)),
    "strobe.q_max": (parse_real, _q_range, ("strobe",)),
    "strobe.p0": (parse_real, None, ("strobe",)),
    "fit.q0": (parse_real, _q_range, ("fit-gamma",)),
    "fit.p0": (parse_real, None, ("fit-gamma",)),
    "fit.periods": (parse_int, _at_least(9), ("fit-gamma",)),
    "rwa.B2T": (_list(parse_real), _all_positive, ("rwa-scan",)),
    "rwa.c": (parse_real, _positive, ("rwa-scan",)),
    "rwa.samples_per_period": (parse_int, _at_least(1), ("rwa-scan",)),
    "rwa.q0": (parse_real, _q_range, ("rwa-scan",)),
    "rwa.p0": (parse_real, None, ("rwa-scan",)),
    "rwa.allow_off_resonance": (parse_bool, None, ("rwa-scan",)),
    "lyap.q0": (parse_real, _q_range, ("lyapunov",)),
    "lyap.p0": (parse_real, None, ("lyapunov",)),
    "lyap.d0": (parse_real, lambda x: None if 1e-9 <= x <= 1e-4 else "must lie in [1e-9, 1e-4]", ("lyapunov",)),
    "lyap.periods": (_list(parse_real), _all_positive, ("lyapunov",)),
    "lyap.renorm_periods": (parse_real, _positive, ("lyapunov",)),
    "lyap.pairs": (parse_int, _nonneg, ("lyapunov",)),
    "lyap.pair_periods": (parse_real, _positive, ("lyapunov",)),
    "not.q0": (_list(parse_real), _q_range, ("not-detect",)),
    "not.p0": (parse_real, None, ("not-detect",)),
    "not.horizon_periods": (parse_real, _positive, ("not-detect",)),
    "not.threshold": (parse_real, lambda x: None if 0 < x <= 0.05 else "must lie in (0, 0.05]", ("not-detect",)),
    "not.samples_per_period": (parse_int, _at_least(200), ("not-detect",)),
    "search.kind": (_str, _one_of("NRzDrive", "Rotating"), ("not-search",)),
    "search.B0_lo": (parse_real, _positive, ("not-search",)),
    "search.B0_hi": (parse_real, _positive, ("not-search",)),
    "search.fit_q0": (parse_real, _q_range, ("not-search",)),
    "search.fit_p0": (parse_real, None, ("not-search",)),
    "search.fit_periods": (parse_int, _at_least(9), ("not-search",)),
    "search.residual_tol": (parse_real, _positive, ("not-search",)),
    "search.xtol": (parse_real, _positive, ("not-search",)),
    "search.validate": (parse_bool, None, ("not-search",)),
    "search.validate_q0": (_list(parse_real), _q_range, ("not-search",)),
    "search.validate_threshold": (
        parse_real,
        lambda x: None if 0 < x <= 0.05 else "must lie in (0, 0.05]",
        ("not-search",),
    ),
}

_QP_KEY = re.compile(r"^field\.qp\.(\d+)\.(axis|amp|freq|phase)$")
_QP_PARSE = {"axis": (_str, _one_of("x", "y", "z")), "amp": (parse_real, None), "freq": (parse_real, _positive), "phase": (parse_real, None)}

_FIELD_KEYS = {
    "Rotating": ("field.B0", "field.B1", "field.omega"),
    "NRxDrive": ("field.B2", "field.B3", "field.omega"),
    "NRzDrive": ("field.B0", "field.B1", "field.omega"),
    "Constant": ("field.Bx", "field.By", "field.Bz"),
    "Quasiperiodic": (),
}

# commands that build a FieldSpec from field.* keys
_NEEDS_FIELD = ("simulate", "strobe", "fit-gamma", "lyapunov", "not-detect")


@dataclass
class RunConfig:
    command: str
    values: dict
    origin: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ConfigError(f"missing required key {key!r} for command {self.command!r}")
        return self.values[key]

    @property
    def out(self):
        return self.values.get("out")

    @property
    def seed(self):
        return self.values.get("seed", 0)

    @property
    def threads(self):
        return self.values.get("threads", 1)

    def field_spec(self) -> FieldSpec:
        kind = self.require("field.kind")
        names = _FIELD_KEYS[kind]
        if kind == "Quasiperiodic":
            idx = sorted({int(_QP_KEY.match(k).group(1)) for k in self.values if _QP_KEY.match(k)})
            if not idx:
                raise ConfigError("Quasiperiodic field needs field.qp.<i>.* terms")
            terms = []
            for i in idx:
                pre = f"field.qp.{i}."
                terms.append(
                    QPTerm(
                        self.require(pre + "axis"),
                        self.require(pre + "amp"),
                        self.require(pre + "freq"),
                        self.values.get(pre + "phase", 0.0),
                    )
                )
            offset = tuple(self.values.get(k, 0.0) for k in ("field.Bx", "field.By", "field.Bz"))
            return FieldSpec.quasiperiodic(terms, offset, self.values.get("field.omega"))
        vals = [self.require(k) for k in names]
        if kind == "Constant":
            return FieldSpec.constant(*vals)
        return FieldSpec(kind, tuple(vals[:2]), vals[2])

    def step_control(self, base: StepControl | None = None) -> StepControl:
        base = base or StepControl()
        return StepControl(
            self.values.get("step.per_period", base.steps_per_period),
            self.values.get("step.tolerance", base.tolerance),
            self.values.get("step.max_refinements", base.max_refinements),
        )


def _parse_value(key, raw, where):
    m = _QP_KEY.match(key)
    if m:
        parse, check = _QP_PARSE[m.group(2)]
    elif key in SCHEMA:
        parse, check, _ = SCHEMA[key]
    else:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        value = parse(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value {raw.strip()!r} for {key!r} ({exc})") from None
    if check is not None:
        msg = check(value)
        if msg:
            raise ConfigError(f"{where}: {key} {msg} (got {raw.strip()!r})")
    return value


def parse_config(text: str, overrides=None, command: str | None = None) -> RunConfig:
    """Parse and validate a configuration.

    ``overrides`` is an iterable of ``(key, value)`` pairs from the command
    line; they replace file values.  ``command`` (from the command line)
    must agree with a ``command`` key if both are given.
    """
    values, origin = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key=value, got {body!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {origin[key]})")
        values[key] = _parse_value(key, raw, f"line {lineno}")
        origin[key] = lineno
    for key, raw in overrides or ():
        values[key] = _parse_value(key, raw, f"override --{key}")
        origin[key] = "command line"

    file_cmd = values.get("command")
    if command is not None and file_cmd is not None and command != file_cmd:
        raise ConfigError(f"command-line command {command!r} disagrees with config command {file_cmd!r}")
    cmd = command or file_cmd
    if cmd is None:
        raise ConfigError("no command given")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")
    values["command"] = cmd

    for key in values:
        spec = SCHEMA.get(key)
        if spec is not None and spec[2] is not ANY and cmd not in spec[2]:
            raise ConfigError(f"line {origin[key]}: key {key!r} does not apply to command {cmd!r}")

    cfg = RunConfig(cmd, values, origin)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    """Cross-key checks; everything that can be rejected before computing."""
    cmd = cfg.command
    if cmd in _NEEDS_FIELD:
        cfg.field_spec()
    if cmd == "rwa-scan":
        cfg.require("field.B3")
        kind = cfg.get("field.kind", "NRxDrive")
        if kind != "NRxDrive":
            raise ConfigError("rwa-scan needs field.kind=NRxDrive")
        cfg.require("rwa.B2T")
        omega = cfg.get("field.omega", 2.0 * cfg.values["field.B3"])
        if abs(omega - 2.0 * cfg.values["field.B3"]) > 1e-9 * max(1.0, omega) and not cfg.get(
            "rwa.allow_off_resonance", False
        ):
            raise ConfigError("rwa-scan is off resonance (field.omega != 2 field.B3); set rwa.allow_off_resonance")
    if cmd == "not-search":
        cfg.require("field.omega")
        cfg.require("field.B1")
        if cfg.get("field.kind") not in (None, cfg.get("search.kind", "NRzDrive")):
            raise ConfigError("field.kind must match search.kind")
        lo, hi = cfg.get("search.B0_lo", 0.5), cfg.get("search.B0_hi", 2.0)
        if not lo < hi:
            raise ConfigError("search.B0_lo must be < search.B0_hi")
    if cmd == "strobe":
        if not cfg.get("strobe.q_min", -0.95) <= cfg.get("strobe.q_max", 0.95):
            raise ConfigError("strobe.q_min must be <= strobe.q_max")
    if cmd in ("strobe", "fit-gamma"):
        spec = cfg.field_spec()
        if not spec.is_periodic:
            raise ConfigError(f"{cmd} needs a periodic field")
    try:
        cfg.step_control()
    except ConfigError as exc:
        raise ConfigError(f"step settings: {exc}") from None
