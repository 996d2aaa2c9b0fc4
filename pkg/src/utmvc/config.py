"""Problem configuration: a small nested key-value text format.

Syntax::

    # comment
    section {
      key = value
      subsection { ... }
    }

Values are numbers, bare words, quoted strings (used for expressions),
booleans (true/false), or bracketed arrays ``[v, v, ...]`` which may nest.
Unknown keys are rejected with the dotted path of the offender.  The exact
grammar is documented in the README.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coefficients import CoefficientProfile, Domain, DomainKind, preset_profile
from .delta import BoundaryConditions
from .errors import ConfigError
from .expressions import Expression
from .kernels import ProblemData


# -- tokenizer/parser for the config text -----------------------------------

class _ConfigParser:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.text = text
        self.pos = 0

    def _err(self, msg: str) -> ConfigError:
        upto = self.text[:self.pos]
        line = upto.count("\n") + 1
        col = self.pos - (upto.rfind("\n") + 1) + 1
        return ConfigError(f"line {line}, column {col}: {msg}")

    def _skip_ws(self):
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "#":
                nl = self.text.find("\n", self.pos)
                self.pos = len(self.text) if nl < 0 else nl
            elif ch.isspace():
                self.pos += 1
            else:
                return

    def _word(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum()
                                             or self.text[self.pos] in "_.-+"):
            self.pos += 1
        if self.pos == start:
            raise self._err("expected a word")
        return self.text[start:self.pos]

    def parse(self) -> dict:
        out = self._block(top=True)
        self._skip_ws()
        if self.pos < len(self.text):
            raise self._err("unexpected trailing input")
        return out

    def _block(self, top=False) -> dict:
        out: dict = {}
        while True:
            self._skip_ws()
            if self.pos >= len(self.text):
                if top:
                    return out
                raise self._err("unexpected end of file inside a block")
            if self.text[self.pos] == "}":
                if top:
                    raise self._err("unmatched '}'")
                self.pos += 1
                return out
            key = self._word()
            self._skip_ws()
            if self.pos >= len(self.text):
                raise self._err(f"expected '=' or '{{' after {key!r}")
            ch = self.text[self.pos]
            if ch == "{":
                self.pos += 1
                value = self._block()
            elif ch == "=":
                self.pos += 1
                self._skip_ws()
                value = self._value()
            else:
                raise self._err(f"expected '=' or '{{' after {key!r}")
            if key in out:
                raise self._err(f"duplicate key {key!r}")
            out[key] = value

    def _value(self):
        ch = self.text[self.pos]
        if ch == '"':
            self.pos += 1
            end = self.text.find('"', self.pos)
            if end < 0:
                raise self._err("unterminated string")
            s = self.text[self.pos:end]
            self.pos = end + 1
            return s
        if ch == "[":
            self.pos += 1
            arr = []
            while True:
                self._skip_ws()
                if self.pos >= len(self.text):
                    raise self._err("unterminated array")
                if self.text[self.pos] == "]":
                    self.pos += 1
                    return arr
                if self.text[self.pos] == ",":
                    self.pos += 1
                    continue
                arr.append(self._value())
        word = self._word()
        if word in ("true", "false"):
            return word == "true"
        try:
            v = float(word)
        except ValueError:
            return word
        if not math.isfinite(v):
            raise self._err(f"non-finite number {word!r}")
        return v


def parse_config_text(text: str) -> dict:
    return _ConfigParser(text).parse()


# -- schema -------------------------------------------------------------------

_SCHEMA = {
    "domain": {"kind", "xl", "xr", "truncation_extent"},
    "coefficients": {"mode", "preset", "params", "alpha", "beta", "gamma",
                     "alpha_prime", "beta_prime", "gamma_prime",
                     "xs", "alpha_re", "alpha_im", "beta_re", "beta_im",
                     "gamma_re", "gamma_im"},
    "bc": {"rows", "a0", "a1"},
    "data": {"q0", "f", "f0", "f1"},
    "numerics": {"n_truncation", "tolerances", "contour"},
    "output": {"solve_csv", "eigs_json", "precision"},
}
_CONTOUR_KEYS = {"safety", "theta0_override", "t_min", "tol"}


@dataclass
class ProblemConfig:
    """Validated configuration with lazily constructed problem objects."""

    domain: Domain
    profile: CoefficientProfile
    bc: BoundaryConditions
    data: ProblemData
    n_truncation: Optional[int] = None
    contour: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _check_keys(section: str, entries: dict, allowed: set):
    for key in entries:
        if key not in allowed:
            raise ConfigError(f"unknown key {section}.{key}")


def _expr_fn(text: str, path: str, needs: str):
    try:
        e = Expression(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    bad = e.variables - set(needs)
    if bad:
        raise ConfigError(f"{path}: expression may only use {needs!r}, found {sorted(bad)}")
    if needs == "x":
        return lambda x: e(x=x)
    if needs == "t":
        return lambda t: e(t=t)
    return lambda x, t: e(x=x, t=t)


def _build_domain(entries) -> Domain:
    _check_keys("domain", entries, _SCHEMA["domain"])
    kind_word = entries.get("kind")
    kinds = {"whole_line": DomainKind.WHOLE_LINE, "half_line": DomainKind.HALF_LINE,
             "finite_interval": DomainKind.FINITE_INTERVAL}
    if kind_word not in kinds:
        raise ConfigError(f"domain.kind must be one of {sorted(kinds)}")
    kw = {}
    if "xl" in entries:
        kw["x_l"] = float(entries["xl"])
    if "xr" in entries:
        kw["x_r"] = float(entries["xr"])
    if "truncation_extent" in entries:
        kw["truncation_extent"] = float(entries["truncation_extent"])
    try:
        return Domain(kinds[kind_word], **kw)
    except ValueError as exc:
        raise ConfigError(f"domain: {exc}") from None


def _build_profile(entries, domain: Domain) -> CoefficientProfile:
    _check_keys("coefficients", entries, _SCHEMA["coefficients"])
    mode = entries.get("mode", "expression")
    if mode == "preset":
        name = entries.get("preset")
        params = entries.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("coefficients.params must be a block")
        try:
            return preset_profile(name, domain, **params)
        except ValueError as exc:
            raise ConfigError(f"coefficients: {exc}") from None
    if mode == "expression":
        fns = {}
        for name in ("alpha", "beta", "gamma"):
            text = entries.get(name)
            if text is None:
                raise ConfigError(f"coefficients.{name} is required in expression mode")
            fns[name] = _expr_fn(str(text), f"coefficients.{name}", "x")
        for name in ("alpha_prime", "beta_prime", "gamma_prime"):
            if name in entries:
                fns[name] = _expr_fn(str(entries[name]), f"coefficients.{name}", "x")
        return CoefficientProfile(domain=domain, **fns)
    if mode == "samples":
        try:
            xs = np.asarray(entries["xs"], dtype=float)
            vals = {}
            for name in ("alpha", "beta", "gamma"):
                re = np.asarray(entries[f"{name}_re"], dtype=float)
                im = np.asarray(entries.get(f"{name}_im", np.zeros_like(re)), dtype=float)
                if len(re) != len(xs) or len(im) != len(xs):
                    raise ConfigError(f"coefficients.{name}_re/_im length mismatch")
                vals[name] = re + 1j * im
        except KeyError as exc:
            raise ConfigError(f"coefficients.{exc.args[0]} missing in samples mode") from None
        from scipy.interpolate import CubicSpline

        spl = {name: CubicSpline(xs, v) for name, v in vals.items()}
        return CoefficientProfile(
            alpha=spl["alpha"], beta=spl["beta"], gamma=spl["gamma"],
            alpha_prime=spl["alpha"].derivative(),
            beta_prime=spl["beta"].derivative(),
            gamma_prime=spl["gamma"].derivative(),
            domain=domain)
    raise ConfigError(f"coefficients.mode must be preset|expression|samples, got {mode!r}")


def _build_bc(entries, domain: Domain) -> BoundaryConditions:
    _check_keys("bc", entries, _SCHEMA["bc"])
    if domain.kind is DomainKind.WHOLE_LINE:
        return BoundaryConditions.whole_line()
    if domain.kind is DomainKind.HALF_LINE:
        if "a0" not in entries or "a1" not in entries:
            raise ConfigError("bc.a0 and bc.a1 are required on the half line")
        return BoundaryConditions.half_line(complex(entries["a0"]), complex(entries["a1"]))
    rows = entries.get("rows")
    if rows is None:
        raise ConfigError("bc.rows is required on the finite interval")
    if not (isinstance(rows, list) and len(rows) == 2):
        raise ConfigError("bc.rows must hold two rows")
    parsed = []
    for r_i, row in enumerate(rows):
        if not (isinstance(row, list) and len(row) == 4):
            raise ConfigError(f"bc.rows[{r_i}] must have four entries")
        vals = []
        for c_i, v in enumerate(row):
            if isinstance(v, str):
                e = Expression(v)
                if e.variables:
                    raise ConfigError(f"bc.rows[{r_i}][{c_i}] must be constant")
                vals.append(e.constant_value())
            elif isinstance(v, (int, float)):
                vals.append(complex(v))
            else:
                raise ConfigError(f"bc.rows[{r_i}][{c_i}] has invalid type")
        parsed.append(vals)
    return BoundaryConditions.finite_interval(parsed)


def _build_data(entries) -> ProblemData:
    _check_keys("data", entries, _SCHEMA["data"])
    kw = {}
    if "q0" in entries:
        kw["q0"] = _expr_fn(str(entries["q0"]), "data.q0", "x")
    if "f" in entries:
        kw["f"] = _expr_fn(str(entries["f"]), "data.f", "xt")
    for name in ("f0", "f1"):
        if name in entries:
            kw[name] = _expr_fn(str(entries[name]), f"data.{name}", "t")
    return ProblemData(**kw)


def load_config(text: str) -> ProblemConfig:
    raw = parse_config_text(text)
    for section in raw:
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section {section!r}")
    if "domain" not in raw:
        raise ConfigError("missing required section 'domain'")
    if "coefficients" not in raw:
        raise ConfigError("missing required section 'coefficients'")
    domain = _build_domain(raw["domain"])
    profile = _build_profile(raw["coefficients"], domain)
    bc = _build_bc(raw.get("bc", {}), domain)
    data = _build_data(raw.get("data", {}))
    numerics = raw.get("numerics", {})
    _check_keys("numerics", numerics, _SCHEMA["numerics"])
    contour = numerics.get("contour", {})
    if not isinstance(contour, dict):
        raise ConfigError("numerics.contour must be a block")
    _check_keys("numerics.contour", contour, _CONTOUR_KEYS)
    n_trunc = numerics.get("n_truncation")
    if n_trunc is not None:
        n_trunc = int(n_trunc)
    output = raw.get("output", {})
    _check_keys("output", output, _SCHEMA["output"])
    return ProblemConfig(domain=domain, profile=profile, bc=bc, data=data,
                         n_truncation=n_trunc, contour=dict(contour),
                         output=dict(output), raw=raw)


def parse_config(path: str) -> ProblemConfig:
    """Load and validate a configuration file."""
    with open(path, "r", encoding="utf-8") as fh:
        return load_config(fh.read())
