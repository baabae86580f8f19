"""Run configuration: YAML in, validated :class:`RunConfig` out.

Unknown keys anywhere are errors. A typo in a physics parameter must never
fall back silently to a default.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .bath import BathSpec, CouplingForm, ModelParams
from .errors import ConfigError, InvalidParameterError

BACKENDS = ("fock", "gaussian", "both")
STATE_KINDS = ("coherent", "superposition", "thermal", "fock")
COLUMNS = ("t", "E", "W", "W_i", "W_c", "C_l1", "P", "P_av", "D", "D_xb", "nu", "purity")
METRICS = COLUMNS[1:]

_STATE_FIELDS = {
    "coherent": {"alpha"},
    "superposition": {"c0", "c1"},
    "thermal": {"T_s"},
    "fock": {"n"},
}
_TRUNCATION_DEFAULTS = {
    "system_dim": None,
    "bath_dims": None,
    "fock_tol": 1e-6,
    "metric_tol": 1e-12,
    "max_dim": 400,
    "overflow": 1e-4,
    "max_joint_dim": 20000,
    "component_tol": 1e-8,
}


def parse_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"complex number as a list needs [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ConfigError(f"cannot read {value!r} as a complex number") from None
    if isinstance(value, (int, float, complex)):
        return complex(value)
    raise ConfigError(f"cannot read {value!r} as a complex number")


def _complex_out(z: complex):
    return [float(z.real), float(z.imag)]


@dataclass(frozen=True)
class InitialState:
    kind: str
    alpha: complex = 0j
    c0: complex = 1 + 0j
    c1: complex = 0j
    T_s: float | None = None
    n: int = 0

    def __post_init__(self):
        for name in ("alpha", "c0", "c1"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.T_s is not None:
            object.__setattr__(self, "T_s", float(self.T_s))
        if self.kind not in STATE_KINDS:
            raise ConfigError(f"initial state kind must be one of {STATE_KINDS}, got {self.kind!r}")
        if self.kind == "superposition" and abs(self.c0) ** 2 + abs(self.c1) ** 2 == 0:
            raise ConfigError("superposition amplitudes are both zero")
        if self.kind == "fock" and (int(self.n) != self.n or self.n < 0):
            raise ConfigError(f"Fock level must be a non-negative integer, got {self.n}")
        if self.T_s is not None and self.T_s < 0:
            raise ConfigError(f"T_s must be >= 0, got {self.T_s}")

    @property
    def is_gaussian(self) -> bool:
        return self.kind in ("coherent", "thermal")

    @classmethod
    def from_dict(cls, d) -> "InitialState":
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigError("a state needs a 'kind' key")
        kind = d["kind"]
        allowed = _STATE_FIELDS.get(kind)
        if allowed is None:
            raise ConfigError(f"initial state kind must be one of {STATE_KINDS}, got {kind!r}")
        extra = set(d) - allowed - {"kind"}
        if extra:
            raise ConfigError(f"unknown keys for a {kind} state: {sorted(extra)}")
        kw: dict[str, Any] = {"kind": kind}
        if kind == "coherent":
            kw["alpha"] = parse_complex(d.get("alpha", 0))
        elif kind == "superposition":
            kw["c0"] = parse_complex(d.get("c0", 1))
            kw["c1"] = parse_complex(d.get("c1", 0))
        elif kind == "thermal":
            kw["T_s"] = None if d.get("T_s") is None else float(d["T_s"])
        else:
            kw["n"] = int(d.get("n", 0))
        return cls(**kw)

    def to_dict(self) -> dict:
        if self.kind == "coherent":
            return {"kind": "coherent", "alpha": _complex_out(self.alpha)}
        if self.kind == "superposition":
            return {"kind": "superposition", "c0": _complex_out(self.c0), "c1": _complex_out(self.c1)}
        if self.kind == "thermal":
            return {"kind": "thermal", "T_s": self.T_s}
        return {"kind": "fock", "n": int(self.n)}


@dataclass(frozen=True)
class Grid:
    t_max: float = 20.0
    dt: float = 0.01

    def __post_init__(self):
        if not self.dt > 0 or self.t_max < self.dt:
            raise ConfigError(f"grid needs dt > 0 and t_max >= dt (t_max={self.t_max}, dt={self.dt})")


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    backend: str = "gaussian"
    initial_state: InitialState = field(default_factory=lambda: InitialState("coherent", alpha=3 + 4j))
    pair_state: InitialState | None = None
    grid: Grid = field(default_factory=Grid)
    outputs: tuple = METRICS
    truncation: dict = field(default_factory=lambda: dict(_TRUNCATION_DEFAULTS))
    seed: int = 0

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        bad = [o for o in self.outputs if o not in METRICS]
        if bad:
            raise ConfigError(f"unknown outputs {bad}; choose from {list(METRICS)}")
        extra = set(self.truncation) - set(_TRUNCATION_DEFAULTS)
        if extra:
            raise ConfigError(f"unknown truncation keys: {sorted(extra)}")
        object.__setattr__(self, "truncation", _normalize_truncation({**_TRUNCATION_DEFAULTS, **self.truncation}))
        object.__setattr__(self, "outputs", tuple(o for o in METRICS if o in self.outputs))
        states = [self.initial_state] + ([self.pair_state] if self.pair_state else [])
        for s in states:
            if self.backend == "fock" and s.kind == "coherent" and abs(s.alpha) ** 2 > 2:
                raise ConfigError(
                    f"coherent amplitude |alpha|^2 = {abs(s.alpha) ** 2:g} > 2 is not feasible in the joint Fock "
                    "space; use backend 'gaussian' or 'both'"
                )
            if self.backend != "fock" and not s.is_gaussian:
                raise ConfigError(f"a {s.kind} state is not Gaussian; use backend 'fock'")

    @property
    def primary(self) -> str:
        return "fock" if self.backend == "fock" else "gaussian"

    def with_(self, **changes) -> "RunConfig":
        """Copy with top-level fields or model parameters replaced."""
        param_keys = set(ModelParams.__dataclass_fields__) | set(BathSpec.__dataclass_fields__)
        pchanges = {k: changes.pop(k) for k in list(changes) if k in param_keys}
        if "mu_tilde" in changes:
            pchanges["mu"] = changes.pop("mu_tilde")
            pchanges["form"] = CouplingForm.CONVEX
        elif "mu" in pchanges:
            pchanges["form"] = CouplingForm.SUBTRACTIVE
        if "truncation" in changes:
            changes["truncation"] = {**self.truncation, **changes["truncation"]}
        params = self.params.with_(**pchanges) if pchanges else self.params
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes, params=params)
        return RunConfig(**d)

    # serialization
    def to_dict(self) -> dict:
        p = self.params
        coupling = "mu" if p.form is CouplingForm.SUBTRACTIVE else "mu_tilde"
        return {
            "params": {
                "m": float(p.m),
                "omega_s": float(p.omega_s),
                "T": float(p.T),
                coupling: float(p.mu),
                "bath": {
                    "n_modes": int(p.bath.n_modes),
                    "eta": float(p.bath.eta),
                    "cutoff": float(p.bath.cutoff),
                    "omega_max": float(p.bath.omega_max),
                    "ohmicity": float(p.bath.ohmicity),
                },
            },
            "backend": self.backend,
            "initial_state": self.initial_state.to_dict(),
            "pair_state": self.pair_state.to_dict() if self.pair_state else None,
            "grid": {"t_max": float(self.grid.t_max), "dt": float(self.grid.dt)},
            "outputs": list(self.outputs),
            "truncation": {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.truncation.items()},
            "seed": int(self.seed),
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self, n: int = 12) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:n]

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = copy.deepcopy(raw or {})
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a mapping")
        extra = set(raw) - set(cls.__dataclass_fields__)
        if extra:
            raise ConfigError(f"unknown configuration keys: {sorted(extra)}")
        try:
            kw: dict[str, Any] = {}
            if "params" in raw:
                kw["params"] = _params_from_dict(raw["params"])
            for key in ("backend", "seed"):
                if key in raw:
                    kw[key] = raw[key]
            if "initial_state" in raw:
                kw["initial_state"] = InitialState.from_dict(raw["initial_state"])
            if raw.get("pair_state") is not None:
                kw["pair_state"] = InitialState.from_dict(raw["pair_state"])
            if "grid" in raw:
                g = raw["grid"] or {}
                if set(g) - {"t_max", "dt"}:
                    raise ConfigError(f"unknown grid keys: {sorted(set(g) - {'t_max', 'dt'})}")
                kw["grid"] = Grid(**{k: float(v) for k, v in g.items()})
            if "outputs" in raw:
                kw["outputs"] = tuple(raw["outputs"])
            if "truncation" in raw:
                kw["truncation"] = dict(raw["truncation"] or {})
            return cls(**kw)
        except (InvalidParameterError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc


def _normalize_truncation(tr: dict) -> dict:
    out = {}
    try:
        for k, v in tr.items():
            if v is None:
                out[k] = None
            elif k == "system_dim" or k.startswith("max_"):
                out[k] = int(v)
            elif k == "bath_dims":
                out[k] = tuple(int(d) for d in v)
            else:
                out[k] = float(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad truncation value: {exc}") from None
    return out


def _params_from_dict(d) -> ModelParams:
    if not isinstance(d, dict):
        raise ConfigError("params must be a mapping")
    allowed = {"m", "omega_s", "T", "mu", "mu_tilde", "bath"}
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown params keys: {sorted(extra)}")
    if "mu" in d and "mu_tilde" in d:
        raise ConfigError("give either mu or mu_tilde, not both")
    bath = d.get("bath") or {}
    extra = set(bath) - set(BathSpec.__dataclass_fields__)
    if extra:
        raise ConfigError(f"unknown bath keys: {sorted(extra)}")
    kw = {k: float(d[k]) for k in ("m", "omega_s", "T") if k in d}
    if "mu_tilde" in d:
        kw.update(mu=float(d["mu_tilde"]), form=CouplingForm.CONVEX)
    elif "mu" in d:
        kw.update(mu=float(d["mu"]), form=CouplingForm.SUBTRACTIVE)
    bkw = {k: (int(v) if k == "n_modes" else float(v)) for k, v in bath.items()}
    return ModelParams(bath=BathSpec(**bkw), **kw)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix == ".csv":
        return config_from_csv_header(text)
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return RunConfig.from_dict(raw)


def config_from_csv_header(text: str) -> RunConfig:
    """Recover the configuration embedded in a result file's header."""
    for line in text.splitlines():
        if line.startswith("# config: "):
            return RunConfig.from_dict(json.loads(line[len("# config: "):]))
        if not line.startswith("#"):
            break
    raise ConfigError("no embedded configuration found")


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
