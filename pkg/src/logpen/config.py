"""Problem configuration records and their JSON form.

A ProblemSpec pins everything a run needs: dimension, potential, well
region, splitting threshold, penalty fraction, grid step, base box, the eps
ladder, solver parameters, the generator seed and the output directory.
Parsing validates the standing hypotheses: the declared potential infimum
must exceed -1 always, and for concentration sweeps with a non-constant
potential the well condition (infimum attained strictly inside the region)
is checked numerically.  parse(serialize(parse(x))) is a fixed point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .energy import PotentialSpec, check_v2, validate_v1
from .errors import ConfigError
from .logsplit import SplitParams
from .penalty import Region, choose_l
from .solver import SolverConfig

__all__ = ["ProblemSpec", "load_spec", "spec_from_dict", "spec_to_dict"]


@dataclass(frozen=True)
class ProblemSpec:
    dim: int
    potential: PotentialSpec
    lam: Region
    h: float
    base_lo: tuple[float, ...]
    base_hi: tuple[float, ...]
    eps_list: tuple[float, ...]
    delta: float = 0.1
    l_fraction: float = 0.25
    solver: SolverConfig = field(default_factory=SolverConfig)
    rng_seed: int = 0
    out_dir: str = "results"

    @property
    def split(self) -> SplitParams:
        return SplitParams(self.delta)

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}")
        if self.lam.dim != self.dim:
            raise ConfigError("region dimension does not match dim")
        if len(self.base_lo) != self.dim or len(self.base_hi) != self.dim:
            raise ConfigError("base box dimension does not match dim")
        if not self.eps_list or any(not e > 0 for e in self.eps_list):
            raise ConfigError("eps_list must be a non-empty list of positive values")
        if not self.h > 0:
            raise ConfigError(f"h must be positive, got {self.h}")
        SplitParams(self.delta)  # validates the convexity range
        choose_l(self.potential.v0, self.l_fraction)  # validates the fraction
        validate_v1(self.potential)

    def validate_well(self) -> None:
        """Numerical well condition; meaningful for non-constant potentials."""
        check_v2(self.potential, self.lam)


def _float_tuple(x, name: str) -> tuple[float, ...]:
    try:
        if isinstance(x, (int, float)):
            return (float(x),)
        return tuple(float(v) for v in x)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number or list of numbers") from exc


def _potential_from_dict(d: dict) -> PotentialSpec:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("potential must be an object with a 'kind'")
    kind = d["kind"]
    v0 = d.get("v0")
    if v0 is None:
        raise ConfigError("potential needs a declared v0")
    if kind == "constant":
        return PotentialSpec(kind="constant", v0=float(v0))
    if kind == "capped_quadratic":
        if "center" not in d or "cap" not in d:
            raise ConfigError("capped_quadratic potential needs center and cap")
        return PotentialSpec(
            kind="capped_quadratic",
            v0=float(v0),
            center=_float_tuple(d["center"], "potential.center"),
            cap=float(d["cap"]),
        )
    if kind == "tabulated":
        if "axes" not in d or "table" not in d:
            raise ConfigError("tabulated potential needs axes and table")
        axes = tuple(tuple(float(v) for v in ax) for ax in d["axes"])
        table = d["table"]
        return PotentialSpec(kind="tabulated", v0=float(v0), axes=axes, table=table)
    raise ConfigError(f"unknown potential kind {kind!r}")


def _potential_to_dict(p: PotentialSpec) -> dict:
    d = {"kind": p.kind, "v0": p.v0}
    if p.kind == "capped_quadratic":
        d["center"] = list(p.center)
        d["cap"] = p.cap
    if p.kind == "tabulated":
        d["axes"] = [list(ax) for ax in p.axes]
        d["table"] = p.table
    return d


def _solver_from_dict(d: dict) -> SolverConfig:
    if d is None:
        return SolverConfig()
    known = {
        "max_iters",
        "residual_tol",
        "nehari_tol",
        "sigma_init",
        "backtrack",
        "armijo",
        "restarts",
        "rng_seed",
    }
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown solver keys: {sorted(extra)}")
    return SolverConfig(**d)


def _solver_to_dict(s: SolverConfig) -> dict:
    return {
        "max_iters": s.max_iters,
        "residual_tol": s.residual_tol,
        "nehari_tol": s.nehari_tol,
        "sigma_init": s.sigma_init,
        "backtrack": s.backtrack,
        "armijo": s.armijo,
        "restarts": s.restarts,
        "rng_seed": s.rng_seed,
    }


def spec_from_dict(d: dict) -> ProblemSpec:
    if not isinstance(d, dict):
        raise ConfigError("config root must be a JSON object")
    required = {"dim", "potential", "lambda", "h", "base_box", "eps_list"}
    missing = required - set(d)
    if missing:
        raise ConfigError(f"config is missing keys: {sorted(missing)}")
    known = required | {"delta", "l_fraction", "solver", "rng_seed", "out_dir"}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    lam_d = d["lambda"]
    if not isinstance(lam_d, dict) or "lo" not in lam_d or "hi" not in lam_d:
        raise ConfigError("lambda must be an object with lo and hi")
    box = d["base_box"]
    if not isinstance(box, dict) or "lo" not in box or "hi" not in box:
        raise ConfigError("base_box must be an object with lo and hi")
    try:
        solver = _solver_from_dict(d.get("solver"))
    except TypeError as exc:
        raise ConfigError(f"bad solver config: {exc}") from exc
    return ProblemSpec(
        dim=int(d["dim"]),
        potential=_potential_from_dict(d["potential"]),
        lam=Region(
            lo=_float_tuple(lam_d["lo"], "lambda.lo"),
            hi=_float_tuple(lam_d["hi"], "lambda.hi"),
        ),
        h=float(d["h"]),
        base_lo=_float_tuple(box["lo"], "base_box.lo"),
        base_hi=_float_tuple(box["hi"], "base_box.hi"),
        eps_list=tuple(float(e) for e in d["eps_list"]),
        delta=float(d.get("delta", 0.1)),
        l_fraction=float(d.get("l_fraction", 0.25)),
        solver=solver,
        rng_seed=int(d.get("rng_seed", 0)),
        out_dir=str(d.get("out_dir", "results")),
    )


def spec_to_dict(spec: ProblemSpec) -> dict:
    return {
        "dim": spec.dim,
        "potential": _potential_to_dict(spec.potential),
        "lambda": {"lo": list(spec.lam.lo), "hi": list(spec.lam.hi)},
        "h": spec.h,
        "base_box": {"lo": list(spec.base_lo), "hi": list(spec.base_hi)},
        "eps_list": list(spec.eps_list),
        "delta": spec.delta,
        "l_fraction": spec.l_fraction,
        "solver": _solver_to_dict(spec.solver),
        "rng_seed": spec.rng_seed,
        "out_dir": spec.out_dir,
    }


def load_spec(path) -> ProblemSpec:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return spec_from_dict(data)
