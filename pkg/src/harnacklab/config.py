"""Scenario configuration: schema, named data profiles, validation.

A scenario is one structured YAML file describing a background flow, the
heat runs attached to it, and the checks to perform (bound monitors,
evolution-identity residuals, integrated path inequalities, positivity
reports).  Initial data comes from a small set of named analytic profiles
with numeric parameters; there is no expression parsing.

Validation enforces the hypothesis table of the monitored bounds up front,
so a mis-paired scenario fails with a message citing the violated
hypothesis instead of deep inside a run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .geometry import CONFORMAL, FLAT, SCALED, conformal_curvature, sphere_grid, torus_grid
from .flow import estimate_singular_time
from .geometry import conformal_state
from .harnack import (
    GRAD_BACKWARD,
    GRAD_FORWARD,
    H2R,
    H2R_TYPE_I,
    HEPS,
    HR,
    IDENTITY_IDS,
    P_SHIFTED,
    QUANTITY_KINDS,
    GRAD_FORWARD_EVOLUTION,
    HEPS_EVOLUTION,
    PATH_2R,
    PATH_R,
)
from .heat import FORWARD_T, FORWARD_TAU

MATCH_EPS = "match_eps"

PROFILE_NAMES = ("constant", "cos_mode", "sin_mode", "exp_affine")

FLOW_KINDS = (CONFORMAL, SCALED, FLAT)


class ConfigError(ValueError):
    """A scenario file that parses but does not validate."""


@dataclass(frozen=True)
class Profile:
    """Named analytic profile with numeric parameters.

    ``constant``: value
    ``cos_mode`` / ``sin_mode``: offset + amplitude * trig(mode * x)
    ``exp_affine``: exp(offset + amplitude * trig(mode * x))
    """

    name: str
    value: float = 0.0
    offset: float = 0.0
    amplitude: float = 0.0
    mode: int = 1
    trig: str = "cos"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.name == "constant":
            return np.full(x.shape, self.value)
        osc = np.cos(self.mode * x) if self.trig == "cos" else np.sin(self.mode * x)
        if self.name == "exp_affine":
            return np.exp(self.offset + self.amplitude * osc)
        return self.offset + self.amplitude * osc

    def is_constant(self) -> bool:
        return self.name == "constant" or self.amplitude == 0.0


def _parse_profile(raw, where: str) -> Profile:
    if not isinstance(raw, dict) or "profile" not in raw:
        raise ConfigError(f"{where}: expected a mapping with a 'profile' key")
    name = raw["profile"]
    if name not in PROFILE_NAMES:
        raise ConfigError(f"{where}: unknown profile {name!r}; named forms "
                          f"are {', '.join(PROFILE_NAMES)}")
    known = {"profile", "value", "offset", "amplitude", "mode", "trig"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"{where}: unknown profile keys {sorted(extra)}")
    trig = raw.get("trig", "cos")
    if trig not in ("cos", "sin"):
        raise ConfigError(f"{where}: trig must be 'cos' or 'sin'")
    mode = raw.get("mode", 1)
    if not isinstance(mode, int) or mode < 1:
        raise ConfigError(f"{where}: mode must be a positive integer")
    name_fixed = {"cos_mode": "cos", "sin_mode": "sin"}
    if name in name_fixed:
        trig = name_fixed[name]
    try:
        return Profile(name,
                       value=float(raw.get("value", 0.0)),
                       offset=float(raw.get("offset", 0.0)),
                       amplitude=float(raw.get("amplitude", 0.0)),
                       mode=mode, trig=trig)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: non-numeric profile parameter ({exc})")


@dataclass(frozen=True)
class FlowConfig:
    kind: str
    dim: int
    num_points: int
    t_end: float | None
    eps_values: tuple[float, ...]
    phi0: Profile | None
    sigma: float | None
    dt_max: float | None

    @property
    def is_sweep(self) -> bool:
        return len(self.eps_values) > 1


@dataclass(frozen=True)
class HeatConfig:
    name: str
    direction: str
    q: float | str
    a: float
    data: Profile


@dataclass(frozen=True)
class MonitorConfig:
    kind: str
    problem: str
    window: tuple[float, float] | None
    eps: float | str | None
    type_one_d: int | str | None

    def label(self) -> str:
        return f"{self.kind}_{self.problem}"


@dataclass(frozen=True)
class IdentityConfig:
    identity: str
    problem: str
    frac: float


@dataclass(frozen=True)
class PathConfig:
    theorem: str
    problem: str
    x_start: float
    t_start: float
    x_end: float
    t_end: float


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    title: str
    theorems: tuple[str, ...]
    flow: FlowConfig
    heat: tuple[HeatConfig, ...]
    monitors: tuple[MonitorConfig, ...]
    identities: tuple[IdentityConfig, ...]
    paths: tuple[PathConfig, ...]
    positivity: tuple[str, ...]
    tolerance: float | None
    raw: dict = field(repr=False, default_factory=dict)

    def heat_by_name(self, name: str) -> HeatConfig:
        for hc in self.heat:
            if hc.name == name:
                return hc
        raise ConfigError(f"no heat problem named {name!r}")


def _require(raw: dict, key: str, where: str):
    if key not in raw:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return raw[key]


def _opt_float(raw: dict, key: str, where: str) -> float | None:
    if key not in raw or raw[key] is None:
        return None
    try:
        return float(raw[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: {key} must be a number")


def _parse_flow(raw: dict) -> FlowConfig:
    where = "flow"
    kind = _require(raw, "kind", where)
    if kind not in FLOW_KINDS:
        raise ConfigError(f"{where}: unknown kind {kind!r}; one of "
                          f"{', '.join(FLOW_KINDS)}")
    num_points = _require(raw, "num_points", where)
    if not isinstance(num_points, int) or num_points < 4:
        raise ConfigError(f"{where}: num_points must be an integer >= 4")
    dim = raw.get("dim", 2)
    if not isinstance(dim, int) or dim < 2:
        raise ConfigError(f"{where}: dim must be an integer >= 2")
    if kind == CONFORMAL and dim != 2:
        raise ConfigError(f"{where}: the conformal flow is a surface flow; "
                          f"dim must be 2")
    t_end = _opt_float(raw, "t_end", where)
    if t_end is not None and t_end <= 0.0:
        raise ConfigError(f"{where}: t_end must be positive")

    phi0 = None
    eps_values: tuple[float, ...] = (1.0,)
    if kind == CONFORMAL:
        eps_raw = raw.get("eps", 1.0)
        if isinstance(eps_raw, (list, tuple)):
            if not eps_raw:
                raise ConfigError(f"{where}: eps list is empty")
            eps_values = tuple(float(e) for e in eps_raw)
        else:
            eps_values = (float(eps_raw),)
        for e in eps_values:
            if e < 0.0:
                raise ConfigError(f"{where}: eps must be nonnegative")
        if len(set(eps_values)) != len(eps_values):
            raise ConfigError(f"{where}: eps values must be distinct")
        if "phi0" in raw and raw["phi0"] is not None:
            phi0 = _parse_profile(raw["phi0"], "flow.phi0")
    else:
        for key in ("eps", "phi0"):
            if key in raw and raw[key] is not None:
                raise ConfigError(f"{where}: {key} only applies to the "
                                  f"conformal flow")
        if t_end is None:
            raise ConfigError(f"{where}: t_end is required for kind {kind!r}")

    sigma = _opt_float(raw, "sigma", where)
    if sigma is not None and sigma <= 0.0:
        raise ConfigError(f"{where}: sigma must be positive")
    dt_max = _opt_float(raw, "dt_max", where)
    if dt_max is not None and dt_max <= 0.0:
        raise ConfigError(f"{where}: dt_max must be positive")
    known = {"kind", "dim", "num_points", "t_end", "eps", "phi0", "sigma",
             "dt_max"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    return FlowConfig(kind, dim, num_points, t_end, eps_values, phi0, sigma,
                      dt_max)


def _parse_heat(raw_list, sweep: bool) -> tuple[HeatConfig, ...]:
    if not isinstance(raw_list, list) or not raw_list:
        raise ConfigError("heat: expected a non-empty list of problems")
    out = []
    names = set()
    for i, raw in enumerate(raw_list):
        where = f"heat[{i}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{where}: expected a mapping")
        name = _require(raw, "name", where)
        if not isinstance(name, str) or not name:
            raise ConfigError(f"{where}: name must be a non-empty string")
        if name in names:
            raise ConfigError(f"{where}: duplicate problem name {name!r}")
        names.add(name)
        direction = _require(raw, "direction", where)
        if direction not in (FORWARD_T, FORWARD_TAU):
            raise ConfigError(f"{where}: direction must be {FORWARD_T!r} or "
                              f"{FORWARD_TAU!r}")
        q_raw = _require(raw, "q", where)
        if q_raw == MATCH_EPS:
            if not sweep:
                raise ConfigError(f"{where}: q: {MATCH_EPS} only applies "
                                  f"inside an eps sweep")
            q: float | str = MATCH_EPS
        else:
            try:
                q = float(q_raw)
            except (TypeError, ValueError):
                raise ConfigError(f"{where}: q must be a number or "
                                  f"{MATCH_EPS!r}")
        a = raw.get("a", 1.0)
        try:
            a = float(a)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: a must be a number")
        data = _parse_profile(_require(raw, "data", where), f"{where}.data")
        known = {"name", "direction", "q", "a", "data"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
        out.append(HeatConfig(name, direction, q, a, data))
    return tuple(out)


def _parse_monitors(raw_list, sweep: bool) -> tuple[MonitorConfig, ...]:
    if raw_list is None:
        return ()
    if not isinstance(raw_list, list):
        raise ConfigError("monitors: expected a list")
    out = []
    for i, raw in enumerate(raw_list):
        where = f"monitors[{i}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{where}: expected a mapping")
        kind = _require(raw, "kind", where)
        if kind not in QUANTITY_KINDS:
            raise ConfigError(f"{where}: unknown quantity kind {kind!r}")
        problem = _require(raw, "problem", where)
        window = None
        if raw.get("window") is not None:
            w = raw["window"]
            if (not isinstance(w, (list, tuple)) or len(w) != 2):
                raise ConfigError(f"{where}: window must be [lo, hi]")
            window = (float(w[0]), float(w[1]))
            if not window[0] < window[1]:
                raise ConfigError(f"{where}: window must have lo < hi")
        eps = None
        if kind == HEPS:
            eps_raw = _require(raw, "eps", where)
            if eps_raw == MATCH_EPS:
                if not sweep:
                    raise ConfigError(f"{where}: eps: {MATCH_EPS} only "
                                      f"applies inside an eps sweep")
                eps = MATCH_EPS
            else:
                eps = float(eps_raw)
        elif "eps" in raw:
            raise ConfigError(f"{where}: eps only applies to {HEPS}")
        d = None
        if kind == H2R_TYPE_I:
            d = raw.get("d", "auto")
            if d != "auto" and (not isinstance(d, int) or d < 2):
                raise ConfigError(f"{where}: d must be 'auto' or an "
                                  f"integer >= 2")
        elif "d" in raw:
            raise ConfigError(f"{where}: d only applies to {H2R_TYPE_I}")
        known = {"kind", "problem", "window", "eps", "d"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
        out.append(MonitorConfig(kind, problem, window, eps, d))
    return tuple(out)


def _parse_identities(raw_list) -> tuple[IdentityConfig, ...]:
    if raw_list is None:
        return ()
    if not isinstance(raw_list, list):
        raise ConfigError("identities: expected a list")
    out = []
    for i, raw in enumerate(raw_list):
        where = f"identities[{i}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{where}: expected a mapping")
        ident = _require(raw, "id", where)
        if ident not in IDENTITY_IDS:
            raise ConfigError(f"{where}: unknown identity {ident!r}; one of "
                              f"{', '.join(IDENTITY_IDS)}")
        problem = _require(raw, "problem", where)
        frac = raw.get("frac", 0.5)
        try:
            frac = float(frac)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: frac must be a number")
        if not 0.0 < frac < 1.0:
            raise ConfigError(f"{where}: frac must lie strictly in (0, 1)")
        known = {"id", "problem", "frac"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
        out.append(IdentityConfig(ident, problem, frac))
    return tuple(out)


def _parse_paths(raw_list) -> tuple[PathConfig, ...]:
    if raw_list is None:
        return ()
    if not isinstance(raw_list, list):
        raise ConfigError("paths: expected a list")
    out = []
    for i, raw in enumerate(raw_list):
        where = f"paths[{i}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{where}: expected a mapping")
        theorem = _require(raw, "theorem", where)
        if theorem not in (PATH_2R, PATH_R):
            raise ConfigError(f"{where}: theorem must be {PATH_2R!r} or "
                              f"{PATH_R!r}")
        problem = _require(raw, "problem", where)
        try:
            coords = {k: float(_require(raw, k, where))
                      for k in ("x_start", "t_start", "x_end", "t_end")}
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: path endpoints must be numbers")
        if not coords["t_start"] < coords["t_end"]:
            raise ConfigError(f"{where}: need t_start < t_end")
        known = {"theorem", "problem", "x_start", "t_start", "x_end", "t_end"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
        out.append(PathConfig(theorem, problem, coords["x_start"],
                              coords["t_start"], coords["x_end"],
                              coords["t_end"]))
    return tuple(out)


# Hypothesis table: direction, curvature coupling and admissible
# backgrounds for each monitored quantity.
_MONITOR_DIRECTION = {
    HEPS: FORWARD_T,
    H2R: FORWARD_TAU,
    H2R_TYPE_I: FORWARD_TAU,
    HR: FORWARD_TAU,
    P_SHIFTED: FORWARD_TAU,
    GRAD_FORWARD: FORWARD_T,
    GRAD_BACKWARD: FORWARD_TAU,
}
_MONITOR_Q = {H2R: 2.0, H2R_TYPE_I: 2.0, HR: 1.0, P_SHIFTED: 1.0,
              GRAD_FORWARD: 0.0, GRAD_BACKWARD: 0.0}


def _grid_for(flow: FlowConfig):
    if flow.kind == FLAT:
        return torus_grid(flow.num_points)
    return sphere_grid(flow.num_points)


def _check_monitor_hypotheses(cfg: ScenarioConfig) -> None:
    flow = cfg.flow
    for mc in cfg.monitors:
        hc = cfg.heat_by_name(mc.problem)
        kind = mc.kind
        want_dir = _MONITOR_DIRECTION[kind]
        if hc.direction != want_dir:
            raise ConfigError(f"monitor {kind} on {hc.name!r}: needs a "
                              f"{want_dir} run")
        if hc.a != 1.0:
            raise ConfigError(f"monitor {kind} on {hc.name!r}: the bound "
                              f"assumes decay coefficient a = 1")
        if kind in (HR, P_SHIFTED) and flow.kind == CONFORMAL:
            raise ConfigError(
                f"monitor {kind}: the hypothesis asks for nonnegative "
                f"scalar curvature in closed form; use the flat torus or "
                f"the shrinking sphere"
            )
        if want_dir == FORWARD_TAU and flow.kind == CONFORMAL:
            raise ConfigError(
                f"monitor {kind}: backward runs need a closed-form flow "
                f"family (flat torus or shrinking sphere), not the "
                f"conformal flow"
            )
        if kind == HEPS:
            if flow.kind == SCALED:
                if flow.dim != 2 or mc.eps != 1.0:
                    raise ConfigError(
                        "monitor Heps: the shrinking sphere realizes the "
                        "surface flow only at n = 2 with eps = 1"
                    )
            elif flow.kind != CONFORMAL:
                raise ConfigError("monitor Heps: needs a surface flow with "
                                  "positive scalar curvature")
            if mc.eps == MATCH_EPS or hc.q == MATCH_EPS:
                if not (mc.eps == MATCH_EPS and hc.q == MATCH_EPS):
                    raise ConfigError(
                        f"monitor Heps on {hc.name!r}: inside an eps sweep "
                        f"both the monitor eps and the run's q must be "
                        f"{MATCH_EPS}"
                    )
            else:
                if hc.q != mc.eps:
                    raise ConfigError(
                        f"monitor Heps on {hc.name!r}: the run's curvature "
                        f"coupling q must equal eps ({mc.eps:g})"
                    )
                if flow.kind == CONFORMAL and flow.eps_values != (mc.eps,):
                    raise ConfigError(
                        f"monitor Heps: eps ({mc.eps:g}) must match the "
                        f"flow's eps"
                    )
        else:
            want_q = _MONITOR_Q[kind]
            if hc.q != want_q:
                raise ConfigError(f"monitor {kind} on {hc.name!r}: needs "
                                  f"curvature coupling q = {want_q:g}")
        if kind == H2R_TYPE_I and flow.kind not in (SCALED, FLAT):
            raise ConfigError(
                "monitor H2R_typeI: needs a flow with a certified type-I "
                "bound (shrinking sphere or flat torus)"
            )
        if kind in (GRAD_FORWARD, GRAD_BACKWARD):
            ricci_like = flow.kind in (SCALED, FLAT) or (
                flow.kind == CONFORMAL and flow.eps_values == (1.0,))
            if not ricci_like:
                raise ConfigError(
                    f"monitor {kind}: needs an exact Ricci-flow background "
                    f"(flat torus, shrinking sphere, or the eps = 1 "
                    f"surface flow)"
                )
        if hc.q == 0.0 or (hc.q == MATCH_EPS and 0.0 in flow.eps_values):
            data_vals = hc.data(_grid_for(flow).nodes)
            if not np.all(data_vals < 1.0):
                raise ConfigError(
                    f"heat problem {hc.name!r}: no-potential (q = 0) runs "
                    f"track solutions strictly below 1"
                )


def _check_heat_hypotheses(cfg: ScenarioConfig) -> None:
    grid = _grid_for(cfg.flow)
    for hc in cfg.heat:
        vals = hc.data(grid.nodes)
        if not np.all(vals > 0.0):
            raise ConfigError(f"heat problem {hc.name!r}: data must be "
                              f"strictly positive")
        if hc.q == 0.0 and not np.all(vals < 1.0):
            raise ConfigError(f"heat problem {hc.name!r}: no-potential "
                              f"(q = 0) runs track solutions strictly "
                              f"below 1")
        if hc.direction == FORWARD_TAU and cfg.flow.kind == CONFORMAL:
            raise ConfigError(
                f"heat problem {hc.name!r}: backward runs need a "
                f"closed-form flow family (flat torus or shrinking sphere)"
            )


def _check_identity_hypotheses(cfg: ScenarioConfig) -> None:
    flow = cfg.flow
    for ic in cfg.identities:
        hc = cfg.heat_by_name(ic.problem)
        if ic.identity == HEPS_EVOLUTION:
            if flow.kind != CONFORMAL:
                raise ConfigError("identity Heps_evolution: needs the "
                                  "conformal surface flow")
            if hc.direction != FORWARD_T:
                raise ConfigError("identity Heps_evolution: needs a "
                                  "forward run")
            if hc.q != flow.eps_values[0]:
                raise ConfigError("identity Heps_evolution: the run's q "
                                  "must equal the flow's eps")
            continue
        want_dir = _MONITOR_DIRECTION[_IDENTITY_QUANTITY_KIND[ic.identity]]
        if hc.direction != want_dir:
            raise ConfigError(f"identity {ic.identity}: needs a {want_dir} "
                              f"run")
        want_q = _MONITOR_Q[_IDENTITY_QUANTITY_KIND[ic.identity]]
        if hc.q != want_q:
            raise ConfigError(f"identity {ic.identity}: needs curvature "
                              f"coupling q = {want_q:g}")
        if ic.identity == GRAD_FORWARD_EVOLUTION:
            ricci_like = flow.kind in (SCALED, FLAT) or (
                flow.kind == CONFORMAL and flow.eps_values == (1.0,))
            if not ricci_like:
                raise ConfigError(
                    "identity Grad_forward_evolution: holds along exact "
                    "Ricci flows (flat torus, shrinking sphere, eps = 1 "
                    "surface flow)"
                )
        elif flow.kind not in (SCALED, FLAT):
            raise ConfigError(
                f"identity {ic.identity}: needs a background with a "
                f"closed-form Ricci tensor (flat torus or shrinking sphere)"
            )


_IDENTITY_QUANTITY_KIND = {
    "H2R_evolution": H2R,
    "HR_evolution": HR,
    "P_evolution": P_SHIFTED,
    "Grad_forward_evolution": GRAD_FORWARD,
    "Grad_backward_evolution": GRAD_BACKWARD,
}


def _check_path_hypotheses(cfg: ScenarioConfig) -> None:
    for pc in cfg.paths:
        hc = cfg.heat_by_name(pc.problem)
        want_q = 2.0 if pc.theorem == PATH_2R else 1.0
        if hc.direction != FORWARD_TAU or hc.q != want_q or hc.a != 1.0:
            raise ConfigError(f"path {pc.theorem}: needs a backward run "
                              f"with q = {want_q:g} and a = 1")
        if cfg.flow.kind == CONFORMAL:
            raise ConfigError(f"path {pc.theorem}: backward runs need a "
                              f"closed-form flow family")
        if pc.theorem == PATH_R and cfg.flow.kind not in (SCALED, FLAT):
            raise ConfigError(f"path {pc.theorem}: the hypothesis asks for "
                              f"nonnegative scalar curvature")
        if cfg.flow.t_end is not None and pc.t_end >= cfg.flow.t_end:
            raise ConfigError(f"path {pc.theorem}: t_end must lie strictly "
                              f"inside the run interval")


def _check_positivity(cfg: ScenarioConfig) -> None:
    for name in cfg.positivity:
        hc = cfg.heat_by_name(name)
        if hc.q != 0.0:
            raise ConfigError(f"positivity report on {name!r}: only "
                              f"no-potential (q = 0) runs are tracked")


def _check_initial_curvature(cfg: ScenarioConfig) -> None:
    # Heps monitors assume a positively curved surface; check the data at
    # t = 0 so a bad profile is a config error, not a runtime surprise.
    needs_positive = any(mc.kind == HEPS for mc in cfg.monitors)
    if not needs_positive or cfg.flow.kind != CONFORMAL:
        return
    grid = sphere_grid(cfg.flow.num_points)
    phi0 = np.zeros(cfg.flow.num_points) if cfg.flow.phi0 is None \
        else cfg.flow.phi0(grid.nodes)
    if np.min(conformal_curvature(grid, phi0)) <= 0.0:
        raise ConfigError("monitor Heps: needs positive scalar curvature "
                          "at t = 0; the configured phi0 violates it")


def default_t_end(flow: FlowConfig) -> float:
    """End time when the config omits one: 90% of the estimated singular
    time of the most singular eps in the sweep."""
    if flow.t_end is not None:
        return flow.t_end
    positive = [e for e in flow.eps_values if e > 0.0]
    if not positive:
        raise ConfigError("flow: t_end is required when eps = 0 (the "
                          "static flow never becomes singular)")
    grid = sphere_grid(flow.num_points)
    phi0 = np.zeros(flow.num_points) if flow.phi0 is None \
        else flow.phi0(grid.nodes)
    state = conformal_state(grid, phi0)
    t_sing = min(estimate_singular_time(state, e) for e in positive)
    return 0.9 * t_sing


def parse_scenario(raw: dict, source: str = "<config>") -> ScenarioConfig:
    """Validate a parsed YAML mapping into a ScenarioConfig."""
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    name = _require(raw, "name", source)
    if not isinstance(name, str) or not name:
        raise ConfigError(f"{source}: name must be a non-empty string")
    title = raw.get("title", name)
    theorems_raw = _require(raw, "theorems", source)
    if not isinstance(theorems_raw, list) or not theorems_raw:
        raise ConfigError(f"{source}: theorems must be a non-empty list")
    theorems = tuple(str(t) for t in theorems_raw)

    flow = _parse_flow(_require(raw, "flow", source))
    heat = _parse_heat(_require(raw, "heat", source), flow.is_sweep)
    monitors = _parse_monitors(raw.get("monitors"), flow.is_sweep)
    identities = _parse_identities(raw.get("identities"))
    paths = _parse_paths(raw.get("paths"))
    positivity_raw = raw.get("positivity") or []
    if not isinstance(positivity_raw, list):
        raise ConfigError("positivity: expected a list of problem names")
    positivity = tuple(str(p) for p in positivity_raw)
    tolerance = _opt_float(raw, "tolerance", source)
    if tolerance is not None and tolerance <= 0.0:
        raise ConfigError(f"{source}: tolerance must be positive")

    known = {"name", "title", "theorems", "flow", "heat", "monitors",
             "identities", "paths", "positivity", "tolerance"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"{source}: unknown top-level keys {sorted(extra)}")

    cfg = ScenarioConfig(name, title, theorems, flow, heat, monitors,
                         identities, paths, positivity, tolerance, raw)
    for mc in cfg.monitors:
        cfg.heat_by_name(mc.problem)
    for ic in cfg.identities:
        cfg.heat_by_name(ic.problem)
    for pc in cfg.paths:
        cfg.heat_by_name(pc.problem)
    for pname in cfg.positivity:
        cfg.heat_by_name(pname)
    if flow.is_sweep:
        for hc in cfg.heat:
            if hc.q != MATCH_EPS:
                raise ConfigError(
                    f"heat problem {hc.name!r}: inside an eps sweep every "
                    f"run couples through q: {MATCH_EPS}"
                )
        for mc in cfg.monitors:
            if mc.kind != HEPS:
                raise ConfigError(
                    f"monitor {mc.kind}: eps sweeps monitor the surface "
                    f"quantity Heps only"
                )
        if cfg.identities or cfg.paths:
            raise ConfigError("eps sweeps support monitors only; split "
                              "identity and path checks into their own "
                              "scenarios")
    _check_monitor_hypotheses(cfg)
    _check_heat_hypotheses(cfg)
    _check_identity_hypotheses(cfg)
    _check_path_hypotheses(cfg)
    _check_positivity(cfg)
    _check_initial_curvature(cfg)
    # an eps = 0 sweep member never blows up; everything else must be able
    # to pick a finite default end time
    if flow.kind == CONFORMAL and flow.t_end is None:
        default_t_end(flow)
    return cfg


def load_scenario(path) -> ScenarioConfig:
    """Parse and validate one YAML scenario file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}")
    return parse_scenario(raw, source=str(path))
