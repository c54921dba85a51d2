"""Flat key-value configuration files: parsing, validation, default template.

The format is a two-level tree: ``[section]`` headers followed by
``key = value`` lines; ``#`` starts a comment. Values are numbers, comma
lists of numbers, or bare words. Parsing failures carry the line number;
validation collects every violated invariant before reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ParseError, ValidationError
from .existence import HypothesisConstants
from .heat_example import HeatExampleConfig


@dataclass
class RunConfig:
    """Execution settings shared by the CLI commands."""

    seed: int = 0
    n_paths: int = 1
    dt: float = 1.0 / 128
    out_dir: str = "."
    paths_csv: bool = True
    summary_json: bool = True
    picard_tol: float = 1e-10
    max_sweeps: int = 20


@dataclass
class LoadedConfig:
    run: RunConfig
    problem: HeatExampleConfig | None
    constants: HypothesisConstants | None
    raw: dict


def _parse_scalar(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _parse_value(text: str):
    if "," in text:
        return tuple(_parse_scalar(p) for p in text.split(",") if p.strip() != "")
    return _parse_scalar(text)


def parse_tree(text: str) -> dict:
    """Raw section -> key -> value dictionary from the config text."""
    tree: dict = {"": {}}
    section = ""
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ParseError(f"malformed section header {raw.strip()!r}", line_no)
            section = line[1:-1].strip()
            tree.setdefault(section, {})
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", line_no)
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ParseError("empty key", line_no)
        if key in tree[section]:
            raise ParseError(f"duplicate key {key!r} in section [{section}]", line_no)
        tree[section][key] = _parse_value(value)
    return tree


_HEAT_KEYS = {
    ("operator", "n_modes"): "n_modes",
    ("operator", "q"): "q",
    ("schedule", "horizon"): "horizon",
    ("schedule", "r"): "impulse_r",
    ("schedule", "s"): "impulse_s",
    ("kernels", "b_amp"): "b_amp",
    ("kernels", "b_decay"): "b_decay",
    ("kernels", "f_amp"): "f_amp",
    ("kernels", "f_decay"): "f_decay",
    ("kernels", "h_amp"): "h_amp",
    ("kernels", "h_decay"): "h_decay",
    ("kernels", "l_amp"): "l_amp",
    ("kernels", "l_decay"): "l_decay",
    ("kernels", "m_amp"): "m_amp",
    ("kernels", "m_decay"): "m_decay",
    ("kernels", "k1_amp"): "k1_amp",
    ("kernels", "k2_amp"): "k2_amp",
    ("kernels", "k_fn_amp"): "k_fn_amp",
    ("kernels", "shape_freq"): "shape_freq",
    ("initial", "psi_amp"): "psi_amp",
    ("initial", "xi1_amp"): "xi1_amp",
    ("delay", "sigma1_c0"): "sigma1_c0",
    ("delay", "sigma1_c1"): "sigma1_c1",
    ("delay", "sigma2_base"): "sigma2_base",
    ("delay", "sigma2_scale"): "sigma2_scale",
    ("phase", "tail_rate"): "tail_rate",
    ("phase", "tail_cutoff"): "tail_cutoff",
    ("phase", "tail_nodes"): "tail_nodes",
    ("phase", "J_star"): "J_star",
    ("phase", "history_nodes"): "history_nodes",
    ("noise", "nu_scale"): "nu_scale",
    ("noise", "nu_decay"): "nu_decay",
    ("noise", "marks"): "marks",
    ("noise", "mark_weights"): "mark_weights",
    ("noise", "jump_rate_scale"): "jump_rate_scale",
    ("declared", "lambda_f"): "lambda_f_decl",
    ("declared", "lambda_h"): "lambda_h_decl",
    ("declared", "l1_star"): "l1_star_decl",
    ("declared", "l2_star"): "l2_star_decl",
    ("declared", "l_b_star"): "l_b_star_decl",
    ("declared", "l_mi_star"): "l_mi_star_decl",
    ("declared", "L_i"): "L_i_decl",
    ("declared", "mho"): "mho_decl",
    ("declared", "chi_L2"): "chi_L2_decl",
}

_TUPLE_FIELDS = {
    "impulse_r", "impulse_s", "l_amp", "l_decay", "m_amp", "m_decay",
    "l_mi_star_decl", "L_i_decl", "marks", "mark_weights",
}

_CONSTANT_TUPLE_FIELDS = {"M_i", "l_mi_star", "lambda_i", "L_i"}


def _as_tuple(value):
    if isinstance(value, tuple):
        return value
    return (value,)


def _build_heat(tree: dict, violations: list) -> HeatExampleConfig:
    kwargs = {}
    for (section, key), field_name in _HEAT_KEYS.items():
        if section in tree and key in tree[section]:
            v = tree[section][key]
            if field_name in _TUPLE_FIELDS:
                v = _as_tuple(v)
            kwargs[field_name] = v
    if "noise" in tree and "seed" in tree["noise"]:
        kwargs["rng_seed"] = tree["noise"]["seed"]
    try:
        cfg = HeatExampleConfig(**kwargs)
    except TypeError as exc:
        violations.append(str(exc))
        return HeatExampleConfig()
    if not 1.0 < cfg.q < 2.0:
        violations.append(f"operator.q must lie in the open interval (1, 2), got {cfg.q}")
    if cfg.n_modes < 1:
        violations.append("operator.n_modes must be >= 1")
    pts = []
    for r_i, s_i in zip(cfg.impulse_r, cfg.impulse_s):
        pts.extend([r_i, s_i])
    pts.append(cfg.horizon)
    prev = 0.0
    for p in pts:
        if p <= prev:
            violations.append(
                "schedule points must interleave strictly: 0 < r_1 < s_1 < ... < horizon"
            )
            break
        prev = p
    if len(cfg.impulse_r) != len(cfg.impulse_s):
        violations.append("schedule.r and schedule.s must have equal length")
    for name in ("l_amp", "l_decay", "m_amp", "m_decay"):
        if len(getattr(cfg, name)) != len(cfg.impulse_r):
            violations.append(f"kernels.{name} needs one entry per impulse")
    if len(cfg.marks) != len(cfg.mark_weights):
        violations.append("noise.marks and noise.mark_weights must have equal length")
    return cfg


def _build_constants(tree: dict, violations: list) -> HypothesisConstants | None:
    sect = tree.get("constants")
    if sect is None:
        return None
    kwargs = {}
    known = {f.name for f in fields(HypothesisConstants)}
    for key, value in sect.items():
        if key not in known:
            violations.append(f"constants.{key} is not a hypothesis constant")
            continue
        kwargs[key] = _as_tuple(value) if key in _CONSTANT_TUPLE_FIELDS else value
    try:
        return HypothesisConstants(**kwargs)
    except Exception as exc:
        violations.append(f"constants: {exc}")
        return None


def load_config(path) -> LoadedConfig:
    """Parse, build, and fully validate a configuration file.

    Raises ParseError with the offending line on syntax problems and
    ValidationError carrying every violated invariant otherwise.
    """
    with open(path, "r", encoding="utf-8") as fh:
        tree = parse_tree(fh.read())

    violations: list[str] = []
    run = RunConfig()
    rsect = tree.get("run", {})
    for key in rsect:
        if key not in {"seed", "n_paths", "dt", "out_dir", "picard_tol", "max_sweeps",
                       "paths_csv", "summary_json"}:
            violations.append(f"run.{key} is not a run setting")
    run.seed = int(rsect.get("seed", run.seed))
    run.n_paths = int(rsect.get("n_paths", run.n_paths))
    run.dt = float(rsect.get("dt", run.dt))
    run.out_dir = str(rsect.get("out_dir", run.out_dir))
    run.picard_tol = float(rsect.get("picard_tol", run.picard_tol))
    run.max_sweeps = int(rsect.get("max_sweeps", run.max_sweeps))
    if run.dt <= 0.0:
        violations.append("run.dt must be positive")
    if run.n_paths < 1:
        violations.append("run.n_paths must be >= 1")

    problem_kind = tree.get("", {}).get("problem", None)
    problem = None
    if problem_kind is not None and problem_kind != "heat_example":
        violations.append(f"unknown problem kind {problem_kind!r} (supported: heat_example)")
    if problem_kind == "heat_example":
        problem = _build_heat(tree, violations)
        if run.dt > 0.0 and problem is not None:
            n = round(problem.horizon / run.dt)
            if n < 1 or abs(n * run.dt - problem.horizon) > 1e-9:
                violations.append("run.dt must divide the horizon")
            else:
                for p in list(problem.impulse_r) + list(problem.impulse_s):
                    k = round(p / run.dt)
                    if abs(k * run.dt - p) > 1e-9:
                        violations.append(
                            f"impulse point {p} is not representable on the dt={run.dt} grid"
                        )

    constants = _build_constants(tree, violations)
    if problem is None and constants is None:
        violations.append("config must declare 'problem = heat_example' or a [constants] section")
    if violations:
        raise ValidationError(violations)
    return LoadedConfig(run=run, problem=problem, constants=constants, raw=tree)


def default_heat_config_text() -> str:
    """The shipped heat-example configuration as a config file."""
    cfg = HeatExampleConfig()

    def fmt(v):
        if isinstance(v, tuple):
            return ", ".join(repr(float(x)) for x in v)
        return repr(v)

    return f"""# fractional stochastic heat example (shipped defaults)
problem = heat_example

[run]
seed = {cfg.rng_seed}
n_paths = 2
dt = 0.0078125
picard_tol = 1e-10
max_sweeps = 20

[operator]
n_modes = {cfg.n_modes}
q = {cfg.q}

[schedule]
horizon = {cfg.horizon}
r = {fmt(cfg.impulse_r)}
s = {fmt(cfg.impulse_s)}

[kernels]
b_amp = {cfg.b_amp}
b_decay = {cfg.b_decay}
f_amp = {cfg.f_amp}
f_decay = {cfg.f_decay}
h_amp = {cfg.h_amp}
h_decay = {cfg.h_decay}
l_amp = {fmt(cfg.l_amp)}
l_decay = {fmt(cfg.l_decay)}
m_amp = {fmt(cfg.m_amp)}
m_decay = {fmt(cfg.m_decay)}
k1_amp = {cfg.k1_amp}
k2_amp = {cfg.k2_amp}
k_fn_amp = {cfg.k_fn_amp}
shape_freq = {cfg.shape_freq}

[initial]
psi_amp = {cfg.psi_amp}
xi1_amp = {cfg.xi1_amp}

[delay]
sigma1_c0 = {cfg.sigma1_c0}
sigma1_c1 = {cfg.sigma1_c1}
sigma2_base = {cfg.sigma2_base}
sigma2_scale = {cfg.sigma2_scale}

[phase]
tail_rate = {cfg.tail_rate}
tail_cutoff = {cfg.tail_cutoff}
tail_nodes = {cfg.tail_nodes}
J_star = {cfg.J_star}
history_nodes = {cfg.history_nodes}

[noise]
nu_scale = {cfg.nu_scale}
nu_decay = {cfg.nu_decay}
marks = {fmt(cfg.marks)}
mark_weights = {fmt(cfg.mark_weights)}
jump_rate_scale = {cfg.jump_rate_scale}
seed = {cfg.rng_seed}

[declared]
lambda_f = {cfg.lambda_f_decl}
lambda_h = {cfg.lambda_h_decl}
l1_star = {cfg.l1_star_decl}
l2_star = {cfg.l2_star_decl}
l_b_star = {cfg.l_b_star_decl}
l_mi_star = {fmt(cfg.l_mi_star_decl)}
L_i = {fmt(cfg.L_i_decl)}
mho = {cfg.mho_decl}
chi_L2 = {cfg.chi_L2_decl}
"""
