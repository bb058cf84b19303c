"""Experiment configuration: INI-style sections read with configparser."""

import configparser
from dataclasses import dataclass, field, fields, replace

from ..dynamics import PAPER_A, PAPER_B, PAPER_K, LinearPlannerConfig
from ..exceptions import ConfigError

FAST_TRIALS = 10
# paired comparisons need finished trees from both planners
PLANNING_RETRIES = 5000


def _flat(m):
    return tuple(float(v) for row in m for v in row)


def _opt(section, default, kind=None):
    return field(default=default, metadata={"section": section, "kind": kind or type(default)})


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of one experiment run.

    Fields are grouped into the INI sections ``experiment``, ``lattice``,
    ``planner``, ``dynamics``, ``estimator`` and ``theory``; list-valued keys
    take comma-separated values and ``lo:hi:step`` ranges.
    """

    experiment: str = _opt("experiment", "fig-oracle-vs-r")
    trials: int = _opt("experiment", 50)
    seed: int = _opt("experiment", 0)
    workers: int = _opt("experiment", 1)

    d: int = _opt("lattice", 2)
    L: int = _opt("lattice", 72)
    r: tuple = _opt("lattice", (0.45, 0.5, 0.55, 0.6, 0.65, 0.7), float)
    periodic: bool = _opt("lattice", False)

    n: tuple = _opt("planner", (9,), int)
    M: int = _opt("planner", 11)
    iter_estimate: str = _opt("planner", "p1")
    sampler: str = _opt("planner", "uniform")
    l1_budget: int = _opt("planner", 4)
    l1_mode: str = _opt("planner", "boundary")
    final_check: bool = _opt("planner", True)
    max_retries: int = _opt("planner", 50)
    max_tests: int = _opt("planner", 1_000_000)
    fps_waypoints: int = _opt("planner", 8)

    A: tuple = _opt("dynamics", _flat(PAPER_A), float)
    B: tuple = _opt("dynamics", _flat(PAPER_B), float)
    K: tuple = _opt("dynamics", _flat(PAPER_K), float)
    mode: str = _opt("dynamics", "euler")
    step_h: float = _opt("dynamics", 0.1)
    eps: float = _opt("dynamics", 0.05)
    max_steps: int = _opt("dynamics", 500)
    collide_ds: float = _opt("dynamics", 0.1)

    lattices: int = _opt("estimator", 25)
    estimate_trials: int = _opt("estimator", 1000)
    L_values: tuple = _opt("estimator", (32, 72), int)
    D_values: tuple = _opt("estimator", tuple(float(v) for v in range(1, 49)), float)
    budgets: tuple = _opt("estimator", (2, 4, 8, 16), int)
    db_n: int = _opt("estimator", 14)
    pstar_model: str = _opt("estimator", "pstar-paper")
    l1_model: str = _opt("estimator", "l1-paper-L72")
    presets_file: str = _opt("estimator", "")

    N: int = _opt("theory", 1024)
    x_lo: float = _opt("theory", 0.04)
    x_hi: float = _opt("theory", 0.75)
    x_step: float = _opt("theory", 0.01)
    q: float = _opt("theory", 0.0)
    v: float = _opt("theory", 0.0)
    tree_size: int = _opt("theory", 11)
    path_len: int = _opt("theory", 8)

    def dynamics_config(self):
        return LinearPlannerConfig(
            A=_square(self.A, "A"),
            B=_square(self.B, "B"),
            K=_square(self.K, "K"),
            mode=self.mode,
            step_h=self.step_h,
            eps=self.eps,
            max_steps=self.max_steps,
            collide_ds=self.collide_ds,
        )

    def fast(self):
        return replace(self, trials=min(self.trials, FAST_TRIALS))

    def to_ini(self):
        cp = _parser()
        for f in fields(self):
            sec = f.metadata["section"]
            if not cp.has_section(sec):
                cp.add_section(sec)
            cp.set(sec, f.name, _format(getattr(self, f.name)))
        return cp


def _parser():
    cp = configparser.ConfigParser(inline_comment_prefixes=(";",))
    cp.optionxform = str  # keys such as L and M are case-sensitive
    return cp


def _square(values, name):
    if len(values) != 4:
        raise ConfigError(f"dynamics.{name} needs 4 row-major entries, got {len(values)}")
    return [[values[0], values[1]], [values[2], values[3]]]


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    return str(value)


def _parse_list(text, kind):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            lo, hi, step = (float(p) for p in part.split(":"))
            k = 0
            while lo + k * step <= hi + 1e-9 * abs(step):
                out.append(kind(round(lo + k * step, 12)))
                k += 1
        else:
            out.append(kind(part))
    return tuple(out)


def _parse(cp, f):
    sec = f.metadata["section"]
    kind = f.metadata["kind"]
    raw = cp.get(sec, f.name)
    if f.type is tuple or f.type == "tuple":
        return _parse_list(raw, kind)
    if kind is bool:
        return cp.getboolean(sec, f.name)
    return kind(raw)


EXPERIMENT_DEFAULTS = {
    "fig-amplitudes": {"trials": 1, "n": (10,)},
    "fig-oracle-vs-r": {"max_retries": PLANNING_RETRIES},
    "fig-dbsize": {"n": (8, 9), "max_retries": PLANNING_RETRIES},
    "fig-pstar": {"r": (0.5, 0.6, 0.7), "L_values": (32, 72), "periodic": True},
    "fig-pstar-hist": {"trials": 250, "L": 32, "r": (0.6,), "n": (11,), "M": 5},
    "fig-l1": {"r": (0.45, 0.5, 0.55, 0.6, 0.65, 0.7)},
    "fig-l1-budget": {"r": (0.5,), "lattices": 8},
    "completeness": {"trials": 100, "L": 16, "r": (0.4,), "n": (6,), "M": 400},
    "theory": {},
}


def default_config(experiment):
    if experiment not in EXPERIMENT_DEFAULTS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; known: {', '.join(sorted(EXPERIMENT_DEFAULTS))}"
        )
    return replace(ExperimentConfig(experiment=experiment), **EXPERIMENT_DEFAULTS[experiment])


def load_config(path=None, experiment=None, text=None):
    """Defaults for ``experiment`` overlaid with the file at ``path`` (or ``text``)."""
    cp = _parser()
    try:
        if path is not None:
            with open(path) as fh:
                cp.read_file(fh)
        elif text is not None:
            cp.read_string(text)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if experiment is None:
        experiment = cp.get("experiment", "experiment", fallback="fig-oracle-vs-r")
    cfg = default_config(experiment)
    known = {f.name: f for f in fields(ExperimentConfig)}
    updates = {}
    for sec in cp.sections():
        for key in cp.options(sec):
            f = known.get(key)
            if f is None or f.metadata["section"] != sec:
                raise ConfigError(f"unknown config key [{sec}] {key}")
            if key == "experiment":
                continue
            try:
                updates[key] = _parse(cp, f)
            except ValueError as exc:
                raise ConfigError(f"bad value for [{sec}] {key}: {exc}") from exc
    cfg = replace(cfg, **updates)
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.trials < 1:
        raise ConfigError("experiment.trials must be >= 1")
    if cfg.workers < 1:
        raise ConfigError("experiment.workers must be >= 1")
    if cfg.d != 2 and cfg.experiment not in ("fig-pstar", "theory", "fig-amplitudes"):
        raise ConfigError("planning experiments run on 2-D lattices only")
    if not cfg.r or any(not 0.0 <= r < 1.0 for r in cfg.r):
        raise ConfigError("lattice.r values must lie in [0, 1)")
    if not cfg.n or any(not 1 <= n <= 16 for n in cfg.n):
        raise ConfigError("planner.n values must lie in [1, 16]")
    cfg.dynamics_config()
    return cfg
