"""
Run configuration: defaults, a ``key = value`` file format, and validation.

Fields left as ``None`` are environment-dependent and get filled in by
:func:`resolve`, so a resolved config always round-trips through text.
"""

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .envs import DEFAULT_GRID_LAYOUT, OMG_PAYOFF, GridNav, MatrixGame, ParticleNav, ParticleNavParams
from .errors import ConfigError

ENVS = ("matrix_game", "gridnav", "particlenav")
CHOICES = {
    "env": ENVS,
    "loss": ("mse", "ow", "mcvd"),
    "mixer": ("sum", "monotonic"),
    "double_q_argmax_source": ("target", "online"),
    "target_update_unit": ("episodes", "steps"),
}
NAV_ENVS = ("gridnav", "particlenav")


def format_payoff(payoff):
    payoff = np.asarray(payoff, dtype=np.float64)
    if payoff.ndim != 2:
        raise ConfigError("inline payoff text supports two agents only", key="payoff")
    return ";".join(",".join(f"{v:g}" for v in row) for row in payoff)


def parse_payoff(text):
    try:
        rows = [[float(v) for v in row.split(",")] for row in text.split(";")]
    except ValueError:
        raise ConfigError(f"payoff must look like '8,-12;-12,6', got {text!r}", key="payoff") from None
    if any(len(r) != len(rows) for r in rows):
        raise ConfigError("payoff must be square", key="payoff")
    return np.array(rows)


@dataclass
class TrainingConfig:
    env: str = "matrix_game"
    # matrix game
    payoff: str = format_payoff(OMG_PAYOFF)
    payoff_file: str = ""
    # navigation
    n_agents: int = 3
    grid_layout: str = DEFAULT_GRID_LAYOUT
    gridnav_episode_limit: int = 10
    episode_limit: int = 25
    dt: float = 0.1
    damping: float = 0.25
    accel_gain: float = 5.0
    agent_radius: float = 0.1
    collision_penalty: float = 10.0
    # algorithm
    loss: str = "mcvd"
    mixer: str = "sum"
    use_joint_net: bool = True
    alpha: float = None
    sigma: float = 1.0
    double_q_argmax_source: str = "target"
    target_update_unit: str = "episodes"
    # schedule and optimisation
    seed: int = 123
    n_steps: int = None
    train_fre: int = 1
    gamma: float = None
    lr: float = 5e-4
    rms_decay: float = 0.99
    rms_eps: float = 1e-5
    batch_size: int = 32
    buffer_size: int = 5000
    max_epsilon: float = 1.0
    min_epsilon: float = 0.05
    anneal_steps: int = 50_000
    target_update_cycle: int = 200
    grad_norm_clip: float = 10.0
    evaluate_fre: int = 5000
    evaluate_epoch: int = 32
    hidden_dim: int = 64
    hidden_layers: int = 2
    mixer_embed_dim: int = 32
    last_action: bool = True
    reuse_network: bool = True

    def replace(self, **changes):
        return resolve(dataclasses.replace(self, **changes))

    def payoff_table(self):
        if self.payoff_file:
            return parse_payoff(Path(self.payoff_file).read_text().strip().replace("\n", ";"))
        return parse_payoff(self.payoff)

    def make_env(self):
        if self.env == "matrix_game":
            return MatrixGame(self.payoff_table())
        if self.env == "gridnav":
            return GridNav(self.grid_layout, self.gridnav_episode_limit, self.collision_penalty)
        return ParticleNav(
            ParticleNavParams(
                n_agents=self.n_agents,
                dt=self.dt,
                damping=self.damping,
                accel_gain=self.accel_gain,
                agent_radius=self.agent_radius,
                episode_limit=self.episode_limit,
                collision_penalty=self.collision_penalty,
            )
        )

    def to_text(self):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(TrainingConfig)}


def _coerce(key, raw):
    kind = _FIELD_TYPES[key]
    text = str(raw).strip()
    try:
        if kind is bool or kind == "bool":
            low = text.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if kind is int or kind == "int":
            as_float = float(text)
            if as_float != int(as_float):
                raise ValueError(text)
            return int(as_float)
        if kind is float or kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {getattr(kind, '__name__', kind)}", key=key) from None
    return text


def _defaults_for(env):
    nav = env in NAV_ENVS
    return {
        "gamma": 0.9 if nav else 0.99,
        "alpha": 0.1 if nav else 0.5,
        "n_steps": 500_000 if nav else 20_000,
    }


def resolve(config):
    """Fill environment-dependent defaults and validate every field."""
    if config.env not in ENVS:
        raise ConfigError(f"env: expected one of {ENVS}, got {config.env!r}", key="env")
    for key, default in _defaults_for(config.env).items():
        if getattr(config, key) is None:
            setattr(config, key, default)
    for key, allowed in CHOICES.items():
        if getattr(config, key) not in allowed:
            raise ConfigError(f"{key}: expected one of {allowed}, got {getattr(config, key)!r}", key=key)
    checks = [
        ("sigma", config.sigma > 0, "must be positive"),
        ("alpha", 0 < config.alpha <= 1, "must lie in (0, 1]"),
        ("gamma", 0 <= config.gamma <= 1, "must lie in [0, 1]"),
        ("lr", config.lr > 0, "must be positive"),
        ("rms_decay", 0 < config.rms_decay < 1, "must lie in (0, 1)"),
        ("rms_eps", config.rms_eps > 0, "must be positive"),
        ("grad_norm_clip", config.grad_norm_clip > 0, "must be positive"),
        ("min_epsilon", 0 <= config.min_epsilon <= config.max_epsilon <= 1, "needs 0 <= min <= max <= 1"),
        ("anneal_steps", config.anneal_steps >= 0, "must be non-negative"),
        ("n_steps", config.n_steps > 0, "must be positive"),
        ("batch_size", config.batch_size > 0, "must be positive"),
        ("buffer_size", config.buffer_size >= config.batch_size, "must be at least batch_size"),
        ("train_fre", config.train_fre > 0, "must be positive"),
        ("target_update_cycle", config.target_update_cycle > 0, "must be positive"),
        ("evaluate_fre", config.evaluate_fre > 0, "must be positive"),
        ("evaluate_epoch", config.evaluate_epoch > 0, "must be positive"),
        ("hidden_dim", config.hidden_dim > 0, "must be positive"),
        ("hidden_layers", config.hidden_layers >= 0, "must be non-negative"),
        ("mixer_embed_dim", config.mixer_embed_dim > 0, "must be positive"),
        ("n_agents", config.n_agents > 0, "must be positive"),
    ]
    for key, ok, why in checks:
        if not ok:
            raise ConfigError(f"{key}: {why} (got {getattr(config, key)})", key=key)
    if config.env == "matrix_game":
        config.payoff_table()
    return config


def parse_text(text):
    """Parse ``key = value`` lines with ``#`` comments into a raw dict."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def parse_overrides(args):
    """Turn ``['--sigma', '5', '--loss', 'ow']`` into a dict."""
    out = {}
    args = list(args)
    i = 0
    while i < len(args):
        flag = args[i]
        if not flag.startswith("--"):
            raise ConfigError(f"expected a --key flag, got {flag!r}")
        if "=" in flag:
            key, value = flag[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(args):
                raise ConfigError(f"flag {flag} is missing a value", key=flag[2:])
            key, value = flag[2:], args[i + 1]
            i += 2
        out[key.replace("-", "_")] = value
    return out


def build_config(values):
    unknown = [k for k in values if k not in _FIELD_TYPES]
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}", key=unknown[0])
    typed = {k: (None if str(v).strip().lower() == "none" else _coerce(k, v)) for k, v in values.items()}
    return resolve(TrainingConfig(**typed))


def parse_config(path=None, overrides=None):
    """
    Load a config file (optional) and apply overrides on top.

    ``overrides`` is either a dict or a list of ``--key value`` tokens; it
    always wins over the file.
    """
    values = {}
    if path is not None:
        values.update(parse_text(Path(path).read_text()))
    if overrides:
        if not isinstance(overrides, dict):
            overrides = parse_overrides(overrides)
        values.update(overrides)
    return build_config(values)
