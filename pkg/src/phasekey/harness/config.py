"""Experiment configuration: a flat ``key = value`` file.

Keys are lowercase.  Quoted and bare string values are both accepted, so a
TOML file restricted to top-level scalars parses the same way.
"""

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..environment import MAX_MIRRORS
from ..errors import ConfigError

KINDS = ("uniformity", "leakage", "exchange", "sweep", "replay")
PROTOCOLS = ("two", "four")

# key -> help text; also drives --help
KEY_HELP = {
    "kind": "experiment: uniformity | leakage | exchange | sweep | replay",
    "seed": "unsigned 64-bit master seed (default 1)",
    "k": f"number of RF mirrors, 1..{MAX_MIRRORS}; 2^k channel states (default 20)",
    "n": "Eve antenna count (default 2)",
    "s": "pilot tones per transmission (default 16)",
    "snr_db": "per-tone SNR in dB, or inf for noiseless (default inf)",
    "los_magnitude": "constant line-of-sight bias on over-the-air links (default 0)",
    "m": "bits per PSK symbol (default 2)",
    "l": "key length in bits (default 128)",
    "r": "FEC redundancy bits; l + r must be divisible by m (default 128)",
    "rounds": "protocol rounds, exchanges, or synthetic trace records (default 1000)",
    "discard_fraction": "replay: lowest-energy fraction dropped, in [0, 1) (default 0.2)",
    "protocol": "two | four (default two)",
    "out": "report CSV path (default report.csv)",
    "sweep_snr_db": "sweep: comma-separated SNR points (default 5,10,15,20,25)",
    "trace_path": "replay: state,i,q CSV to ingest; synthetic trace if empty",
    "eve_snr_db": "SNR of Eve's receivers (default inf)",
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "uniformity"
    seed: int = 1
    k: int = 20
    n: int = 2
    s: int = 16
    snr_db: float = float("inf")
    los_magnitude: float = 0.0
    m: int = 2
    l: int = 128  # noqa: E741
    r: int = 128
    rounds: int = 1000
    discard_fraction: float = 0.2
    protocol: str = "two"
    out: str = "report.csv"
    sweep_snr_db: tuple = field(default=(5.0, 10.0, 15.0, 20.0, 25.0))
    trace_path: str = ""
    eve_snr_db: float = float("inf")

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError("kind", f"must be one of {', '.join(KINDS)}")
        if self.protocol not in PROTOCOLS:
            raise ConfigError("protocol", "must be two or four")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if not 1 <= self.k <= MAX_MIRRORS:
            raise ConfigError("k", f"must be in 1..{MAX_MIRRORS}")
        for name in ("n", "s", "m", "l", "rounds"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be positive")
        if self.r < 0:
            raise ConfigError("r", "must be non-negative")
        if (self.l + self.r) % self.m:
            raise ConfigError("r", f"l + r = {self.l + self.r} is not divisible by m = {self.m}")
        if not 0.0 <= self.discard_fraction < 1.0:
            raise ConfigError("discard_fraction", "must lie in [0, 1)")
        if self.los_magnitude < 0 or self.los_magnitude != self.los_magnitude:
            raise ConfigError("los_magnitude", "must be a non-negative number")
        for name in ("snr_db", "eve_snr_db"):
            v = getattr(self, name)
            if v != v or v == float("-inf"):
                raise ConfigError(name, "must be a number or inf")
        if not self.sweep_snr_db:
            raise ConfigError("sweep_snr_db", "needs at least one point")
        if not self.out:
            raise ConfigError("out", "must not be empty")

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _coerce(name, raw, kind):
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        raw = raw[1:-1]
    try:
        if kind is int:
            return int(raw.replace("_", ""), 0)
        if kind is float:
            return float(raw.replace("_", ""))
        if kind is tuple:
            text = raw.strip("[]")
            return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(name, f"cannot parse {raw!r} as {kind.__name__}") from None
    return raw


_TYPES = {f.name: (tuple if f.name == "sweep_snr_db" else type(f.default)) for f in fields(ExperimentConfig)}


def parse_config(text, **overrides):
    """Parse config text; ``overrides`` (e.g. from the command line) win."""
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
        interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    values = {}
    for key, raw in parser["config"].items():
        if key not in _TYPES:
            raise ConfigError(key, "unknown key")
        values[key] = _coerce(key, raw, _TYPES[key])
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError("<file>", str(exc)) from None


def load_config(path=None, **overrides):
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, **overrides)
