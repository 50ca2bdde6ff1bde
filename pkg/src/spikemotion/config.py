"""``key=value`` run configuration.

Blank lines and lines starting with ``#`` are ignored. Recognised keys::

    dbs.samples  dbs.radius  dbs.min_matches  dbs.replace_rate
    dbs.neighbor_rate  dbs.seed
    snn.r_m  snn.tau_m  snn.dt  snn.steps  snn.p2c  snn.s2c  snn.v_rest
    snn.v_thresh  snn.v_reset  snn.lanes  snn.kernel  snn.persist_vm
    post.spike_threshold  post.filter_size  post.refire_threshold
"""

from dataclasses import dataclass, field, replace
from pathlib import Path

from ._validation import check_lanes
from .dbs import DbsConfig
from .postproc import PostprocConfig
from .snn import KERNELS, SnnParams


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _parse_kernel(text):
    text = text.strip()
    if text not in KERNELS:
        raise ValueError(f"expected one of {KERNELS}, got {text!r}")
    return text


# key -> (section, attribute, parser)
_KEYS = {
    "dbs.samples": ("dbs", "samples_per_pixel", int),
    "dbs.radius": ("dbs", "match_radius", int),
    "dbs.min_matches": ("dbs", "min_matches", int),
    "dbs.replace_rate": ("dbs", "replace_rate", float),
    "dbs.neighbor_rate": ("dbs", "neighbor_rate", float),
    "dbs.seed": ("dbs", "seed", int),
    "snn.r_m": ("snn", "r_m", float),
    "snn.tau_m": ("snn", "tau_m", float),
    "snn.dt": ("snn", "dt", float),
    "snn.steps": ("snn", "steps", int),
    "snn.p2c": ("snn", "p2c", float),
    "snn.s2c": ("snn", "s2c", float),
    "snn.v_rest": ("snn", "v_rest", float),
    "snn.v_thresh": ("snn", "v_thresh", float),
    "snn.v_reset": ("snn", "v_reset", float),
    "snn.lanes": ("run", "lanes", int),
    "snn.kernel": ("run", "kernel", _parse_kernel),
    "snn.persist_vm": ("run", "persist_vm", _parse_bool),
    "post.spike_threshold": ("post", "spike_threshold", int),
    "post.filter_size": ("post", "filter_size", int),
    "post.refire_threshold": ("post", "refire_threshold", int),
}


@dataclass(frozen=True)
class RunConfig:
    kernel: str = "v1"
    lanes: int = 16
    persist_vm: bool = False
    snn: SnnParams = field(default_factory=SnnParams)
    dbs: DbsConfig = field(default_factory=DbsConfig)
    post: PostprocConfig = field(default_factory=PostprocConfig)
    out_dir: Path = Path("results")
    bench: bool = False
    method: str = "spikemotion"

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        check_lanes(self.lanes)

    @property
    def seed(self):
        return self.dbs.seed


def parse_assignments(lines, source="<config>"):
    """Parse ``key=value`` lines into a dict, rejecting unknown keys."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ValueError(f"{source}:{lineno}: expected key=value, got {raw.rstrip()!r}")
        if key not in _KEYS:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def read_config_file(path):
    path = Path(path)
    return parse_assignments(path.read_text().splitlines(), source=str(path))


def apply_assignments(cfg, assignments):
    """Return ``cfg`` with the string ``assignments`` parsed and applied."""
    updates = {"dbs": {}, "snn": {}, "post": {}, "run": {}}
    for key, text in assignments.items():
        if key not in _KEYS:
            raise ValueError(f"unknown key {key!r}")
        section, attr, parse = _KEYS[key]
        try:
            updates[section][attr] = parse(text)
        except ValueError as exc:
            raise ValueError(f"{key}: {exc}") from None
    return replace(
        cfg,
        dbs=replace(cfg.dbs, **updates["dbs"]),
        snn=replace(cfg.snn, **updates["snn"]),
        post=replace(cfg.post, **updates["post"]),
        **updates["run"],
    )
