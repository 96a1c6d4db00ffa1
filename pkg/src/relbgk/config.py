"""INI configuration files for solves, sweeps and verification runs.

Schema (every key optional; unknown sections or keys are rejected)::

    [problem]
    w = auto              # collision frequency, or "auto" for eps/2
    allow_beyond_eps = false
    kappa_target = 0.9
    w_cap = 0.36787944117144233
    w_floor = 1e-300

    [slab]
    nodes = 65

    [momentum]
    mode = axisymmetric   # or full3d
    n_q1 = 64
    n_perp = 48
    q_max = none          # none selects the mapped semi-infinite rule
    scale = 8.0

    [boundary]
    kind = juttner        # or tabulated
    left_n = 1.0
    left_u = 0.3
    left_beta = 1.0
    right_n = 0.8
    right_u = -0.2
    right_beta = 2.0
    file =                # CSV for kind = tabulated, relative to the config file

    [solver]
    tol = 1e-8
    max_iter = 200

    [verify]
    seed = 0
    n_fields = 20
    n_pairs = 100

    [output]
    dir = out

The name ``default`` stands for the built-in configuration.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .analysis import KAPPA_TARGET, W_CAP, W_FLOOR
from .errors import ConfigurationError
from .grid import MomentumGridSpec
from .solver import SolveConfig, default_boundary
from .transport import BoundaryData, JuttnerSide, load_boundary_csv

__all__ = ["RunConfig", "VerifySettings", "load_config", "parse_config", "default_config_text", "DEFAULT"]

DEFAULT = "default"

_SCHEMA = {
    "problem": {"w", "allow_beyond_eps", "kappa_target", "w_cap", "w_floor"},
    "slab": {"nodes"},
    "momentum": {"mode", "n_q1", "n_perp", "q_max", "scale"},
    "boundary": {"kind", "left_n", "left_u", "left_beta", "right_n", "right_u", "right_beta", "file"},
    "solver": {"tol", "max_iter"},
    "verify": {"seed", "n_fields", "n_pairs"},
    "output": {"dir"},
}


@dataclass
class VerifySettings:
    seed: int = 0
    n_fields: int = 20
    n_pairs: int = 100


@dataclass
class RunConfig:
    solve: SolveConfig = field(default_factory=SolveConfig)
    verify: VerifySettings = field(default_factory=VerifySettings)
    source: Optional[str] = None


def default_config_text() -> str:
    """The built-in configuration written out in file form."""
    b = default_boundary()
    return "\n".join(
        [
            "[problem]",
            "w = auto",
            "allow_beyond_eps = false",
            f"kappa_target = {KAPPA_TARGET!r}",
            f"w_cap = {W_CAP!r}",
            f"w_floor = {W_FLOOR!r}",
            "",
            "[slab]",
            "nodes = 65",
            "",
            "[momentum]",
            "mode = axisymmetric",
            "n_q1 = 64",
            "n_perp = 48",
            "q_max = none",
            "scale = 8.0",
            "",
            "[boundary]",
            "kind = juttner",
            f"left_n = {b.left.n!r}",
            f"left_u = {b.left.u[0]!r}",
            f"left_beta = {b.left.beta!r}",
            f"right_n = {b.right.n!r}",
            f"right_u = {b.right.u[0]!r}",
            f"right_beta = {b.right.beta!r}",
            "",
            "[solver]",
            "tol = 1e-8",
            "max_iter = 200",
            "",
            "[verify]",
            "seed = 0",
            "n_fields = 20",
            "n_pairs = 100",
            "",
            "[output]",
            "dir = out",
            "",
        ]
    )


def _get(section, key, conv, default, where):
    if section is None or key not in section:
        return default
    raw = section[key].strip()
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: [{section.name}] {key} = {raw!r}: {exc}") from exc


def _finite(raw: str) -> float:
    val = float(raw)
    if not math.isfinite(val):
        raise ValueError("must be finite")
    return val


def _tol(raw: str) -> float:
    # inf is a legitimate "no iterations" request
    return float(raw)


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _optional_float(raw: str) -> Optional[float]:
    return None if raw.lower() in ("", "none", "auto") else _finite(raw)


def parse_config(text: str, base_dir: Path | None = None, where: str = "<config>") -> RunConfig:
    """Build a :class:`RunConfig` from INI text.

    Raises
    ------
    ConfigurationError
        Malformed file, unknown section/key, bad value or inconsistent settings.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=where)
    except configparser.Error as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc
    for name in cp.sections():
        if name not in _SCHEMA:
            raise ConfigurationError(f"{where}: unknown section [{name}]")
        extra = set(cp[name]) - _SCHEMA[name]
        if extra:
            raise ConfigurationError(f"{where}: unknown key(s) in [{name}]: {', '.join(sorted(extra))}")
    sec = {name: (cp[name] if cp.has_section(name) else None) for name in _SCHEMA}

    p = sec["problem"]
    w = _get(p, "w", _optional_float, None, where)
    mom = sec["momentum"]
    spec = MomentumGridSpec(
        mode=_get(mom, "mode", str, "axisymmetric", where),
        n_q1=_get(mom, "n_q1", int, 64, where),
        n_perp=_get(mom, "n_perp", int, 48, where),
        q_max=_get(mom, "q_max", _optional_float, None, where),
        scale=_get(mom, "scale", _finite, 8.0, where),
    )
    cfg = SolveConfig(
        w=w,
        boundary=_boundary(sec["boundary"], base_dir, where),
        slab_nodes=_get(sec["slab"], "nodes", int, 65, where),
        momentum=spec,
        tol=_get(sec["solver"], "tol", _tol, 1e-8, where),
        max_iter=_get(sec["solver"], "max_iter", int, 200, where),
        kappa_target=_get(p, "kappa_target", _finite, KAPPA_TARGET, where),
        w_cap=_get(p, "w_cap", _finite, W_CAP, where),
        w_floor=_get(p, "w_floor", _finite, W_FLOOR, where),
        allow_beyond_eps=_get(p, "allow_beyond_eps", _bool, False, where),
        output_dir=_get(sec["output"], "dir", str, None, where),
    )
    if cfg.slab_nodes < 2:
        raise ConfigurationError(f"{where}: [slab] nodes must be >= 2")
    if not 0.0 < cfg.w_floor < cfg.w_cap < 1.0:
        raise ConfigurationError(f"{where}: need 0 < w_floor < w_cap < 1")
    cfg.validate()
    v = sec["verify"]
    ver = VerifySettings(
        seed=_get(v, "seed", int, 0, where),
        n_fields=_get(v, "n_fields", int, 20, where),
        n_pairs=_get(v, "n_pairs", int, 100, where),
    )
    if ver.n_fields < 1 or ver.n_pairs < 1:
        raise ConfigurationError(f"{where}: [verify] counts must be positive")
    return RunConfig(cfg, ver, where)


def _boundary(sec, base_dir, where) -> BoundaryData:
    if sec is None:
        return default_boundary()
    kind = _get(sec, "kind", str, "juttner", where).lower()
    if kind == "tabulated":
        name = _get(sec, "file", str, "", where)
        if not name:
            raise ConfigurationError(f"{where}: tabulated boundary needs [boundary] file")
        path = Path(name)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        if not path.exists():
            raise ConfigurationError(f"{where}: boundary file {path} not found")
        return load_boundary_csv(path)
    if kind != "juttner":
        raise ConfigurationError(f"{where}: [boundary] kind must be juttner or tabulated, got {kind!r}")
    d = default_boundary()

    def side(prefix, ref):
        return JuttnerSide(
            _get(sec, f"{prefix}_n", _finite, ref.n, where),
            _get(sec, f"{prefix}_u", _finite, ref.u[0], where),
            _get(sec, f"{prefix}_beta", _finite, ref.beta, where),
        )

    try:
        return BoundaryData.juttner(side("left", d.left), side("right", d.right))
    except ConfigurationError as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def load_config(name_or_path) -> RunConfig:
    """Load ``default`` or an INI file."""
    if name_or_path is None or str(name_or_path) == DEFAULT:
        return parse_config(default_config_text(), where=DEFAULT)
    path = Path(name_or_path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, base_dir=path.parent, where=str(path))
