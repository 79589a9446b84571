"""Module responsible for storing, loading and validating pmonotone configuration."""

import json
from pathlib import Path
from typing import (
    TYPE_CHECKING,
    Any,
    Dict,
    Iterable,
    List,
    Mapping,
    MutableMapping,
    Optional,
    Tuple,
)

import tomli

from pmonotone.exceptions import ConfigError

if TYPE_CHECKING:
    from typing import TypedDict
else:
    TypedDict = dict

MODELS = ("euclidean", "schwarzschild", "profile")
SPACINGS = ("log", "linear")


class Configs(TypedDict):
    """Run configuration shared by every subcommand."""

    model: str
    mass: float
    r0: float
    profile: Optional[str]
    sigma: float
    p: float
    p_list: List[float]
    eps_list: List[float]
    t_min: Optional[float]
    t_max: float
    t_count: int
    spacing: str
    resolution: int
    r_out: float
    dims: int
    region: Optional[List[float]]
    hawking_mass: float
    rho_min: float
    rho_max: float
    rho_count: int
    alpha: Optional[float]
    beta: Optional[float]
    tolerance: float
    threads: int
    output: Optional[str]
    timings: bool


def get_default_config() -> Configs:
    """Get defaults."""
    return Configs(
        model="euclidean",
        mass=1.0,
        r0=1.0,
        profile=None,
        sigma=1.0,
        p=2.0,
        p_list=[1.5, 1.25, 1.125, 1.0625],
        eps_list=[0.1, 0.01, 0.001],
        t_min=None,
        t_max=100.0,
        t_count=50,
        spacing="log",
        resolution=64,
        r_out=16.0,
        dims=2,
        region=None,
        hawking_mass=2.0,
        rho_min=3.0,
        rho_max=100.0,
        rho_count=50,
        alpha=None,
        beta=None,
        tolerance=1e-7,
        threads=1,
        output=None,
        timings=False,
    )


_FLOATS = {"mass", "r0", "sigma", "p", "t_min", "t_max", "r_out", "hawking_mass"}
_FLOATS |= {"rho_min", "rho_max", "alpha", "beta", "tolerance"}
_INTS = {"t_count", "resolution", "dims", "rho_count", "threads"}
_FLOAT_LISTS = {"p_list", "eps_list", "region"}
_STRINGS = {"model", "profile", "spacing", "output"}
_OPTIONAL = {"profile", "t_min", "region", "alpha", "beta", "output"}


def _coerce(key: str, value: Any, line: Optional[int] = None) -> Any:
    """Check the type of one config value, converting ints to floats where needed."""
    if value is None and key in _OPTIONAL:
        return None
    if key in _FLOATS and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if key in _INTS and isinstance(value, int) and not isinstance(value, bool):
        return value
    if key in _FLOAT_LISTS and isinstance(value, list):
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            return [float(v) for v in value]
    if key in _STRINGS and isinstance(value, str):
        return value
    if key == "timings" and isinstance(value, bool):
        return value
    raise ConfigError(key, f"unexpected value {value!r}", line)


def merge_config(
    config: Configs,
    overrides: Mapping[str, Any],
    source: str,
    lines: Optional[Mapping[str, int]] = None,
) -> None:
    """
    Update ``config`` in place with ``overrides``.

    Parameters
    ----------
    config
        Configuration being built.
    overrides
        Key/value pairs read from ``source``.
    source
        Where the overrides come from, used in diagnostics.
    lines
        Line number of each key in ``source``, when known.

    Raises
    ------
    ConfigError
        If a key is unknown or its value has the wrong type.
    """
    lines = lines or {}
    for key, value in overrides.items():
        if key not in config:
            raise ConfigError(key, f"unknown key in {source}", lines.get(key))
        # TypedDict key must be a string literal
        config[key] = _coerce(key, value, lines.get(key))  # type: ignore


def read_pyproject_section(project_root: Path) -> MutableMapping[str, Any]:
    """The ``[tool.pmonotone]`` table of ``pyproject.toml`` under ``project_root``, if any."""
    pyproject_path = project_root / "pyproject.toml"
    if not pyproject_path.is_file():
        return {}
    try:
        config_file = tomli.loads(pyproject_path.read_text("utf-8"))
    except tomli.TOMLDecodeError as exc:
        raise ConfigError("pyproject.toml", str(exc)) from None
    section: MutableMapping[str, Any] = config_file.get("tool", {}).get("pmonotone", {})
    return section


def _key_lines(text: str, keys: Iterable[str]) -> Dict[str, int]:
    """First line mentioning each top-level key as a JSON string."""
    found: Dict[str, int] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        for key in keys:
            if key not in found and f'"{key}"' in line:
                found[key] = number
    return found


def read_json_config(path: str) -> Tuple[Dict[str, Any], Dict[str, int]]:
    """
    Parse a JSON config file.

    Returns
    -------
    document, lines
        The top-level object and the line number of each of its keys.

    Raises
    ------
    ConfigError
        On unreadable files, syntax errors (with line and column) or a
        top-level value that is not an object.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{exc.msg} at column {exc.colno}", exc.lineno) from None
    if not isinstance(document, dict):
        raise ConfigError("config", "top-level value must be an object", 1)
    return document, _key_lines(text, document)


def validate_config(config: Configs) -> None:
    """
    Check every precondition that can be decided before computing.

    Raises
    ------
    ConfigError
        Naming the first offending field.
    """
    if config["model"] not in MODELS:
        raise ConfigError("model", f"must be one of {', '.join(MODELS)}")
    if config["model"] == "profile" and config["profile"] is None:
        raise ConfigError("profile", "a profile CSV is required for model 'profile'")
    if not config["r0"] > 0:
        raise ConfigError("r0", "must be positive")
    if config["model"] == "schwarzschild":
        if config["mass"] < 0:
            raise ConfigError("mass", "must be nonnegative")
        if config["r0"] < 2.0 * config["mass"]:
            raise ConfigError("r0", f"lies inside the horizon 2m = {2.0 * config['mass']!r}")
    if not 1.0 < config["p"] < 3.0:
        raise ConfigError("p", "must lie in (1, 3)")
    if any(not 1.0 < p <= 2.0 for p in config["p_list"]):
        raise ConfigError("p_list", "every exponent must lie in (1, 2]")
    if not config["eps_list"] or any(eps < 0 for eps in config["eps_list"]):
        raise ConfigError("eps_list", "must be a nonempty list of nonnegative values")
    if config["p"] != 2.0 and 0.0 in config["eps_list"]:
        raise ConfigError("eps_list", "eps = 0 is only allowed for p = 2")
    t_min = config["t_min"]
    if t_min is not None and not 0 < t_min <= config["t_max"]:
        raise ConfigError("t_min", "must satisfy 0 < t_min <= t_max")
    if config["t_count"] < 1:
        raise ConfigError("t_count", "must be at least 1")
    if config["spacing"] not in SPACINGS:
        raise ConfigError("spacing", f"must be one of {', '.join(SPACINGS)}")
    if config["resolution"] < 4:
        raise ConfigError("resolution", "must be at least 4")
    if config["dims"] not in (2, 3):
        raise ConfigError("dims", "must be 2 or 3")
    if not config["r_out"] > config["r0"]:
        raise ConfigError("r_out", "must exceed r0")
    region = config["region"]
    if region is not None and (len(region) != 2 or not config["r0"] <= region[0] < region[1]):
        raise ConfigError("region", "must be [r1, r2] with r0 <= r1 < r2")
    if not config["rho_min"] < config["rho_max"] or config["rho_count"] < 2:
        raise ConfigError("rho_min", "need rho_min < rho_max and at least 2 samples")
    if config["alpha"] is not None and not -1.0 <= config["alpha"] <= 1.0:
        raise ConfigError("alpha", "must lie in [-1, 1]")
    if config["beta"] is not None and config["beta"] == 1.0:
        raise ConfigError("beta", "beta = 1 is a pole of the identity")
    if not config["tolerance"] > 0:
        raise ConfigError("tolerance", "must be positive")
    if config["threads"] < 1:
        raise ConfigError("threads", "must be at least 1")
