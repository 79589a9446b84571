"""Check configuration layers are merged and validated."""

from pathlib import Path
from typing import Any, Dict

import pytest

from pmonotone.config.config import (
    get_default_config,
    merge_config,
    read_json_config,
    read_pyproject_section,
    validate_config,
)
from pmonotone.exceptions import ConfigError


def test_merge_converts_numbers() -> None:
    """Check integers are accepted for float fields and lists are converted."""
    config = get_default_config()
    merge_config(config, {"p": 2, "p_list": [1.5, 1], "t_count": 7}, "test")
    assert config["p"] == 2.0 and isinstance(config["p"], float)
    assert config["p_list"] == [1.5, 1.0]
    assert config["t_count"] == 7


@pytest.mark.parametrize(
    "overrides, field",
    [
        ({"bogus": 1}, "bogus"),
        ({"p": "two"}, "p"),
        ({"t_count": 2.5}, "t_count"),
        ({"timings": 1}, "timings"),
        ({"p_list": [1.5, True]}, "p_list"),
    ],
)
def test_merge_rejects(overrides: Dict[str, Any], field: str) -> None:
    """
    Check unknown keys and mistyped values are refused.

    Parameters
    ----------
    overrides
        Values to merge.
    field
        Field named in the error.
    """
    with pytest.raises(ConfigError) as excinfo:
        merge_config(get_default_config(), overrides, "test", {"bogus": 4})
    assert excinfo.value.field == field


def test_unknown_key_line(tmp_path: Path) -> None:
    """
    Check an unknown key in a JSON file is reported with its line.

    Parameters
    ----------
    tmp_path
        Pytest fixture, gives us a temporary directory.
    """
    path = tmp_path / "run.json"
    path.write_text('{\n  "p": 1.5,\n  "bogus": 1\n}\n', encoding="utf-8")
    document, lines = read_json_config(str(path))
    assert lines == {"p": 2, "bogus": 3}
    with pytest.raises(ConfigError, match=r"line 3"):
        merge_config(get_default_config(), document, str(path), lines)


def test_json_syntax_error(tmp_path: Path) -> None:
    """
    Check a JSON syntax error carries its line.

    Parameters
    ----------
    tmp_path
        Pytest fixture, gives us a temporary directory.
    """
    path = tmp_path / "run.json"
    path.write_text('{\n  "p": 1.5\n  "mass": 1\n}\n', encoding="utf-8")
    with pytest.raises(ConfigError, match=r"line 3"):
        read_json_config(str(path))
    path.write_text("[1, 2]\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="object"):
        read_json_config(str(path))
    with pytest.raises(ConfigError, match="cannot read"):
        read_json_config(str(tmp_path / "missing.json"))


def test_pyproject_section(tmp_path: Path) -> None:
    """
    Check the [tool.pmonotone] table is read and other tables ignored.

    Parameters
    ----------
    tmp_path
        Pytest fixture, gives us a temporary directory.
    """
    assert read_pyproject_section(tmp_path) == {}
    (tmp_path / "pyproject.toml").write_text(
        '[tool.black]\nline-length = 100\n\n[tool.pmonotone]\nmodel = "schwarzschild"\np = 1.5\n',
        encoding="utf-8",
    )
    assert read_pyproject_section(tmp_path) == {"model": "schwarzschild", "p": 1.5}
    (tmp_path / "pyproject.toml").write_text("[tool.pmonotone\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_pyproject_section(tmp_path)


def test_defaults_are_valid() -> None:
    """Check the default configuration passes validation."""
    validate_config(get_default_config())


@pytest.mark.parametrize(
    "overrides, field",
    [
        ({"model": "kerr"}, "model"),
        ({"model": "profile"}, "profile"),
        ({"r0": 0.0}, "r0"),
        ({"model": "schwarzschild", "mass": 1.0, "r0": 1.5}, "r0"),
        ({"model": "schwarzschild", "mass": -1.0}, "mass"),
        ({"p": 3.0}, "p"),
        ({"p_list": [1.5, 2.5]}, "p_list"),
        ({"eps_list": []}, "eps_list"),
        ({"p": 1.5, "eps_list": [0.1, 0.0]}, "eps_list"),
        ({"t_min": 200.0}, "t_min"),
        ({"t_count": 0}, "t_count"),
        ({"spacing": "cubic"}, "spacing"),
        ({"resolution": 2}, "resolution"),
        ({"dims": 4}, "dims"),
        ({"r_out": 1.0}, "r_out"),
        ({"region": [2.0, 1.5]}, "region"),
        ({"rho_count": 1}, "rho_min"),
        ({"alpha": 1.5}, "alpha"),
        ({"beta": 1.0}, "beta"),
        ({"tolerance": 0.0}, "tolerance"),
        ({"threads": 0}, "threads"),
    ],
)
def test_validation(overrides: Dict[str, Any], field: str) -> None:
    """
    Check every precondition names its field.

    Parameters
    ----------
    overrides
        Values breaking one precondition.
    field
        Field named in the error.
    """
    config = get_default_config()
    merge_config(config, overrides, "test")
    with pytest.raises(ConfigError) as excinfo:
        validate_config(config)
    assert excinfo.value.field == field
