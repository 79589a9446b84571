"""Check project root is found correctly."""

from pathlib import Path
from typing import TYPE_CHECKING, Tuple

import pytest

from pmonotone.find_root import find_project_root

if TYPE_CHECKING:
    from _pytest.monkeypatch import MonkeyPatch


@pytest.mark.parametrize(
    "src",
    [
        (str(Path.cwd()),),
        (str(Path.cwd() / "tests"), str(Path.cwd() / "pmonotone" / "config")),
        (str(Path.cwd() / "pmonotone" / "radial.py"),),
    ],
)
def test_find_project_root(src: Tuple[str, ...]) -> None:
    """
    Check the repository holding pyproject.toml is found from paths inside it.

    Parameters
    ----------
    src
        Source paths.
    """
    assert find_project_root(src, ("pyproject.toml",)) == Path.cwd()


def test_find_project_root_no_root() -> None:
    """Check root of filesystem is returned if no marker exists."""
    result = find_project_root((str(Path.cwd() / "tests"),), (".this.does.not.exist",))
    assert result == Path("/").resolve()


def test_find_project_root_from_profile(tmp_path: Path) -> None:
    """
    Check the directory holding pyproject.toml above a profile file is used.

    Parameters
    ----------
    tmp_path
        Pytest fixture, gives us a temporary directory.
    """
    (tmp_path / "pyproject.toml").write_text("", encoding="utf-8")
    nested = tmp_path / "profiles" / "af"
    nested.mkdir(parents=True)
    profile = nested / "phi.csv"
    profile.write_text("r,phi\n1,1.2\n2,1.1\n", encoding="utf-8")
    assert find_project_root((str(profile),)) == tmp_path.resolve()


def test_find_project_root_defaults_to_cwd(tmp_path: Path, monkeypatch: "MonkeyPatch") -> None:
    """
    Check the working directory is the starting point when no paths are named.

    Parameters
    ----------
    tmp_path
        Pytest fixture, gives us a temporary directory.
    monkeypatch
        Pytest fixture to change the working directory.
    """
    (tmp_path / ".git").mkdir()
    inner = tmp_path / "runs"
    inner.mkdir()
    monkeypatch.chdir(inner)
    assert find_project_root(()) == tmp_path.resolve()
