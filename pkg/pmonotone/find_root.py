"""Locate the project whose ``pyproject.toml`` may hold a ``[tool.pmonotone]`` table."""

import os
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Tuple

# a directory holding any of these is a project root
ROOT_MARKERS: Tuple[str, ...] = ("pyproject.toml", ".git", ".hg")


def _common_directory(srcs: Iterable[str]) -> Path:
    """Deepest directory containing every path in ``srcs`` (the working directory if empty)."""
    paths = [Path(Path.cwd(), src).resolve() for src in srcs] or [Path.cwd().resolve()]
    directories = [str(path if path.is_dir() else path.parent) for path in paths]
    return Path(os.path.commonpath(directories))


@lru_cache
def find_project_root(srcs: Tuple[str, ...], markers: Tuple[str, ...] = ROOT_MARKERS) -> Path:
    """
    Return the closest directory above ``srcs`` holding one of ``markers``.

    The search starts at the common parent of all paths in ``srcs`` and walks
    up. If nothing matches, the file-system root is returned.

    Parameters
    ----------
    srcs
        Paths named on the command line (config and profile files).
    markers
        File or directory names that make a directory the project root.

    Returns
    -------
    Path
        Project root.
    """
    start = _common_directory(srcs)
    for directory in (start, *start.parents):
        if any((directory / marker).exists() for marker in markers):
            return directory
    return Path(start.anchor)
