"""Utility functions to read and write result files."""

import csv
import json
import sys
from pathlib import Path
from typing import Any, Iterable, List, Mapping, Optional, Sequence, Tuple

from pmonotone.exceptions import ProfileTableError


def read_profile_csv(path: str) -> List[Tuple[float, float]]:
    """
    Read a two-column ``r,phi`` table.

    A first row that does not parse as numbers is treated as a header.

    Parameters
    ----------
    path
        CSV file.

    Returns
    -------
    list of (float, float)
        The samples in file order.

    Raises
    ------
    ProfileTableError
        If a row does not have two numeric columns.
    """
    rows: List[Tuple[float, float]] = []
    with open(path, encoding="utf-8", newline="") as handle:
        for number, row in enumerate(csv.reader(handle), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if number == 1:
                    continue
                raise ProfileTableError(
                    f"{path}:{number}: expected two numeric columns, got {row!r}"
                ) from None
    return rows


def write_csv(
    path: Optional[str], columns: Sequence[str], rows: Iterable[Mapping[str, Any]]
) -> None:
    """Write rows as CSV with a header line; standard output when ``path`` is None."""
    if path is None:
        _write_rows(sys.stdout, columns, rows)
        return
    with open(path, "w", encoding="utf-8", newline="") as handle:
        _write_rows(handle, columns, rows)


def _write_rows(handle: Any, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> None:
    writer = csv.DictWriter(handle, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: row[key] for key in columns})


def dump_json(document: Mapping[str, Any]) -> str:
    """Deterministic JSON text: sorted keys, shortest round-trip floats."""
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def write_json(path: Optional[str], document: Mapping[str, Any]) -> None:
    """Write a JSON document; standard output when ``path`` is None."""
    text = dump_json(document)
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")


def read_json(path: str) -> Any:
    """Parse a JSON file."""
    return json.loads(Path(path).read_text(encoding="utf-8"))
