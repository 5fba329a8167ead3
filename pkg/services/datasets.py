# services/datasets.py
import logging
import pathlib
from typing import Optional, Union

import numpy as np
import pandas as pd

from services.errors import DatasetError
from services.models import Dataset

logger = logging.getLogger(__name__)

ColumnRef = Union[str, int, None]


def _is_number(cell: str) -> bool:
    try:
        return np.isfinite(float(cell))
    except ValueError:
        return False


def _resolve_column(raw: pd.DataFrame, column: ColumnRef, path: pathlib.Path) -> int:
    if column is None:
        if raw.shape[1] != 1:
            raise DatasetError(f"{path.name} has {raw.shape[1]} columns; choose one with a column name or index",
                               path=str(path))
        return 0
    if isinstance(column, int) or (isinstance(column, str) and column.isdigit()):
        index = int(column)
        if not 0 <= index < raw.shape[1]:
            raise DatasetError(f"Column index {index} out of range for {path.name} ({raw.shape[1]} columns)",
                               path=str(path))
        return index
    header = [cell.strip() for cell in raw.iloc[0].tolist()]
    if column not in header:
        raise DatasetError(f"Column '{column}' not found in the header of {path.name}", path=str(path), row=1)
    return header.index(column)


def ingest_csv(path: Union[str, pathlib.Path], column: ColumnRef = None, name: Optional[str] = None) -> Dataset:
    """
    Reads one numeric column of a CSV file, in file order.

    `column` is a header name or a 0-based index; None accepts single-column files only.
    The first row is a header when its cell in the chosen column is not a number.
    Blank lines are ignored. Row numbers in errors are 1-based file lines.

    Raises:
        DatasetError: missing or unreadable file, unknown column, a non-numeric or
                      non-finite cell, or no values at all.
    """
    path = pathlib.Path(path).expanduser()
    if not path.is_file():
        raise DatasetError(f"Data file not found: {path}", path=str(path))
    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False,
                          skip_blank_lines=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DatasetError(f"Data file {path.name} is empty", path=str(path))
    except (pd.errors.ParserError, UnicodeDecodeError, OSError) as e:
        raise DatasetError(f"Could not read {path.name}: {e}", path=str(path), original_exception=e)

    raw = raw.fillna("")
    index = _resolve_column(raw, column, path)
    cells = raw.iloc[:, index].str.strip()
    line_numbers = np.arange(1, len(cells) + 1)

    blank_rows = (raw.apply(lambda col: col.str.strip()) == "").all(axis=1).to_numpy()
    cells, line_numbers = cells[~blank_rows], line_numbers[~blank_rows]
    if cells.empty:
        raise DatasetError(f"Data file {path.name} contains no values", path=str(path))

    header_name = None
    if not _is_number(cells.iloc[0]):
        header_name = cells.iloc[0]
        cells, line_numbers = cells.iloc[1:], line_numbers[1:]

    values = pd.to_numeric(cells, errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        row = int(line_numbers[np.argmax(bad)])
        raise DatasetError(f"Non-numeric value {cells.iloc[int(np.argmax(bad))]!r} in {path.name} at row {row}",
                           path=str(path), row=row)
    if values.size == 0:
        raise DatasetError(f"Data file {path.name} contains no values", path=str(path))

    dataset_name = name or header_name or path.stem
    logger.info(f"[Datasets] Read {values.size} values of '{dataset_name}' from {path}")
    return Dataset(name=dataset_name, values=values, source=str(path))
