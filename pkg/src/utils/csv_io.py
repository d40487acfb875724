"""CSV ingestion, CSV writers and staged output publication.

Input files need a header row. Cells are read as text and parsed here so
that every problem can be reported with its line number (the header is
line 1). Missing-value tokens become gaps: y = 0 placeholder, w = 0.
"""

import logging
import os
import re
import shutil
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.errors import DuplicateAbscissa, ParseError, TooFewRows
from src.core.smoother import MIN_SIGNAL_LENGTH, Signal


logger = logging.getLogger(__name__)

DEFAULT_MISSING_TOKENS = ("", "nan", "NA")

_PANDAS_LINE = re.compile(r"line (\d+)")


@dataclass(frozen=True)
class IngestSpec:
    """Where and how to read a signal.

    Attributes:
        path: Input file; None or "-" reads standard input.
        t_col: Column holding sample positions.
        y_col: Column holding observed values.
        w_col: Optional column of observation weights.
        index_as_t: Use row positions 0..n-1 instead of a t column.
        delimiter: Field separator.
        missing_tokens: Cell values meaning "missing", case-insensitive.
    """

    path: Optional[str] = None
    t_col: str = "t"
    y_col: str = "y"
    w_col: Optional[str] = None
    index_as_t: bool = False
    delimiter: str = ","
    missing_tokens: Tuple[str, ...] = DEFAULT_MISSING_TOKENS

    @property
    def reads_stdin(self) -> bool:
        return self.path is None or self.path == "-"


def _read_table(spec: IngestSpec) -> pd.DataFrame:
    source = sys.stdin if spec.reads_stdin else spec.path
    try:
        return pd.read_csv(
            source,
            sep=spec.delimiter,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as exc:
        raise ParseError("input is empty or has no header row", line=1) from exc
    except pd.errors.ParserError as exc:
        match = _PANDAS_LINE.search(str(exc))
        line = int(match.group(1)) if match else None
        raise ParseError(f"malformed row ({exc})", line=line) from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8 ({exc})") from exc


def _cell_text(value) -> str:
    # short rows come back as float NaN even with dtype=str
    return value.strip() if isinstance(value, str) else ""


def _parse_column(
    cells: Sequence, lines: Sequence[int], column: str, missing: frozenset, allow_missing: bool
) -> Tuple[np.ndarray, np.ndarray]:
    values = np.zeros(len(cells))
    present = np.ones(len(cells), dtype=bool)
    for k, (cell, line) in enumerate(zip(cells, lines)):
        text = _cell_text(cell)
        if text.lower() in missing:
            if not allow_missing:
                raise ParseError(f"missing value in column {column!r}", line=line)
            present[k] = False
            continue
        try:
            value = float(text)
        except ValueError:
            raise ParseError(f"cannot parse {text!r} in column {column!r} as a number", line=line) from None
        if not np.isfinite(value):
            raise ParseError(f"non-finite value {text!r} in column {column!r}", line=line)
        values[k] = value
    return values, present


def _require_column(frame: pd.DataFrame, column: str, hint: str = "") -> None:
    if column not in frame.columns:
        raise ParseError(f"column {column!r} not found in header {list(frame.columns)}{hint}", line=1)


def ingest_csv(spec: IngestSpec) -> Signal:
    """Read a Signal from a delimited text file.

    Rows are sorted by t. Missing y cells become gaps (w = 0, y = 0). In
    files with several columns, rows where every cell is empty are skipped.

    Args:
        spec: Source and column mapping.

    Returns:
        Signal with one sample per data row.

    Raises:
        ParseError: Malformed cells or rows, with the 1-based line number.
        DuplicateAbscissa: Two rows share a t value.
        TooFewRows: Fewer than 4 data rows.

    Example:
        >>> signal = ingest_csv(IngestSpec(path="data/samples/noisy_sine.csv"))
        >>> signal.n
        400
    """
    frame = _read_table(spec)
    frame.columns = [str(column).strip() for column in frame.columns]
    missing = frozenset(token.strip().lower() for token in spec.missing_tokens)

    _require_column(frame, spec.y_col)
    if not spec.index_as_t:
        _require_column(frame, spec.t_col, hint="; use --index-as-t for implicit positions")
    if spec.w_col is not None:
        _require_column(frame, spec.w_col)

    lines = np.arange(len(frame)) + 2
    if frame.shape[1] > 1:
        # in a one-column file an empty line is a gap, not a blank row
        cells = frame.to_numpy(dtype=object)
        keep = np.array([any(_cell_text(cell) for cell in row) for row in cells], dtype=bool)
        frame, lines = frame.loc[keep], lines[keep]
    if len(frame) < MIN_SIGNAL_LENGTH:
        raise TooFewRows(f"need at least {MIN_SIGNAL_LENGTH} data rows, got {len(frame)}")

    y, observed = _parse_column(frame[spec.y_col].tolist(), lines, spec.y_col, missing, allow_missing=True)
    if spec.index_as_t:
        t = np.arange(len(frame), dtype=float)
    else:
        t, _ = _parse_column(frame[spec.t_col].tolist(), lines, spec.t_col, missing, allow_missing=False)
    if spec.w_col is not None:
        w, _ = _parse_column(frame[spec.w_col].tolist(), lines, spec.w_col, missing, allow_missing=False)
        w = np.where(observed, w, 0.0)
    else:
        w = observed.astype(float)

    order = np.argsort(t, kind="stable")
    t, y, w, lines = t[order], y[order], w[order], lines[order]
    repeats = np.flatnonzero(np.diff(t) == 0)
    if len(repeats):
        k = repeats[0]
        raise DuplicateAbscissa(
            f"t = {t[k]:g} appears on lines {lines[k]} and {lines[k + 1]}"
        )

    gaps = int(np.count_nonzero(w == 0))
    logger.info("ingested %d rows (%d gaps) from %s", len(t), gaps, "stdin" if spec.reads_stdin else spec.path)
    return Signal(t=t, y=y, w=w)


def write_frame(frame: pd.DataFrame, path: os.PathLike, float_format: str) -> Path:
    """Write a DataFrame as CSV with fixed float formatting and LF endings.

    NaN cells are written empty.
    """
    path = Path(path)
    frame.to_csv(path, index=False, float_format=float_format, na_rep="", lineterminator="\n")
    return path


class StagedOutputs:
    """Collect output files in a hidden staging directory until commit.

    Files are moved into the output directory only by :meth:`commit`; leaving
    the ``with`` block through an exception removes everything staged.

    Example:
        >>> with StagedOutputs("output") as staged:
        ...     write_frame(frame, staged.path("smoothed.csv"), "%.12e")
        ...     staged.commit()
    """

    def __init__(self, output_dir: os.PathLike):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.staging_dir = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.output_dir))
        self._names: List[str] = []
        self.published: Dict[str, Path] = {}

    def path(self, name: str) -> Path:
        """Staging path for an output file called ``name``."""
        if name not in self._names:
            self._names.append(name)
        return self.staging_dir / name

    def commit(self) -> Dict[str, Path]:
        """Move every staged file that exists into the output directory."""
        for name in self._names:
            staged = self.staging_dir / name
            if staged.exists():
                final = self.output_dir / name
                os.replace(staged, final)
                self.published[name] = final
        self.abort()
        return self.published

    def abort(self) -> None:
        shutil.rmtree(self.staging_dir, ignore_errors=True)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            logger.debug("discarding staged outputs in %s", self.staging_dir)
        self.abort()
        return False
