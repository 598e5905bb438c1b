"""Output records for cdd: number formatting, atomic writes, CSV and manifests."""

import json
import logging
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .exceptions import CloudParseError
from .models import RunManifest, TrainLog

logger = logging.getLogger(__name__)


def format_number(value) -> str:
    """Format a number so that ``float(text)`` returns the identical double.

    Integral values below 1e16 print without a fractional part (``2``, ``-0``);
    everything else uses the shortest round-trip representation.

    >>> format_number(2.0), format_number(0.5), format_number(-0.0)
    ('2', '0.5', '-0')
    """
    if isinstance(value, (bool,)):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isfinite(value) and value.is_integer() and abs(value) < 1e16:
        text = str(int(value))
        if value == 0.0 and math.copysign(1.0, value) < 0:
            return "-0"
        return text
    return repr(value)


def format_row(values: Iterable) -> str:
    """Join numbers (or plain strings) into one CSV line."""
    return ",".join(v if isinstance(v, str) else format_number(v) for v in values)


def atomic_write_text(path: Path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and an atomic rename.

    Args:
        path: Destination file.
        text: Full file contents.

    Returns:
        The destination path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = path.with_name(path.name + ".tmp")
    try:
        with open(temp_path, "w", newline="\n") as f:
            f.write(text)
        temp_path.replace(path)
    except Exception:
        if temp_path.exists():
            temp_path.unlink()
        raise
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Iterable]) -> Path:
    """Write a header line and formatted rows as CSV."""
    lines = [",".join(header)]
    lines.extend(format_row(row) for row in rows)
    return atomic_write_text(path, "\n".join(lines) + "\n")


def write_train_log(log: TrainLog, path: Path) -> Path:
    """Write a TrainLog with the header ``iter,loss,grad_norm,l1cd,l2cd,f1,elapsed_ms``."""
    return write_csv(path, TrainLog.COLUMNS, (row.values() for row in log.rows))


def write_manifest(manifest: RunManifest, path: Path) -> Path:
    """Write a RunManifest as JSON with sorted keys and no timestamps."""
    text = json.dumps(manifest.to_dict(), indent=2, sort_keys=True)
    return atomic_write_text(path, text + "\n")


def load_manifest(path: Path) -> RunManifest:
    """Load a RunManifest written by :func:`write_manifest`.

    Raises:
        CloudParseError: If the file is not a manifest.
    """
    with open(path, "r") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise CloudParseError(e.msg, e.lineno, str(path))
    try:
        return RunManifest.from_dict(data)
    except (KeyError, TypeError, AttributeError) as e:
        raise CloudParseError(f"not a run manifest ({e})", 1, str(path))


class OutputSet:
    """Track files written by one command and remove them all if it fails.

    Use as a context manager; files registered through :meth:`add` are deleted
    when the block raises, so a failed command leaves no partial outputs.
    """

    def __init__(self, directory: Optional[Path] = None):
        self.directory = Path(directory) if directory is not None else None
        self.paths: list[Path] = []
        self._created_dir = False

    def __enter__(self) -> "OutputSet":
        if self.directory is not None and not self.directory.exists():
            self.directory.mkdir(parents=True)
            self._created_dir = True
        return self

    def add(self, path: Path) -> Path:
        """Register a written file (returns it for chaining)."""
        self.paths.append(Path(path))
        return Path(path)

    def names(self) -> list[str]:
        """Registered file names, relative to the output directory when set."""
        if self.directory is None:
            return [str(p) for p in self.paths]
        return [p.name if p.parent == self.directory else str(p) for p in self.paths]

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc_type is None:
            return False
        for path in self.paths:
            if path.exists():
                path.unlink()
                logger.debug("Removed partial output %s", path)
        if self._created_dir and self.directory is not None:
            try:
                self.directory.rmdir()
            except OSError:
                pass
        return False
