"""Reading spike-time and ISI files; writing CSV and JSON outputs."""

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ParseError, RejectedInput
from .isi import IsiSequence, SpikeTrain

__all__ = ["read_spike_times", "read_isi_csv", "read_input", "write_csv", "write_json"]


def read_spike_times(path, unit="ms"):
    """Read whitespace-separated spike epochs, one or more per line.

    Blank lines are skipped. The horizon is the last epoch.

    Raises
    ------
    ParseError
        Non-numeric token; ``line`` is 1-based.
    RejectedInput
        Epochs not strictly increasing and positive; ``index`` is the
        1-based line number of the offending value.
    """
    values, lines = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            for token in raw.split():
                try:
                    value = float(token)
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: not a number: {token!r}",
                                     line=lineno) from None
                values.append(value)
                lines.append(lineno)
    if not values:
        raise ParseError(f"{path}: no spike times found")
    epochs = np.asarray(values)
    try:
        return SpikeTrain(epochs, unit=unit)
    except RejectedInput as err:
        if err.index is None:
            raise
        line = lines[err.index]
        raise RejectedInput(f"{path}:{line}: {err}", index=line) from None


def read_isi_csv(path):
    """Read an ``index,isi`` CSV as written by ``simulate``."""
    isis = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or "isi" not in [h.strip() for h in header]:
            raise ParseError(f"{path}:1: expected a header with an 'isi' column", line=1)
        col = [h.strip() for h in header].index("isi")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                isis.append(float(row[col]))
            except (ValueError, IndexError):
                raise ParseError(f"{path}:{lineno}: bad ISI row {row!r}", line=lineno) from None
    try:
        return IsiSequence(isis)
    except RejectedInput as err:
        raise RejectedInput(f"{path}:{err.index + 2}: {err}", index=err.index + 2) from None


def _looks_like_isi_csv(path):
    with open(path) as fh:
        for raw in fh:
            if raw.strip():
                return "isi" in raw.lower()
    return False


def read_input(path, fmt="auto"):
    """Load a spike train from spike times or an ISI CSV.

    Returns ``(train, isis)``.
    """
    if fmt == "auto":
        fmt = "isi-csv" if _looks_like_isi_csv(path) else "spiketimes"
    if fmt == "spiketimes":
        train = read_spike_times(path)
        return train, train.isis()
    if fmt == "isi-csv":
        isis = read_isi_csv(path)
        return isis.spike_train(), isis
    raise RejectedInput(f"unknown input format {fmt!r}")


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(path, header, columns):
    """Write equal-length columns with shortest round-trip float formatting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([_cell(v) for v in row])


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path, payload):
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is None or str(path) == "-":
        return text
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return text
