"""
CSV and JSON file I/O for signal blocks, persisted models and reports.
"""

import csv
from pathlib import Path
from typing import Iterable, Type, TypeVar, Union

import numpy as np
import orjson
import structlog
from pydantic import BaseModel, ValidationError

from pnlsep.config import get_csv_precision
from pnlsep.exceptions import DataFormatError, StorageError
from pnlsep.models.schemas import TraceRow
from pnlsep.models.signals import SignalBlock, SignalRole

logger = structlog.get_logger(__name__)

PathLike = Union[str, Path]
ModelT = TypeVar("ModelT", bound=BaseModel)

TRACE_COLUMNS = ("iter", "total", "entropy_sum", "log_det_w", "log_deriv_mean")


def channel_header(channels: int) -> str:
    return ",".join(f"ch{i + 1}" for i in range(channels))


def ensure_directory(path: PathLike) -> Path:
    directory = Path(path)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise StorageError(f"cannot create output directory {directory}: {e.strerror}", path=directory)
    return directory


def write_signal_csv(block: SignalBlock, path: PathLike) -> Path:
    """
    Write a block as CSV: header ``ch1,...,chC`` then one row per sample.

    Returns:
        Path: The written file
    """
    path = Path(path)
    precision = get_csv_precision()
    try:
        np.savetxt(
            path,
            block.data.T,
            fmt=f"%.{precision}g",
            delimiter=",",
            newline="\n",
            header=channel_header(block.channels),
            comments="",
            encoding="utf-8",
        )
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e.strerror}", path=path)
    logger.info("signal written", path=str(path), channels=block.channels, samples=block.samples)
    return path


def read_signal_csv(path: PathLike, role: SignalRole) -> SignalBlock:
    """
    Read a CSV written by write_signal_csv.

    Raises:
        StorageError: If the file cannot be opened
        DataFormatError: On a bad header, ragged row or non-numeric value, naming the line
    """
    path = Path(path)
    try:
        handle = open(path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise StorageError(f"cannot read {path}: {e.strerror}", path=path)

    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header:
            raise DataFormatError("missing header line", path=path, line=1)
        channels = len(header)
        if ",".join(column.strip() for column in header) != channel_header(channels):
            raise DataFormatError(f"header must be {channel_header(channels)}", path=path, line=1)
        rows = []
        for line, row in enumerate(reader, start=2):
            if len(row) != channels:
                raise DataFormatError(f"expected {channels} columns, got {len(row)}", path=path, line=line)
            try:
                values = [float(value) for value in row]
            except ValueError:
                raise DataFormatError("non-numeric value", path=path, line=line)
            if not all(np.isfinite(values)):
                raise DataFormatError("NaN or Inf value", path=path, line=line)
            rows.append(values)

    if not rows:
        raise DataFormatError("no sample rows", path=path, line=2)
    return SignalBlock(np.array(rows).T, role)


def write_json(document: BaseModel, path: PathLike) -> Path:
    """Write a pydantic document as sorted, indented JSON."""
    path = Path(path)
    payload = orjson.dumps(
        document.model_dump(mode="json"),
        option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_APPEND_NEWLINE,
    )
    try:
        path.write_bytes(payload)
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e.strerror}", path=path)
    logger.info("document written", path=str(path), document=type(document).__name__)
    return path


def read_model_json(path: PathLike, model: Type[ModelT]) -> ModelT:
    """
    Read and validate a JSON document.

    Raises:
        StorageError: If the file cannot be read
        DataFormatError: If the document does not validate
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise StorageError(f"cannot read {path}: {e.strerror}", path=path)
    try:
        return model.model_validate_json(raw)
    except ValidationError as e:
        raise DataFormatError(f"invalid {model.__name__} document: {e.errors()[0]['msg']}", path=path)


def write_trace_csv(rows: Iterable[TraceRow], path: PathLike) -> Path:
    """Write the contrast trace with columns iter,total,entropy_sum,log_det_w,log_deriv_mean."""
    path = Path(path)
    precision = get_csv_precision()
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            for row in rows:
                writer.writerow([
                    row.iteration,
                    *(format(value, f".{precision}g") for value in (
                        row.total, row.entropy_sum, row.log_det_w, row.log_deriv_mean,
                    )),
                ])
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e.strerror}", path=path)
    return path
