"""
Trace dumps: a flat little-endian binary format compatible with raw digitizer records
and a small CSV format for inspection.

Binary record: rate (Hz, int64), bits (int8), sample count (int32), then the int16 codes.
Records are simply concatenated. Imported traces have lsb = 1 and an unknown baseline.
"""
import os
import csv
import logging

import numpy as np

from helper_functions.helpers import Helpers
from waveform_chain.trace import TraceBatch
from waveform_chain.trace import TraceRecord
from custom_exceptions.exception import InvalidTraceFile
from custom_exceptions.exception import InvalidDigitizerSpec

logger = logging.getLogger(__name__)

HEADER = np.dtype([("rate", "<i8"), ("bits", "<i1"), ("count", "<i4")])


def write_binary(file_path: str, traces):
    """
    Writes traces (a TraceBatch or a list of TraceRecord) as concatenated binary records.
    """
    records = traces.records() if isinstance(traces, TraceBatch) else list(traces)
    Helpers.create_directory(os.path.dirname(os.path.abspath(file_path)))
    with open(file_path, "wb") as file:
        for rec in records:
            header = np.array([(int(round(rec.rate)), rec.bits, rec.samples.size)], dtype=HEADER)
            file.write(header.tobytes())
            file.write(np.asarray(rec.samples, dtype="<i2").tobytes())
    logger.info("Wrote %d traces to %s.", len(records), file_path)


def read_binary(file_path: str):
    """
    Reads every record of a binary trace dump.

    Returns:
    list[TraceRecord]: The records in file order.

    Raises:
    InvalidTraceFile: If the file is truncated or a header is inconsistent.
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError(f"The file {os.path.basename(file_path)} does not found.", file_path)
    with open(file_path, "rb") as file:
        buffer = file.read()
    records, offset = [], 0
    while offset < len(buffer):
        if offset + HEADER.itemsize > len(buffer):
            raise InvalidTraceFile(f"Truncated record header at byte {offset}.", file_path)
        header = np.frombuffer(buffer, dtype=HEADER, count=1, offset=offset)[0]
        rate, bits, count = int(header["rate"]), int(header["bits"]), int(header["count"])
        offset += HEADER.itemsize
        if rate <= 0 or count <= 0 or offset + 2 * count > len(buffer):
            raise InvalidTraceFile(f"Invalid or truncated record at byte {offset - HEADER.itemsize}.",
                                   (rate, bits, count))
        codes = np.frombuffer(buffer, dtype="<i2", count=count, offset=offset).astype(np.int16)
        offset += 2 * count
        window = count * 1e9 / rate
        try:
            records.append(TraceRecord(codes, float(rate), bits, window))
        except InvalidDigitizerSpec as ex:
            raise InvalidTraceFile(f"Record {len(records)} of {file_path} is not a valid trace.", ex)
    logger.info("Read %d traces from %s.", len(records), file_path)
    return records


def write_csv(file_path: str, trace: TraceRecord):
    comment = f"rate={trace.rate!r}, bits={trace.bits}, lsb={trace.lsb!r}, baseline={trace.baseline!r}"
    rows = [(i * trace.dt, int(code)) for i, code in enumerate(trace.samples)]
    Helpers.write_csv(file_path, ["time_ns", "code"], rows, comment)


def read_csv(file_path: str) -> TraceRecord:
    """
    Reads a single-trace CSV written by write_csv (the comment line is optional).
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError(f"The file {os.path.basename(file_path)} does not found.", file_path)
    meta = {"bits": "16", "lsb": "1.0", "baseline": "None"}
    with open(file_path, newline="") as file:
        lines = file.read().splitlines()
    if lines and lines[0].startswith("#"):
        for item in lines[0][1:].split(","):
            key, _, value = item.strip().partition("=")
            meta[key] = value
        lines = lines[1:]
    rows = list(csv.reader(lines))
    if len(rows) < 3 or rows[0] != ["time_ns", "code"]:
        raise InvalidTraceFile("A trace CSV needs a 'time_ns,code' header and at least two samples.", file_path)
    try:
        times = np.array([float(row[0]) for row in rows[1:]])
        codes = np.array([int(row[1]) for row in rows[1:]], dtype=np.int16)
        dt = float(np.median(np.diff(times)))
        rate = float(meta["rate"]) if "rate" in meta else 1e9 / dt
        baseline = None if meta["baseline"] == "None" else float(meta["baseline"])
        return TraceRecord(codes, rate, int(meta["bits"]), codes.size * 1e9 / rate, 0.0,
                           float(meta["lsb"]), baseline)
    except (ValueError, IndexError, InvalidDigitizerSpec) as ex:
        raise InvalidTraceFile(f"Failed to parse trace CSV {file_path}.", ex)


def read_traces(file_path: str):
    """
    Reads a trace dump by extension: .csv for a single-trace CSV, anything else as binary.
    """
    if file_path.endswith(".csv"):
        return [read_csv(file_path)]
    return read_binary(file_path)
