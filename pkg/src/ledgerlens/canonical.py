"""Canonical blockchain-log CSV reader and writer.

The first line is a ``#meta`` comment holding the format version, the network
configuration echo and per-block cut reasons as JSON; the header row and one
row per transaction follow. List cells are ``;``-separated tokens
(``key@version``, ``key=value``, ``start~end[key@v|key@v]``); the characters
used as token separators are %-escaped inside keys and values.
"""

from __future__ import annotations

import csv
import io
import json
import os
from typing import IO, Iterable

from .model import BlockchainLog, NetworkConfig, RangeRead, TransactionRecord

CANONICAL_CSV_VERSION = 1
COLUMNS = (
    "client_ts_ms",
    "activity",
    "args",
    "endorsers",
    "invoker_client",
    "invoker_org",
    "read_set",
    "write_set",
    "range_reads",
    "status",
    "tx_type",
    "commit_order",
    "block_number",
)

_RESERVED = "%;@=|[]~"
_EMPTY = "%%"


class CanonicalFormatError(ValueError):
    pass


def escape(s: str) -> str:
    if s == "":
        return _EMPTY
    return "".join(f"%{ord(c):02X}" if c in _RESERVED else c for c in s)


def unescape(s: str) -> str:
    if s == _EMPTY:
        return ""
    if "%" not in s:
        return s
    out = []
    i = 0
    while i < len(s):
        c = s[i]
        if c == "%":
            out.append(chr(int(s[i + 1 : i + 3], 16)))
            i += 3
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _join(items: Iterable[str]) -> str:
    return ";".join(items)


def _split(cell: str) -> list[str]:
    return cell.split(";") if cell else []


def _fmt_versioned(pairs) -> str:
    return _join(f"{escape(k)}@{v}" for k, v in pairs)


def _parse_versioned(cell: str, sep=";") -> tuple[tuple[str, int], ...]:
    out = []
    for tok in (cell.split(sep) if cell else []):
        k, _, v = tok.rpartition("@")
        out.append((unescape(k), int(v)))
    return tuple(out)


def _fmt_ranges(ranges) -> str:
    parts = []
    for rr in ranges:
        obs = "|".join(f"{escape(k)}@{v}" for k, v in rr.observed)
        parts.append(f"{escape(rr.start)}~{escape(rr.end)}[{obs}]")
    return _join(parts)


def _parse_ranges(cell: str) -> tuple[RangeRead, ...]:
    out = []
    for tok in _split(cell):
        head, _, rest = tok.partition("[")
        start, _, end = head.partition("~")
        out.append(RangeRead(unescape(start), unescape(end), _parse_versioned(rest.rstrip("]"), sep="|")))
    return tuple(out)


def _fmt_ts(ts: float) -> str:
    return repr(float(ts))


def record_to_row(r: TransactionRecord) -> list[str]:
    return [
        _fmt_ts(r.client_ts),
        r.activity,
        _join(escape(a) for a in r.args),
        _join(escape(e) for e in r.endorsers),
        r.invoker_client,
        r.invoker_org,
        _fmt_versioned(r.read_set),
        _join(f"{escape(k)}={escape(v)}" for k, v in r.write_set),
        _fmt_ranges(r.range_reads),
        r.status,
        r.tx_type,
        str(r.commit_order),
        str(r.block_number),
    ]


def row_to_record(row: dict) -> TransactionRecord:
    writes = []
    for tok in _split(row["write_set"]):
        k, _, v = tok.partition("=")
        writes.append((unescape(k), unescape(v)))
    return TransactionRecord(
        client_ts=float(row["client_ts_ms"]),
        activity=row["activity"],
        args=tuple(unescape(a) for a in _split(row["args"])),
        endorsers=tuple(unescape(e) for e in _split(row["endorsers"])),
        invoker_client=row["invoker_client"],
        invoker_org=row["invoker_org"],
        read_set=_parse_versioned(row["read_set"]),
        write_set=tuple(writes),
        range_reads=_parse_ranges(row["range_reads"]),
        status=row["status"],
        tx_type=row["tx_type"],
        commit_order=int(row["commit_order"]),
        block_number=int(row["block_number"]),
    )


def write_canonical_csv(log: BlockchainLog, fh: IO[str]) -> None:
    meta = {
        "format": "ledgerlens-canonical",
        "version": CANONICAL_CSV_VERSION,
        "config": log.config.to_dict() if log.config else None,
        "cut_reasons": {str(b.block_number): b.cut_reason for b in log.blocks},
    }
    fh.write("#meta " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in log.records:
        w.writerow(record_to_row(r))


def read_canonical_csv(fh: IO[str]) -> BlockchainLog:
    first = fh.readline()
    meta = {}
    if first.startswith("#meta "):
        meta = json.loads(first[len("#meta ") :])
        if meta.get("version") != CANONICAL_CSV_VERSION:
            raise CanonicalFormatError(f"unsupported canonical CSV version {meta.get('version')!r}")
        header_line = fh.readline()
    else:
        header_line = first
    header = next(csv.reader([header_line]))
    if tuple(h.strip() for h in header) != COLUMNS:
        raise CanonicalFormatError(f"unexpected header {header!r}")
    records = []
    for lineno, row in enumerate(csv.reader(fh), start=3):
        if not row:
            continue
        if len(row) != len(COLUMNS):
            raise CanonicalFormatError(f"line {lineno}: expected {len(COLUMNS)} cells, got {len(row)}")
        try:
            records.append(row_to_record(dict(zip(COLUMNS, row))))
        except (ValueError, IndexError) as exc:
            raise CanonicalFormatError(f"line {lineno}: {exc}") from None
    config = NetworkConfig.from_dict(meta["config"]) if meta.get("config") else None
    cuts = {int(k): v for k, v in (meta.get("cut_reasons") or {}).items()}
    return BlockchainLog.from_records(records, config, cuts)


def dumps(log: BlockchainLog) -> str:
    buf = io.StringIO()
    write_canonical_csv(log, buf)
    return buf.getvalue()


def loads(text: str) -> BlockchainLog:
    return read_canonical_csv(io.StringIO(text))


def load(path: str | os.PathLike) -> BlockchainLog:
    with open(path, encoding="utf-8", newline="") as fh:
        return read_canonical_csv(fh)
