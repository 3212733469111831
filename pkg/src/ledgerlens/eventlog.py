"""Process-mining event logs derived from a blockchain log.

A trace groups the transactions sharing one value of a *case field*: either a
function-argument position (``arg0``) or a key-prefix class
(``prefix:product_``). Commit order stands in for the event timestamp.
"""

from __future__ import annotations

import csv
import io
import json
import re
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import IO, Iterable

from .model import SUCCESS, BlockchainLog, TransactionRecord

EVENTLOG_CSV_VERSION = 1
EVENTLOG_COLUMNS = ("case_id", "activity", "commit_order", "status", "tx_type")
ORPHAN = "__orphan__"
MIN_COVERAGE = 0.5
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class CaseFieldError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class CaseField:
    source: str  # "arg" or "prefix"
    identifier: str  # argument position or key prefix

    def __str__(self) -> str:
        return f"arg{self.identifier}" if self.source == "arg" else f"prefix:{self.identifier}"

    @classmethod
    def parse(cls, text: str) -> "CaseField":
        m = re.fullmatch(r"arg(\d+)", text)
        if m:
            return cls("arg", m.group(1))
        if text.startswith("prefix:") and len(text) > len("prefix:"):
            return cls("prefix", text[len("prefix:"):])
        raise CaseFieldError(f"case field must be argN or prefix:<p>, got {text!r}")

    def value(self, r: TransactionRecord) -> str | None:
        if self.source == "arg":
            i = int(self.identifier)
            if i < len(r.args) and r.args[i] != "":
                return r.args[i]
            return None
        for k in _ordered_keys(r):
            if key_prefix(k) == self.identifier:
                return k
        return None


@dataclass(frozen=True)
class Event:
    activity: str
    commit_order: int
    status: str
    tx_type: str


@dataclass(frozen=True)
class EventLog:
    case_field: CaseField
    traces: dict[int, tuple[Event, ...]]
    case_values: dict[int, str]

    @property
    def n_events(self) -> int:
        return sum(len(t) for t in self.traces.values())

    def activities(self) -> list[str]:
        return sorted({e.activity for t in self.traces.values() for e in t})

    def sequences(self) -> list[tuple[str, ...]]:
        return [tuple(e.activity for e in self.traces[c]) for c in sorted(self.traces)]


_SPLIT = re.compile(r"^(.*[^A-Za-z0-9])[A-Za-z0-9]+$|^(.*?[A-Za-z])[0-9]+$")


def key_prefix(key: str) -> str:
    """Key-prefix class: cut after the last separator, else at a letter/digit boundary.

    ``product_42`` -> ``product_``, ``item42`` -> ``item``; keys with neither
    form their own class.
    """
    m = _SPLIT.match(key)
    if not m:
        return key
    return m.group(1) if m.group(1) is not None else m.group(2)


def _ordered_keys(r: TransactionRecord) -> list[str]:
    out = []
    for k in [k for k, _ in r.read_set] + [k for k, _ in r.write_set] + [
        k for rr in r.range_reads for k, _ in rr.observed
    ]:
        if k not in out:
            out.append(k)
    return out


def candidate_fields(log: BlockchainLog) -> list[CaseField]:
    cands = set()
    for r in log.records:
        for i in range(len(r.args)):
            cands.add(CaseField("arg", str(i)))
        for k in _ordered_keys(r):
            cands.add(CaseField("prefix", key_prefix(k)))
    return sorted(cands, key=lambda c: (c.source != "arg", int(c.identifier) if c.source == "arg" else 0, c.identifier))


def score_field(log: BlockchainLog, cf: CaseField) -> tuple[float, int]:
    """(coverage fraction, number of distinct values)."""
    values = [cf.value(r) for r in log.records]
    present = [v for v in values if v is not None]
    return len(present) / len(log.records), len(set(present))


def derive_case_field(log: BlockchainLog) -> tuple[CaseField, float]:
    """Pick the candidate present in most transactions.

    Ties go to the candidate with more distinct values, then to argument
    positions before key prefixes, then by position / prefix text.
    """
    if not log.records:
        raise CaseFieldError("cannot derive a case field from an empty log")
    best = None
    for order, cf in enumerate(candidate_fields(log)):
        cov, distinct = score_field(log, cf)
        key = (-cov, -distinct, order)
        if best is None or key < best[0]:
            best = (key, cf, cov)
    if best is None or best[2] < MIN_COVERAGE:
        raise CaseFieldError(
            f"no candidate case field covers at least {MIN_COVERAGE:.0%} of transactions"
        )
    return best[1], best[2]


def build_event_log(log: BlockchainLog, case_field: CaseField, successes_only: bool = False) -> EventLog:
    records = sorted(log.records, key=lambda r: r.commit_order)
    if successes_only:
        records = [r for r in records if r.status == SUCCESS]
    ids: dict[str, int] = {}
    buckets: dict[str, list[Event]] = {}
    orphans: list[Event] = []
    for r in records:
        ev = Event(r.activity, r.commit_order, r.status, r.tx_type)
        v = case_field.value(r)
        if v is None:
            orphans.append(ev)
            continue
        if v not in ids:
            ids[v] = len(ids)
            buckets[v] = []
        buckets[v].append(ev)
    traces = {ids[v]: tuple(evs) for v, evs in buckets.items()}
    values = {i: v for v, i in ids.items()}
    if orphans:
        oid = len(ids)
        traces[oid] = tuple(orphans)
        values[oid] = ORPHAN
    return EventLog(case_field, traces, values)


def export_eventlog_csv(el: EventLog, fh: IO[str]) -> None:
    meta = {
        "format": "ledgerlens-eventlog",
        "version": EVENTLOG_CSV_VERSION,
        "case_field": str(el.case_field),
        "case_values": {str(k): v for k, v in sorted(el.case_values.items())},
    }
    fh.write("#meta " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(EVENTLOG_COLUMNS)
    for cid in sorted(el.traces):
        for e in el.traces[cid]:
            w.writerow([cid, e.activity, e.commit_order, e.status, e.tx_type])


def import_eventlog_csv(fh: IO[str]) -> EventLog:
    first = fh.readline()
    meta = {}
    if first.startswith("#meta "):
        meta = json.loads(first[len("#meta "):])
        header = fh.readline()
    else:
        header = first
    if tuple(next(csv.reader([header]))) != EVENTLOG_COLUMNS:
        raise ValueError(f"unexpected event log header {header.strip()!r}")
    traces: dict[int, list[Event]] = {}
    for row in csv.reader(fh):
        if not row:
            continue
        cid, act, co, status, tt = row
        traces.setdefault(int(cid), []).append(Event(act, int(co), status, tt))
    for cid in traces:
        traces[cid].sort(key=lambda e: e.commit_order)
    values = {int(k): v for k, v in (meta.get("case_values") or {}).items()}
    for cid in traces:
        values.setdefault(cid, str(cid))
    cf = CaseField.parse(meta["case_field"]) if meta.get("case_field") else CaseField("arg", "0")
    return EventLog(cf, {c: tuple(t) for c, t in traces.items()}, values)


def eventlog_csv_text(el: EventLog) -> str:
    buf = io.StringIO()
    export_eventlog_csv(el, buf)
    return buf.getvalue()


def _timestamp(commit_order: int) -> str:
    return (_EPOCH + timedelta(milliseconds=commit_order)).isoformat(timespec="milliseconds")


def export_xes(el: EventLog) -> str:
    root = ET.Element("log", {"xes.version": "1.0", "xes.features": "nested-attributes"})
    for name, prefix, uri in (
        ("Concept", "concept", "http://www.xes-standard.org/concept.xesext"),
        ("Time", "time", "http://www.xes-standard.org/time.xesext"),
        ("Lifecycle", "lifecycle", "http://www.xes-standard.org/lifecycle.xesext"),
    ):
        ET.SubElement(root, "extension", {"name": name, "prefix": prefix, "uri": uri})
    for scope, keys in (("trace", ("concept:name",)), ("event", ("concept:name", "time:timestamp"))):
        g = ET.SubElement(root, "global", {"scope": scope})
        for k in keys:
            tag = "date" if k == "time:timestamp" else "string"
            ET.SubElement(g, tag, {"key": k, "value": _timestamp(0) if tag == "date" else "UNKNOWN"})
    ET.SubElement(root, "string", {"key": "concept:name", "value": f"case field {el.case_field}"})
    for cid in sorted(el.traces):
        t = ET.SubElement(root, "trace")
        ET.SubElement(t, "string", {"key": "concept:name", "value": str(cid)})
        ET.SubElement(t, "string", {"key": "case:value", "value": el.case_values.get(cid, str(cid))})
        for e in el.traces[cid]:
            ev = ET.SubElement(t, "event")
            ET.SubElement(ev, "string", {"key": "concept:name", "value": e.activity})
            ET.SubElement(ev, "date", {"key": "time:timestamp", "value": _timestamp(e.commit_order)})
            ET.SubElement(ev, "string", {"key": "lifecycle:transition", "value": "complete"})
            ET.SubElement(ev, "int", {"key": "commit_order", "value": str(e.commit_order)})
            ET.SubElement(ev, "string", {"key": "status", "value": e.status})
            ET.SubElement(ev, "string", {"key": "tx_type", "value": e.tx_type})
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def activity_counts(el: EventLog) -> Counter:
    return Counter(e.activity for t in el.traces.values() for e in t)


def from_sequences(seqs: Iterable[Iterable[str]]) -> EventLog:
    """Event log from plain activity sequences (handy for mining tests)."""
    traces = {}
    co = 0
    for cid, seq in enumerate(seqs):
        evs = []
        for a in seq:
            evs.append(Event(a, co, SUCCESS, "update"))
            co += 1
        traces[cid] = tuple(evs)
    return EventLog(CaseField("arg", "0"), traces, {c: str(c) for c in traces})
