"""Process models mined from an event log.

Provides the directly-follows graph, the alpha footprint, the alpha net and
anomalous-path detection (one activity showing more than one tx type).
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations

from .eventlog import EventLog
from .model import BlockchainLog

CAUSAL = "->"
REVERSE = "<-"
PARALLEL = "||"
CHOICE = "#"
START = "<start>"


class MiningError(ValueError):
    pass


@dataclass(frozen=True)
class DirectlyFollowsGraph:
    activities: frozenset[str]
    edges: dict[tuple[str, str], int]
    starts: dict[str, int]
    ends: dict[str, int]

    def follows(self, a: str, b: str) -> bool:
        return (a, b) in self.edges

    def to_dict(self) -> dict:
        return {
            "activities": sorted(self.activities),
            "edges": [[a, b, n] for (a, b), n in sorted(self.edges.items())],
            "starts": dict(sorted(self.starts.items())),
            "ends": dict(sorted(self.ends.items())),
        }


@dataclass(frozen=True)
class FootprintMatrix:
    activities: tuple[str, ...]
    relations: dict[tuple[str, str], str]

    def __getitem__(self, pair: tuple[str, str]) -> str:
        return self.relations[pair]

    def short_loops(self) -> list[tuple[str, str]]:
        """Pairs with a>b and b>a, which the alpha algorithm cannot tell from concurrency."""
        return sorted(
            (a, b) for (a, b), r in self.relations.items() if r == PARALLEL and a <= b
        )

    def render(self) -> str:
        acts = self.activities
        w = max([len(a) for a in acts] + [2])
        lines = [" " * w + " " + " ".join(a.rjust(w) for a in acts)]
        for a in acts:
            lines.append(a.rjust(w) + " " + " ".join(self.relations[(a, b)].rjust(w) for b in acts))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AlphaNet:
    transitions: frozenset[str]
    places: frozenset[tuple[frozenset[str], frozenset[str]]]
    start_activities: frozenset[str]
    end_activities: frozenset[str]

    def sorted_places(self) -> list[tuple[tuple[str, ...], tuple[str, ...]]]:
        return sorted((tuple(sorted(a)), tuple(sorted(b))) for a, b in self.places)

    @property
    def n_places(self) -> int:
        # internal places plus the source and sink
        return len(self.places) + 2


@dataclass(frozen=True)
class AnomalyFinding:
    activity: str
    expected_tx_type: str
    anomalous_tx_type: str
    witnesses: tuple[int, ...]
    context: tuple[tuple[str, int], ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "activity": self.activity,
            "expected_tx_type": self.expected_tx_type,
            "anomalous_tx_type": self.anomalous_tx_type,
            "commit_orders": list(self.witnesses),
            "preceding_activities": {a: n for a, n in self.context},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnomalyFinding":
        return cls(
            d["activity"],
            d["expected_tx_type"],
            d["anomalous_tx_type"],
            tuple(int(c) for c in d["commit_orders"]),
            tuple(sorted((str(a), int(n)) for a, n in d.get("preceding_activities", {}).items())),
        )


def mine_dfg(event_log: EventLog) -> DirectlyFollowsGraph:
    seqs = [s for s in event_log.sequences() if s]
    if not seqs:
        raise MiningError("event log has no non-empty trace")
    edges: Counter = Counter()
    starts: Counter = Counter()
    ends: Counter = Counter()
    acts = set()
    for s in seqs:
        acts.update(s)
        starts[s[0]] += 1
        ends[s[-1]] += 1
        edges.update(zip(s, s[1:]))
    return DirectlyFollowsGraph(frozenset(acts), dict(edges), dict(starts), dict(ends))


def compute_footprint(dfg: DirectlyFollowsGraph) -> FootprintMatrix:
    acts = tuple(sorted(dfg.activities))
    rel = {}
    for a in acts:
        for b in acts:
            ab, ba = dfg.follows(a, b), dfg.follows(b, a)
            if ab and ba:
                rel[(a, b)] = PARALLEL
            elif ab:
                rel[(a, b)] = CAUSAL
            elif ba:
                rel[(a, b)] = REVERSE
            else:
                rel[(a, b)] = CHOICE
    return FootprintMatrix(acts, rel)


def _valid_place(fp: FootprintMatrix, A: frozenset, B: frozenset) -> bool:
    if any(fp[(a, b)] != CAUSAL for a in A for b in B):
        return False
    return all(fp[(x, y)] == CHOICE for S in (A, B) for x, y in combinations(sorted(S), 2)) and all(
        fp[(x, x)] == CHOICE for x in A | B
    )


def alpha_mine(event_log: EventLog) -> AlphaNet:
    dfg = mine_dfg(event_log)
    fp = compute_footprint(dfg)
    acts = fp.activities
    seeds = [
        (frozenset([a]), frozenset([b]))
        for a in acts
        for b in acts
        if fp[(a, b)] == CAUSAL and _valid_place(fp, frozenset([a]), frozenset([b]))
    ]
    # Every valid (A, B) is reachable by adding one valid seed at a time,
    # because all of its sub-pairs are valid too.
    found = set(seeds)
    frontier = list(seeds)
    while frontier:
        nxt = []
        for A, B in frontier:
            for sa, sb in seeds:
                cand = (A | sa, B | sb)
                if cand not in found and _valid_place(fp, *cand):
                    found.add(cand)
                    nxt.append(cand)
        frontier = nxt
    maximal = {
        (A, B)
        for A, B in found
        if not any((A <= A2 and B <= B2) and (A, B) != (A2, B2) for A2, B2 in found)
    }
    return AlphaNet(
        frozenset(acts), frozenset(maximal), frozenset(dfg.starts), frozenset(dfg.ends)
    )


def detect_anomalous_paths(log: BlockchainLog | None, event_log: EventLog) -> list[AnomalyFinding]:
    """Activities whose transactions show more than one tx type.

    The majority type is taken as expected; if several types tie for the
    majority, each of them is reported as expected against the others.
    Without ``log`` the event types carried by ``event_log`` are used.
    """
    if log is not None:
        rows = [(r.commit_order, r.activity, r.tx_type) for r in log.records]
    else:
        rows = [(e.commit_order, e.activity, e.tx_type) for t in event_log.traces.values() for e in t]
    by_act: dict[str, dict[str, list[int]]] = defaultdict(lambda: defaultdict(list))
    for co, act, tt in sorted(rows):
        by_act[act][tt].append(co)
    prev: dict[int, str] = {}
    for trace in event_log.traces.values():
        before = START
        for e in trace:
            prev[e.commit_order] = before
            before = e.activity
    out = []
    for act in sorted(by_act):
        types = by_act[act]
        if len(types) < 2:
            continue
        top = max(len(v) for v in types.values())
        for expected in sorted(t for t, v in types.items() if len(v) == top):
            for anomalous in sorted(types):
                if anomalous == expected:
                    continue
                wit = tuple(types[anomalous])
                ctx = Counter(prev.get(c, START) for c in wit)
                out.append(AnomalyFinding(act, expected, anomalous, wit, tuple(sorted(ctx.items()))))
    return out


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(model: DirectlyFollowsGraph | AlphaNet) -> str:
    if isinstance(model, DirectlyFollowsGraph):
        lines = ["digraph dfg {", "  rankdir=LR;"]
        for a in sorted(model.activities):
            lines.append(f"  {_q(a)} [shape=box];")
        for (a, b), n in sorted(model.edges.items()):
            lines.append(f"  {_q(a)} -> {_q(b)} [label={n}];")
        lines.append("}")
        return "\n".join(lines) + "\n"
    lines = ["digraph alpha {", "  rankdir=LR;"]
    for t in sorted(model.transitions):
        lines.append(f"  {_q(t)} [shape=box];")
    lines.append('  "p_source" [shape=circle,label=""];')
    lines.append('  "p_sink" [shape=doublecircle,label=""];')
    for t in sorted(model.start_activities):
        lines.append(f'  "p_source" -> {_q(t)};')
    for i, (A, B) in enumerate(model.sorted_places()):
        name = f"p{i}"
        label = "{" + ",".join(A) + "} / {" + ",".join(B) + "}"
        lines.append(f"  {_q(name)} [shape=circle,label={_q(label)}];")
        for a in A:
            lines.append(f"  {_q(a)} -> {_q(name)};")
        for b in B:
            lines.append(f"  {_q(name)} -> {_q(b)};")
    for t in sorted(model.end_activities):
        lines.append(f'  {_q(t)} -> "p_sink";')
    lines.append("}")
    return "\n".join(lines) + "\n"
