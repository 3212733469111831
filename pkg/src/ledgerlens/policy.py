"""Endorsement policy expression trees.

Policies are written the way Fabric operators write them::

    And(Org1, Or(Org2, Org3, Org4))
    OutOf(2, Org1, Org2, Org3, Org4)
    Majority(Org1, Org2)

``parse_policy`` turns such a string into a tree of frozen nodes, every node
supports ``evaluate(orgs)`` and ``str()`` gives back the canonical spelling.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class OrgLeaf:
    org: str

    def evaluate(self, orgs) -> bool:
        return self.org in orgs

    def leaves(self) -> tuple[str, ...]:
        return (self.org,)

    def __str__(self) -> str:
        return self.org


@dataclass(frozen=True)
class And:
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise PolicyError("And() needs at least one child")

    def evaluate(self, orgs) -> bool:
        return all(c.evaluate(orgs) for c in self.children)

    def leaves(self) -> tuple[str, ...]:
        return _leaves(self.children)

    def __str__(self) -> str:
        return f"And({', '.join(map(str, self.children))})"


@dataclass(frozen=True)
class Or:
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise PolicyError("Or() needs at least one child")

    def evaluate(self, orgs) -> bool:
        return any(c.evaluate(orgs) for c in self.children)

    def leaves(self) -> tuple[str, ...]:
        return _leaves(self.children)

    def __str__(self) -> str:
        return f"Or({', '.join(map(str, self.children))})"


@dataclass(frozen=True)
class OutOf:
    k: int
    children: tuple

    def __post_init__(self):
        if not 1 <= self.k <= len(self.children):
            raise PolicyError(f"OutOf needs 1 <= k <= {len(self.children)}, got k={self.k}")

    def evaluate(self, orgs) -> bool:
        hits = 0
        for c in self.children:
            if c.evaluate(orgs):
                hits += 1
                if hits >= self.k:
                    return True
        return False

    def leaves(self) -> tuple[str, ...]:
        return _leaves(self.children)

    def __str__(self) -> str:
        return f"OutOf({self.k}, {', '.join(map(str, self.children))})"


@dataclass(frozen=True)
class Majority:
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise PolicyError("Majority() needs at least one child")

    @property
    def k(self) -> int:
        return len(self.children) // 2 + 1

    def evaluate(self, orgs) -> bool:
        return sum(1 for c in self.children if c.evaluate(orgs)) >= self.k

    def leaves(self) -> tuple[str, ...]:
        return _leaves(self.children)

    def __str__(self) -> str:
        return f"Majority({', '.join(map(str, self.children))})"


Policy = Union[OrgLeaf, And, Or, OutOf, Majority]


def _leaves(children) -> tuple[str, ...]:
    out: list[str] = []
    for c in children:
        for org in c.leaves():
            if org not in out:
                out.append(org)
    return tuple(out)


_TOKEN = re.compile(r"\s*(?:(\()|(\))|(,)|([A-Za-z0-9_.\-]+))")


def _tokenize(text: str) -> list[str]:
    pos = 0
    tokens = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolicyError(f"unexpected character at {pos} in {text!r}")
        tokens.append(next(g for g in m.groups() if g is not None))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return tokens


def parse_policy(text: str) -> Policy:
    """Parse a policy string; operator names are case-insensitive."""
    tokens = _tokenize(text)
    if not tokens:
        raise PolicyError("empty policy")
    node, pos = _parse(tokens, 0)
    if pos != len(tokens):
        raise PolicyError(f"trailing input in policy {text!r}")
    return node


def _parse(tokens: list[str], pos: int):
    if pos >= len(tokens):
        raise PolicyError("policy ends early")
    name = tokens[pos]
    if name in "(),":
        raise PolicyError(f"expected a name, got {name!r}")
    pos += 1
    if pos >= len(tokens) or tokens[pos] != "(":
        return OrgLeaf(name), pos
    pos += 1
    op = name.lower()
    k = None
    if op == "outof":
        try:
            k = int(tokens[pos])
        except (IndexError, ValueError):
            raise PolicyError("OutOf needs an integer first argument") from None
        pos += 1
        if pos >= len(tokens) or tokens[pos] != ",":
            raise PolicyError("expected ',' after OutOf count")
        pos += 1
    children = []
    while True:
        child, pos = _parse(tokens, pos)
        children.append(child)
        if pos >= len(tokens):
            raise PolicyError("unbalanced parentheses")
        if tokens[pos] == ",":
            pos += 1
            continue
        if tokens[pos] == ")":
            pos += 1
            break
        raise PolicyError(f"unexpected token {tokens[pos]!r}")
    children = tuple(children)
    if op == "and":
        return And(children), pos
    if op == "or":
        return Or(children), pos
    if op == "outof":
        return OutOf(k, children), pos
    if op == "majority":
        return Majority(children), pos
    raise PolicyError(f"unknown policy operator {name!r}")


def evaluate_policy(policy: Policy | str, endorsing_orgs: Iterable[str]) -> bool:
    if isinstance(policy, str):
        policy = parse_policy(policy)
    return policy.evaluate(frozenset(endorsing_orgs))


def standard_policy(name: str, n_orgs: int) -> Policy:
    """The four evaluation policies P1..P4 over ``n_orgs`` organizations.

    P1, P2 and P4 are defined over four organizations; with fewer orgs they
    are folded onto the orgs that exist.
    """
    orgs = [OrgLeaf(f"Org{i + 1}") for i in range(n_orgs)]
    name = name.upper()
    if name == "P1":
        rest = orgs[1:] or orgs[:1]
        return And((orgs[0], Or(tuple(rest))))
    if name == "P2":
        half = max(1, len(orgs) // 2)
        left, right = orgs[:half], orgs[half:] or orgs[:half]
        return And((Or(tuple(left)), Or(tuple(right))))
    if name == "P3":
        return Majority(tuple(orgs))
    if name == "P4":
        return OutOf(min(2, len(orgs)), tuple(orgs))
    raise PolicyError(f"unknown standard policy {name!r}")


def resolve_policy(spec: str, n_orgs: int) -> Policy:
    """Accept either a P1..P4 shorthand or a full expression."""
    if re.fullmatch(r"[Pp][1-4]", spec.strip()):
        return standard_policy(spec.strip(), n_orgs)
    return parse_policy(spec)


def choose_endorsers(policy: Policy, weights: dict[str, float], rng) -> set[str]:
    """Pick a minimal set of orgs satisfying ``policy``.

    Wherever the policy leaves a choice (Or, OutOf, Majority) children are
    sampled without replacement with probability proportional to their org
    weights. ``rng`` is a ``numpy.random.Generator``.
    """
    if isinstance(policy, OrgLeaf):
        return {policy.org}
    if isinstance(policy, And):
        out: set[str] = set()
        for c in policy.children:
            out |= choose_endorsers(c, weights, rng)
        return out
    if isinstance(policy, Or):
        k = 1
    elif isinstance(policy, (OutOf, Majority)):
        k = policy.k
    else:
        raise PolicyError(f"not a policy node: {policy!r}")
    children = list(policy.children)
    w = [sum(weights.get(o, 1.0) for o in c.leaves()) / len(c.leaves()) for c in children]
    picked = _weighted_sample(len(children), k, w, rng)
    out = set()
    for i in picked:
        out |= choose_endorsers(children[i], weights, rng)
    return out


def _weighted_sample(n: int, k: int, w: list[float], rng) -> list[int]:
    if k >= n:
        return list(range(n))
    remaining = list(range(n))
    weights = list(w)
    picked = []
    for _ in range(k):
        total = sum(weights)
        u = rng.random() * total
        acc = 0.0
        j = len(remaining) - 1
        for idx, wi in enumerate(weights):
            acc += wi
            if u < acc:
                j = idx
                break
        picked.append(remaining.pop(j))
        weights.pop(j)
    return sorted(picked)
