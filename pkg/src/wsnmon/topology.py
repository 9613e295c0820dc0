"""Tree network structure: a base station root, cluster heads, and leaflets.

The tree is fixed at depth 2 below the root. Children lists keep their
configuration order, which is what makes polling (and therefore the whole
simulation) deterministic. Topology values are immutable; operations that
"modify" a topology return a new one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .errors import TopologyError

#: Labels that collide with value literals in the telemetry file format.
RESERVED_LABELS = frozenset({"NULL", "-"})

DEFAULT_ROOT = "BS"


class NodeRole(Enum):
    BASE_STATION = "BASE_STATION"
    CLUSTER_HEAD = "CLUSTER_HEAD"
    LEAFLET = "LEAFLET"


def validate_label(label: str) -> None:
    """Reject labels that cannot survive the config and telemetry grammars."""
    if not label:
        raise TopologyError("INVALID_LABEL", "empty node label")
    if label in RESERVED_LABELS:
        raise TopologyError("INVALID_LABEL", f"label {label!r} is a reserved literal")
    for ch in label:
        # printable ASCII, no whitespace; ',' splits records, '#' starts comments
        if not (33 <= ord(ch) <= 126) or ch in {",", "#"}:
            raise TopologyError("INVALID_LABEL", f"label {label!r} contains {ch!r}")


@dataclass(frozen=True)
class RadioSpec:
    """Uniform per-link radio parameters (every node's range is the same)."""

    range_m: float
    failure_prob: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.range_m) or self.range_m <= 0:
            raise TopologyError("INVALID_RADIO", f"range_m must be positive, got {self.range_m}")
        if not 0.0 <= self.failure_prob <= 1.0:
            raise TopologyError(
                "INVALID_RADIO", f"failure_prob must be in [0,1], got {self.failure_prob}"
            )


@dataclass(frozen=True)
class TreeTopology:
    """Immutable depth-2 tree rooted at the base station.

    ``children`` maps every node to its ordered child tuple (empty for
    leaflets); ``roles`` classifies every node. Treat both mappings as
    read-only.
    """

    root: str
    children: Mapping[str, tuple[str, ...]]
    roles: Mapping[str, NodeRole]
    radio: RadioSpec
    positions: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def nodes(self) -> tuple[str, ...]:
        return (self.root,) + self.sensing_nodes()

    def cluster_heads(self) -> tuple[str, ...]:
        return self.children[self.root]

    def leaflets(self, head: str) -> tuple[str, ...]:
        if head not in self.roles:
            raise TopologyError("UNKNOWN_NODE", f"no node {head!r}")
        if self.roles[head] is not NodeRole.CLUSTER_HEAD:
            raise TopologyError("NOT_A_CLUSTER_HEAD", f"{head!r} is not a cluster head")
        return self.children[head]

    def sensing_nodes(self) -> tuple[str, ...]:
        """All nodes that sense, in deterministic polling order.

        Each cluster head is immediately followed by its leaflets, heads in
        configuration order. This order fixes telemetry record order too.
        """
        out: list[str] = []
        for head in self.cluster_heads():
            out.append(head)
            out.extend(self.children[head])
        return tuple(out)

    def parent_of(self, node: str) -> str | None:
        if node not in self.roles:
            raise TopologyError("UNKNOWN_NODE", f"no node {node!r}")
        if node == self.root:
            return None
        for parent, kids in self.children.items():
            if node in kids:
                return parent
        raise TopologyError("UNKNOWN_NODE", f"no node {node!r}")  # pragma: no cover

    def is_link(self, a: str, b: str) -> bool:
        """True when (a, b) is a tree edge in either direction."""
        for node in (a, b):
            if node not in self.roles:
                raise TopologyError("UNKNOWN_NODE", f"no node {node!r}")
        return b in self.children.get(a, ()) or a in self.children.get(b, ())


def build_topology(
    cluster_heads: Sequence[tuple[str, Sequence[str]]],
    radio: RadioSpec,
    positions: Mapping[str, tuple[float, float]] | None = None,
    root: str = DEFAULT_ROOT,
) -> TreeTopology:
    """Build and validate a topology from (head, leaflets) pairs.

    Raises DUPLICATE_LABEL, EMPTY_TOPOLOGY, or RANGE_VIOLATION.
    """
    if not cluster_heads:
        raise TopologyError("EMPTY_TOPOLOGY", "at least one cluster head is required")
    validate_label(root)
    children: dict[str, tuple[str, ...]] = {}
    roles: dict[str, NodeRole] = {root: NodeRole.BASE_STATION}
    for head, leaves in cluster_heads:
        for label in (head, *leaves):
            validate_label(label)
            if label in roles:
                raise TopologyError("DUPLICATE_LABEL", f"label {label!r} used twice")
            roles[label] = NodeRole.CLUSTER_HEAD if label == head else NodeRole.LEAFLET
        children[head] = tuple(leaves)
        for leaf in leaves:
            children[leaf] = ()
    children[root] = tuple(head for head, _ in cluster_heads)
    topo = TreeTopology(
        root=root,
        children=children,
        roles=roles,
        radio=radio,
        positions=dict(positions or {}),
    )
    _check_ranges(topo)
    return topo


def add_leaflet(t: TreeTopology, head: str, leaf: str) -> TreeTopology:
    """Return a new topology with ``leaf`` attached under ``head``."""
    if head not in t.roles:
        raise TopologyError("UNKNOWN_NODE", f"no node {head!r}")
    if t.roles[head] is not NodeRole.CLUSTER_HEAD:
        raise TopologyError("NOT_A_CLUSTER_HEAD", f"{head!r} is not a cluster head")
    validate_label(leaf)
    if leaf in t.roles:
        raise TopologyError("DUPLICATE_LABEL", f"label {leaf!r} used twice")
    children = dict(t.children)
    children[head] = children[head] + (leaf,)
    children[leaf] = ()
    roles = dict(t.roles)
    roles[leaf] = NodeRole.LEAFLET
    out = TreeTopology(
        root=t.root, children=children, roles=roles, radio=t.radio, positions=dict(t.positions)
    )
    _check_ranges(out)
    return out


def route_path(t: TreeTopology, src: str, dst: str) -> list[str]:
    """Unique tree path between two nodes, inclusive of both endpoints."""

    def chain_to_root(node: str) -> list[str]:
        chain = [node]
        while chain[-1] != t.root:
            chain.append(t.parent_of(chain[-1]))
        return chain

    up = chain_to_root(src)  # validates src
    down = chain_to_root(dst)
    on_up = set(up)
    # walk down's chain until it meets src's chain; that node is the junction
    junction = next(n for n in down if n in on_up)
    path = up[: up.index(junction) + 1]
    path += list(reversed(down[: down.index(junction)]))
    return path


def round_message_count(t: TreeTopology) -> int:
    """Messages per collection round: one poll + one data reply per link."""
    heads = t.cluster_heads()
    total_leaflets = sum(len(t.children[h]) for h in heads)
    return 2 * len(heads) + 2 * total_leaflets


def validate(t: TreeTopology) -> None:
    """Check every structural invariant; raises TopologyError on violation."""
    if t.root not in t.roles or t.roles[t.root] is not NodeRole.BASE_STATION:
        raise TopologyError("INVALID_TREE", "root must have role BASE_STATION")
    if not t.children.get(t.root):
        raise TopologyError("EMPTY_TOPOLOGY", "root has no cluster heads")
    seen: set[str] = set()
    for node, role in t.roles.items():
        validate_label(node)
        if node in seen:  # dict keys are unique; guards hand-built role maps
            raise TopologyError("DUPLICATE_LABEL", f"label {node!r} used twice")
        seen.add(node)
    for head in t.children[t.root]:
        if t.roles.get(head) is not NodeRole.CLUSTER_HEAD:
            raise TopologyError("INVALID_TREE", f"root child {head!r} is not a cluster head")
        for leaf in t.children.get(head, ()):
            if t.roles.get(leaf) is not NodeRole.LEAFLET:
                raise TopologyError("INVALID_TREE", f"{leaf!r} under {head!r} is not a leaflet")
            if t.children.get(leaf):
                raise TopologyError("INVALID_TREE", f"leaflet {leaf!r} has children (depth > 2)")
    reachable = {t.root}
    reachable.update(t.children[t.root])
    for head in t.children[t.root]:
        reachable.update(t.children.get(head, ()))
    if reachable != set(t.roles):
        stray = set(t.roles) - reachable
        raise TopologyError("INVALID_TREE", f"nodes not attached to the tree: {sorted(stray)}")
    _check_ranges(t)


def _check_ranges(t: TreeTopology) -> None:
    # positions are optional; only links with both endpoints placed are checked
    if not t.positions:
        return
    for parent, kids in t.children.items():
        for kid in kids:
            if parent in t.positions and kid in t.positions:
                px, py = t.positions[parent]
                kx, ky = t.positions[kid]
                dist = math.hypot(px - kx, py - ky)
                if dist > t.radio.range_m:
                    raise TopologyError(
                        "RANGE_VIOLATION",
                        f"link {parent}-{kid} spans {dist:.1f} m > range {t.radio.range_m} m",
                    )
