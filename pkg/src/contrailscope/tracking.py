"""Cross-timestep contrail group tracking and tracking-graph layout.

Groups at consecutive timesteps are linked when they share particle ids; edge
weight is the shared count. A node with two or more incoming edges is a
merge, two or more outgoing a split, no incoming edge (after the first
column) an appearance, no outgoing edge (before the last column) an exit.
When ids turn out unstable between two timesteps the linker falls back to
centroid-proximity matching (gated at 3x the earlier timestep's eps) and
flags those edges approximate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grouping import GroupAssignment

# An exit whose group centroid sits within this fraction of the snapshot
# bounding box extent from a face is evidence the group left the domain.
BOUNDARY_MARGIN = 0.05

# Below this id-overlap fraction between consecutive timesteps identity-based
# linking is considered impossible.
STABLE_ID_FRACTION = 0.5


@dataclass
class TrackedNode:
    id: str
    column: int
    time: float
    group_id: int
    count: int
    mean_temperature: float
    mass: float
    length: float
    radius_hint: float = 0.0
    row: int = 0

    def to_json_dict(self) -> dict:
        return {
            "id": self.id, "column": self.column, "time": self.time,
            "group_id": self.group_id, "count": self.count,
            "mean_temperature": self.mean_temperature, "mass": self.mass,
            "length": self.length, "radius_hint": self.radius_hint, "row": self.row,
        }


@dataclass
class TrackedEdge:
    src: str
    dst: str
    weight: int
    overlap_fraction: float
    approximate: bool = False

    def to_json_dict(self) -> dict:
        return {"from": self.src, "to": self.dst, "weight": self.weight,
                "overlap_fraction": self.overlap_fraction, "approximate": self.approximate}


@dataclass
class TrackingEvent:
    type: str  # merge | split | appear | exit
    time: float
    node_ids: list[str]
    evidence: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out = {"type": self.type, "time": self.time, "node_ids": list(self.node_ids)}
        if self.evidence:
            out["evidence"] = dict(self.evidence)
        return out


@dataclass
class TrackingGraph:
    columns: list[list[TrackedNode]]
    edges: list[TrackedEdge]
    events: list[TrackingEvent]

    def nodes(self) -> list[TrackedNode]:
        return [n for col in self.columns for n in col]

    def node(self, node_id: str) -> TrackedNode:
        return self._by_id[node_id]

    def __post_init__(self):
        self._by_id = {n.id: n for n in self.nodes()}

    def to_json_dict(self) -> dict:
        return {
            "nodes": [n.to_json_dict() for n in self.nodes()],
            "edges": [e.to_json_dict() for e in self.edges],
            "events": [e.to_json_dict() for e in self.events],
        }


def _node_id(column: int, group_id: int) -> str:
    return f"{column}:{group_id}"


def _near_boundary(centroid, bounds) -> bool:
    if bounds is None or centroid is None:
        return False
    lo, hi = bounds
    extent = np.maximum(hi - lo, 1e-300)
    margin = BOUNDARY_MARGIN * extent
    return bool(np.any(centroid - lo <= margin) or np.any(hi - centroid <= margin))


def _link_by_identity(prev: GroupAssignment, curr: GroupAssignment):
    prev_sets = {g.id: set(int(i) for i in g.particle_ids) for g in prev.groups}
    curr_sets = {g.id: set(int(i) for i in g.particle_ids) for g in curr.groups}
    links = []
    for pid, pset in sorted(prev_sets.items()):
        for cid, cset in sorted(curr_sets.items()):
            shared = len(pset & cset)
            if shared >= 1:
                links.append((pid, cid, shared))
    return links


def _link_by_centroids(prev: GroupAssignment, curr: GroupAssignment):
    """Fallback linking when ids are unstable: each current group matches its
    nearest previous group within 3x the earlier timestep's eps. No identity
    information exists, so fallback edges carry weight 1 (this also keeps the
    incoming-weight-vs-count invariant valid)."""
    gate = 3.0 * prev.eps if prev.eps > 0 else np.inf
    links = []
    for cg in curr.groups:
        best = None
        for pg in prev.groups:
            d = float(np.linalg.norm(cg.centroid - pg.centroid))
            if d <= gate and (best is None or d < best[0]):
                best = (d, pg.id)
        if best is not None:
            links.append((best[1], cg.id, 1))
    return links


def _ids_stable(prev: GroupAssignment, curr: GroupAssignment) -> bool:
    curr_ids = set(int(i) for i in curr.ice_particle_ids)
    if not curr_ids:
        return True
    prev_ids = set(int(i) for i in prev.ice_particle_ids)
    return len(curr_ids & prev_ids) / len(curr_ids) >= STABLE_ID_FRACTION


def build_tracking_graph(assignments: list[GroupAssignment]) -> TrackingGraph:
    """Link per-timestep group assignments (sorted by time) into a graph."""
    assignments = sorted(assignments, key=lambda a: a.time)
    columns: list[list[TrackedNode]] = []
    max_count = max((g.count for a in assignments for g in a.groups), default=1)
    for col, a in enumerate(assignments):
        nodes = [
            TrackedNode(
                id=_node_id(col, g.id), column=col, time=a.time, group_id=g.id,
                count=g.count, mean_temperature=g.mean_temperature, mass=g.mass,
                length=g.length, radius_hint=g.count / max_count,
            )
            for g in sorted(a.groups, key=lambda g: g.id)
        ]
        columns.append(nodes)

    edges: list[TrackedEdge] = []
    approx_cols = set()
    counts = {}
    for col, a in enumerate(assignments):
        for g in a.groups:
            counts[_node_id(col, g.id)] = g.count
    for col in range(len(assignments) - 1):
        prev, curr = assignments[col], assignments[col + 1]
        approximate = not _ids_stable(prev, curr)
        links = _link_by_centroids(prev, curr) if approximate else _link_by_identity(prev, curr)
        if approximate:
            approx_cols.add(col)
        for pid, cid, shared in links:
            src = _node_id(col, pid)
            edges.append(TrackedEdge(
                src=src, dst=_node_id(col + 1, cid), weight=shared,
                overlap_fraction=shared / counts[src], approximate=approximate,
            ))

    incoming: dict[str, list[str]] = {}
    outgoing: dict[str, list[str]] = {}
    for e in edges:
        outgoing.setdefault(e.src, []).append(e.dst)
        incoming.setdefault(e.dst, []).append(e.src)

    events: list[TrackingEvent] = []
    n_cols = len(columns)
    for col, (a, nodes) in enumerate(zip(assignments, columns)):
        centroids = a.centroids_by_group
        for node in nodes:
            into = incoming.get(node.id, [])
            out = outgoing.get(node.id, [])
            if len(into) >= 2:
                events.append(TrackingEvent("merge", node.time, sorted(into) + [node.id]))
            if len(out) >= 2:
                events.append(TrackingEvent("split", node.time, [node.id] + sorted(out)))
            if col > 0 and not into:
                events.append(TrackingEvent("appear", node.time, [node.id]))
            if col < n_cols - 1 and not out:
                near = _near_boundary(centroids.get(node.group_id), a.bounds)
                events.append(TrackingEvent("exit", node.time, [node.id],
                                            evidence={"near_domain_boundary": near}))
    events.sort(key=lambda e: (e.time, e.type, e.node_ids))

    graph = TrackingGraph(columns=columns, edges=edges, events=events)
    layout_tracking_graph(graph)
    return graph


def layout_tracking_graph(graph: TrackingGraph) -> dict[str, tuple[int, int]]:
    """Assign (column, row) positions, reducing edge crossings by a backward
    pass: the last column is ordered by descending count (then group id), and
    each earlier node is keyed to its heaviest child's row so parents settle
    adjacent to their children; co-parents of one child order by descending
    count then group id. Deterministic for identical graphs.
    """
    children: dict[str, list[TrackedEdge]] = {}
    for e in graph.edges:
        children.setdefault(e.src, []).append(e)

    positions: dict[str, tuple[int, int]] = {}
    for col in range(len(graph.columns) - 1, -1, -1):
        nodes = graph.columns[col]
        if col == len(graph.columns) - 1:
            ordered = sorted(nodes, key=lambda n: (-n.count, n.group_id))
        else:
            def sort_key(n: TrackedNode):
                edges = children.get(n.id, [])
                if not edges:
                    return (1, 0.0, -n.count, n.group_id)  # childless sink to the bottom
                primary = max(edges, key=lambda e: (e.weight, -positions[e.dst][1]))
                return (0, float(positions[primary.dst][1]), -n.count, n.group_id)

            ordered = sorted(nodes, key=sort_key)
        for row, node in enumerate(ordered):
            node.row = row
            positions[node.id] = (col, row)
    return positions


def crossing_count(graph: TrackingGraph, rows: dict[str, int] | None = None) -> int:
    """Number of pairwise edge crossings between consecutive columns."""
    if rows is None:
        rows = {n.id: n.row for n in graph.nodes()}
    by_col: dict[int, list[TrackedEdge]] = {}
    for e in graph.edges:
        by_col.setdefault(graph.node(e.src).column, []).append(e)
    total = 0
    for edges in by_col.values():
        for i in range(len(edges)):
            for j in range(i + 1, len(edges)):
                a, b = edges[i], edges[j]
                left = rows[a.src] - rows[b.src]
                right = rows[a.dst] - rows[b.dst]
                if left * right < 0:
                    total += 1
    return total
