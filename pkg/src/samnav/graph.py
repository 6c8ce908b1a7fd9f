"""Scene action map: a directed graph whose edges are navigational behaviours.

Nodes mark changepoints (places where the robot may switch behaviours) or
user destinations. Every outgoing edge of a node must carry a distinct
behaviour, so that "which edge am I on" is a well-posed question. Maps are
immutable once built; use :class:`SamBuilder` to assemble one incrementally.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .errors import ConstraintError, FormatError, UnknownEdgeError

DEFAULT_BEHAVIOURS = ("turn-left", "go-forward", "turn-right")


class BehaviourSet:
    """Ordered, unique behaviour identifiers; edge labels index into it."""

    def __init__(self, behaviours: Sequence[str] = DEFAULT_BEHAVIOURS):
        names = tuple(behaviours)
        if not names:
            raise FormatError("behaviour set must contain at least one behaviour")
        if len(set(names)) != len(names) or any(not n for n in names):
            raise FormatError("behaviour identifiers must be unique and non-empty")
        self.names = names
        self._index = {n: i for i, n in enumerate(names)}

    def __len__(self) -> int:
        return len(self.names)

    def __eq__(self, other) -> bool:
        return isinstance(other, BehaviourSet) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"BehaviourSet({list(self.names)!r})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise FormatError(f"unknown behaviour name: {name!r}") from None

    def name(self, idx: int) -> str:
        return self.names[idx]


class NodeKind(str, Enum):
    CHANGEPOINT = "changepoint"
    DESTINATION = "destination"


@dataclass(frozen=True, order=True)
class Node:
    id: int
    kind: NodeKind
    pos: tuple[float, float]  # (x, y) pixels; rendering/map-reading metadata only


@dataclass(frozen=True, order=True)
class Edge:
    src: int
    dst: int
    behaviour: int  # index into the owning map's BehaviourSet

    def key(self) -> tuple[int, int, int]:
        return (self.src, self.dst, self.behaviour)


@dataclass(frozen=True)
class Violation:
    kind: str  # "duplicate-behaviour" | "dangling-edge" | "duplicate-edge" | "self-loop"
    message: str
    node: int | None = None
    edge: Edge | None = None


class SceneActionMap:
    """Immutable behaviour graph. Construction sorts nodes and edges into
    canonical order (ascending node id, lexicographic (src, dst, behaviour))."""

    def __init__(
        self,
        behaviour_set: BehaviourSet,
        nodes: Iterable[Node],
        edges: Iterable[Edge],
    ):
        self.behaviour_set = behaviour_set
        self.nodes = tuple(sorted(nodes, key=lambda n: n.id))
        self.edges = tuple(sorted(set(edges), key=Edge.key))
        self._by_id = {n.id: n for n in self.nodes}
        if len(self._by_id) != len(self.nodes):
            raise ConstraintError("duplicate node ids")
        out: dict[int, list[Edge]] = {n.id: [] for n in self.nodes}
        inc: dict[int, list[Edge]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            if e.src in out:
                out[e.src].append(e)
            if e.dst in inc:
                inc[e.dst].append(e)
        self._out = {k: tuple(v) for k, v in out.items()}
        self._in = {k: tuple(v) for k, v in inc.items()}

    # -- queries ---------------------------------------------------------

    def node(self, node_id: int) -> Node:
        return self._by_id[node_id]

    def has_node(self, node_id: int) -> bool:
        return node_id in self._by_id

    def has_edge(self, edge: Edge) -> bool:
        return edge in self._edge_set()

    def _edge_set(self) -> frozenset:
        cached = getattr(self, "_edges_frozen", None)
        if cached is None:
            cached = frozenset(self.edges)
            self._edges_frozen = cached
        return cached

    def out_edges(self, node_id: int) -> tuple[Edge, ...]:
        return self._out.get(node_id, ())

    def in_edges(self, node_id: int) -> tuple[Edge, ...]:
        return self._in.get(node_id, ())

    def behaviour_name(self, edge: Edge) -> str:
        return self.behaviour_set.name(edge.behaviour)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SceneActionMap)
            and self.behaviour_set == other.behaviour_set
            and self.nodes == other.nodes
            and self.edges == other.edges
        )

    def __repr__(self) -> str:
        return f"SceneActionMap(nodes={len(self.nodes)}, edges={len(self.edges)})"


@dataclass(frozen=True)
class SamCrop:
    """Sub-map within ``hop_radius`` undirected hops of a centre edge."""

    graph: SceneActionMap
    centre_edge: Edge
    hop_radius: int

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self.graph.edges

    @property
    def nodes(self) -> tuple[Node, ...]:
        return self.graph.nodes


def validate(sam: SceneActionMap) -> list[Violation]:
    """Report every structural defect; an empty list means the map is valid."""
    report: list[Violation] = []
    node_ids = {n.id for n in sam.nodes}
    seen: set[tuple[int, int, int]] = set()
    for e in sam.edges:
        if e.src == e.dst:
            report.append(Violation("self-loop", f"edge {e.key()} is a self-loop", edge=e))
        if e.src not in node_ids or e.dst not in node_ids:
            report.append(
                Violation("dangling-edge", f"edge {e.key()} references a missing node", edge=e)
            )
        if e.key() in seen:
            report.append(Violation("duplicate-edge", f"edge {e.key()} repeated", edge=e))
        seen.add(e.key())
    for n in sam.nodes:
        by_behaviour: dict[int, list[Edge]] = {}
        for e in sam.out_edges(n.id):
            by_behaviour.setdefault(e.behaviour, []).append(e)
        for b, group in sorted(by_behaviour.items()):
            if len(group) > 1:
                name = sam.behaviour_set.name(b)
                report.append(
                    Violation(
                        "duplicate-behaviour",
                        f"node {n.id} has {len(group)} outgoing '{name}' edges",
                        node=n.id,
                    )
                )
    return report


class SamBuilder:
    """Single-owner incremental constructor.

    In strict mode (default), insertions that would violate the structural
    constraint raise :class:`ConstraintError` and leave the builder unchanged.
    In permissive mode they are accepted and recorded in ``violations``.
    """

    def __init__(self, behaviour_set: BehaviourSet | None = None, strict: bool = True):
        self.behaviour_set = behaviour_set or BehaviourSet()
        self.strict = strict
        self.violations: list[Violation] = []
        self._nodes: dict[int, Node] = {}
        self._edges: set[Edge] = set()
        self._out_behaviours: dict[int, set[int]] = {}

    def add_node(
        self, node_id: int, kind: NodeKind = NodeKind.CHANGEPOINT, pos: tuple[float, float] = (0.0, 0.0)
    ) -> Node:
        if node_id in self._nodes:
            raise ConstraintError(f"node id {node_id} already present")
        node = Node(node_id, kind, (float(pos[0]), float(pos[1])))
        self._nodes[node_id] = node
        self._out_behaviours[node_id] = set()
        return node

    def add_edge(self, src: int, dst: int, behaviour: int | str) -> Edge | None:
        if isinstance(behaviour, str):
            behaviour = self.behaviour_set.index(behaviour)
        if not 0 <= behaviour < len(self.behaviour_set):
            raise FormatError(f"behaviour index {behaviour} out of range")
        edge = Edge(src, dst, behaviour)
        problems: list[Violation] = []
        if src == dst:
            problems.append(Violation("self-loop", f"edge {edge.key()} is a self-loop", edge=edge))
        if src not in self._nodes or dst not in self._nodes:
            problems.append(
                Violation("dangling-edge", f"edge {edge.key()} references a missing node", edge=edge)
            )
        if edge in self._edges:
            problems.append(Violation("duplicate-edge", f"edge {edge.key()} repeated", edge=edge))
        if src in self._out_behaviours and behaviour in self._out_behaviours[src]:
            name = self.behaviour_set.name(behaviour)
            problems.append(
                Violation(
                    "duplicate-behaviour",
                    f"node {src} already has an outgoing '{name}' edge",
                    node=src,
                )
            )
        if problems:
            if self.strict:
                raise ConstraintError("; ".join(v.message for v in problems))
            self.violations.extend(problems)
            if any(v.kind == "duplicate-edge" for v in problems):
                return None
        self._edges.add(edge)
        self._out_behaviours.setdefault(src, set()).add(behaviour)
        return edge

    def build(self) -> SceneActionMap:
        return SceneActionMap(self.behaviour_set, self._nodes.values(), self._edges)


def crop(sam: SceneActionMap, centre: Edge, hops: int) -> SamCrop:
    """Sub-map induced by all nodes within ``hops`` undirected hops of the
    centre edge's endpoints, plus every edge of ``sam`` between them."""
    if centre not in sam._edge_set():
        raise UnknownEdgeError(f"unknown edge {centre.key()}")
    if hops < 0:
        raise FormatError("hop radius must be >= 0")
    frontier = {centre.src, centre.dst}
    keep = set(frontier)
    undirected: dict[int, set[int]] = {}
    for e in sam.edges:
        undirected.setdefault(e.src, set()).add(e.dst)
        undirected.setdefault(e.dst, set()).add(e.src)
    for _ in range(hops):
        frontier = {v for u in frontier for v in undirected.get(u, ())} - keep
        if not frontier:
            break
        keep |= frontier
    nodes = [n for n in sam.nodes if n.id in keep]
    edges = [e for e in sam.edges if e.src in keep and e.dst in keep]
    return SamCrop(SceneActionMap(sam.behaviour_set, nodes, edges), centre, hops)


# -- serialization --------------------------------------------------------


def to_json(sam: SceneActionMap, indent: int | None = None) -> str:
    doc = {
        "behaviours": list(sam.behaviour_set.names),
        "nodes": [
            {"id": n.id, "kind": n.kind.value, "pos": [n.pos[0], n.pos[1]]} for n in sam.nodes
        ],
        "edges": [
            {"src": e.src, "dst": e.dst, "behaviour": sam.behaviour_set.name(e.behaviour)}
            for e in sam.edges
        ],
    }
    return json.dumps(doc, indent=indent, sort_keys=True)


def from_json(text: str, strict: bool = True) -> SceneActionMap:
    """Parse a map document. Strict mode rejects constraint violations;
    permissive mode loads them as-is (inspect with :func:`validate`)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed JSON: {exc}") from exc
    try:
        behaviours = BehaviourSet(doc["behaviours"])
        nodes = [
            Node(int(n["id"]), NodeKind(n["kind"]), (float(n["pos"][0]), float(n["pos"][1])))
            for n in doc["nodes"]
        ]
        edges = [
            Edge(int(e["src"]), int(e["dst"]), behaviours.index(e["behaviour"]))
            for e in doc["edges"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad map document: {exc}") from exc
    sam = SceneActionMap(behaviours, nodes, edges)
    if strict:
        problems = validate(sam)
        if problems:
            raise ConstraintError(
                "invalid map: " + "; ".join(v.message for v in problems[:5])
            )
    return sam


# -- rendering -------------------------------------------------------------

_NODE_COLOURS = {NodeKind.CHANGEPOINT: "#2ca02c", NodeKind.DESTINATION: "#d62728"}
_EDGE_PALETTE = ("#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def render_svg(sam: SceneActionMap, raster=None, scale: float = 1.0) -> str:
    """SVG overlay: one circle per node (colour by kind), one arrow per edge
    (colour by behaviour), optionally drawn over the raster as a PNG underlay."""
    if raster is not None:
        width, height = raster.width, raster.height
    elif sam.nodes:
        width = int(max(n.pos[0] for n in sam.nodes) + 16)
        height = int(max(n.pos[1] for n in sam.nodes) + 16)
    else:
        width, height = 64, 64
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width * scale:g}" '
        f'height="{height * scale:g}" viewBox="0 0 {width} {height}">'
    ]
    if raster is not None:
        from .raster import raster_png_bytes

        payload = base64.b64encode(raster_png_bytes(raster)).decode("ascii")
        parts.append(
            f'<image href="data:image/png;base64,{payload}" x="0" y="0" '
            f'width="{width}" height="{height}"/>'
        )
    for e in sam.edges:
        a = sam.node(e.src).pos
        b = sam.node(e.dst).pos
        colour = _EDGE_PALETTE[e.behaviour % len(_EDGE_PALETTE)]
        dx, dy = b[0] - a[0], b[1] - a[1]
        norm = math.hypot(dx, dy) or 1.0
        # Shorten so the head does not sit under the node marker.
        hx, hy = b[0] - 3.0 * dx / norm, b[1] - 3.0 * dy / norm
        ux, uy = dx / norm, dy / norm
        left = (hx - 2.4 * ux + 1.4 * uy, hy - 2.4 * uy - 1.4 * ux)
        right = (hx - 2.4 * ux - 1.4 * uy, hy - 2.4 * uy + 1.4 * ux)
        title = sam.behaviour_set.name(e.behaviour)
        parts.append(
            f'<g class="edge" data-behaviour="{title}">'
            f'<line x1="{a[0]:.2f}" y1="{a[1]:.2f}" x2="{hx:.2f}" y2="{hy:.2f}" '
            f'stroke="{colour}" stroke-width="0.8"/>'
            f'<polygon points="{hx:.2f},{hy:.2f} {left[0]:.2f},{left[1]:.2f} '
            f'{right[0]:.2f},{right[1]:.2f}" fill="{colour}"/></g>'
        )
    for n in sam.nodes:
        parts.append(
            f'<circle cx="{n.pos[0]:.2f}" cy="{n.pos[1]:.2f}" r="2.2" '
            f'fill="{_NODE_COLOURS[n.kind]}" stroke="black" stroke-width="0.3"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
