"""Placement and SWAP routing onto constrained qubit topologies.

The router is deliberately simple and deterministic:

1. *Placement*: logical qubits are placed one at a time, each on the free
   physical qubit minimizing the weighted distance to already-placed
   interaction partners.  Several starting points are tried (sampled with
   ``seed`` on large devices) and the cheapest layouts are kept.
2. *Routing*: the circuit is cut into runs of mutually commuting gates.
   Within a run any gate that is executable on the current layout is
   emitted; otherwise the SWAP that most reduces the average distance of the
   pending gates (plus a discounted look-ahead into later runs) is applied.
   Non-commuting gates form runs of one and keep their order.
3. Gates are decomposed into the native basis as they are emitted; each
   SWAP costs three native two-qubit gates.

Each candidate layout is also refined once by routing the reversed circuit
and starting again from where it ends.  The best result (fewest two-qubit
gates, then lowest two-qubit depth) is returned.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .circuit import CircuitIR, Gate, build_fid_circuit, decompose_gate, decompose_to_native
from .errors import ParameterError, ResourceError, ValidationError
from .spin_model import SpinSystem

LOOKAHEAD = 12
START_CANDIDATES = 24
ROUTED_LAYOUTS = 4


@dataclass(frozen=True, eq=False)
class Topology:
    n_qubits: int
    edges: frozenset[tuple[int, int]]
    name: str = "custom"

    def __post_init__(self) -> None:
        norm = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValidationError(f"self-edge on qubit {a}")
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise ValidationError(f"edge ({a},{b}) outside {self.n_qubits} qubits")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))
        adj: dict[int, list[int]] = {q: [] for q in range(self.n_qubits)}
        for a, b in sorted(norm):
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_neighbors", {q: sorted(v) for q, v in adj.items()})
        if self.n_qubits > 1:
            ncomp, _ = connected_components(self._adjacency(), directed=False)
            if ncomp != 1:
                raise ValidationError(f"topology {self.name!r} is not connected")

    def _adjacency(self) -> csr_matrix:
        rows = [a for a, b in self.edges] + [b for a, b in self.edges]
        cols = [b for a, b in self.edges] + [a for a, b in self.edges]
        n = self.n_qubits
        return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_qubits, dtype=int)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def neighbors(self, q: int) -> list[int]:
        return self._neighbors[q]

    def adjacent(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def distances(self) -> np.ndarray:
        d = shortest_path(self._adjacency(), directed=False, unweighted=True)
        return d.astype(int)

    @classmethod
    def from_json(cls, text: str, name: str = "custom") -> Topology:
        doc = json.loads(text)
        try:
            return cls(int(doc["n"]), frozenset(tuple(e) for e in doc["edges"]), doc.get("name", name))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"topology JSON needs 'n' and 'edges': {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> Topology:
        return cls.from_json(Path(path).read_text(), name=Path(path).stem)


def path_topology(n: int) -> Topology:
    return Topology(n, frozenset((i, i + 1) for i in range(n - 1)), f"path-{n}")


def ring_topology(n: int) -> Topology:
    return Topology(n, frozenset((i, (i + 1) % n) for i in range(n)), f"ring-{n}")


def heavy_hex_lattice(rows: int, cols: int) -> Topology:
    """Heavy-hexagon lattice in the layout used by 127-qubit transmon devices.

    ``rows`` chains of ``cols`` qubits are joined by bridge qubits every four
    columns, alternating between columns 0, 4, 8, ... and 2, 6, 10, ...  The
    first chain drops its last column and the last chain drops whichever end
    has no bridge.  Qubits are numbered row by row, each row followed by the
    bridges below it.
    """
    if rows < 2 or cols < 3 or cols % 4 != 3:
        raise ParameterError("heavy-hex lattice needs rows >= 2 and cols = 3 (mod 4)")
    bridge_cols = lambda gap: range(0 if gap % 2 == 0 else 2, cols, 4)  # noqa: E731
    edges: set[tuple[int, int]] = set()
    nxt = 0
    pending: list[tuple[int, int]] = []
    for r in range(rows):
        present = set(range(cols))
        if r == 0:
            present.discard(cols - 1)
        if r == rows - 1:
            used = set(bridge_cols(r - 1))
            present.discard(0 if 0 not in used else cols - 1)
        ids = {}
        for col in sorted(present):
            ids[col] = nxt
            nxt += 1
        cs = sorted(ids)
        edges.update((ids[a], ids[b]) for a, b in zip(cs, cs[1:]))
        for bridge, col in pending:
            edges.add((bridge, ids[col]))
        pending = []
        if r < rows - 1:
            for col in bridge_cols(r):
                edges.add((ids[col], nxt))
                pending.append((nxt, col))
                nxt += 1
    return Topology(nxt, frozenset(edges), f"heavy-hex-{nxt}")


def heavy_hex(num_qubits: int) -> Topology:
    """Heavy-hex device of a supported size (23, 65, 127, 433, 1121, ...).

    Sizes follow the family ``cols = 4k + 3``, ``rows = (cols - 1) / 2``;
    127 reproduces the Eagle coupling map.
    """
    for k in range(1, 40):
        cols = 4 * k + 3
        rows = (cols - 1) // 2
        size = rows * cols - 2 + (rows - 1) * (cols + 1) // 4
        if size == num_qubits:
            return heavy_hex_lattice(rows, cols)
        if size > num_qubits:
            break
    raise ParameterError(f"no heavy-hex device with {num_qubits} qubits")


def resolve_topology(name: str) -> Topology:
    """``heavy-hex-<n>``, ``path-<n>``, ``ring-<n>`` or a JSON file path."""
    for prefix, fn in (("heavy-hex-", heavy_hex), ("path-", path_topology), ("ring-", ring_topology)):
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            return fn(int(name[len(prefix):]))
    p = Path(name)
    if p.exists():
        return Topology.load(p)
    raise ParameterError(f"unknown topology {name!r}")


@dataclass
class TranspileReport:
    twoq_count: int
    twoq_depth: int
    swaps: int
    initial_layout: dict[int, int]
    final_layout: dict[int, int]
    pre_routing_count: int = 0
    topology: str = ""

    @property
    def mapping(self) -> dict[int, int]:
        """Logical -> physical qubit at the end of the circuit."""
        return self.final_layout


# ------------------------------------------------------------------ placement


def interaction_weights(c: CircuitIR) -> dict[tuple[int, int], int]:
    w: dict[tuple[int, int], int] = {}
    for g in c.gates:
        if g.is_two_qubit:
            key = (min(g.qubits), max(g.qubits))
            w[key] = w.get(key, 0) + 1
    return w


def _greedy_layout(n: int, w: dict, dist: np.ndarray, start_logical: int, start_phys: int) -> list[int]:
    nbrs: dict[int, dict[int, int]] = {q: {} for q in range(n)}
    for (a, b), x in w.items():
        nbrs[a][b] = x
        nbrs[b][a] = x
    layout = [-1] * n
    layout[start_logical] = start_phys
    free = np.ones(dist.shape[0], dtype=bool)
    free[start_phys] = False
    placed = {start_logical}
    degree = (dist == 1).sum(axis=1)
    while len(placed) < n:
        # next: unplaced qubit most strongly tied to the placed set, then heaviest overall
        def tie(q):
            return (sum(x for p, x in nbrs[q].items() if p in placed), sum(nbrs[q].values()), -q)

        q = max((q for q in range(n) if q not in placed), key=tie)
        cost = np.zeros(dist.shape[0])
        for p, x in nbrs[q].items():
            if p in placed:
                cost += x * dist[:, layout[p]]
        if not any(p in placed for p in nbrs[q]):
            # disconnected component: start next to the occupied region
            occ = [layout[p] for p in placed]
            cost += dist[:, occ].min(axis=1) * 1e-3
        cost = np.where(free, cost, np.inf)
        # prefer well-connected sites on ties
        cost = cost - 1e-4 * degree
        best = int(np.argmin(cost))
        layout[q] = best
        free[best] = False
        placed.add(q)
    return layout


def _layout_cost(layout: list[int], w: dict, dist: np.ndarray) -> int:
    return int(sum(x * (dist[layout[a], layout[b]] - 1) for (a, b), x in w.items()))


def candidate_layouts(c: CircuitIR, topo: Topology, dist: np.ndarray, seed: int, keep: int) -> list[list[int]]:
    n = c.n_qubits
    w = interaction_weights(c)
    rng = np.random.default_rng(seed)
    phys = np.arange(topo.n_qubits)
    if topo.n_qubits > START_CANDIDATES:
        # sample among the most central qubits so the region has room to grow
        central = np.argsort(dist.sum(axis=1), kind="stable")[: max(START_CANDIDATES * 2, n)]
        phys = np.sort(rng.choice(central, size=START_CANDIDATES, replace=False))
    seen: dict[tuple[int, ...], int] = {}
    for ql in range(n):
        for p in phys:
            lay = tuple(_greedy_layout(n, w, dist, ql, int(p)))
            if lay not in seen:
                seen[lay] = _layout_cost(list(lay), w, dist)
    ranked = sorted(seen.items(), key=lambda kv: kv[1])
    return [list(lay) for lay, _ in ranked[:keep]]


# -------------------------------------------------------------------- routing


def _infer_basis(c: CircuitIR) -> str:
    return "ecr" if any(g.kind == "ECR" for g in c.gates) else "cx"


# Gates sharing a class commute pairwise: all diagonal rotations commute, and
# so do rotations generated by X (or Y) on any set of qubits.
_COMMUTING_CLASS = {"RZ": "Z", "RZZ": "Z", "RX": "X", "RXX": "X", "RY": "Y", "RYY": "Y"}


def commuting_segments(gates) -> list[list[Gate]]:
    """Split a gate list into maximal runs of mutually commuting gates.

    Gates outside the rotation classes (CX, ECR, H, SX, MEASURE, ...) form
    singleton runs, so their order is preserved exactly.
    """
    segments: list[list[Gate]] = []
    current: str | None = None
    for g in gates:
        cls = _COMMUTING_CLASS.get(g.kind)
        if cls is not None and cls == current:
            segments[-1].append(g)
        else:
            segments.append([g])
        current = cls
    return segments


class _Router:
    """Greedy SWAP insertion over commuting segments for one initial layout."""

    def __init__(self, c: CircuitIR, topo: Topology, dist: np.ndarray, layout: list[int], basis: str):
        self.c, self.topo, self.dist, self.basis = c, topo, dist, basis
        self.l2p = list(layout)
        # full permutation over physical wires so routed unitaries stay comparable
        self.p2l = [-1] * topo.n_qubits
        for lq, pq in enumerate(self.l2p):
            self.p2l[pq] = lq
        self.out: list[Gate] = []
        self.swaps = 0

    def emit(self, g: Gate) -> None:
        phys = tuple(self.l2p[q] for q in g.qubits)
        self.out.extend(decompose_gate(Gate(g.kind, phys, g.angle), self.basis))

    def swap(self, p: int, q: int) -> None:
        self.swaps += 1
        self.out.extend(decompose_gate(Gate("SWAP", (p, q)), self.basis))
        lp, lq = self.p2l[p], self.p2l[q]
        self.p2l[p], self.p2l[q] = lq, lp
        if lp >= 0:
            self.l2p[lp] = q
        if lq >= 0:
            self.l2p[lq] = p

    def gap(self, g: Gate, l2p=None) -> int:
        l2p = l2p or self.l2p
        a, b = g.qubits
        return int(self.dist[l2p[a], l2p[b]])

    def score(self, pending: list[Gate], future: list[Gate], l2p: list[int]) -> float:
        front = sum(self.gap(g, l2p) for g in pending)
        ahead = sum((0.8**r) * self.gap(g, l2p) for r, g in enumerate(future)) / max(1, len(future))
        return front + 0.5 * ahead

    def candidate_swaps(self, pending: list[Gate]):
        seen = set()
        for g in pending:
            for q in g.qubits:
                p = self.l2p[q]
                for nb in self.topo.neighbors(p):
                    key = (min(p, nb), max(p, nb))
                    if key not in seen:
                        seen.add(key)
                        yield key

    def trial(self, p: int, q: int) -> list[int]:
        t = list(self.l2p)
        lp, lq = self.p2l[p], self.p2l[q]
        if lp >= 0:
            t[lp] = q
        if lq >= 0:
            t[lq] = p
        return t

    def route_segment(self, segment: list[Gate], future: list[Gate]) -> None:
        pending = list(segment)
        stalled = 0
        limit = 2 * int(self.dist.max()) + 2
        while pending:
            still = []
            for g in pending:
                if not g.is_two_qubit or self.gap(g) == 1:
                    self.emit(g)
                    stalled = 0
                else:
                    still.append(g)
            pending = still
            if not pending:
                return
            if stalled >= limit:
                # guaranteed progress: walk the first gate together along a shortest path
                g = pending[0]
                a, b = (self.l2p[q] for q in g.qubits)
                nb = min(self.topo.neighbors(a), key=lambda x: (self.dist[x, b], x))
                self.swap(a, nb)
                continue
            options = [(self.score(pending, future, self.trial(p, q)), p, q) for p, q in self.candidate_swaps(pending)]
            _, p, q = min(options)
            self.swap(p, q)
            stalled += 1

    def run(self) -> CircuitIR:
        segments = commuting_segments(self.c.gates)
        twoq_after = []
        tail: list[Gate] = []
        for seg in reversed(segments):
            twoq_after.append(tail[:LOOKAHEAD])
            tail = [g for g in seg if g.is_two_qubit][:LOOKAHEAD] + tail
            tail = tail[:LOOKAHEAD]
        twoq_after.reverse()
        for seg, future in zip(segments, twoq_after):
            self.route_segment(seg, future)
        return CircuitIR(self.topo.n_qubits, self.out, dict(self.c.metadata, topology=self.topo.name, basis=self.basis))


def route(
    c: CircuitIR,
    topo: Topology,
    seed: int = 0,
    basis: str | None = None,
    layouts: int = ROUTED_LAYOUTS,
) -> tuple[CircuitIR, TranspileReport]:
    """Place and route ``c`` onto ``topo``, emitting native gates.

    ``c`` may contain two-qubit Pauli rotations (RXX/RYY/RZZ) or be already
    decomposed.  Runs of mutually commuting gates (one product-formula group,
    for instance) may be reordered so that whichever gate is executable on
    the current layout goes first; other gates keep their order.  Every gate
    is decomposed into ``basis`` (inferred from the circuit when omitted) as
    it is placed.  The report's ``final_layout`` maps each logical qubit to
    the physical qubit holding it after all SWAPs.
    """
    if c.n_qubits > topo.n_qubits:
        raise ResourceError(f"circuit needs {c.n_qubits} qubits, topology {topo.name} has {topo.n_qubits}")
    basis = basis or _infer_basis(c)
    if basis == "cx" and any(g.kind == "ECR" for g in c.gates):
        raise ValidationError("circuit contains ECR gates and cannot be routed into the cx basis")
    pre = decompose_to_native(c, basis).two_qubit_count
    dist = topo.distances()
    reverse = CircuitIR(c.n_qubits, c.gates[::-1])
    best = None
    for start in candidate_layouts(c, topo, dist, seed, layouts):
        # forward-backward refinement: the layout left behind by routing the
        # reversed circuit is a good starting point for the forward pass
        forward = _Router(c, topo, dist, start, basis)
        forward.run()
        backward = _Router(reverse, topo, dist, forward.l2p, basis)
        backward.run()
        for layout in (start, backward.l2p):
            router = _Router(c, topo, dist, layout, basis)
            routed = router.run()
            key = (routed.two_qubit_count, routed.two_qubit_depth)
            if best is None or key < best[0]:
                best = (key, routed, router.swaps, list(layout), router.l2p)
    _, routed, swaps, layout, final = best
    report = TranspileReport(
        twoq_count=routed.two_qubit_count,
        twoq_depth=routed.two_qubit_depth,
        swaps=swaps,
        initial_layout={q: p for q, p in enumerate(layout)},
        final_layout={q: p for q, p in enumerate(final)},
        pre_routing_count=pre,
        topology=topo.name,
    )
    return routed, report


def transpile_system(
    sys: SpinSystem, topo: Topology, reps: int = 1, basis: str = "ecr", seed: int = 0, formula: str = "lie"
) -> tuple[CircuitIR, TranspileReport]:
    """FID circuit for ``sys`` at a representative time, routed and decomposed."""
    logical = build_fid_circuit(sys, 1e-3, reps, formula)
    return route(logical, topo, seed=seed, basis=basis)


# -------------------------------------------------------------- scaling study


@dataclass
class ScalingRow:
    name: str
    n_spins: int
    couplings: int
    pre_routing_count: int
    pre_routing_depth: int
    twoq_count: int
    twoq_depth: int
    swaps: int


@dataclass
class QuadraticFit:
    coeffs: tuple[float, float, float]  # a, b, c of a N^2 + b N + c
    relative_residual: float

    def __call__(self, n):
        a, b, c = self.coeffs
        return a * np.asarray(n) ** 2 + b * np.asarray(n) + c


def quadratic_fit(ns, ys) -> QuadraticFit:
    """Least-squares quadratic; residual reported as ``||y - fit|| / ||y||``."""
    ns = np.asarray(ns, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.unique(ns).size < 3:
        raise ValidationError("quadratic fit needs at least three distinct spin counts")
    coeffs = np.polyfit(ns, ys, 2)
    resid = ys - np.polyval(coeffs, ns)
    denom = np.linalg.norm(ys)
    rel = float(np.linalg.norm(resid) / denom) if denom else 0.0
    return QuadraticFit(tuple(float(x) for x in coeffs), rel)


@dataclass
class ScalingStudy:
    rows: list[ScalingRow]
    count_fit: QuadraticFit | None
    depth_fit: QuadraticFit | None
    pre_routing_fit: QuadraticFit | None = None

    def to_csv(self) -> str:
        lines = ["name,n_spins,twoq_count,twoq_depth,swaps"]
        lines += [f"{r.name},{r.n_spins},{r.twoq_count},{r.twoq_depth},{r.swaps}" for r in self.rows]
        return "\n".join(lines) + "\n"


def _study_one(sys: SpinSystem, topo: Topology, reps: int, basis: str, seed: int) -> ScalingRow:
    logical = build_fid_circuit(sys, 1e-3, reps)
    native = decompose_to_native(logical, basis)
    _, rep = route(logical, topo, seed=seed, basis=basis)
    return ScalingRow(
        name=sys.name,
        n_spins=sys.n_spins,
        couplings=len(sys.couplings()),
        pre_routing_count=native.two_qubit_count,
        pre_routing_depth=native.two_qubit_depth,
        twoq_count=rep.twoq_count,
        twoq_depth=rep.twoq_depth,
        swaps=rep.swaps,
    )


def scaling_study(
    dataset: list[SpinSystem],
    topo: Topology,
    reps: int = 1,
    basis: str = "ecr",
    seed: int = 0,
    workers: int = 1,
) -> ScalingStudy:
    """Gate metrics per molecule plus quadratic fits over the spin count."""
    if not dataset:
        raise ValidationError("scaling study needs at least one spin system")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(lambda s: _study_one(s, topo, reps, basis, seed), dataset))
    ns = [r.n_spins for r in rows]
    fits = [None, None, None]
    if len(set(ns)) >= 3:
        fits = [
            quadratic_fit(ns, [r.twoq_count for r in rows]),
            quadratic_fit(ns, [r.twoq_depth for r in rows]),
            quadratic_fit(ns, [r.pre_routing_count for r in rows]),
        ]
    return ScalingStudy(rows, *fits)
