"""Ribbon diagrams, their matrix-chain evaluations, and scaling limits.

A diagram here is a finite graph with marked and boundary flags on vertices,
boundary flags on edges, and an explicit face list.  Each face records its
marked vertex and the multiset of edges traversed by the face boundary walk
(multiplicity 1 or 2).  Faces carry the order budgets: evaluating a diagram
against a transition kernel sums, over all vertex labelings and all positive
edge weights, the products of multi-step kernel entries, subject to one
budget-and-parity constraint per face.

Scaling limits replace the lattice sums by volumes and integrals: a lattice
constant (count-to-volume ratio), a constraint-polytope volume, and Monte
Carlo integrals over stable densities or their periodized counterparts.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import NamedTuple, Sequence

import numpy as np

from ._util import FeasibilityError, ValidationError, rng_for
from .kernels import TorusChain, n_step_fft
from .special import default_scale, stable_density, theta_alpha

__all__ = [
    "Vertex",
    "Edge",
    "Face",
    "Diagram",
    "DiagramReport",
    "SpikeOperator",
    "catalog_names",
    "load_diagram",
    "validate_diagram",
    "diagram_function",
    "diagram_upper_bound",
    "VolumeResult",
    "constraint_volume",
    "LatticeConstant",
    "lattice_constant_C",
    "LimitEstimate",
    "limiting_diagram_function",
]

DEFAULT_EVAL_CAP = 1e9
DEFAULT_COUNT_CAP = 2e6

_CATALOG = ("single_vertex", "self_loop", "theta_graph", "dumbbell", "two_face_bridge")


class Vertex(NamedTuple):
    id: str
    marked: bool = False
    boundary: bool = False


class Edge(NamedTuple):
    id: str
    u: str
    v: str
    boundary: bool = False


class Face(NamedTuple):
    marked_vertex: str
    # ((edge_id, multiplicity), ...) with multiplicity 1 or 2; absent edges
    # have multiplicity 0 and are simply not listed.
    edges: tuple


@dataclass(frozen=True)
class Diagram:
    """Immutable diagram with explicit combinatorial data.

    Vertex and edge ids are strings; faces reference edges by id.  No
    topological structure is inferred: the face list is taken as given and
    only the doubling identity (each edge appears with total multiplicity 2
    across faces) is checked by :func:`validate_diagram`.
    """

    vertices: tuple
    edges: tuple
    faces: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(Vertex(*v) for v in self.vertices))
        object.__setattr__(self, "edges", tuple(Edge(*e) for e in self.edges))
        faces = []
        for f in self.faces:
            mv, fe = f
            faces.append(Face(str(mv), tuple((str(i), int(m)) for i, m in fe)))
        object.__setattr__(self, "faces", tuple(faces))
        ids = [v.id for v in self.vertices]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate vertex ids")
        eids = [e.id for e in self.edges]
        if len(set(eids)) != len(eids):
            raise ValidationError("duplicate edge ids")
        vset = set(ids)
        for e in self.edges:
            if e.u not in vset or e.v not in vset:
                raise ValidationError(f"edge {e.id} references unknown vertex")
        eset = set(eids)
        for j, f in enumerate(self.faces):
            for eid, mult in f.edges:
                if eid not in eset:
                    raise ValidationError(f"face {j} references unknown edge {eid}")
                if mult not in (1, 2):
                    raise ValidationError(f"face {j} edge {eid} has multiplicity {mult}")

    @property
    def s(self) -> int:
        return len(self.faces)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def vertex(self, vid: str) -> Vertex:
        for v in self.vertices:
            if v.id == vid:
                return v
        raise KeyError(vid)

    def edge(self, eid: str) -> Edge:
        for e in self.edges:
            if e.id == eid:
                return e
        raise KeyError(eid)

    def degree(self, vid: str) -> int:
        # a self-loop contributes 2, as usual
        d = 0
        for e in self.edges:
            d += (e.u == vid) + (e.v == vid)
        return d

    def face_multiplicity(self, face_index: int, eid: str) -> int:
        for i, m in self.faces[face_index].edges:
            if i == eid:
                return m
        return 0

    def boundary_edges(self) -> tuple:
        return tuple(e for e in self.edges if e.boundary)

    def boundary_vertices(self) -> tuple:
        return tuple(v for v in self.vertices if v.boundary)

    def interior_edges(self) -> tuple:
        return tuple(e for e in self.edges if not e.boundary)

    def is_connected(self) -> bool:
        if not self.vertices:
            return False
        parent = {v.id: v.id for v in self.vertices}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for e in self.edges:
            ra, rb = find(e.u), find(e.v)
            if ra != rb:
                parent[ra] = rb
        roots = {find(v.id) for v in self.vertices}
        return len(roots) == 1

    def to_jsonable(self) -> dict:
        return {
            "vertices": [
                {"id": v.id, "marked": v.marked, "boundary": v.boundary}
                for v in self.vertices
            ],
            "edges": [
                {"id": e.id, "u": e.u, "v": e.v, "boundary": e.boundary}
                for e in self.edges
            ],
            "faces": [
                {
                    "marked_vertex": f.marked_vertex,
                    "edges": [{"id": i, "multiplicity": m} for i, m in f.edges],
                }
                for f in self.faces
            ],
        }

    @classmethod
    def from_jsonable(cls, obj: dict) -> "Diagram":
        if set(obj) != {"vertices", "edges", "faces"}:
            raise ValidationError("diagram object must have vertices/edges/faces")
        verts = tuple(
            Vertex(str(v["id"]), bool(v.get("marked", False)), bool(v.get("boundary", False)))
            for v in obj["vertices"]
        )
        edges = tuple(
            Edge(str(e["id"]), str(e["u"]), str(e["v"]), bool(e.get("boundary", False)))
            for e in obj["edges"]
        )
        faces = tuple(
            Face(
                str(f["marked_vertex"]),
                tuple((str(fe["id"]), int(fe["multiplicity"])) for fe in f["edges"]),
            )
            for f in obj["faces"]
        )
        return cls(verts, edges, faces)

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Diagram":
        return cls.from_jsonable(json.loads(text))


def catalog_names() -> tuple:
    return _CATALOG


def load_diagram(name_or_path: str) -> Diagram:
    """Load a diagram from the built-in catalog or from a JSON file path."""
    if name_or_path in _CATALOG:
        ref = resources.files("markovband").joinpath(f"data/diagrams/{name_or_path}.json")
        return Diagram.from_json(ref.read_text())
    with open(name_or_path, "r", encoding="utf-8") as fh:
        return Diagram.from_json(fh.read())


# ---------------------------------------------------------------------------
# validation and classification


@dataclass(frozen=True)
class DiagramReport:
    valid: bool
    violations: tuple
    typical: bool
    ell: int
    s: int
    connected: bool
    has_boundary: bool


def validate_diagram(diagram: Diagram) -> DiagramReport:
    """Check structural invariants and classify the diagram.

    Validity requires: every edge is covered exactly twice by the face
    boundaries (counting multiplicity), marked vertices have degree >= 2 and
    unmarked ones degree >= 3, each face's marked vertex is marked and lies
    on the face, and boundary edge/vertex counts agree.  The one-vertex
    zero-edge diagram is the degenerate member of the family and is valid by
    fiat.  Typicality additionally pins the degrees to exactly 2 (marked)
    and 3 (unmarked), requires connectivity, requires the marked vertices to
    be in bijection with the faces, and fixes the edge/vertex counts to
    3*ell + s and 2*ell + s with ell = n_edges - n_vertices.
    """
    violations = []
    s = diagram.s
    nv, ne = diagram.n_vertices, diagram.n_edges
    ell = ne - nv
    marked = [v for v in diagram.vertices if v.marked]
    connected = diagram.is_connected()
    has_boundary = bool(diagram.boundary_edges()) or bool(diagram.boundary_vertices())

    degenerate = nv == 1 and ne == 0 and s == 1 and len(marked) == 1

    if s == 0:
        violations.append("diagram has no faces")
    if not marked:
        violations.append("diagram has no marked vertex")

    # face-cover identity: every edge appears with total multiplicity 2
    for e in diagram.edges:
        tot = sum(diagram.face_multiplicity(j, e.id) for j in range(s))
        if tot != 2:
            violations.append(f"edge {e.id} covered {tot} times by faces, expected 2")

    for j, f in enumerate(diagram.faces):
        try:
            mv = diagram.vertex(f.marked_vertex)
        except KeyError:
            violations.append(f"face {j} marked vertex {f.marked_vertex} does not exist")
            continue
        if not mv.marked:
            violations.append(f"face {j} marked vertex {f.marked_vertex} is not marked")
        if f.edges:
            incident = False
            for eid, _ in f.edges:
                e = diagram.edge(eid)
                if f.marked_vertex in (e.u, e.v):
                    incident = True
                    break
            if not incident:
                violations.append(
                    f"face {j} marked vertex {f.marked_vertex} not on the face boundary"
                )

    if not degenerate:
        for v in diagram.vertices:
            d = diagram.degree(v.id)
            if v.marked and d < 2:
                violations.append(f"marked vertex {v.id} has degree {d} < 2")
            if not v.marked and d < 3:
                violations.append(f"unmarked vertex {v.id} has degree {d} < 3")

    n_be = len(diagram.boundary_edges())
    n_bv = len(diagram.boundary_vertices())
    if n_be != n_bv:
        violations.append(f"{n_be} boundary edges vs {n_bv} boundary vertices")
    for e in diagram.boundary_edges():
        for end in (e.u, e.v):
            if not diagram.vertex(end).boundary:
                violations.append(f"boundary edge {e.id} has non-boundary endpoint {end}")
    for v in diagram.boundary_vertices():
        if not any(v.id in (e.u, e.v) for e in diagram.boundary_edges()):
            violations.append(f"boundary vertex {v.id} touches no boundary edge")

    valid = not violations

    typical = valid and connected
    if typical and not degenerate:
        deg2_marked = [v for v in marked if diagram.degree(v.id) == 2]
        if len(marked) != s or len(deg2_marked) != len(marked):
            typical = False
        for v in diagram.vertices:
            if not v.marked and diagram.degree(v.id) != 3:
                typical = False
        face_marks = {f.marked_vertex for f in diagram.faces}
        if len(face_marks) != s:
            typical = False
        if ne != 3 * ell + s or nv != 2 * ell + s:
            typical = False

    return DiagramReport(
        valid=valid,
        violations=tuple(violations),
        typical=typical,
        ell=ell,
        s=s,
        connected=connected,
        has_boundary=has_boundary,
    )


# ---------------------------------------------------------------------------
# spike operators


@dataclass(frozen=True)
class SpikeOperator:
    """Finite-rank symmetric perturbation with known eigensystem.

    `vectors` holds the orthonormal eigenvectors as columns of an r-by-r
    array; the operator acts on the r coordinates listed in `positions`
    (finite form) or at the rescaled locations `z` on the unit torus (limit
    form).  One of `eigenvalues` (finite form) and `tau` (eigenvalue drift
    rates of the critical directions, limit form) must be present.
    """

    vectors: np.ndarray
    eigenvalues: tuple = None
    tau: tuple = None
    positions: tuple = None
    z: tuple = None

    def __post_init__(self):
        vec = np.array(self.vectors, dtype=float)
        if vec.ndim != 2 or vec.shape[0] != vec.shape[1]:
            raise ValidationError("spike eigenvector table must be square")
        r = vec.shape[0]
        gram = vec.T @ vec
        if np.max(np.abs(gram - np.eye(r))) > 1e-12:
            raise ValidationError("spike eigenvectors not orthonormal within 1e-12")
        vec.flags.writeable = False
        object.__setattr__(self, "vectors", vec)
        if self.eigenvalues is None and self.tau is None:
            raise ValidationError("spike needs eigenvalues or tau")
        if self.eigenvalues is not None:
            a = tuple(float(x) for x in self.eigenvalues)
            if len(a) != r:
                raise ValidationError("eigenvalue count does not match rank")
            object.__setattr__(self, "eigenvalues", a)
        if self.tau is not None:
            t = tuple(float(x) for x in self.tau)
            if len(t) > r:
                raise ValidationError("more drift rates than rank")
            object.__setattr__(self, "tau", t)
        if self.positions is not None:
            p = tuple(int(x) for x in self.positions)
            if len(p) != r or len(set(p)) != r:
                raise ValidationError("positions must be r distinct indices")
            object.__setattr__(self, "positions", p)
        if self.z is not None:
            zz = tuple(float(x) % 1.0 for x in self.z)
            if len(zz) != r:
                raise ValidationError("z count does not match rank")
            object.__setattr__(self, "z", zz)

    @property
    def rank(self) -> int:
        return self.vectors.shape[0]

    def operator_norm(self) -> float:
        if self.eigenvalues is None:
            raise ValidationError("operator norm needs finite-form eigenvalues")
        return float(np.max(np.abs(self.eigenvalues)))

    def power_block(self, w: int) -> np.ndarray:
        """The r-by-r matrix of A^w restricted to the support coordinates."""
        if self.eigenvalues is None:
            raise ValidationError("matrix powers need finite-form eigenvalues")
        a = np.array(self.eigenvalues, dtype=float)
        return (self.vectors * a**w) @ self.vectors.T

    def full_power(self, n_states: int, w: int) -> np.ndarray:
        if self.positions is None:
            raise ValidationError("embedding needs support positions")
        if any(p < 0 or p >= n_states for p in self.positions):
            raise ValidationError("support position out of range")
        out = np.zeros((n_states, n_states))
        idx = np.array(self.positions)
        out[np.ix_(idx, idx)] = self.power_block(w)
        return out

    def exponential_block(self, t: float) -> np.ndarray:
        """Sum of exp(tau_i * t) v_i v_i^T over the critical directions."""
        if self.tau is None:
            raise ValidationError("exponential form needs drift rates tau")
        q = len(self.tau)
        v = self.vectors[:, :q]
        return (v * np.exp(np.array(self.tau) * t)) @ v.T

    def to_jsonable(self) -> dict:
        out = {"vectors": [[float(x) for x in row] for row in self.vectors]}
        for key in ("eigenvalues", "tau", "positions", "z"):
            val = getattr(self, key)
            if val is not None:
                out[key] = list(val)
        return out

    @classmethod
    def from_jsonable(cls, obj: dict) -> "SpikeOperator":
        extra = set(obj) - {"vectors", "eigenvalues", "tau", "positions", "z"}
        if extra:
            raise ValidationError(f"unknown spike keys {sorted(extra)}")
        if "vectors" not in obj:
            raise ValidationError("spike needs a vectors table")
        return cls(
            vectors=np.array(obj["vectors"], dtype=float),
            eigenvalues=obj.get("eigenvalues"),
            tau=obj.get("tau"),
            positions=obj.get("positions"),
            z=obj.get("z"),
        )


# ---------------------------------------------------------------------------
# finite evaluation


def _face_constraint_rows(diagram: Diagram) -> np.ndarray:
    """Multiplicity matrix c[j, k] over faces j and edges k in list order."""
    c = np.zeros((diagram.s, diagram.n_edges), dtype=int)
    for j in range(diagram.s):
        for k, e in enumerate(diagram.edges):
            c[j, k] = diagram.face_multiplicity(j, e.id)
    return c


def _kernel_power_table(chain: TorusChain, w: int, cache: dict) -> np.ndarray:
    if w in cache:
        return cache[w]
    N = chain.n_states
    if chain.structure == "translation_invariant":
        row = n_step_fft(chain, w)
        idx = (np.arange(N)[None, :] - np.arange(N)[:, None]) % N
        mat = row[idx]
    elif chain.structure == "block":
        # cell-major state order: the matrix is block-circulant, not
        # circulant in the flat index
        M = chain.block_size
        cell_row = n_step_fft(chain.reduced, w)
        C = chain.reduced.n_states
        idx = (np.arange(C)[None, :] - np.arange(C)[:, None]) % C
        mat = np.kron(cell_row[idx], np.full((M, M), 1.0 / M))
    else:
        mat = np.linalg.matrix_power(np.asarray(chain.matrix()), w)
    cache[w] = mat
    return mat


def _admissible_weights(c: np.ndarray, orders: Sequence[int]):
    """Yield all positive integer weight vectors meeting every face budget.

    For each face j the weights satisfy sum_e c[j,e]*w_e <= orders[j] with
    the same parity as orders[j]; the slack is twice the nonnegative tree
    count t_j.  Depth-first with budget reservation pruning.
    """
    s, m = c.shape
    orders = np.asarray(orders, dtype=int)
    if m == 0:
        if np.all(orders % 2 == 0):
            yield ()
        return

    w = np.zeros(m, dtype=int)
    rem = orders.copy()

    def rec(k):
        if k == m:
            if np.all(rem % 2 == 0):
                yield tuple(w)
            return
        col = c[:, k]
        hi = None
        for j in range(s):
            if col[j] > 0:
                # every later edge needs weight >= 1, so reserve its full
                # multiplicity in this face
                reserve = int(np.sum(c[j, k + 1 :]))
                cap = (rem[j] - reserve) // col[j]
                hi = cap if hi is None else min(hi, cap)
        if hi is None:
            return
        for val in range(1, hi + 1):
            w[k] = val
            rem[:] -= col * val
            yield from rec(k + 1)
            rem[:] += col * val
        w[k] = 0

    yield from rec(0)


def diagram_function(
    diagram: Diagram,
    chain: TorusChain,
    orders: Sequence[int],
    spike: SpikeOperator = None,
    cap: float = DEFAULT_EVAL_CAP,
) -> float:
    """Exact lattice evaluation of a diagram against a transition kernel.

    Sums over all vertex labelings and admissible edge weights the product
    of w_e-step kernel entries (interior edges) and w_e-th spike-matrix
    powers (boundary edges), with one budget per face: twice the unseen
    tree weight plus the face's weighted edge total equals the face order.
    Labelings are contracted with einsum rather than enumerated; vertices
    touching no edge contribute a free factor of the state count.
    """
    report = validate_diagram(diagram)
    if not report.valid:
        raise ValidationError("invalid diagram: " + "; ".join(report.violations[:3]))
    if len(orders) != diagram.s:
        raise ValidationError(f"expected {diagram.s} face orders, got {len(orders)}")
    orders = [int(n) for n in orders]
    if any(n < 0 for n in orders):
        raise ValidationError("face orders must be nonnegative")
    if diagram.boundary_edges():
        if spike is None:
            raise ValidationError("diagram has boundary edges but no spike operator")
        if spike.eigenvalues is None or spike.positions is None:
            raise ValidationError("finite evaluation needs spike eigenvalues and positions")

    N = chain.n_states
    cost = float(N) ** diagram.n_vertices * float(np.prod([max(n, 1) for n in orders]))
    if cost > cap:
        raise FeasibilityError(
            f"diagram evaluation cost {cost:.3g} exceeds cap {cap:.3g}", cost=cost
        )

    c = _face_constraint_rows(diagram)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if diagram.n_vertices > len(letters):
        raise FeasibilityError("too many vertices to contract", cost=cost)
    letter = {v.id: letters[i] for i, v in enumerate(diagram.vertices)}
    touched = set()
    for e in diagram.edges:
        touched.add(e.u)
        touched.add(e.v)
    free_factor = float(N) ** sum(1 for v in diagram.vertices if v.id not in touched)

    kern_cache: dict = {}
    spike_cache: dict = {}
    total = 0.0
    for wvec in _admissible_weights(c, orders):
        operands = []
        subs = []
        for k, e in enumerate(diagram.edges):
            if e.boundary:
                if wvec[k] not in spike_cache:
                    spike_cache[wvec[k]] = spike.full_power(N, wvec[k])
                operands.append(spike_cache[wvec[k]])
            else:
                operands.append(_kernel_power_table(chain, wvec[k], kern_cache))
            subs.append(letter[e.u] + letter[e.v])
        if operands:
            term = float(np.einsum(",".join(subs) + "->", *operands, optimize=True))
        else:
            term = 1.0
        total += term * free_factor
    return total


def diagram_upper_bound(
    diagram: Diagram,
    n: int,
    b_n: float,
    n_states: int,
    spike_norm: float = None,
    spike_rank: int = None,
) -> float:
    """A priori bound on the lattice evaluation at total order n.

    Closed diagrams (no boundary) obey
        N * b_n^(|E|-|V|+1) * n^(|V|-1) / (|V|-1)!
    and diagrams with boundary edges
        (1 + a^n) * r^(|Vb|) * b_n^(|Ei|-|Vi|) * n^(|V|) / |V|!
    with a the spike operator norm and r its rank.
    """
    if n < 0:
        raise ValidationError("order must be nonnegative")
    nv, ne = diagram.n_vertices, diagram.n_edges
    n_be = len(diagram.boundary_edges())
    if n_be == 0:
        return (
            float(n_states)
            * b_n ** (ne - nv + 1)
            * float(max(n, 1)) ** (nv - 1)
            / math.factorial(nv - 1)
        )
    if spike_norm is None or spike_rank is None:
        raise ValidationError("boundary bound needs spike_norm and spike_rank")
    n_bv = len(diagram.boundary_vertices())
    ni_e = ne - n_be
    ni_v = nv - n_bv
    return (
        (1.0 + spike_norm**n)
        * float(spike_rank) ** n_bv
        * b_n ** (ni_e - ni_v)
        * float(max(n, 1)) ** nv
        / math.factorial(nv)
    )


# ---------------------------------------------------------------------------
# constraint polytope


class VolumeResult(NamedTuple):
    value: float
    stderr: float
    method: str


def _volume_box(c: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Per-edge upper bounds implied by the single-face constraints."""
    m = c.shape[1]
    B = np.empty(m)
    for k in range(m):
        col = c[:, k]
        active = col > 0
        if not np.any(active):
            raise ValidationError("edge appears in no face constraint")
        B[k] = np.min(ts[active] / col[active])
    return B


def constraint_volume(
    diagram: Diagram,
    ts: Sequence[float],
    mc_samples: int = 200_000,
    seed: int = 0,
    force_mc: bool = False,
) -> VolumeResult:
    """Volume of {alpha_e >= 0 : sum_e c_j(e) alpha_e <= t_j for all j}.

    Exact for up to four edges via vertex enumeration and a convex hull;
    Monte Carlo rejection from the bounding box otherwise, with the
    standard error reported.
    """
    if len(ts) != diagram.s:
        raise ValidationError(f"expected {diagram.s} budgets, got {len(ts)}")
    ts = np.array([float(t) for t in ts])
    if np.any(ts < 0):
        raise ValidationError("budgets must be nonnegative")
    c = _face_constraint_rows(diagram).astype(float)
    m = diagram.n_edges
    if m == 0:
        return VolumeResult(1.0, 0.0, "exact")
    for j in range(diagram.s):
        # a zero budget pins every edge of that face to zero
        if ts[j] == 0 and np.any(c[j] > 0):
            return VolumeResult(0.0, 0.0, "exact")
    B = _volume_box(c, ts)
    if m == 1:
        return VolumeResult(float(B[0]), 0.0, "exact")

    if m <= 4 and not force_mc:
        A = np.vstack([c, -np.eye(m)])
        b = np.concatenate([ts, np.zeros(m)])
        verts = []
        for rows in itertools.combinations(range(A.shape[0]), m):
            sub = A[list(rows)]
            if abs(np.linalg.det(sub)) < 1e-12:
                continue
            x = np.linalg.solve(sub, b[list(rows)])
            if np.all(A @ x <= b + 1e-9):
                verts.append(x)
        pts = np.unique(np.round(np.array(verts), 12), axis=0) if verts else np.empty((0, m))
        if len(pts) < m + 1:
            return VolumeResult(0.0, 0.0, "exact")
        from scipy.spatial import ConvexHull, QhullError

        try:
            hull = ConvexHull(pts)
        except QhullError:
            try:
                hull = ConvexHull(pts, qhull_options="QJ")
            except QhullError:
                return VolumeResult(0.0, 0.0, "exact")
        return VolumeResult(float(hull.volume), 0.0, "exact")

    rng = rng_for(seed, "volume")
    box_vol = float(np.prod(B))
    if box_vol == 0.0:
        return VolumeResult(0.0, 0.0, "mc")
    xs = rng.uniform(0.0, 1.0, size=(int(mc_samples), m)) * B[None, :]
    ok = np.all(xs @ c.T <= ts[None, :], axis=1)
    p = float(np.mean(ok))
    stderr = box_vol * math.sqrt(max(p * (1.0 - p), 0.0) / int(mc_samples))
    return VolumeResult(box_vol * p, stderr, "mc")


# ---------------------------------------------------------------------------
# lattice constant


class LatticeConstant(NamedTuple):
    orders: tuple    # face-order tuples walked along the parity subsequence
    ratios: tuple    # count / volume at each
    estimate: float
    drift: float     # relative spread over the last quarter
    parity: tuple


def _count_weight_vectors(c: np.ndarray, orders: np.ndarray, cap: float) -> int:
    """Count positive integer weights meeting every budget and parity rule.

    All edges but the last are enumerated on a mesh; the admissible range
    for the last edge is closed-form from the residual budgets, including
    the parity constraints it must absorb.
    """
    s, m = c.shape
    if m == 0:
        return 1 if np.all(orders % 2 == 0) else 0
    B = _volume_box(c.astype(float), orders.astype(float))
    if np.prod(np.maximum(np.floor(B[:-1]), 1.0)) > cap:
        raise FeasibilityError(
            "weight count mesh too large",
            cost=float(np.prod(np.maximum(np.floor(B), 1.0))),
        )
    grids = [np.arange(1, int(b) + 1) for b in B[:-1]]
    if any(g.size == 0 for g in grids):
        return 0
    if grids:
        mesh = np.meshgrid(*grids, indexing="ij")
        W = np.stack([g.ravel() for g in mesh], axis=1)
    else:
        W = np.zeros((1, 0), dtype=int)
    rem = orders[None, :] - W @ c[:, :-1].T
    col = c[:, -1]
    K = len(W)
    hi = np.full(K, np.iinfo(np.int64).max // 4, dtype=np.int64)
    feasible = np.ones(K, dtype=bool)
    parity_fixed = np.full(K, -1, dtype=np.int64)  # -1 means free
    for j in range(s):
        r = rem[:, j]
        if col[j] == 0:
            feasible &= (r >= 0) & (r % 2 == 0)
        elif col[j] == 2:
            feasible &= (r >= 2) & (r % 2 == 0)
            hi = np.minimum(hi, r // 2)
        else:
            feasible &= r >= 1
            hi = np.minimum(hi, r)
            pj = r % 2
            clash = (parity_fixed >= 0) & (parity_fixed != pj)
            feasible &= ~clash
            parity_fixed = np.where(parity_fixed < 0, pj, parity_fixed)
    hi = np.maximum(hi, 0)
    count_free = np.maximum(hi, 0)  # all of 1..hi
    p = np.maximum(parity_fixed, 0)
    first = np.where(p == 1, 1, 2)
    count_par = np.where(hi >= first, (hi - first) // 2 + 1, 0)
    counts = np.where(parity_fixed < 0, count_free, count_par)
    counts = np.where(feasible, counts, 0)
    return int(np.sum(counts))


def _parity_class(diagram: Diagram, parity: Sequence[int] = None) -> np.ndarray:
    """A face-order parity vector admitting weight assignments.

    All-even is preferred; otherwise the 2^s parity classes are probed at a
    moderate order for a nonzero count.
    """
    s = diagram.s
    c = _face_constraint_rows(diagram)
    if parity is not None:
        par = np.array([int(p) % 2 for p in parity], dtype=int)
        if len(par) != s:
            raise ValidationError("parity class length mismatch")
        return par
    probe = 4 * max(diagram.n_edges, 1)
    best = None
    for bits in itertools.product((0, 1), repeat=s):
        orders = np.array([probe + b for b in bits], dtype=int)
        try:
            cnt = _count_weight_vectors(c, orders, cap=1e6)
        except FeasibilityError:
            cnt = 1
        if cnt > 0:
            if not any(bits):
                return np.array(bits, dtype=int)
            if best is None:
                best = np.array(bits, dtype=int)
    if best is None:
        return np.zeros(s, dtype=int)
    return best


def lattice_constant_C(
    diagram: Diagram,
    n_max: int = 120,
    parity: Sequence[int] = None,
    cap: float = DEFAULT_COUNT_CAP,
) -> LatticeConstant:
    """Count-to-volume ratio of the face constraints along growing orders.

    At matched face orders the number of admissible positive integer weight
    vectors divided by the constraint polytope volume settles to a constant
    depending only on the diagram.  The walked sequence, its last-quarter
    mean, and the relative drift over that quarter are all returned; a
    parity class admitting no weights at all yields a zero estimate.
    """
    report = validate_diagram(diagram)
    if not report.valid:
        raise ValidationError("invalid diagram: " + "; ".join(report.violations[:3]))
    c = _face_constraint_rows(diagram)
    par = _parity_class(diagram, parity)
    if diagram.n_edges == 0:
        ok = not np.any(par % 2)
        orders = tuple(tuple(int(2 * k + p) for p in par) for k in range(2, 8))
        val = 1.0 if ok else 0.0
        return LatticeConstant(
            orders, (val,) * len(orders), val, 0.0, tuple(int(p) for p in par)
        )

    orders_list = []
    ratios = []
    start = max(4 * diagram.n_edges, 8)
    stop = max(n_max, start + 16)
    for k in range(start, stop + 1, 2):
        orders = np.array([k + p for p in par], dtype=int)
        cnt = _count_weight_vectors(c, orders, cap)
        vol = constraint_volume(diagram, orders.astype(float)).value
        if vol <= 0:
            continue
        orders_list.append(tuple(int(x) for x in orders))
        ratios.append(cnt / vol)
    if not ratios:
        return LatticeConstant((), (), 0.0, 0.0, tuple(int(p) for p in par))
    arr = np.array(ratios)
    ns = np.array([o[0] for o in orders_list], dtype=float)
    half = max(len(arr) // 2, 2)
    if len(arr) >= 3:
        # the ratio approaches its limit like C + c/n; the 1/n intercept
        # over the tail is the extrapolated value
        coef = np.polyfit(1.0 / ns[-half:], arr[-half:], 1)
        est = float(coef[1])
    else:
        est = float(arr[-1])
    q = max(len(arr) // 4, 1)
    tail = arr[-q:]
    if est != 0.0:
        drift = float((np.max(tail) - np.min(tail)) / abs(est))
    else:
        drift = 0.0
    return LatticeConstant(
        tuple(orders_list),
        tuple(float(r) for r in ratios),
        est,
        drift,
        tuple(int(p) for p in par),
    )


# ---------------------------------------------------------------------------
# scaling limits


class LimitEstimate(NamedTuple):
    value: float
    stderr: float
    regime: str
    lattice_constant: float
    resample_recommended: bool


def _sample_standard_stable(rng, alpha: float, size) -> np.ndarray:
    """Symmetric stable variates with characteristic function exp(-|t|^a).

    Chambers-Mallows-Stuck construction, symmetric case.  At alpha = 2 this
    reduces to a centered normal with variance 2.
    """
    U = rng.uniform(-np.pi / 2.0, np.pi / 2.0, size=size)
    W = rng.exponential(1.0, size=size)
    sin_part = np.sin(alpha * U) / np.cos(U) ** (1.0 / alpha)
    tilt = (np.cos((1.0 - alpha) * U) / W) ** ((1.0 - alpha) / alpha)
    return sin_part * tilt


def _alpha_proposal_draw(rng, B: np.ndarray, alpha: float, size: int):
    """Edge budgets from density proportional to a^(-1/alpha) on (0, B_e].

    Returns the samples (size, m) and the product of the proposal
    densities; the pull toward zero matches the short-time blowup of the
    stable density and its periodization, keeping importance weights
    bounded there.
    """
    m = len(B)
    expo = 1.0 - 1.0 / alpha  # in (0, 1/2] for alpha in (1, 2]
    u = rng.random(size=(size, m))
    a = B[None, :] * u ** (1.0 / expo)
    dens = expo * a ** (expo - 1.0) / B[None, :] ** expo
    return a, np.prod(dens, axis=1)


def _spanning_tree(diagram: Diagram):
    """BFS spanning tree: list of (edge_index, parent_vi, child_vi), plus
    the vertex order and index map.  Requires a connected diagram."""
    vids = [v.id for v in diagram.vertices]
    vindex = {vid: i for i, vid in enumerate(vids)}
    adj = {i: [] for i in range(len(vids))}
    for k, e in enumerate(diagram.edges):
        iu, iv = vindex[e.u], vindex[e.v]
        if iu != iv:
            adj[iu].append((k, iv))
            adj[iv].append((k, iu))
    seen = {0}
    tree = []
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for k, j in adj[i]:
                if j not in seen:
                    seen.add(j)
                    tree.append((k, i, j))
                    nxt.append(j)
        frontier = nxt
    return tree, vindex


def limiting_diagram_function(
    diagram: Diagram,
    regime: str,
    ts: Sequence[float],
    alpha: float = 2.0,
    gamma: float = None,
    spike: SpikeOperator = None,
    scale: float = None,
    mc_samples: int = 200_000,
    seed: int = 0,
    stderr_tol: float = None,
    n_max: int = 120,
) -> LimitEstimate:
    """Scaling limit of the normalized diagram evaluation.

    Regimes:
      "super":    lattice constant times polytope volume over the product
                  of the budgets; no kernel enters.
      "sub":      same prefactor times an integral over free vertex
                  positions on the line of one stable density per edge at
                  the polytope point, one vertex pinned at the origin.
      "critical": positions live on the unit torus and each edge carries
                  the periodized density at time alpha_e * gamma^alpha.
      "deformed": critical weight on interior edges; boundary edges carry
                  exponentially tilted spike blocks, and each boundary
                  vertex's two half-edges must agree on a spike location
                  for the term to survive, pinning that vertex there.

    Position integrals are importance-sampled along a spanning tree with
    stable increments, so tree-edge densities cancel exactly and only the
    cycle-closing edges contribute weight variance.  When a tolerance is
    given and the Monte Carlo standard error exceeds it, the result is
    flagged for resampling rather than failed.
    """
    report = validate_diagram(diagram)
    if not report.valid:
        raise ValidationError("invalid diagram: " + "; ".join(report.violations[:3]))
    regime = regime.lower()
    if regime not in ("super", "sub", "critical", "deformed"):
        raise ValidationError(f"unknown regime {regime!r}")
    if len(ts) != diagram.s:
        raise ValidationError(f"expected {diagram.s} budgets, got {len(ts)}")
    ts_arr = np.array([float(t) for t in ts])
    if np.any(ts_arr <= 0):
        raise ValidationError("budgets must be positive")
    alpha = float(alpha)
    if regime in ("sub", "critical", "deformed"):
        if not 1.0 < alpha <= 2.0:
            raise ValidationError("position integrals need alpha in (1, 2]")
        if not report.connected:
            raise ValidationError("position integrals need a connected diagram")
    if regime in ("critical", "deformed") and (gamma is None or gamma <= 0):
        raise ValidationError(f"{regime} regime needs gamma > 0")
    if regime == "deformed":
        if spike is None or spike.tau is None or spike.z is None:
            raise ValidationError("deformed regime needs a spike with tau and z")
    elif diagram.boundary_edges():
        raise ValidationError("boundary edges only make sense in the deformed regime")
    c_scale = default_scale(alpha) if scale is None else float(scale)

    const = lattice_constant_C(diagram, n_max=n_max)
    C = const.estimate
    tprod = float(np.prod(ts_arr))

    if regime == "super":
        vol = constraint_volume(diagram, ts_arr, mc_samples=mc_samples, seed=seed)
        value = C * vol.value / tprod
        stderr = C * vol.stderr / tprod
        return LimitEstimate(
            value, stderr, regime, C, bool(stderr_tol is not None and stderr > stderr_tol)
        )

    cmat = _face_constraint_rows(diagram).astype(float)
    m = diagram.n_edges
    if m == 0:
        return LimitEstimate(C / tprod, 0.0, regime, C, False)
    B = _volume_box(cmat, ts_arr)
    rng = rng_for(seed, "limit", regime)
    nv = diagram.n_vertices
    M = int(mc_samples)

    a_samp, a_dens = _alpha_proposal_draw(rng, B, alpha, M)
    inside = np.all(a_samp @ cmat.T <= ts_arr[None, :], axis=1)

    if regime in ("sub", "critical"):
        tau0 = 1.0 if regime == "sub" else gamma**alpha
        tree, vindex = _spanning_tree(diagram)
        tree_edges = {k for k, _, _ in tree}
        xs = np.zeros((M, nv))
        if regime == "critical":
            xs[:, 0] = rng.random(M)
        for k, iparent, ichild in tree:
            width = (c_scale * a_samp[:, k] * tau0) ** (1.0 / alpha)
            step = width * _sample_standard_stable(rng, alpha, M)
            xs[:, ichild] = xs[:, iparent] - step
            if regime == "critical":
                xs[:, ichild] %= 1.0
        weights = np.where(inside, 1.0 / a_dens, 0.0)
        for k, e in enumerate(diagram.edges):
            if k in tree_edges:
                continue
            dx = xs[:, vindex[e.u]] - xs[:, vindex[e.v]]
            if regime == "sub":
                weights *= stable_density(alpha, dx, a_samp[:, k], scale=c_scale)
            else:
                weights *= theta_alpha(alpha, dx, a_samp[:, k] * tau0, scale=c_scale)
    else:
        # deformed: boundary vertices sit at spike locations chosen by the
        # surviving half-edge pairings; interior vertices are uniform
        tau0 = gamma**alpha
        b_vids = [v.id for v in diagram.boundary_vertices()]
        b_index = {vid: i for i, vid in enumerate(b_vids)}
        interior_ids = [v.id for v in diagram.vertices if not v.boundary]
        int_index = {vid: i for i, vid in enumerate(interior_ids)}
        r = spike.rank
        q = len(spike.tau)
        z = np.array(spike.z)
        taus = np.array(spike.tau)
        xs_int = rng.random(size=(M, max(len(interior_ids), 1)))

        def position(vid, assign):
            if vid in int_index:
                return xs_int[:, int_index[vid]]
            return np.full(M, z[assign[b_index[vid]]])

        total = np.zeros(M)
        for assign in itertools.product(range(r), repeat=len(b_vids)):
            fac = np.ones(M)
            for k, e in enumerate(diagram.edges):
                if e.boundary:
                    vu = spike.vectors[assign[b_index[e.u]], :q]
                    vv = spike.vectors[assign[b_index[e.v]], :q]
                    fac *= np.exp(a_samp[:, k][:, None] * taus[None, :]) @ (vu * vv)
                else:
                    dx = position(e.u, assign) - position(e.v, assign)
                    fac *= theta_alpha(alpha, dx, a_samp[:, k] * tau0, scale=c_scale)
            total += fac
        weights = np.where(inside, total / a_dens, 0.0)

    mean = float(np.mean(weights))
    std = float(np.std(weights, ddof=1)) if M > 1 else float("nan")
    value = C * mean / tprod
    stderr = C * std / math.sqrt(M) / tprod
    flag = bool(stderr_tol is not None and stderr > stderr_tol)
    return LimitEstimate(value, stderr, regime, C, flag)
