"""Tetrahedral gluing tables, skeleta, vertex classification, isomorphism.

Conventions used throughout the kernel:

- A tetrahedron has vertices 0..3; face i is the one opposite vertex i.
- A gluing of face f of tet t is a permutation sigma of {0,1,2,3} sending
  each vertex v != f of t to the matching vertex of the target tet; the
  image face index is sigma(f).
- Tetrahedra carry the orientation of their vertex labelling, so every
  gluing permutation must be odd (orientation-reversing on the face).
  Orientable manifolds always admit such a labelling; inputs presented
  otherwise are rejected.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import ParseError, ValidationRequired, VertexLinkNotSurface

VERTICES = (0, 1, 2, 3)
FACES = (0, 1, 2, 3)

# face i is opposite vertex i
FACE_VERTICES = tuple(tuple(v for v in VERTICES if v != f) for f in FACES)

# the six edges of a tetrahedron as ordered (low, high) pairs
TET_EDGES = tuple((a, b) for a in VERTICES for b in VERTICES if a < b)

# quad type j separates the vertex pair QUAD_PAIRS[j][0] from QUAD_PAIRS[j][1];
# the first pair always contains vertex 0
QUAD_PAIRS = (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))

# quad type whose separated pairs contain a given edge
QUAD_TYPE_OF_EDGE = {}
for _j, (_p1, _p2) in enumerate(QUAD_PAIRS):
    QUAD_TYPE_OF_EDGE[_p1] = _j
    QUAD_TYPE_OF_EDGE[_p2] = _j


def quad_type_of(a, b):
    """Quad type whose separated pair contains the edge {a, b}."""
    return QUAD_TYPE_OF_EDGE[(a, b) if a < b else (b, a)]


def quad_partner(j, v):
    """The vertex paired with v by quad type j."""
    p1, p2 = QUAD_PAIRS[j]
    if v in p1:
        return p1[0] if p1[1] == v else p1[1]
    return p2[0] if p2[1] == v else p2[1]


def quad_crosses_edge(j, a, b):
    """True when quad type j has a corner on edge {a, b}."""
    return quad_type_of(a, b) != j


def perm_parity(p):
    """Parity of a length-4 permutation: 0 even, 1 odd."""
    inv = 0
    for i in range(4):
        for k in range(i + 1, 4):
            if p[i] > p[k]:
                inv += 1
    return inv & 1


def perm_inverse(p):
    inv = [0, 0, 0, 0]
    for i, v in enumerate(p):
        inv[v] = i
    return tuple(inv)


def perm_compose(p, q):
    """Permutation acting as first q then p."""
    return tuple(p[q[i]] for i in range(4))


@dataclass(frozen=True)
class Gluing:
    """Target of one face: tetrahedron index and vertex permutation."""

    tet: int
    perm: tuple

    def image_face(self, face):
        return self.perm[face]


class Triangulation:
    """A gluing table: n tetrahedra with face identifications.

    ``gluings[t][f]`` is either ``None`` (boundary face) or a
    :class:`Gluing`.  Instances are immutable after construction; the
    skeleton is computed lazily and cached.
    """

    def __init__(self, gluings, name="tri", ideal=False):
        self.name = name
        self.gluings = tuple(tuple(row) for row in gluings)
        self.size = len(self.gluings)
        self.ideal = ideal
        self._skeleton = None
        self._validation = None

    def __repr__(self):
        return f"Triangulation({self.name!r}, {self.size} tets)"

    def gluing(self, tet, face):
        return self.gluings[tet][face]

    def boundary_faces(self):
        return [(t, f) for t in range(self.size) for f in FACES if self.gluings[t][f] is None]

    def has_boundary(self):
        return any(g is None for row in self.gluings for g in row)

    def to_text(self):
        """Serialize back to the gluing-table file format."""
        lines = [f"tets {self.size}"]
        for t in range(self.size):
            entries = []
            for f in FACES:
                g = self.gluings[t][f]
                if g is None:
                    entries.append("-")
                else:
                    entries.append(f"{g.tet}:{''.join(str(v) for v in g.perm)}")
            lines.append(f"{t}: " + " ".join(entries))
        return "\n".join(lines) + "\n"

    def skeleton(self):
        if self._skeleton is None:
            self._skeleton = build_skeleton(self)
        return self._skeleton


def parse_triangulation(text, name="tri"):
    """Parse a gluing-table file into a Triangulation.

    Does not validate the involution; see :func:`validate`.
    """
    n = None
    rows = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if n is None:
            if fields[0] != "tets" or len(fields) != 2:
                raise ParseError("expected header 'tets <n>'", line=lineno)
            try:
                n = int(fields[1])
            except ValueError:
                raise ParseError(f"bad tetrahedron count {fields[1]!r}", line=lineno)
            if n < 0:
                raise ParseError("tetrahedron count must be >= 0", line=lineno)
            continue
        if not fields[0].endswith(":"):
            raise ParseError("expected '<t>: <e0> <e1> <e2> <e3>'", line=lineno)
        try:
            t = int(fields[0][:-1])
        except ValueError:
            raise ParseError(f"bad tetrahedron label {fields[0]!r}", line=lineno)
        if not 0 <= t < n:
            raise ParseError(f"tetrahedron index {t} out of range [0, {n})", line=lineno)
        if t in rows:
            raise ParseError(f"duplicate row for tetrahedron {t}", line=lineno)
        if len(fields) != 5:
            raise ParseError(f"expected 4 face entries, got {len(fields) - 1}", line=lineno)
        row = []
        for col, entry in enumerate(fields[1:]):
            if entry == "-":
                row.append(None)
                continue
            parts = entry.split(":")
            if len(parts) != 2:
                raise ParseError(f"malformed gluing {entry!r}", line=lineno, column=col)
            try:
                target = int(parts[0])
            except ValueError:
                raise ParseError(f"bad target tetrahedron {parts[0]!r}", line=lineno, column=col)
            if not 0 <= target < n:
                raise ParseError(f"target tetrahedron {target} out of range", line=lineno, column=col)
            if len(parts[1]) != 4 or not parts[1].isdigit():
                raise ParseError(f"malformed permutation {parts[1]!r}", line=lineno, column=col)
            perm = tuple(int(c) for c in parts[1])
            if sorted(perm) != [0, 1, 2, 3]:
                raise ParseError(f"{parts[1]!r} is not a permutation of 0123", line=lineno, column=col)
            row.append(Gluing(target, perm))
        rows[t] = row
    if n is None:
        raise ParseError("empty file", line=1)
    missing = [t for t in range(n) if t not in rows]
    if missing:
        raise ParseError(f"missing rows for tetrahedra {missing}")
    return Triangulation([rows[t] for t in range(n)], name=name)


@dataclass
class ValidationReport:
    """Outcome of structural checks on a parsed triangulation."""

    involution_failures: list = field(default_factory=list)
    orientation_failures: list = field(default_factory=list)
    self_gluing_failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not (self.involution_failures or self.orientation_failures or self.self_gluing_failures)

    def summary(self):
        if self.ok:
            return "valid, oriented"
        parts = []
        for label, items in (
            ("involution", self.involution_failures),
            ("orientation", self.orientation_failures),
            ("self-gluing", self.self_gluing_failures),
        ):
            if items:
                parts.append(f"{label}: {items}")
        return "; ".join(parts)


def validate(tri):
    """Check the gluing involution, orientation convention, and self-gluings.

    A passing report is required by every downstream operation.
    """
    report = ValidationReport()
    for t in range(tri.size):
        for f in FACES:
            g = tri.gluings[t][f]
            if g is None:
                continue
            fi = g.image_face(f)
            back = tri.gluings[g.tet][fi]
            if back is None or back.tet != t or back.perm != perm_inverse(g.perm):
                report.involution_failures.append((t, f))
                continue
            if perm_parity(g.perm) == 0:
                report.orientation_failures.append((t, f))
            if g.tet == t and fi == f:
                # a face glued to itself; the pointwise-fixing case is the
                # identity permutation
                report.self_gluing_failures.append((t, f))
    tri._validation = report
    return report


def require_valid(tri):
    if tri._validation is None:
        validate(tri)
    if not tri._validation.ok:
        raise ValidationRequired(f"triangulation {tri.name!r} failed validation: {tri._validation.summary()}")


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller key as representative for determinism
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra

    def classes(self):
        groups = {}
        for x in self.parent:
            groups.setdefault(self.find(x), []).append(x)
        return [sorted(members) for root, members in sorted(groups.items())]


@dataclass
class EdgeClass:
    """An edge of the quotient complex: equivalence class of tet edges."""

    index_id: int
    members: list              # ordered (tet, (a, b)) with consistent orientation
    boundary: bool
    reversed_: bool            # identified with itself reversing orientation

    @property
    def index(self):
        return len(self.members)

    def member_set(self):
        return {(t, (min(a, b), max(a, b))) for t, (a, b) in self.members}


@dataclass
class VertexClass:
    """A vertex of the quotient complex: equivalence class of tet corners."""

    index_id: int
    corners: list              # sorted (tet, vertex)
    boundary: bool


@dataclass
class BoundaryComponent:
    """A connected component of the boundary surface."""

    index_id: int
    faces: list                # sorted (tet, face)
    edge_ids: list
    vertex_ids: list

    @property
    def euler(self):
        return len(self.vertex_ids) - len(self.edge_ids) + len(self.faces)

    @property
    def genus(self):
        # boundary components of an oriented manifold are closed orientable
        return (2 - self.euler) // 2


@dataclass
class Skeleton:
    """Edges, vertices, and boundary structure of a triangulation."""

    edges: list
    vertices: list
    boundary_faces: list
    boundary_components: list
    edge_lookup: dict          # (tet, (a,b)) ordered or unordered -> (edge id, flipped)
    vertex_lookup: dict        # (tet, v) -> vertex id
    face_to_boundary: dict     # boundary (tet, face) -> boundary component id

    def edge_of(self, tet, a, b):
        """Edge class id and whether (a, b) runs against the class orientation."""
        return self.edge_lookup[(tet, (a, b))]

    def vertex_of(self, tet, v):
        return self.vertex_lookup[(tet, v)]


def build_skeleton(tri):
    """Compute edge and vertex classes, indices, and boundary structure."""
    require_valid(tri)

    # oriented edge slots: (tet, (a, b)) for all ordered pairs
    slots = [(t, (a, b)) for t in range(tri.size) for a in VERTICES for b in VERTICES if a != b]
    uf_edge = _UnionFind(slots)
    corners = [(t, v) for t in range(tri.size) for v in VERTICES]
    uf_vert = _UnionFind(corners)

    for t in range(tri.size):
        for f in FACES:
            g = tri.gluings[t][f]
            if g is None:
                continue
            for a, b in itertools.permutations(FACE_VERTICES[f], 2):
                uf_edge.union((t, (a, b)), (g.tet, (g.perm[a], g.perm[b])))
            for v in FACE_VERTICES[f]:
                uf_vert.union((t, v), (g.tet, g.perm[v]))

    # boundary flags propagate from unglued faces
    boundary_faces = sorted(tri.boundary_faces())
    boundary_edge_roots = set()
    boundary_vertex_roots = set()
    for t, f in boundary_faces:
        for a, b in itertools.combinations(FACE_VERTICES[f], 2):
            boundary_edge_roots.add(uf_edge.find((t, (a, b))))
        for v in FACE_VERTICES[f]:
            boundary_vertex_roots.add(uf_vert.find((t, v)))

    edges = []
    edge_lookup = {}
    seen_roots = {}
    for t in range(tri.size):
        for a, b in TET_EDGES:
            root = uf_edge.find((t, (a, b)))
            if root in seen_roots:
                continue
            rev_root = uf_edge.find((t, (b, a)))
            members_fwd = []
            reversed_ = root == rev_root
            # collect members with orientation relative to (a, b)
            for t2, (x, y) in uf_edge.parent:
                if x < y and uf_edge.find((t2, (x, y))) in (root, rev_root):
                    same = uf_edge.find((t2, (x, y))) == root
                    members_fwd.append((t2, (x, y) if same else (y, x)))
            members_fwd.sort()
            cls = EdgeClass(
                index_id=len(edges),
                members=members_fwd,
                boundary=root in boundary_edge_roots or rev_root in boundary_edge_roots,
                reversed_=reversed_,
            )
            edges.append(cls)
            seen_roots[root] = cls.index_id
            seen_roots[rev_root] = cls.index_id
            for t2, (x, y) in members_fwd:
                edge_lookup[(t2, (x, y))] = (cls.index_id, False)
                edge_lookup[(t2, (y, x))] = (cls.index_id, True)

    vertices = []
    vertex_lookup = {}
    seen_v = {}
    for t in range(tri.size):
        for v in VERTICES:
            root = uf_vert.find((t, v))
            if root in seen_v:
                vertex_lookup[(t, v)] = seen_v[root]
                continue
            members = sorted(c for c in corners if uf_vert.find(c) == root)
            cls = VertexClass(
                index_id=len(vertices),
                corners=members,
                boundary=root in boundary_vertex_roots,
            )
            seen_v[root] = cls.index_id
            for c in members:
                vertex_lookup[c] = cls.index_id
            vertices.append(cls)

    # boundary components: boundary faces glued along shared boundary edges
    uf_bdry = _UnionFind(boundary_faces)
    edge_to_bfaces = {}
    for t, f in boundary_faces:
        for a, b in itertools.combinations(FACE_VERTICES[f], 2):
            eid, _ = edge_lookup[(t, (a, b))]
            edge_to_bfaces.setdefault(eid, []).append((t, f))
    for eid, bfaces in edge_to_bfaces.items():
        # each boundary edge of a manifold meets exactly two boundary face slots,
        # but an edge may appear twice in one face slot under self-identifications
        for other in bfaces[1:]:
            uf_bdry.union(bfaces[0], other)
    components = []
    face_to_boundary = {}
    root_to_comp = {}
    for bf in boundary_faces:
        root = uf_bdry.find(bf)
        if root not in root_to_comp:
            faces = sorted(x for x in boundary_faces if uf_bdry.find(x) == root)
            eids = sorted({edge_lookup[(t, (a, b))][0]
                           for t, f in faces
                           for a, b in itertools.combinations(FACE_VERTICES[f], 2)})
            vids = sorted({vertex_lookup[(t, v)] for t, f in faces for v in FACE_VERTICES[f]})
            comp = BoundaryComponent(len(components), faces, eids, vids)
            root_to_comp[root] = comp.index_id
            components.append(comp)
        face_to_boundary[bf] = root_to_comp[root]

    return Skeleton(
        edges=edges,
        vertices=vertices,
        boundary_faces=boundary_faces,
        boundary_components=components,
        edge_lookup=edge_lookup,
        vertex_lookup=vertex_lookup,
        face_to_boundary=face_to_boundary,
    )


@dataclass(frozen=True)
class VertexKind:
    """Topological type of a vertex link: sphere, disk, or genus >= 1."""

    kind: str                  # "interior" | "boundary" | "ideal"
    genus: int = 0

    def __str__(self):
        if self.kind == "ideal":
            return f"ideal(genus {self.genus})"
        return {"interior": "interior material", "boundary": "boundary material"}[self.kind]


def classify_vertices(tri, skel=None):
    """Classify every vertex by the topology of its vertex-linking surface.

    Raises :class:`VertexLinkNotSurface` on pinched links (pseudo-manifold
    input), including edges identified with themselves in reverse.
    """
    from .surfaces import vertex_linking
    from .diskcomplex import DiskComplex

    if skel is None:
        skel = tri.skeleton()
    for e in skel.edges:
        if e.reversed_:
            t, (a, b) = e.members[0]
            vid = skel.vertex_of(t, a)
            raise VertexLinkNotSurface(vid, f"edge {e.members[0]} identified with itself reversed")
    kinds = []
    for vcls in skel.vertices:
        link = vertex_linking(tri, vcls.index_id, skel=skel)
        dc = DiskComplex(tri, link.coords)
        problem = dc.surface_defect()
        if problem is not None:
            raise VertexLinkNotSurface(vcls.index_id, problem)
        topo = dc.topology()
        if topo.components != 1:
            raise VertexLinkNotSurface(vcls.index_id, "disconnected link")
        if topo.boundary_curves > 0:
            if topo.euler == 1 and topo.boundary_curves == 1 and topo.orientable:
                kinds.append(VertexKind("boundary"))
            else:
                raise VertexLinkNotSurface(vcls.index_id, f"link with boundary is not a disk (chi={topo.euler})")
        else:
            if not topo.orientable:
                raise VertexLinkNotSurface(vcls.index_id, "non-orientable link")
            if topo.euler == 2:
                kinds.append(VertexKind("interior"))
            else:
                kinds.append(VertexKind("ideal", genus=(2 - topo.euler) // 2))
    return kinds


class NotIsomorphic:
    """Sentinel result for a failed isomorphism search."""

    def __bool__(self):
        return False

    def __repr__(self):
        return "NotIsomorphic"


NOT_ISOMORPHIC = NotIsomorphic()


@dataclass
class Correspondence:
    """Witness isomorphism: per-tet image and vertex permutation."""

    tet_map: tuple             # tet_map[t] = image tet in b
    perms: tuple               # perms[t] = vertex permutation into the image

    def compose(self, other):
        tet_map = tuple(other.tet_map[t] for t in self.tet_map)
        perms = tuple(perm_compose(other.perms[self.tet_map[t]], self.perms[t]) for t in range(len(self.tet_map)))
        return Correspondence(tet_map, perms)

    def inverse(self):
        n = len(self.tet_map)
        inv_map = [0] * n
        inv_perm = [None] * n
        for t in range(n):
            inv_map[self.tet_map[t]] = t
            inv_perm[self.tet_map[t]] = perm_inverse(self.perms[t])
        return Correspondence(tuple(inv_map), tuple(inv_perm))


def _edge_index_profile(tri, skel):
    profile = {}
    for t in range(tri.size):
        key = tuple(sorted(skel.edges[skel.edge_of(t, a, b)[0]].index for a, b in TET_EDGES))
        profile.setdefault(key, []).append(t)
    return profile


def _propagate(a, b, t0, u0, p0):
    """Grow a partial isomorphism from tet t0 of a mapping to (u0, p0)."""
    n = a.size
    tet_map = {t0: u0}
    perms = {t0: p0}
    stack = [t0]
    while stack:
        t = stack.pop()
        u, p = tet_map[t], perms[t]
        for f in FACES:
            ga = a.gluings[t][f]
            gb = b.gluings[u][p[f]]
            if (ga is None) != (gb is None):
                return None
            if ga is None:
                continue
            # image of the neighbor under the candidate correspondence
            q = perm_compose(gb.perm, perm_compose(p, perm_inverse(ga.perm)))
            if ga.tet in tet_map:
                if tet_map[ga.tet] != gb.tet or perms[ga.tet] != q:
                    return None
            else:
                tet_map[ga.tet] = gb.tet
                perms[ga.tet] = q
                stack.append(ga.tet)
    if len(tet_map) != n:
        return None  # disconnected; caller handles per-component matching
    return Correspondence(tuple(tet_map[t] for t in range(n)), tuple(perms[t] for t in range(n)))


def _connected_components_of(tri):
    uf = _UnionFind(list(range(tri.size)))
    for t in range(tri.size):
        for f in FACES:
            g = tri.gluings[t][f]
            if g is not None:
                uf.union(t, g.tet)
    return uf.classes()


def isomorphic(a, b):
    """Search for a gluing-respecting correspondence between a and b.

    Exhaustive over the image of one tetrahedron per component with
    propagation; pruned by edge-index multisets.
    """
    require_valid(a)
    require_valid(b)
    if a.size != b.size:
        return NOT_ISOMORPHIC
    if a.size == 0:
        return Correspondence((), ())
    skel_a, skel_b = a.skeleton(), b.skeleton()
    prof_a = _edge_index_profile(a, skel_a)
    prof_b = _edge_index_profile(b, skel_b)
    if sorted((k, len(v)) for k, v in prof_a.items()) != sorted((k, len(v)) for k, v in prof_b.items()):
        return NOT_ISOMORPHIC

    if len(_connected_components_of(a)) > 1:
        return _isomorphic_disconnected(a, b)

    t0 = 0
    key = tuple(sorted(skel_a.edges[skel_a.edge_of(t0, x, y)[0]].index for x, y in TET_EDGES))
    for u0 in prof_b.get(key, []):
        for p0 in itertools.permutations(VERTICES):
            cor = _propagate(a, b, t0, u0, tuple(p0))
            if cor is not None:
                return cor
    return NOT_ISOMORPHIC


def _sub_triangulation(tri, tets):
    """Relabelled restriction of tri to a closed-under-gluing tet subset."""
    index = {t: i for i, t in enumerate(tets)}
    rows = []
    for t in tets:
        row = []
        for f in FACES:
            g = tri.gluings[t][f]
            row.append(None if g is None else Gluing(index[g.tet], g.perm))
        rows.append(row)
    sub = Triangulation(rows, name=f"{tri.name}|{tets[0]}", ideal=tri.ideal)
    return sub, index


def _isomorphic_disconnected(a, b):
    comps_a = _connected_components_of(a)
    comps_b = _connected_components_of(b)
    if sorted(map(len, comps_a)) != sorted(map(len, comps_b)):
        return NOT_ISOMORPHIC

    used = [False] * len(comps_b)
    tet_map = [None] * a.size
    perms = [None] * a.size

    def place(i):
        if i == len(comps_a):
            return True
        sub_a, _ = _sub_triangulation(a, comps_a[i])
        for k, comp_b in enumerate(comps_b):
            if used[k] or len(comp_b) != len(comps_a[i]):
                continue
            sub_b, _ = _sub_triangulation(b, comp_b)
            cor = isomorphic(sub_a, sub_b)
            if cor:
                used[k] = True
                for local_t, t in enumerate(comps_a[i]):
                    tet_map[t] = comp_b[cor.tet_map[local_t]]
                    perms[t] = cor.perms[local_t]
                if place(i + 1):
                    return True
                used[k] = False
        return False

    if place(0):
        return Correspondence(tuple(tet_map), tuple(perms))
    return NOT_ISOMORPHIC
