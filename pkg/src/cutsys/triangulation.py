"""Combinatorial one-vertex triangulations of orientable surfaces.

A surface of genus g is built from the 4g-gon with boundary word
a1 b1 a1' b1' a2 b2 a2' b2' ... triangulated by the fan of diagonals from
polygon vertex 0.  All polygon corners glue to a single interior vertex.
Punctures are realised by coning new vertices into faces, so the
triangulation of S_{g,n} has one interior vertex plus one vertex per
puncture.

Faces are oriented triangles given by three darts in cyclic order; each
edge carries exactly two darts.  Exact rational coordinates are attached
to the polygon model (for importing piecewise-linear curves) and to a
standard affine frame per face (for the arrangement computations in
`diagrams`).
"""

from fractions import Fraction


class Triangulation:
    """Oriented triangulated surface with dart-based connectivity.

    Darts are integers; ``twin[d]`` is the opposite dart of the same edge,
    ``edge_of[d]`` the edge index, ``face_of[d]`` the face index and
    ``index_in_face[d]`` its position (0..2) in that face.  ``faces[f]``
    lists the three darts of face f in orientation order, so the dart at
    index k runs from corner k to corner (k+1) % 3.
    """

    def __init__(self):
        self.faces = []           # face -> [d0, d1, d2]
        self.twin = []            # dart -> dart
        self.edge_of = []         # dart -> edge
        self.face_of = []         # dart -> face
        self.index_in_face = []   # dart -> 0..2
        self.edge_darts = []      # edge -> (dart, dart); first is the reference dart
        self.edge_names = []      # edge -> str
        self.vertex_of_corner = {}   # (face, k) -> vertex
        self.vertices = []        # vertex -> list of (face, k) corners
        self.puncture_anchors = []   # one dart per puncture, tail at the puncture

    # -- construction ----------------------------------------------------

    def _new_edge(self, name):
        e = len(self.edge_darts)
        d0 = len(self.twin)
        d1 = d0 + 1
        self.twin.extend([d1, d0])
        self.edge_of.extend([e, e])
        self.face_of.extend([None, None])
        self.index_in_face.extend([None, None])
        self.edge_darts.append((d0, d1))
        self.edge_names.append(name)
        return e

    def _add_face(self, darts):
        f = len(self.faces)
        self.faces.append(list(darts))
        for k, d in enumerate(darts):
            if self.face_of[d] is not None:
                raise ValueError("dart %d used twice" % d)
            self.face_of[d] = f
            self.index_in_face[d] = k
        return f

    def _compute_vertices(self):
        """Group corners into vertices via the rotation system.

        From corner (f, k) the next corner around the same vertex is
        reached by crossing the outgoing dart of the corner.
        """
        self.vertex_of_corner = {}
        self.vertices = []
        seen = set()
        for f in range(len(self.faces)):
            for k in range(3):
                if (f, k) in seen:
                    continue
                v = len(self.vertices)
                orbit = []
                c = (f, k)
                while c not in seen:
                    seen.add(c)
                    orbit.append(c)
                    self.vertex_of_corner[c] = v
                    d = self.faces[c[0]][c[1]]
                    t = self.twin[d]
                    c = (self.face_of[t], (self.index_in_face[t] + 1) % 3)
                self.vertices.append(orbit)

    @property
    def puncture_vertices(self):
        """Puncture vertex ids in creation order (derived from anchor darts)."""
        return [self.tail_vertex(d) for d in self.puncture_anchors]

    # -- queries ----------------------------------------------------------

    @property
    def n_edges(self):
        return len(self.edge_darts)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_darts(self):
        return len(self.twin)

    def dart0(self, e):
        return self.edge_darts[e][0]

    def tail_vertex(self, d):
        """Vertex at the tail of dart d."""
        return self.vertex_of_corner[(self.face_of[d], self.index_in_face[d])]

    def head_vertex(self, d):
        f = self.face_of[d]
        return self.vertex_of_corner[(f, (self.index_in_face[d] + 1) % 3)]

    def rot_dart(self, d):
        """Next outgoing dart around tail(d), in a fixed rotational sense."""
        f = self.face_of[d]
        k = self.index_in_face[d]
        prev = self.faces[f][(k + 2) % 3]
        return self.twin[prev]

    def darts_at_vertex(self, v):
        """All darts with tail at v, in rotation order starting anywhere."""
        f, k = self.vertices[v][0]
        d0 = self.faces[f][k]
        out = [d0]
        d = self.rot_dart(d0)
        while d != d0:
            out.append(d)
            d = self.rot_dart(d)
        return out

    def euler_characteristic_interior(self):
        """V - E + F counting only non-puncture vertices (spec invariant)."""
        v = len(self.vertices) - len(self.puncture_vertices)
        return v - self.n_edges + self.n_faces

    # -- affine frame per face --------------------------------------------

    _FRAME = ((Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)),
              (Fraction(0), Fraction(1)))

    def face_point(self, f, k, t):
        """Point at parameter t along side k of face f (standard frame)."""
        a = self._FRAME[k]
        b = self._FRAME[(k + 1) % 3]
        return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))


def _fan_triangulation(g):
    """One-vertex triangulation of the closed surface of genus g >= 1."""
    tri = Triangulation()
    n_sides = 4 * g
    # surface edges for identified polygon side pairs
    side_edge = [None] * n_sides       # polygon side -> (edge, is_reference)
    for k in range(g):
        ea = tri._new_edge("a%d" % (k + 1))
        eb = tri._new_edge("b%d" % (k + 1))
        side_edge[4 * k] = (ea, True)
        side_edge[4 * k + 2] = (ea, False)
        side_edge[4 * k + 1] = (eb, True)
        side_edge[4 * k + 3] = (eb, False)
    diag_edge = {}
    for j in range(2, n_sides - 1):
        diag_edge[j] = tri._new_edge("d%d" % j)

    def side_dart(j):
        e, ref = side_edge[j]
        d0, d1 = tri.edge_darts[e]
        return d0 if ref else d1

    # face T_j has polygon vertices (0, j, j+1), j = 1 .. 4g-3+1
    for j in range(1, n_sides - 1):
        if j == 1:
            first = side_dart(0)
        else:
            first = tri.edge_darts[diag_edge[j]][0]
        second = side_dart(j)
        if j == n_sides - 2:
            third = side_dart(n_sides - 1)
        else:
            third = tri.edge_darts[diag_edge[j + 1]][1]
        tri._add_face([first, second, third])

    tri._compute_vertices()
    assert len(tri.vertices) == 1
    assert tri.n_edges == 6 * g - 3 and tri.n_faces == 4 * g - 2
    # polygon model bookkeeping used by the PL importer
    tri.genus = g
    tri.polygon_sides = n_sides
    tri.side_edge = side_edge
    tri.side_partner = {}
    for k in range(g):
        tri.side_partner[4 * k] = 4 * k + 2
        tri.side_partner[4 * k + 2] = 4 * k
        tri.side_partner[4 * k + 1] = 4 * k + 3
        tri.side_partner[4 * k + 3] = 4 * k + 1
    # exact rational points on the unit circle, ordered by angle
    pts = []
    for j in range(n_sides):
        t = Fraction(j, 1)
        den = 1 + t * t
        pts.append(((1 - t * t) / den, 2 * t / den))
    tri.polygon_points = pts
    return tri


def subdivide_face(tri, f):
    """Cone a new vertex into face f, replacing it by three faces.

    Returns (new_vertex, new_edges, face_map) where face_map sends each
    side dart of the old face to the new face that contains it.  The new
    vertex is marked as a puncture by the caller when appropriate.
    """
    x, y, z = tri.faces[f]
    # new edges from the cone point p to the three corners c0, c1, c2
    e0 = tri._new_edge("s%d.0" % f)
    e1 = tri._new_edge("s%d.1" % f)
    e2 = tri._new_edge("s%d.2" % f)
    a0, b0 = tri.edge_darts[e0]   # a: p -> corner, b: corner -> p
    a1, b1 = tri.edge_darts[e1]
    a2, b2 = tri.edge_darts[e2]
    # reuse slot f for the first new face to keep face indices compact
    for k, d in enumerate((x, y, z)):
        tri.face_of[d] = None
        tri.index_in_face[d] = None
    tri.faces[f] = [x, b1, a0]
    for k, d in enumerate(tri.faces[f]):
        tri.face_of[d] = f
        tri.index_in_face[d] = k
    f_y = tri._add_face([y, b2, a1])
    f_z = tri._add_face([z, b0, a2])
    tri._compute_vertices()
    tri.puncture_anchors.append(a0)   # tail of a0 is the cone point
    p = tri.tail_vertex(a0)
    return p, (e0, e1, e2), {x: f, y: f_y, z: f_z}
