"""Exact curve diagrams on a triangulated surface.

A diagram is a collection of disjointly embedded closed strands transverse
to the triangulation: each strand crosses edges at *tokens* and runs through
faces along *chords* joining two boundary tokens of the face.  Tokens on an
edge are kept in an ordered list (order along the edge's reference dart),
which pins the isotopy class of the whole picture without any numerical
coordinates.  Exact rational coordinates are only materialised inside a
single face when the arrangement of its chords is needed.

Reductions (bigon removal against an edge or between two strands) are
implemented as region pushes on the overlay complex; see `Overlay`.
"""

from fractions import Fraction
from functools import cmp_to_key


class DiagramError(Exception):
    pass


class Diagram:
    """Strand system: tokens on edges plus chord pairings inside faces."""

    def __init__(self, tri):
        self.tri = tri
        self.tokens = {}        # tok -> (edge, tag)
        self.edge_tokens = {}   # edge -> [tok, ...] ordered along dart0
        self.chords = {}        # face -> {tok: partner_tok}
        self._next = 0

    # -- basic mutation ----------------------------------------------------

    def copy(self):
        d = Diagram(self.tri)
        d.tokens = dict(self.tokens)
        d.edge_tokens = {e: list(v) for e, v in self.edge_tokens.items()}
        d.chords = {f: dict(v) for f, v in self.chords.items()}
        d._next = self._next
        return d

    def new_token(self, edge, index, tag):
        tok = self._next
        self._next += 1
        self.tokens[tok] = (edge, tag)
        self.edge_tokens.setdefault(edge, []).insert(index, tok)
        return tok

    def delete_token(self, tok):
        edge, _ = self.tokens.pop(tok)
        lst = self.edge_tokens[edge]
        lst.remove(tok)
        if not lst:
            del self.edge_tokens[edge]
        for f in self.faces_of_token_edge(edge):
            m = self.chords.get(f)
            if m and tok in m:
                partner = m.pop(tok)
                if partner in m and m[partner] == tok:
                    del m[partner]
                if not m:
                    del self.chords[f]

    def set_chord(self, face, a, b):
        m = self.chords.setdefault(face, {})
        if a in m or b in m:
            raise DiagramError("chord slot already used in face %s" % face)
        if a == b:
            raise DiagramError("degenerate chord")
        m[a] = b
        m[b] = a

    def faces_of_token_edge(self, edge):
        d0, d1 = self.tri.edge_darts[edge]
        return (self.tri.face_of[d0], self.tri.face_of[d1])

    def index_of(self, tok):
        edge = self.tokens[tok][0]
        return self.edge_tokens[edge].index(tok)

    def tag_of(self, tok):
        return self.tokens[tok][1]

    def edge_of(self, tok):
        return self.tokens[tok][0]

    def tags(self):
        return sorted({tag for _, tag in self.tokens.values()})

    def total_weight(self, tag=None):
        if tag is None:
            return len(self.tokens)
        return sum(1 for _, t in self.tokens.values() if t == tag)

    def weights(self, tag=None):
        """Per-edge crossing counts, indexed by edge id."""
        w = [0] * self.tri.n_edges
        for tok, (edge, t) in self.tokens.items():
            if tag is None or t == tag:
                w[edge] += 1
        return tuple(w)

    # -- face-side views ----------------------------------------------------

    def side_tokens(self, face, k):
        """Tokens along side k of the face, in the face's boundary direction."""
        d = self.tri.faces[face][k]
        e = self.tri.edge_of[d]
        lst = self.edge_tokens.get(e, [])
        if d == self.tri.dart0(e):
            return list(lst)
        return list(reversed(lst))

    def face_content(self, face):
        """(side token lists, chords as ((k,i),(k,i),tag) list) for arrangements."""
        sides = [self.side_tokens(face, k) for k in range(3)]
        pos = {}
        for k in range(3):
            for i, tok in enumerate(sides[k]):
                if tok in pos:
                    raise DiagramError("edge repeated in face %d" % face)
                pos[tok] = (k, i)
        out = []
        seen = set()
        for a, b in self.chords.get(face, {}).items():
            if a in seen:
                continue
            seen.add(a)
            seen.add(b)
            out.append((pos[a], pos[b], self.tag_of(a), a, b))
        out.sort(key=lambda c: (c[0], c[1]))
        return sides, out

    # -- traversal -----------------------------------------------------------

    def chord_partner(self, face, tok):
        return self.chords[face][tok]

    def trace_cycle(self, start_tok, start_face):
        """Token cycle of the strand through start_tok, entering via start_face.

        Returns (tokens, faces): faces[i] is the face of the chord from
        tokens[i] to tokens[i+1] (cyclically).
        """
        toks = []
        faces = []
        tok, face = start_tok, start_face
        while True:
            toks.append(tok)
            faces.append(face)
            partner = self.chords[face][tok]
            f1, f2 = self.faces_of_token_edge(self.edge_of(partner))
            nxt_face = f2 if f1 == face else f1
            tok, face = partner, nxt_face
            if tok == start_tok and face == start_face:
                break
        return toks, faces

    def components(self):
        """List of (tokens, faces) cycles, one per strand, deterministic order."""
        out = []
        seen = set()
        order = sorted(self.tokens, key=lambda t: (self.edge_of(t), self.index_of(t)))
        for tok in order:
            if tok in seen:
                continue
            f1, f2 = self.faces_of_token_edge(self.edge_of(tok))
            toks, faces = self.trace_cycle(tok, min(f1, f2))
            seen.update(toks)
            out.append((toks, faces))
        return out

    def restrict(self, tags):
        """New diagram containing only the strands with the given tags."""
        d = Diagram(self.tri)
        keep = {tok for tok, (_, t) in self.tokens.items() if t in tags}
        for e, lst in self.edge_tokens.items():
            fl = [t for t in lst if t in keep]
            if fl:
                d.edge_tokens[e] = fl
        d.tokens = {t: v for t, v in self.tokens.items() if t in keep}
        for f, m in self.chords.items():
            fm = {a: b for a, b in m.items() if a in keep}
            if fm:
                d.chords[f] = fm
        d._next = self._next
        return d

    def merged_with(self, other, self_first=True):
        """Overlay of two diagrams on the same surface; `other` gets fresh ids.

        On every edge the tokens of `self` come before the tokens of `other`
        (a canonical transverse interleaving; bigon reduction makes the
        result minimal afterwards).
        """
        if other.tri is not self.tri:
            raise DiagramError("diagrams on different surfaces")
        d = self.copy()
        remap = {}
        for tok in sorted(other.tokens):
            edge, tag = other.tokens[tok]
            remap[tok] = d._next
            d._next += 1
            d.tokens[remap[tok]] = (edge, tag)
        for e, lst in other.edge_tokens.items():
            mine = d.edge_tokens.setdefault(e, [])
            mapped = [remap[t] for t in lst]
            if self_first:
                mine.extend(mapped)
            else:
                d.edge_tokens[e] = mapped + mine
        for f, m in other.chords.items():
            dm = d.chords.setdefault(f, {})
            for a, b in m.items():
                dm[remap[a]] = remap[b]
        return d

    def relabel_tag(self, old, new):
        for tok, (edge, tag) in list(self.tokens.items()):
            if tag == old:
                self.tokens[tok] = (edge, new)

    # -- validation ----------------------------------------------------------

    def validate(self):
        """Structural and embeddedness checks; raises DiagramError."""
        for e, lst in self.edge_tokens.items():
            for t in lst:
                if self.tokens.get(t, (None,))[0] != e:
                    raise DiagramError("token list mismatch on edge %d" % e)
        counts = {t: 0 for t in self.tokens}
        for f, m in self.chords.items():
            for a, b in m.items():
                if m.get(b) != a:
                    raise DiagramError("chord map not an involution in face %d" % f)
                if a not in self.tokens:
                    raise DiagramError("chord references dead token")
                if f not in self.faces_of_token_edge(self.edge_of(a)):
                    raise DiagramError("chord in face not adjacent to its edge")
                counts[a] += 1
        for t, c in counts.items():
            if c != 2:
                raise DiagramError("token %d has %d chords, wants 2" % (t, c))
        # per-curve embeddedness: same-tag chords never interleave in a face
        for f in self.chords:
            sides, chords = self.face_content(f)
            for i in range(len(chords)):
                for j in range(i + 1, len(chords)):
                    if chords[i][2] == chords[j][2] and _interleaved(
                            chords[i][0], chords[i][1], chords[j][0], chords[j][1]):
                        raise DiagramError(
                            "strand %r crosses itself in face %d" % (chords[i][2], f))


def _cyc_less(a, b):
    return a < b


def _interleaved(p1, p2, q1, q2):
    """Do chords (p1,p2) and (q1,q2) cross, endpoints as (side, index)?

    Endpoints are compared in the cyclic boundary order of the face; chords
    with all four endpoints distinct cross iff exactly one of q1, q2 lies in
    one arc determined by p1, p2.
    """
    lo, hi = (p1, p2) if p1 < p2 else (p2, p1)
    in1 = lo < q1 < hi
    in2 = lo < q2 < hi
    return in1 != in2


# ---------------------------------------------------------------------------
# construction of diagrams


def diagram_from_weights(tri, weights, tag):
    """Normal-curve diagram from per-edge crossing numbers.

    Raises DiagramError when the corner counts are not nonnegative integers.
    The token ids are assigned deterministically, so equal weight vectors
    give structurally identical diagrams.
    """
    d = Diagram(tri)
    toks = {}
    for e in range(tri.n_edges):
        lst = []
        for i in range(weights[e]):
            lst.append(d._next)
            d.tokens[d._next] = (e, tag)
            d._next += 1
        if lst:
            d.edge_tokens[e] = lst
        toks[e] = lst
    for f in range(tri.n_faces):
        darts = tri.faces[f]
        w = [weights[tri.edge_of[dd]] for dd in darts]
        tot = w[0] + w[1] + w[2]
        if tot == 0:
            continue
        if tot % 2:
            raise DiagramError("odd weight sum in face %d" % f)
        corner = [0, 0, 0]
        for k in range(3):
            c = (w[(k + 2) % 3] + w[k] - w[(k + 1) % 3]) // 2
            if c < 0 or (w[(k + 2) % 3] + w[k] - w[(k + 1) % 3]) % 2:
                raise DiagramError("negative corner count in face %d" % f)
            corner[k] = c

        def side_list(k):
            dd = darts[k]
            e = tri.edge_of[dd]
            if dd == tri.dart0(e):
                return list(toks[e])
            return list(reversed(toks[e]))

        for k in range(3):
            # corner k arcs join the tail of side k with the head of side k-1
            a = side_list(k)[:corner[k]]
            b = side_list((k + 2) % 3)[::-1][:corner[k]]
            for x, y in zip(a, b):
                d.set_chord(f, x, y)
    return d


def diagram_from_poly_path(tri, crossings, tag):
    """Import a piecewise-linear closed path drawn on the polygon model.

    `crossings` is a cyclic list of (polygon_side, param) pairs: the path
    crosses polygon side s at parameter t along the side's direction, comes
    back in at the identified point of the partner side, and runs straight
    to the next crossing.  Diagonal crossings are computed exactly.
    """
    pts = tri.polygon_points
    n_sides = tri.polygon_sides

    def side_point(s, t):
        a = pts[s]
        b = pts[(s + 1) % n_sides]
        return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))

    # tokens for the polygon-side crossings
    d = Diagram(tri)
    events = []   # per path step: (token, entry_point, exit_point data)
    side_toks = []
    for (s, t) in crossings:
        if not (0 < t < 1):
            raise DiagramError("side parameter out of range")
        e, is_ref = tri.side_edge[s]
        param = t if is_ref else 1 - t
        tok = d._next
        d._next += 1
        d.tokens[tok] = (e, tag)
        side_toks.append((tok, e, param))

    # diagonal data: edge 'd%j' corresponds to segment V0 -> Vj
    diag_edges = {}
    for e in range(tri.n_edges):
        name = tri.edge_names[e]
        if name.startswith("d"):
            diag_edges[int(name[1:])] = e

    def face_between(c1, c2):
        """Face containing both boundary cells c1, c2 ('side',s) or ('diag',j)."""
        def faces_of(c):
            if c[0] == 'side':
                e, is_ref = tri.side_edge[c[1]]
                dd = tri.dart0(e) if is_ref else tri.edge_darts[e][1]
                return {tri.face_of[dd]}
            e = diag_edges[c[1]]
            return {tri.face_of[tri.edge_darts[e][0]],
                    tri.face_of[tri.edge_darts[e][1]]}
        common = faces_of(c1) & faces_of(c2)
        if len(common) != 1:
            raise DiagramError("ambiguous face between %r and %r" % (c1, c2))
        return common.pop()

    pending = []   # (edge, param, tok) to be ordered later
    chords = []    # (face, tokA, tokB)
    m = len(crossings)
    for i in range(m):
        s_exit, t_exit = crossings[i]
        tok_prev = side_toks[i][0]
        s_in = tri.side_partner[s_exit]
        p = side_point(s_in, 1 - t_exit)
        s_next, t_next = crossings[(i + 1) % m]
        q = side_point(s_next, t_next)
        tok_next = side_toks[(i + 1) % m][0]
        # diagonal crossings along the open segment p -> q
        hits = []
        for j, e in diag_edges.items():
            a, b = pts[0], pts[j]
            st = _seg_params(p, q, a, b)
            if st is not None:
                hits.append((st[0], st[1], j, e))
        hits.sort()
        cells = [('side', s_in)]
        toks = [tok_prev]
        for (s_par, t_par, j, e) in hits:
            tok = d._next
            d._next += 1
            d.tokens[tok] = (e, tag)
            pending.append((e, t_par, tok))
            cells.append(('diag', j))
            toks.append(tok)
        cells.append(('side', s_next))
        toks.append(tok_next)
        for a in range(len(toks) - 1):
            chords.append((face_between(cells[a], cells[a + 1]), toks[a], toks[a + 1]))

    # order tokens along their edges
    per_edge = {}
    for (tok, e, param) in side_toks:
        per_edge.setdefault(e, []).append((param, tok))
    for (e, param, tok) in pending:
        per_edge.setdefault(e, []).append((param, tok))
    for e, lst in per_edge.items():
        lst.sort()
        params = [p for p, _ in lst]
        if len(set(params)) != len(params):
            raise DiagramError("coincident crossings on edge %d" % e)
        d.edge_tokens[e] = [tok for _, tok in lst]
    for (f, a, b) in chords:
        d.set_chord(f, a, b)
    d.validate()
    return d


def _seg_params(p1, p2, q1, q2):
    """Proper-crossing parameters (s, t) of segments p1p2, q1q2, else None."""
    d1 = (p2[0] - p1[0], p2[1] - p1[1])
    d2 = (q2[0] - q1[0], q2[1] - q1[1])
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if den == 0:
        return None
    w = (q1[0] - p1[0], q1[1] - p1[1])
    s = Fraction(w[0] * d2[1] - w[1] * d2[0], den)
    t = Fraction(w[0] * d1[1] - w[1] * d1[0], den)
    if 0 < s < 1 and 0 < t < 1:
        return (s, t)
    return None


# ---------------------------------------------------------------------------
# exact planar arrangement inside one face


def _cross2(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _angle_cmp(u, v):
    """Compare direction vectors counterclockwise starting from +x axis."""
    def half(w):
        return 0 if (w[1] > 0 or (w[1] == 0 and w[0] > 0)) else 1
    hu, hv = half(u), half(v)
    if hu != hv:
        return -1 if hu < hv else 1
    c = _cross2(u, v)
    if c > 0:
        return -1
    if c < 0:
        return 1
    return 0


class FaceArrangement:
    """Planar subdivision of one triangular face by the chords inside it.

    Inputs are positional: token counts per side and chords given by
    (side, index) endpoints with a tag class.  Chords with both endpoints on
    one side are drawn as two-segment tents so that everything stays exact.
    """

    def __init__(self, side_counts, chords, frame):
        self.side_counts = side_counts
        self.chords = chords          # list of ((k1,i1),(k2,i2), tagclass)
        self.frame = frame
        for attempt in range(10):
            self._h_scale = Fraction(1, 64 * 4 ** attempt)
            self._jitter = attempt
            try:
                self._build()
                return
            except _Degenerate:
                continue
        raise DiagramError("could not build a generic arrangement")

    # node ids: ('C', k), ('T', k, i), ('X', ci, cj) with ci < cj
    def _pt(self, k, i):
        n = self.side_counts[k]
        t = Fraction(i + 1, n + 1)
        if self._jitter:
            # order-preserving perturbation to break accidental concurrences
            t += Fraction(i + 1, (n + 1) * (n + 2) * (k + 2) * 7 ** self._jitter)
        a, b = self.frame[k], self.frame[(k + 1) % 3]
        return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))

    def _polyline(self, ci):
        (p1, p2, _tag) = self.chords[ci][:3]
        a, b = self._pt(*p1), self._pt(*p2)
        if p1[0] != p2[0]:
            return [a, b]
        # tent over the shared side; height scales with span^2 for nesting
        k = p1[0]
        sa, sb = self.frame[k], self.frame[(k + 1) % 3]
        side_vec = (sb[0] - sa[0], sb[1] - sa[1])
        third = self.frame[(k + 2) % 3]
        inward = (third[0] - (sa[0] + sb[0]) / 2, third[1] - (sa[1] + sb[1]) / 2)
        n = self.side_counts[k]
        span = abs(Fraction(p2[1] - p1[1], n + 1))
        h = span * span * self._h_scale
        mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
        apex = (mid[0] + h * inward[0], mid[1] + h * inward[1])
        return [a, apex, b]

    def _build(self):
        chords = self.chords
        polylines = [self._polyline(ci) for ci in range(len(chords))]
        ncross_expected = {}
        hits = {}   # (ci, cj) -> (coord, param_i, param_j, dir_i, dir_j)
        for ci in range(len(chords)):
            for cj in range(ci + 1, len(chords)):
                want = 1 if _interleaved(chords[ci][0], chords[ci][1],
                                         chords[cj][0], chords[cj][1]) else 0
                got = []
                for si in range(len(polylines[ci]) - 1):
                    for sj in range(len(polylines[cj]) - 1):
                        a1, a2 = polylines[ci][si], polylines[ci][si + 1]
                        b1, b2 = polylines[cj][sj], polylines[cj][sj + 1]
                        st = _seg_params(a1, a2, b1, b2)
                        if st is not None:
                            coord = (a1[0] + st[0] * (a2[0] - a1[0]),
                                     a1[1] + st[0] * (a2[1] - a1[1]))
                            d_i = (a2[0] - a1[0], a2[1] - a1[1])
                            d_j = (b2[0] - b1[0], b2[1] - b1[1])
                            got.append(((si, st[0]), (sj, st[1]), coord, d_i, d_j))
                if len(got) != want:
                    raise _Degenerate()
                if got:
                    hits[(ci, cj)] = got[0]
                ncross_expected[(ci, cj)] = want
        # order crossings along each chord; detect coincidences
        per_chord = {ci: [] for ci in range(len(chords))}
        for (ci, cj), (pi, pj, coord, d_i, d_j) in hits.items():
            per_chord[ci].append((pi, cj, coord))
            per_chord[cj].append((pj, ci, coord))
        for ci, lst in per_chord.items():
            lst.sort()
            params = [p for p, _, _ in lst]
            if len(set(params)) != len(params):
                raise _Degenerate()
        coords_seen = {}
        for (ci, cj), (_pi, _pj, coord, _di, _dj) in hits.items():
            if coord in coords_seen:
                raise _Degenerate()
            coords_seen[coord] = (ci, cj)

        # nodes
        self.node_coord = {}
        for k in range(3):
            self.node_coord[('C', k)] = self.frame[k]
            for i in range(self.side_counts[k]):
                self.node_coord[('T', k, i)] = self._pt(k, i)
        for (ci, cj), (_pi, _pj, coord, d_i, d_j) in hits.items():
            self.node_coord[('X', ci, cj)] = coord
        self.hits = hits
        self.per_chord = per_chord

        # cells as (tail_node, head_node, cell_id, dir_tail, dir_head)
        cells = []
        for k in range(3):
            seq = [('C', k)] + [('T', k, i) for i in range(self.side_counts[k])] \
                + [('C', (k + 1) % 3)]
            a, b = self.frame[k], self.frame[(k + 1) % 3]
            dvec = (b[0] - a[0], b[1] - a[1])
            for j in range(len(seq) - 1):
                cells.append((seq[j], seq[j + 1], ('B', k, j), dvec, dvec))
        self.chord_nodes = {}
        for ci in range(len(chords)):
            (p1, p2, _tag) = chords[ci][:3]
            seq = [('T',) + p1] + [('X', min(ci, cj), max(ci, cj))
                                   for _p, cj, _c in per_chord[ci]] + [('T',) + p2]
            self.chord_nodes[ci] = seq
            poly = polylines[ci]
            marks = [(0, Fraction(0))] + [p for p, _, _ in per_chord[ci]] \
                + [(len(poly) - 2, Fraction(1))]
            for j in range(len(seq) - 1):
                (s1, t1), (s2, t2) = marks[j], marks[j + 1]
                d_tail = (poly[s1 + 1][0] - poly[s1][0], poly[s1 + 1][1] - poly[s1][1])
                d_head = (poly[s2 + 1][0] - poly[s2][0], poly[s2 + 1][1] - poly[s2][1])
                cells.append((seq[j], seq[j + 1], ('S', ci, j), d_tail, d_head))

        # half edges: 2 per cell
        self.he_tail = []
        self.he_head = []
        self.he_cell = []
        self.he_dir = []
        self.he_twin = []
        out_at = {}
        for (t, h, cell, dt, dh) in cells:
            i = len(self.he_tail)
            self.he_tail += [t, h]
            self.he_head += [h, t]
            self.he_cell += [cell, cell]
            self.he_dir += [dt, (-dh[0], -dh[1])]
            self.he_twin += [i + 1, i]
            out_at.setdefault(t, []).append(i)
            out_at.setdefault(h, []).append(i + 1)
        for node, lst in out_at.items():
            lst.sort(key=cmp_to_key(lambda x, y: _angle_cmp(self.he_dir[x],
                                                            self.he_dir[y])))
        self.out_at = out_at

        # face orbits: next = clockwise-neighbour of twin at head
        nxt = [None] * len(self.he_tail)
        for h in range(len(self.he_tail)):
            tw = self.he_twin[h]
            lst = out_at[self.he_head[h]]
            i = lst.index(tw)
            nxt[h] = lst[(i - 1) % len(lst)]
        self.he_next = nxt
        orbit_of = [None] * len(self.he_tail)
        orbits = []
        for h in range(len(self.he_tail)):
            if orbit_of[h] is not None:
                continue
            oid = len(orbits)
            cur = h
            members = []
            while orbit_of[cur] is None:
                orbit_of[cur] = oid
                members.append(cur)
                cur = nxt[cur]
            orbits.append(members)
        # the outer orbit contains the reversed first boundary cell of side 0
        out_he = None
        for h in range(len(self.he_tail)):
            if self.he_cell[h] == ('B', 0, 0) and self.he_head[h] == ('C', 0):
                out_he = h
        self.outer_orbit = orbit_of[out_he]
        self.orbit_of = orbit_of
        self.orbits = orbits
        self.n_pieces = len(orbits) - 1
        # piece ids: orbits renumbered skipping the outer one
        self.piece_of_orbit = {}
        pid = 0
        for i in range(len(orbits)):
            if i != self.outer_orbit:
                self.piece_of_orbit[i] = pid
                pid += 1

    def piece_of_he(self, h):
        o = self.orbit_of[h]
        return None if o == self.outer_orbit else self.piece_of_orbit[o]


class _Degenerate(Exception):
    pass


# ---------------------------------------------------------------------------
# global overlay complex


class Overlay:
    """Overlay complex of a diagram with the triangulation skeleton.

    Provides exact crossing data and region analysis (components of the
    complement of selected barrier cells), which drives every bigon move.
    Global cells: ('E', edge, gap) for edge segments, ('S', face, ci, j) for
    chord segments.  Global half-edges are (face, local_he).
    """

    def __init__(self, diagram):
        self.d = diagram
        tri = diagram.tri
        self.tri = tri
        self.arr = {}
        self.face_sides = {}     # face -> [token lists per side]
        self.face_chords = {}    # face -> chord list with token ids
        tag_class = {}
        for t in diagram.tags():
            tag_class[t] = len(tag_class)
        self.tag_class = tag_class
        for f in range(tri.n_faces):
            sides, chords = diagram.face_content(f)
            self.face_sides[f] = sides
            self.face_chords[f] = chords
            pos_chords = [(c[0], c[1], tag_class[c[2]]) for c in chords]
            self.arr[f] = FaceArrangement(
                tuple(len(s) for s in sides), pos_chords, tri._FRAME)

        # global cell wiring
        self._eseg_hes = {}   # ('E', e, gap) -> [ghe, ghe]
        self._ghe_cell = {}   # ghe -> global cell
        for f in range(tri.n_faces):
            a = self.arr[f]
            for h in range(len(a.he_tail)):
                if a.piece_of_he(h) is None:
                    continue
                cell = a.he_cell[h]
                if cell[0] == 'B':
                    g = self._global_eseg(f, cell[1], cell[2])
                    self._eseg_hes.setdefault(g, []).append((f, h))
                    self._ghe_cell[(f, h)] = g
                else:
                    self._ghe_cell[(f, h)] = ('S', f, cell[1], cell[2])
        for g, lst in self._eseg_hes.items():
            if len(lst) != 2:
                raise DiagramError("edge segment %r not shared by 2 faces" % (g,))

    # -- identity helpers ---------------------------------------------------

    def _global_eseg(self, f, k, j):
        tri = self.tri
        d = tri.faces[f][k]
        e = tri.edge_of[d]
        n = len(self.d.edge_tokens.get(e, ()))
        gap = j if d == tri.dart0(e) else n - j
        return ('E', e, gap)

    def gnode(self, f, node):
        if node[0] == 'C':
            return ('V', self.tri.vertex_of_corner[(f, node[1])])
        if node[0] == 'T':
            return ('T', self.face_sides[f][node[1]][node[2]])
        return ('X', f, node[1], node[2])

    def cell_of(self, ghe):
        return self._ghe_cell[ghe]

    def cell_tag(self, cell):
        if cell[0] == 'S':
            return self.face_chords[cell[1]][cell[2]][2]
        return None

    def chord_info(self, f, ci):
        """((k,i),(k,i), tag, tokA, tokB) for chord ci of face f."""
        return self.face_chords[f][ci]

    def twin(self, ghe):
        f, h = ghe
        cell = self._ghe_cell[ghe]
        if cell[0] == 'S':
            return (f, self.arr[f].he_twin[h])
        a, b = self._eseg_hes[cell]
        return b if a == ghe else a

    def succ(self, ghe):
        f, h = ghe
        return (f, self.arr[f].he_next[h])

    def piece(self, ghe):
        f, h = ghe
        p = self.arr[f].piece_of_he(h)
        return None if p is None else (f, p)

    # -- crossings ------------------------------------------------------------

    def crossings(self):
        """List of (face, ci, cj, tagA, tagB, tokens...) for all chord crossings."""
        out = []
        for f, a in self.arr.items():
            for (ci, cj) in a.hits:
                ca = self.face_chords[f][ci]
                cb = self.face_chords[f][cj]
                out.append((f, ci, cj, ca[2], cb[2]))
        return out

    def crossing_count(self, tag_a, tag_b):
        n = 0
        for (_f, _ci, _cj, ta, tb) in self.crossings():
            if {ta, tb} == {tag_a, tag_b}:
                n += 1
        return n

    def crossing_sign(self, f, ci, cj, flip_i=False, flip_j=False):
        """Sign of the frame (dir_i, dir_j) at the crossing of chords ci, cj."""
        a = self.arr[f]
        key = (min(ci, cj), max(ci, cj))
        (_pi, _pj, _coord, d_i, d_j) = a.hits[key]
        if key != (ci, cj):
            d_i, d_j = d_j, d_i
        if flip_i:
            d_i = (-d_i[0], -d_i[1])
        if flip_j:
            d_j = (-d_j[0], -d_j[1])
        c = _cross2(d_i, d_j)
        return 1 if c > 0 else -1

    # -- regions ----------------------------------------------------------------

    def regions(self, is_barrier):
        """Union-find of pieces across all non-barrier cells.

        is_barrier: predicate on global cells.  Returns (parent map,
        barrier half-edge list grouped later by the caller).
        """
        parent = {}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for f, a in self.arr.items():
            for p in range(a.n_pieces):
                parent[(f, p)] = (f, p)
        seen = set()
        for ghe in self._ghe_cell:
            cell = self._ghe_cell[ghe]
            if cell in seen:
                continue
            seen.add(cell)
            if is_barrier(cell):
                continue
            p1 = self.piece(ghe)
            p2 = self.piece(self.twin(ghe))
            r1, r2 = find(p1), find(p2)
            if r1 != r2:
                parent[r1] = r2
        self._find = find
        return parent, find

    def region_analysis(self, is_barrier):
        """Full region decomposition with boundary cycles and Euler data.

        Returns a list of Region objects, deterministically ordered.
        """
        parent, find = self.regions(is_barrier)
        pieces_of = {}
        for p in parent:
            pieces_of.setdefault(find(p), set()).add(p)

        # node -> incident region roots, and interior cell/node counts
        node_regions = {}
        node_on_barrier = set()
        for ghe in self._ghe_cell:
            f, h = ghe
            a = self.arr[f]
            gn = self.gnode(f, a.he_tail[h])
            node_regions.setdefault(gn, set()).add(find(self.piece(ghe)))
            if is_barrier(self._ghe_cell[ghe]):
                node_on_barrier.add(gn)
                node_on_barrier.add(self.gnode(f, a.he_head[h]))
        cell_count = {}
        cell_sides = {}
        seen = set()
        for ghe, cell in self._ghe_cell.items():
            if cell in seen:
                continue
            seen.add(cell)
            r1 = find(self.piece(ghe))
            r2 = find(self.piece(self.twin(ghe)))
            cell_sides[cell] = (r1, r2)
            if not is_barrier(cell) and r1 == r2:
                cell_count[r1] = cell_count.get(r1, 0) + 1

        regions = {}
        for root, pieces in pieces_of.items():
            regions[root] = Region(self, root, pieces)
        for gn, roots in node_regions.items():
            if len(roots) == 1 and gn not in node_on_barrier:
                r = roots.pop()
                regions[r].interior_nodes.append(gn)
        for root, reg in regions.items():
            reg.chi = len(reg.pieces) - cell_count.get(root, 0) \
                + len(reg.interior_nodes)
            reg.punctures = [gn[1] for gn in reg.interior_nodes
                             if gn[0] == 'V'
                             and gn[1] in self.tri.puncture_vertices]

        # boundary cycles
        assigned = set()
        for ghe, cell in sorted(self._ghe_cell.items()):
            if not is_barrier(cell) or ghe in assigned:
                continue
            root = find(self.piece(ghe))
            cyc = []
            cur = ghe
            while True:
                assigned.add(cur)
                skipped = []
                g = self.succ(cur)
                while not is_barrier(self._ghe_cell[g]):
                    skipped.append(self._ghe_cell[g])
                    g = self.succ(self.twin(g))
                cyc.append((cur, self._ghe_cell[cur], skipped))
                cur = g
                if cur == ghe:
                    break
            regions[root].cycles.append(cyc)
        return sorted(regions.values(), key=lambda r: sorted(r.pieces)[0])


class Region:
    def __init__(self, overlay, root, pieces):
        self.ov = overlay
        self.root = root
        self.pieces = pieces
        self.interior_nodes = []
        self.punctures = []
        self.chi = None
        self.cycles = []   # list of [(ghe, cell, skipped_cells_after)]

    def ghe_nodes(self, ghe):
        f, h = ghe
        a = self.ov.arr[f]
        return (self.ov.gnode(f, a.he_tail[h]), self.ov.gnode(f, a.he_head[h]))


# ---------------------------------------------------------------------------
# reduction moves


def _remove_chord(d, face, a):
    m = d.chords[face]
    b = m.pop(a)
    if m.get(b) == a:
        del m[b]
    if not m:
        del d.chords[face]
    return b


def _normalize_returns(d):
    """Pull innermost return chords (same edge, adjacent tokens) across.

    Valid in overlays too: adjacency means the cut-off disk is empty.
    Returns the set of tags whose strand vanished entirely.
    """
    died = set()
    changed = True
    while changed:
        changed = False
        for f in sorted(d.chords):
            m = d.chords[f]
            for a in sorted(m):
                b = m.get(a)
                if b is None or b < a:
                    continue
                ea, eb = d.edge_of(a), d.edge_of(b)
                if ea != eb:
                    continue
                ia, ib = d.index_of(a), d.index_of(b)
                if abs(ia - ib) != 1:
                    continue
                f1, f2 = d.faces_of_token_edge(ea)
                other = f2 if f == f1 else f1
                x = d.chords[other][a]
                if x == b:
                    tag = d.tag_of(a)
                    _remove_chord(d, f, a)
                    _remove_chord(d, other, a)
                    d.delete_token(a)
                    d.delete_token(b)
                    if d.total_weight(tag) == 0:
                        died.add(tag)
                else:
                    y = d.chords[other][b]
                    _remove_chord(d, f, a)
                    _remove_chord(d, other, a)
                    _remove_chord(d, other, b)
                    d.delete_token(a)
                    d.delete_token(b)
                    d.set_chord(other, x, y)
                changed = True
                break
            if changed:
                break
    return died


def _cycle_item_nodes(region, cycle):
    """Node after each cycle item (= head of its half-edge)."""
    out = []
    for (ghe, _cell, _skipped) in cycle:
        out.append(region.ghe_nodes(ghe)[1])
    return out


def _split_runs(cycle, keyfun):
    """Split a cyclic item list into maximal runs of equal key.

    Returns list of (key, [indices]) rotated so a run boundary is at 0.
    """
    n = len(cycle)
    keys = [keyfun(it) for it in cycle]
    if all(k == keys[0] for k in keys):
        return [(keys[0], list(range(n)))]
    start = 0
    while keys[start - 1] == keys[start]:
        start -= 1
    runs = []
    i = 0
    order = [(start + j) % n for j in range(n)]
    while i < n:
        j = i
        run = []
        while j < n and keys[order[j]] == keys[order[i]]:
            run.append(order[j])
            j += 1
        runs.append((keys[order[i]], run))
        i = j
    return runs


def _clean_pair_bigon(ov, region, tag_pair):
    """Check region is an honest bigon of the two tags; return push data or None."""
    if region.chi != 1 or region.punctures or len(region.cycles) != 1:
        return None
    cycle = region.cycles[0]
    cells = [it[1] for it in cycle]
    if len(set(cells)) != len(cells):
        return None
    tags = []
    for cell in cells:
        if cell[0] != 'S':
            return None
        tags.append(ov.cell_tag(cell))
    runs = _split_runs(cycle, lambda it: ov.cell_tag(it[1]))
    if len(runs) != 2 or {runs[0][0], runs[1][0]} != set(tag_pair):
        return None
    nodes = _cycle_item_nodes(region, cycle)
    corner_a = nodes[runs[0][1][-1]]   # node after run0 = start of run1
    corner_b = nodes[runs[1][1][-1]]
    if corner_a[0] != 'X' or corner_b[0] != 'X' or corner_a == corner_b:
        return None
    return (cycle, runs, corner_a, corner_b)


def _chord_far_token(ov, corner_node, item_ghe):
    """Token endpoint of the corner's chord on the side away from the run.

    The run cseg at the corner is segment `seg` of its chord; the corner sits
    at node position `seg` or `seg+1` of the chord's node sequence, and the
    far endpoint is the chord end on the corner's side.
    """
    (_x, f, ci, cj) = corner_node
    cell = ov.cell_of(item_ghe)
    chord_idx = cell[2]
    seg = cell[3]
    info = ov.chord_info(f, chord_idx)
    seq = ov.arr[f].chord_nodes[chord_idx]
    pos = seq.index(('X', ci, cj))
    if pos == seg:
        return info[3]
    if pos == seg + 1:
        return info[4]
    raise DiagramError("corner not on its run segment")


def _local_region_gap(ov, d, tok, item_ghe):
    """Gap index of tok's edge on the bigon side, next to the boundary piece.

    item_ghe is a boundary half-edge of the run ending or starting at tok;
    its left piece sits in the corner between the chord and exactly one of
    the two edge gaps at the token.
    """
    e = d.edge_of(tok)
    i = d.index_of(tok)
    p_local = ov.piece(item_ghe)
    for gap in (i, i + 1):
        hes = ov._eseg_hes.get(('E', e, gap), ())
        if any(ov.piece(h) == p_local for h in hes):
            return gap
    raise DiagramError("boundary piece not adjacent to either gap")


def _push_pair_bigon(d, ov, region, data):
    """Re-route one strand of a clean pair bigon along the other. Mutates d."""
    (cycle, runs, _corner_a, _corner_b) = data
    nodes_after = _cycle_item_nodes(region, cycle)

    def interior_tokens(run):
        return [nodes_after[idx][1] for idx in run[1][:-1]
                if nodes_after[idx][0] == 'T']

    toks = [interior_tokens(runs[0]), interior_tokens(runs[1])]
    if len(toks[0]) != len(toks[1]):
        move = 0 if len(toks[0]) < len(toks[1]) else 1
    else:
        move = 0 if str(runs[0][0]) <= str(runs[1][0]) else 1
    mrun, orun = runs[move], runs[1 - move]
    tag_m = mrun[0]
    # corner at the end of each run (cyclic walk order)
    end_node = {0: nodes_after[runs[0][1][-1]], 1: nodes_after[runs[1][1][-1]]}
    m_end = end_node[move]
    m_start = end_node[1 - move]
    first_item = cycle[mrun[1][0]]
    last_item = cycle[mrun[1][-1]]
    u_start = _chord_far_token(ov, m_start, first_item[0])
    u_end = _chord_far_token(ov, m_end, last_item[0])

    # other-run tokens in cycle order (m_end -> m_start), with the face of the
    # chord following each token
    o_seq = []
    for pos, idx in enumerate(orun[1]):
        gn = nodes_after[idx]
        if gn[0] == 'T':
            nxt = orun[1][pos + 1]
            o_seq.append((gn[1], cycle[nxt][1][1]))
    face_start = m_start[1]
    face_end = m_end[1]

    # insertion plan before mutating anything: next to each other-run token,
    # on the side opposite the bigon (locally)
    plan = []
    for pos, idx in enumerate(orun[1]):
        gn = nodes_after[idx]
        if gn[0] != 'T':
            continue
        s = gn[1]
        gap = _local_region_gap(ov, d, s, cycle[idx][0])
        before = (gap == d.index_of(s) + 1)   # bigon after s -> insert before
        plan.append((s, before))

    # when the complementary arc of the moving strand carries no tokens, the
    # whole strand is re-routed (its chord carries both corners)
    whole = u_start in toks[move] or u_end in toks[move]

    # remove the moving run's chords, then its interior tokens
    for idx in mrun[1]:
        cell = cycle[idx][1]
        f, ci = cell[1], cell[2]
        tok_a = ov.chord_info(f, ci)[3]
        if f in d.chords and tok_a in d.chords[f]:
            _remove_chord(d, f, tok_a)
    for tok in toks[move]:
        if tok in d.tokens:
            d.delete_token(tok)

    new_of = {}
    for (s, before) in plan:
        e = d.edge_of(s)
        i = d.index_of(s)
        new_of[s] = d.new_token(e, i if before else i + 1, tag_m)

    rev = list(reversed(o_seq))
    if whole:
        if face_start != face_end:
            raise DiagramError("whole-strand bigon corners in different faces")
        if not rev:
            raise DiagramError("essential strand cannot vanish in a pair push")
        if len(rev) == 1:
            raise DiagramError("single-token strand cannot exist")
        for j in range(len(rev) - 1):
            d.set_chord(rev[j + 1][1], new_of[rev[j][0]], new_of[rev[j + 1][0]])
        d.set_chord(face_start, new_of[rev[-1][0]], new_of[rev[0][0]])
        return

    # chain: u_start parallel to the other run reversed
    if not rev:
        if face_start != face_end:
            raise DiagramError("tokenless bigon corners in different faces")
        d.set_chord(face_start, u_start, u_end)
        return
    d.set_chord(face_start, u_start, new_of[rev[0][0]])
    for j in range(len(rev) - 1):
        # chord between rev[j] and rev[j+1] lives in the face recorded after
        # the cycle-earlier token, which is rev[j+1]
        d.set_chord(rev[j + 1][1], new_of[rev[j][0]], new_of[rev[j + 1][0]])
    d.set_chord(face_end, new_of[rev[-1][0]], u_end)


def reduce_overlay_diagram(d, decorate=None):
    """Remove pair bigons until every pair of strands is in minimal position.

    Mutates d; returns the Overlay of the final position.
    """
    _normalize_returns(d)
    guard = 0
    while True:
        guard += 1
        if guard > 10000:
            raise DiagramError("pair reduction did not terminate")
        ov = Overlay(d)
        tags = d.tags()
        best = None
        for ia in range(len(tags)):
            for ib in range(ia + 1, len(tags)):
                pair = (tags[ia], tags[ib])
                if ov.crossing_count(*pair) == 0:
                    continue
                def barrier(cell, pair=pair):
                    return cell[0] == 'S' and ov.cell_tag(cell) in pair
                for region in ov.region_analysis(barrier):
                    data = _clean_pair_bigon(ov, region, pair)
                    if data is None:
                        continue
                    key = (len(region.pieces), sorted(region.pieces)[0], pair)
                    if best is None or key < best[0]:
                        best = (key, region, data)
        if best is None:
            return ov
        _push_pair_bigon(d, ov, best[1], best[2])
        _normalize_returns(d)


# ---------------------------------------------------------------------------
# reduction against the skeleton (canonical position of a single strand)


def _end_dart(tri, d, cell):
    """Dart whose tail is at the vertex end of an end segment cell."""
    (_e, e, gap) = cell
    n = len(d.edge_tokens.get(e, ()))
    if gap == 0:
        return tri.edge_darts[e][0]
    if gap == n:
        return tri.edge_darts[e][1]
    raise DiagramError("not an end segment")


def _sector_face(tri, x, y):
    """Face of the corner between rotation-adjacent outgoing darts x, y."""
    if tri.rot_dart(x) == y:
        return tri.face_of[x]
    if tri.rot_dart(y) == x:
        return tri.face_of[y]
    raise DiagramError("darts not rotation adjacent")


def _clean_edge_bigon(ov, d, region, tag, edge):
    """Full push plan if the region is an honest strand-vs-edge bigon.

    Returns None when the region is not a clean bigon; else a dict with the
    run tokens, corner tokens, far-side dart walk and the weight change.
    """
    tri = d.tri
    if region.chi != 1 or region.punctures or len(region.cycles) != 1:
        return None
    cycle = region.cycles[0]
    cells = [it[1] for it in cycle]
    if len(set(cells)) != len(cells):
        return None
    runs = _split_runs(cycle, lambda it: it[1][0])
    if len(runs) != 2 or {runs[0][0], runs[1][0]} != {'S', 'E'}:
        return None
    nodes_after = _cycle_item_nodes(region, cycle)
    erun = runs[0] if runs[0][0] == 'E' else runs[1]
    crun = runs[0] if runs[0][0] == 'S' else runs[1]
    p_to_c = nodes_after[erun[1][-1]]    # e-run hands over to the strand run
    c_to_e = nodes_after[crun[1][-1]]
    if p_to_c[0] != 'T' or c_to_e[0] != 'T' or p_to_c == c_to_e:
        return None
    passes = []
    for pos, idx in enumerate(erun[1][:-1]):
        gn = nodes_after[idx]
        if gn[0] != 'V':
            return None
        if gn[1] in tri.puncture_vertices:
            return None
        passes.append((gn[1], idx, erun[1][pos + 1]))
    for idx in crun[1][:-1]:
        if nodes_after[idx][0] != 'T':
            return None
    if len(passes) > 1:
        return None
    run_toks = [nodes_after[idx][1] for idx in crun[1][:-1]]

    far_darts = []
    sector_faces = []
    if passes:
        (w, idx_in, idx_out) = passes[0]
        d_in = _end_dart(tri, d, cycle[idx_in][1])
        d_out = _end_dart(tri, d, cycle[idx_out][1])
        rot = tri.darts_at_vertex(w)
        i_in = rot.index(d_in)
        i_out = rot.index(d_out)
        n = len(rot)
        arc_fwd = [rot[(i_in + j) % n] for j in range(1, (i_out - i_in) % n)]
        arc_bwd = [rot[(i_in - j) % n] for j in range(1, (i_in - i_out) % n)]
        # the walk circles w through the region; the region-side piece at the
        # in segment tells which rotational side that is
        f_region = ov.piece(cycle[idx_in][0])[0]
        far = arc_bwd if f_region == tri.face_of[d_in] else arc_fwd
        far_darts = far
        walk = [d_in] + far + [d_out]
        for j in range(len(walk) - 1):
            sector_faces.append(_sector_face(tri, walk[j], walk[j + 1]))

    delta = len(far_darts) - (len(run_toks) + 2)
    return {
        'cycle': cycle, 'erun': erun, 'crun': crun,
        'p_to_c': p_to_c[1], 'c_to_e': c_to_e[1], 'run_toks': run_toks,
        'far_darts': far_darts, 'sector_faces': sector_faces,
        'delta': delta, 'edge': edge,
    }


def _push_edge_bigon(d, ov, plan, tag):
    """Push the strand across the edge path of a clean bigon; mutates d.

    Returns 'died' if the strand vanished.
    """
    tri = d.tri
    cycle = plan['cycle']
    crun = plan['crun']
    p_to_c = plan['p_to_c']
    c_to_e = plan['c_to_e']
    run_toks = plan['run_toks']
    far_darts = plan['far_darts']
    sector_faces = plan['sector_faces']

    first_c = cycle[crun[1][0]][1]
    e_edge = plan['edge']
    f1, f2 = d.faces_of_token_edge(e_edge)
    f_other = f2 if first_c[1] == f1 else f1
    prev = d.chords[f_other][p_to_c]
    nxt = d.chords[f_other][c_to_e]

    for idx in crun[1]:
        cell = cycle[idx][1]
        f, ci = cell[1], cell[2]
        tok_a = ov.chord_info(f, ci)[3]
        if f in d.chords and tok_a in d.chords[f]:
            _remove_chord(d, f, tok_a)
    whole_curve = prev in run_toks or prev in (p_to_c, c_to_e)
    for tok in run_toks + [p_to_c, c_to_e]:
        if tok in d.tokens:
            d.delete_token(tok)

    new_toks = []
    for dd in far_darts:
        e2 = tri.edge_of[dd]
        idx = 0 if dd == tri.dart0(e2) else len(d.edge_tokens.get(e2, ()))
        new_toks.append(d.new_token(e2, idx, tag))

    if whole_curve:
        if not new_toks:
            return 'died'
        if len(new_toks) == 1:
            raise DiagramError("single-token strand cannot exist")
        for j in range(len(new_toks) - 1):
            d.set_chord(sector_faces[j + 1], new_toks[j], new_toks[j + 1])
        d.set_chord(f_other, new_toks[-1], new_toks[0])
        return None

    if not far_darts:
        d.set_chord(f_other, prev, nxt)
        return None
    # the e-run walks from c_to_e's side to p_to_c's side, so the far chain
    # runs nxt -> far tokens -> prev
    chain = [nxt] + new_toks + [prev]
    for j in range(len(chain) - 1):
        d.set_chord(sector_faces[j], chain[j], chain[j + 1])
    return None


def _diagram_signature(d):
    """Hashable structural key of a diagram (token ids abstracted away)."""
    per_edge = []
    index = {}
    for e in range(d.tri.n_edges):
        lst = d.edge_tokens.get(e, [])
        for i, tok in enumerate(lst):
            index[tok] = (e, i)
        per_edge.append(tuple(str(d.tag_of(t)) for t in lst))
    chords = []
    for f in sorted(d.chords):
        m = d.chords[f]
        entries = sorted(tuple(sorted((index[a], index[b]))) for a, b in m.items())
        chords.append((f, tuple(entries)))
    return (tuple(per_edge), tuple(chords))


def _edge_bigon_plans(d, tag):
    """All clean strand-vs-edge bigon plans, deterministically ordered."""
    ov = Overlay(d)
    w = d.weights()
    plans = []
    for e in range(d.tri.n_edges):
        if w[e] < 2:
            continue

        def barrier(cell, e=e):
            return cell[0] == 'S' or (cell[0] == 'E' and cell[1] == e)

        for region in ov.region_analysis(barrier):
            plan = _clean_edge_bigon(ov, d, region, tag, e)
            if plan is not None:
                key = (plan['delta'], len(region.pieces),
                       sorted(region.pieces)[0], e)
                plans.append((key, plan, ov))
    plans.sort(key=lambda x: x[0])
    return plans


def _adopt(d, other):
    d.tokens = other.tokens
    d.edge_tokens = other.edge_tokens
    d.chords = other.chords
    d._next = other._next


def _greedy_descend(d, tag):
    """Apply weight-decreasing pushes until none remain.  'died' or None."""
    if _normalize_returns(d):
        return 'died'
    guard = 0
    while True:
        guard += 1
        if guard > 20000:
            raise DiagramError("greedy descent did not terminate")
        if not d.tokens:
            return 'died'
        plans = _edge_bigon_plans(d, tag)
        if not plans or plans[0][0][0] >= 0:
            return None
        key, plan, ov = plans[0]
        if _push_edge_bigon(d, ov, plan, tag) == 'died' \
                or _normalize_returns(d):
            return 'died'


# positions of a strand form the point-pushing orbit of its marked class;
# the canonical position is the (total weight, weight vector)-least position.
# Greedy descent can land in different local minima (vertex passes trade
# crossings non-monotonically), so the basin of the minimum is located by an
# exhaustive search of the reachable positions within a small headroom above
# the best total seen.
_SEARCH_SLACK = 2
_SEARCH_CAP = 20000


def canonical_position(d, tag):
    """Reduce the single strand `tag` to its canonical position. Mutates d.

    Returns 'died' when the strand is null-homotopic, else None.
    """
    if _greedy_descend(d, tag) == 'died':
        return 'died'
    best = d.copy()
    best_key = (best.total_weight(), best.weights())
    seen = {_diagram_signature(d)}
    queue = [d.copy()]
    steps = 0
    while queue:
        queue.sort(key=lambda s: s.total_weight())
        state = queue.pop(0)
        if state.total_weight() > best_key[0] + _SEARCH_SLACK:
            continue
        for (k2, plan2, ov2) in _edge_bigon_plans(state, tag):
            steps += 1
            if steps > _SEARCH_CAP:
                raise DiagramError("canonical position search exploded")
            nxt = state.copy()
            if _push_edge_bigon(nxt, ov2, plan2, tag) == 'died' \
                    or _normalize_returns(nxt):
                return 'died'
            if nxt.total_weight() > best_key[0] + _SEARCH_SLACK:
                continue
            sig = _diagram_signature(nxt)
            if sig in seen:
                continue
            seen.add(sig)
            key = (nxt.total_weight(), nxt.weights())
            if key < best_key:
                best_key = key
                best = nxt.copy()
            queue.append(nxt)
    _adopt(d, best)
    return None


# ---------------------------------------------------------------------------
# Dehn twists


def _oriented_chord_dir(ov, f, ci, from_tok):
    """Drawn direction of chord ci at its from_tok end, oriented away from it."""
    info = ov.chord_info(f, ci)
    arr = ov.arr[f]
    poly_a = arr._polyline(ci)
    d0 = (poly_a[1][0] - poly_a[0][0], poly_a[1][1] - poly_a[0][1])
    d1 = (poly_a[-1][0] - poly_a[-2][0], poly_a[-1][1] - poly_a[-2][1])
    if info[3] == from_tok:
        return d0
    if info[4] == from_tok:
        return (-d1[0], -d1[1])
    raise DiagramError("token not on chord")


def twist_diagram(da, dt, tag_a, tag_t, sign):
    """Diagram of the image of strand `a` under the Dehn twist along `t`.

    Both inputs are single-strand diagrams on the same surface; the result
    is a raw (non-canonical) single-strand diagram tagged `tag_a`.  sign=+1
    winds detours forward along t's traversal, sign=-1 backward; the two are
    inverse homeomorphisms.
    """
    tri = da.tri
    m = da.merged_with(dt)
    ov = reduce_overlay_diagram(m)
    if ov.crossing_count(tag_a, tag_t) == 0:
        return da.copy()
    d = m   # reduced overlay diagram, mutated no further

    # t's token cycle with its chord faces
    t_start = min((tok for tok, (_e, tg) in d.tokens.items() if tg == tag_t),
                  key=lambda t: (d.edge_of(t), d.index_of(t)))
    f1, f2 = d.faces_of_token_edge(d.edge_of(t_start))
    t_toks, t_faces = d.trace_cycle(t_start, min(f1, f2))
    L = len(t_toks)
    t_pos = {tok: i for i, tok in enumerate(t_toks)}

    # identify each chord of t within each face: (face, frozenset endpoints)
    def chord_of(f, ci):
        info = ov.chord_info(f, ci)
        return info

    # map (face, ci) -> window index for t chords
    t_window = {}
    for f in range(tri.n_faces):
        for ci, info in enumerate(ov.face_chords[f]):
            if info[2] != tag_t:
                continue
            a_tok, b_tok = info[3], info[4]
            w = t_pos[a_tok]
            if t_toks[(w + 1) % L] == b_tok:
                t_window[(f, ci)] = (w, True)    # drawn along t
            else:
                w2 = t_pos[b_tok]
                if t_toks[(w2 + 1) % L] != a_tok:
                    raise DiagramError("t chord not consecutive in its cycle")
                t_window[(f, ci)] = (w2, False)  # drawn against t

    # a's token cycle
    a_start = min((tok for tok, (_e, tg) in d.tokens.items() if tg == tag_a),
                  key=lambda t: (d.edge_of(t), d.index_of(t)))
    f1, f2 = d.faces_of_token_edge(d.edge_of(a_start))
    a_toks, a_faces = d.trace_cycle(a_start, min(f1, f2))
    M = len(a_toks)

    # crossings per a-chord, with window and rank data
    from collections import defaultdict
    per_t_chord = defaultdict(list)   # (f, ci_t) -> crossing params for rank
    for f, arr in ov.arr.items():
        for (ci, cj), (pi, pj, _c, _di, _dj) in arr.hits.items():
            ta = ov.face_chords[f][ci][2]
            tb = ov.face_chords[f][cj][2]
            if {ta, tb} != {tag_a, tag_t}:
                continue
            ct = ci if ta == tag_t else cj
            pt = pi if ta == tag_t else pj
            per_t_chord[(f, ct)].append((pt, (ci, cj)))
    cross_frac = {}
    for (f, ct), lst in per_t_chord.items():
        lst.sort()
        w, along = t_window[(f, ct)]
        R = len(lst)
        for r, (pt, key) in enumerate(lst):
            rank = r if along else R - 1 - r
            cross_frac[(f, key)] = (w, Fraction(rank + 1, R + 1))

    # left sign of each t token: +1 when increasing edge index is left of t
    left_sign = {}
    for w, tok in enumerate(t_toks):
        fw = t_faces[w]
        ci = None
        for cindex, info in enumerate(ov.face_chords[fw]):
            if info[2] == tag_t and tok in (info[3], info[4]):
                ci = cindex
                break
        d_t = _oriented_chord_dir(ov, fw, ci, tok)
        e = d.edge_of(tok)
        k = None
        for kk in range(3):
            if tri.edge_of[tri.faces[fw][kk]] == e:
                k = kk
        a_pt, b_pt = tri._FRAME[k], tri._FRAME[(k + 1) % 3]
        d_side = (b_pt[0] - a_pt[0], b_pt[1] - a_pt[1])
        if tri.faces[fw][k] != tri.dart0(e):
            d_side = (-d_side[0], -d_side[1])
        c = _cross2(d_t, d_side)
        if c == 0:
            raise DiagramError("degenerate side direction")
        left_sign[tok] = 1 if c > 0 else -1

    # walk a, building the image token stream
    out = Diagram(tri)
    entries = defaultdict(list)   # edge -> [(anchor_idx, delta, new_tok)]
    chords_plan = []              # (face, endA, endB) by new ids

    def new_token(edge, anchor_idx, delta):
        tok = out._next
        out._next += 1
        out.tokens[tok] = (edge, tag_a)
        entries[edge].append(((anchor_idx, delta), tok))
        return tok

    copies = {}
    for u in a_toks:
        copies[u] = new_token(d.edge_of(u), d.index_of(u), Fraction(0))

    for i in range(M):
        u, v = a_toks[i], a_toks[(i + 1) % M]
        f = a_faces[i]
        # the a chord u->v in face f
        ci_a = None
        for cindex, info in enumerate(ov.face_chords[f]):
            if info[2] == tag_a and {info[3], info[4]} >= {u, v} \
                    and u in (info[3], info[4]):
                if (info[3], info[4]) in ((u, v), (v, u)):
                    ci_a = cindex
                    break
        if ci_a is None:
            raise DiagramError("missing a chord")
        # crossings along this chord from u
        arr = ov.arr[f]
        info = ov.chord_info(f, ci_a)
        xs = []
        for (pi, cj, _coord) in arr.per_chord[ci_a]:
            other_tag = ov.face_chords[f][cj][2]
            if other_tag != tag_t:
                continue
            key = (min(ci_a, cj), max(ci_a, cj))
            xs.append((pi, cj, key))
        xs.sort()
        if info[3] != u:
            xs.reverse()
        tail = copies[u]
        for (pi, cj, key) in xs:
            w, frac = cross_frac[(f, key)]
            # entry side of a at this crossing
            d_a = _oriented_chord_dir(ov, f, ci_a, u)
            ct = cj
            wt, along = t_window[(f, ct)]
            tok_from = t_toks[wt] if along else t_toks[(wt + 1) % L]
            d_t = _oriented_chord_dir(ov, f, ct, tok_from)
            if not along:
                d_t = (-d_t[0], -d_t[1])
            c = _cross2(d_t, d_a)
            if c == 0:
                raise DiagramError("degenerate crossing")
            from_right = c > 0
            # detour tokens: window/radius pairs in traversal order
            steps = []
            for dd in range(1, L + 1):
                if sign > 0:
                    wd = (w + dd) % L
                    rho = Fraction(dd, 1) - frac
                else:
                    wd = (w - dd + 1) % L
                    rho = Fraction(dd - 1, 1) + frac
                steps.append((wd, rho / L))
            if not from_right:
                steps.reverse()
            prev_tok = tail
            prev_face = f
            for (wd, rho) in steps:
                anchor = t_toks[wd]
                delta = (rho - Fraction(1, 2)) * left_sign[anchor]
                ntok = new_token(d.edge_of(anchor), d.index_of(anchor), delta)
                chords_plan.append((prev_face, prev_tok, ntok))
                prev_tok = ntok
                prev_face = None
                # face between consecutive anchors along the t cycle
            # fill detour-internal faces
            # (rebuild: consecutive steps share the t-chord between their windows)
            for j in range(len(steps) - 1):
                w1 = steps[j][0]
                w2 = steps[j + 1][0]
                if (w1 + 1) % L == w2:
                    fbet = t_faces[w1]
                elif (w2 + 1) % L == w1:
                    fbet = t_faces[w2]
                else:
                    raise DiagramError("detour windows not adjacent")
                chords_plan[-(len(steps) - 1) + j] = (
                    fbet, chords_plan[-(len(steps) - 1) + j][1],
                    chords_plan[-(len(steps) - 1) + j][2])
            # connector into the detour happens in face f
            first_idx = len(chords_plan) - len(steps)
            chords_plan[first_idx] = (f, chords_plan[first_idx][1],
                                      chords_plan[first_idx][2])
            tail = prev_tok
        chords_plan.append((f, tail, copies[v]))

    for e, lst in entries.items():
        lst.sort(key=lambda x: x[0])
        out.edge_tokens[e] = [tok for _key, tok in lst]
    for (f, x, y) in chords_plan:
        out.set_chord(f, x, y)
    out.validate()
    comps = out.components()
    if len(comps) != 1:
        raise DiagramError("twist image disconnected")
    return out
