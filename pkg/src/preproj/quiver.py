"""Doubled quivers and nilpotent modules over their preprojective algebras."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .exactlinalg import QQ, FieldSpec, Matrix, Subspace, solve_preimage


class QuiverError(ValueError):
    pass


@dataclass(frozen=True)
class Arrow:
    id: str
    source: str
    target: str
    partner: str
    sign: int


@dataclass(frozen=True)
class QuiverGraph:
    vertices: tuple
    arrows: Mapping[str, Arrow]

    def __hash__(self) -> int:
        return hash((self.vertices, tuple(sorted(self.arrows))))

    def index(self, v: str) -> int:
        return self.vertices.index(v)

    def out_arrows(self, i: str) -> list[Arrow]:
        return [a for a in self.arrows.values() if a.source == i]

    def partner(self, h: str) -> Arrow:
        return self.arrows[self.arrows[h].partner]

    def neighbours(self, i: str) -> set[str]:
        return {a.target for a in self.out_arrows(i)}


def build_double_quiver(edges: Iterable[Sequence], vertices: Iterable | None = None) -> QuiverGraph:
    """Double an edge list ``[(id, source, target), ...]``.

    Each edge ``h`` gives arrows ``h`` (sign +1) and ``h*`` (sign -1).
    """
    edges = [(str(h), str(s), str(t)) for h, s, t in edges]
    verts: list[str] = [str(v) for v in vertices] if vertices is not None else []
    arrows: dict[str, Arrow] = {}
    for h, s, t in edges:
        if s == t:
            raise QuiverError(f"edge {h!r} is a loop at {s!r}")
        star = h + "*"
        if h in arrows or star in arrows:
            raise QuiverError(f"duplicate edge id {h!r}")
        arrows[h] = Arrow(h, s, t, star, 1)
        arrows[star] = Arrow(star, t, s, h, -1)
        for v in (s, t):
            if v not in verts:
                if vertices is not None:
                    raise QuiverError(f"edge {h!r} uses undeclared vertex {v!r}")
                verts.append(v)
    if not verts:
        raise QuiverError("a quiver needs at least one vertex")
    if len(set(verts)) != len(verts):
        raise QuiverError("duplicate vertex names")
    return QuiverGraph(tuple(verts), arrows)


def dynkin_a(n: int) -> QuiverGraph:
    names = [str(v) for v in range(1, n + 1)]
    return build_double_quiver([(f"a{v}", names[v - 1], names[v]) for v in range(1, n)], names)


def star_quiver(n: int) -> QuiverGraph:
    """Centre "0" joined to rays "1" .. "n"; edge ``r<k>`` points from the centre."""
    names = [str(v) for v in range(n + 1)]
    return build_double_quiver([(f"r{k}", "0", str(k)) for k in range(1, n + 1)], names)


class CartanMatrix:
    """a_ii = 2 and a_ij = -#{arrows i -> j}."""

    def __init__(self, graph: QuiverGraph):
        self.vertices = graph.vertices
        self._a = {(i, j): (2 if i == j else 0) for i in graph.vertices for j in graph.vertices}
        for h in graph.arrows.values():
            self._a[h.source, h.target] -= 1

    def __getitem__(self, ij) -> int:
        return self._a[ij]

    def rows(self) -> list[list[int]]:
        return [[self._a[i, j] for j in self.vertices] for i in self.vertices]

    def is_symmetric(self) -> bool:
        return all(self._a[i, j] == self._a[j, i] for i, j in self._a)


def cartan_matrix(graph: QuiverGraph) -> CartanMatrix:
    return CartanMatrix(graph)


@dataclass(frozen=True, eq=False)
class LambdaModule:
    graph: QuiverGraph
    field: FieldSpec
    dims: Mapping[str, int]
    maps: Mapping[str, Matrix]

    def __post_init__(self) -> None:
        for v in self.graph.vertices:
            if self.dims.get(v, 0) < 0:
                raise QuiverError(f"negative dimension at {v!r}")
        for h, a in self.graph.arrows.items():
            m = self.maps.get(h)
            if m is None:
                raise QuiverError(f"missing map for arrow {h!r}")
            if m.shape != (self.dim(a.target), self.dim(a.source)):
                raise QuiverError(
                    f"map {h!r} has shape {m.shape}, expected {(self.dim(a.target), self.dim(a.source))}"
                )
            if m.field != self.field:
                raise QuiverError(f"map {h!r} is over {m.field}, module over {self.field}")

    def dim(self, v: str) -> int:
        return self.dims.get(v, 0)

    def dimvec(self) -> dict[str, int]:
        return {v: self.dim(v) for v in self.graph.vertices if self.dim(v)}

    @property
    def total_dim(self) -> int:
        return sum(self.dim(v) for v in self.graph.vertices)

    def key(self) -> tuple:
        """Hashable exact description, used for caching."""
        return (
            self.graph.vertices,
            self.field,
            tuple(self.dim(v) for v in self.graph.vertices),
            tuple((h, self.maps[h].data) for h in sorted(self.maps)),
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, LambdaModule) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def reduce_mod(self, p: int) -> "LambdaModule":
        if self.field.is_prime_field:
            raise QuiverError("module is already over a prime field")
        F = FieldSpec.prime(p)
        return LambdaModule(self.graph, F, dict(self.dims), {h: m.reduce_mod(p) for h, m in self.maps.items()})

    def __repr__(self) -> str:
        dv = ", ".join(f"{v}:{self.dim(v)}" for v in self.graph.vertices)
        return f"LambdaModule(over {self.field}, dims {{{dv}}})"


def module(graph: QuiverGraph, dims: Mapping, maps: Mapping | None = None, field: FieldSpec = QQ) -> LambdaModule:
    """Build a module from row-lists; arrows not mentioned act by zero."""
    dims = {str(v): int(d) for v, d in dims.items() if int(d)}
    built = {}
    maps = maps or {}
    for h in maps:
        if h not in graph.arrows:
            raise QuiverError(f"unknown arrow {h!r}")
    for h, a in graph.arrows.items():
        r, c = dims.get(a.target, 0), dims.get(a.source, 0)
        if h in maps and maps[h] is not None:
            m = maps[h]
            if not isinstance(m, Matrix):
                if len(m) != r or any(len(row) != c for row in m):
                    raise QuiverError(f"map {h!r} must be {r} x {c}")
                m = Matrix.from_rows(field, m, cols=c) if r else Matrix.zeros(field, 0, c)
            built[h] = m
        else:
            built[h] = Matrix.zeros(field, r, c)
    return LambdaModule(graph, field, dims, built)


def simple(graph: QuiverGraph, i: str, field: FieldSpec = QQ) -> LambdaModule:
    return module(graph, {i: 1}, field=field)


def zero_module(graph: QuiverGraph, field: FieldSpec = QQ) -> LambdaModule:
    return module(graph, {}, field=field)


def _block_diag(F: FieldSpec, a: Matrix, b: Matrix) -> Matrix:
    z = F(0)
    rows = [tuple(r) + (z,) * b.cols for r in a.data] + [(z,) * a.cols + tuple(r) for r in b.data]
    return Matrix(F, a.rows + b.rows, a.cols + b.cols, tuple(rows))


def direct_sum(m: LambdaModule, n: LambdaModule) -> LambdaModule:
    if m.graph != n.graph or m.field != n.field:
        raise QuiverError("direct sum of modules over different quivers or fields")
    dims = {v: m.dim(v) + n.dim(v) for v in m.graph.vertices}
    maps = {h: _block_diag(m.field, m.maps[h], n.maps[h]) for h in m.graph.arrows}
    return LambdaModule(m.graph, m.field, {v: d for v, d in dims.items() if d}, maps)


def conjugate(m: LambdaModule, g: Mapping[str, Matrix]) -> LambdaModule:
    """Transport ``m`` along invertible maps g_v: M_v -> M_v."""
    inv = {v: g[v].inverse() for v in g}
    maps = {}
    for h, a in m.graph.arrows.items():
        mat = m.maps[h]
        if a.target in g:
            mat = g[a.target] @ mat
        if a.source in g:
            mat = mat @ inv[a.source]
        maps[h] = mat
    return LambdaModule(m.graph, m.field, dict(m.dims), maps)


@dataclass(frozen=True)
class Violation:
    kind: str  # "relation" | "not nilpotent" | "kernel"
    vertex: str | None
    message: str


def relation_at(m: LambdaModule, i: str) -> Matrix:
    F = m.field
    total = Matrix.zeros(F, m.dim(i), m.dim(i))
    for a in m.graph.out_arrows(i):
        term = m.maps[a.partner] @ m.maps[a.id]
        total = total + (term if a.sign == 1 else -term)
    return total


def validate_module(m: LambdaModule) -> Violation | None:
    """None if ``m`` is a nilpotent preprojective module, else the first problem found."""
    for i in m.graph.vertices:
        if not relation_at(m, i).is_zero():
            return Violation("relation", i, f"preprojective relation fails at vertex {i}")
    F = m.field
    layer = {v: Subspace.full(F, m.dim(v)) for v in m.graph.vertices}
    for _ in range(m.total_dim + 1):
        if all(s.dim == 0 for s in layer.values()):
            return None
        nxt = {v: Subspace.zero(F, m.dim(v)) for v in m.graph.vertices}
        for a in m.graph.arrows.values():
            nxt[a.target] = nxt[a.target] + layer[a.source].image(m.maps[a.id])
        layer = nxt
    return Violation("not nilpotent", None, "not nilpotent: the radical chain does not reach zero")


def check_module(m: LambdaModule) -> LambdaModule:
    v = validate_module(m)
    if v is not None:
        raise QuiverError(v.message)
    return m


@dataclass(frozen=True)
class VertexLocalData:
    vertex: str
    arrows: tuple  # out-arrows in block order
    offsets: tuple  # start of each block in the tilde space
    tilde_dim: int
    m_in: Matrix
    m_out: Matrix
    x: Matrix

    def block(self, h: str) -> range:
        k = self.arrows.index(h)
        start = self.offsets[k]
        end = self.offsets[k + 1] if k + 1 < len(self.offsets) else self.tilde_dim
        return range(start, end)


def local_data(m: LambdaModule, i: str, order: Sequence[str] | None = None) -> VertexLocalData:
    """In/out presentation at ``i``; blocks sorted by (target vertex, arrow id) unless ``order`` is given."""
    g = m.graph
    outs = g.out_arrows(i)
    if order is None:
        outs.sort(key=lambda a: (g.index(a.target), a.id))
    else:
        by_id = {a.id: a for a in outs}
        if sorted(order) != sorted(by_id):
            raise QuiverError(f"order {list(order)} is not a permutation of the arrows out of {i}")
        outs = [by_id[h] for h in order]
    F = m.field
    offsets = []
    pos = 0
    for a in outs:
        offsets.append(pos)
        pos += m.dim(a.target)
    di = m.dim(i)
    m_in = Matrix.hstack(F, di, [m.maps[a.partner] for a in outs]) if outs else Matrix.zeros(F, di, 0)
    m_out = Matrix.vstack(F, di, [m.maps[a.id].scale(a.sign) for a in outs]) if outs else Matrix.zeros(F, 0, di)
    if not (m_in @ m_out).is_zero():
        raise QuiverError(f"m_in m_out != 0 at vertex {i}")
    x = m_out @ m_in
    return VertexLocalData(i, tuple(a.id for a in outs), tuple(offsets), pos, m_in, m_out, x)


def phi_stats(m: LambdaModule, i: str) -> tuple[int, int]:
    """(dim coker m_in, dim ker m_out) at vertex ``i``."""
    ld = local_data(m, i)
    d = m.dim(i)
    return d - ld.m_in.rank(), d - ld.m_out.rank()


def sigma_star(m: LambdaModule, i: str, order: Sequence[str] | None = None) -> LambdaModule:
    """Replace M_i by coker(m_out), realised on the non-pivot coordinates of im(m_out)."""
    ld = local_data(m, i, order)
    F = m.field
    img = ld.m_out.image()
    keep = img.complement_indices()
    n = ld.tilde_dim
    # projection tilde -> coker in the kept coordinates
    proj_cols = []
    for t in range(n):
        v = [F(0)] * n
        v[t] = F(1)
        r = img.reduce(v)
        proj_cols.append(tuple(r[c] for c in keep))
    new_dim = len(keep)
    proj = Matrix.from_columns(F, proj_cols, new_dim)
    new_out = ld.x.submatrix(range(n), keep)  # m_out composed with the induced m_in on coker
    maps = dict(m.maps)
    for h in ld.arrows:
        a = m.graph.arrows[h]
        blk = ld.block(h)
        maps[h] = new_out.submatrix(blk, range(new_dim)).scale(a.sign)
        maps[a.partner] = proj.submatrix(range(new_dim), blk)
    dims = dict(m.dims)
    dims[i] = new_dim
    if not new_dim:
        del dims[i]
    return LambdaModule(m.graph, F, dims, maps)


def star_module(x: Matrix, w: Subspace) -> LambdaModule:
    """Star-quiver module with centre space W, out-map the inclusion W -> F^n, x = out * in."""
    F = x.field
    n = x.rows
    g = star_quiver(n)
    k = w.dim
    out = Matrix.from_columns(F, list(w.basis), n)  # n x k, injective
    # in-map: W-coordinates of x(v); valid because im x <= W
    cols = []
    for v in x.columns():
        sol = solve_preimage(out, v)
        if sol is None:
            raise QuiverError("im x is not contained in W")
        cols.append(sol)
    m_in = Matrix.from_columns(F, cols, k)
    maps = {}
    for r in range(1, n + 1):
        maps[f"r{r}"] = out.submatrix([r - 1], range(k))
        maps[f"r{r}*"] = m_in.submatrix(range(k), [r - 1])
    dims = {"0": k, **{str(r): 1 for r in range(1, n + 1)}}
    return LambdaModule(g, F, {v: d for v, d in dims.items() if d}, maps)


def star_localize(m: LambdaModule, i: str, basis: Sequence[Sequence]) -> LambdaModule:
    """Spread the tilde space at ``i`` over rays, one per basis vector.

    Requires the matrix of x in ``basis`` to be strictly upper triangular.
    """
    ld = local_data(m, i)
    F = m.field
    n = ld.tilde_dim
    if len(basis) != n:
        raise QuiverError(f"basis has {len(basis)} vectors, tilde space has dimension {n}")
    P = Matrix.from_columns(F, [tuple(F(v) for v in b) for b in basis], n)
    try:
        Pinv = P.inverse()
    except ZeroDivisionError:
        raise QuiverError("supplied vectors are not a basis") from None
    if not (Pinv @ ld.x @ P).is_strictly_upper_triangular():
        raise QuiverError("x is not strictly upper triangular in the supplied basis")
    out = Pinv @ ld.m_out
    inn = ld.m_in @ P
    d = m.dim(i)
    g = star_quiver(n)
    maps = {}
    for r in range(1, n + 1):
        maps[f"r{r}"] = out.submatrix([r - 1], range(d))
        maps[f"r{r}*"] = inn.submatrix(range(d), [r - 1])
    dims = {"0": d, **{str(r): 1 for r in range(1, n + 1)}}
    return LambdaModule(g, F, {v: c for v, c in dims.items() if c}, maps)


def tilde_filtration(
    m: LambdaModule, i: str, steps: Sequence[str], flags: Mapping[str, Sequence[Sequence]] | None = None
) -> list[Subspace]:
    """The filtration of the tilde space induced by complete flags on the M_k, k != i.

    ``steps`` lists j_1 .. j_r; at step s the flag of M_{j_s} grows by one vector.
    ``flags[k]`` is an ordered basis of M_k (default: the standard one).
    """
    ld = local_data(m, i)
    F = m.field
    flags = dict(flags or {})
    counts = {}
    for j in steps:
        if j == i:
            raise QuiverError("steps may not contain the vertex itself")
        counts[j] = counts.get(j, 0) + 1
    for h in ld.arrows:
        k = m.graph.arrows[h].target
        if counts.get(k, 0) != m.dim(k):
            raise QuiverError(f"vertex {k} occurs {counts.get(k, 0)} times in steps, dimension is {m.dim(k)}")
    for k in {m.graph.arrows[h].target for h in ld.arrows}:
        if k not in flags:
            flags[k] = [tuple(F(1) if a == b else F(0) for b in range(m.dim(k))) for a in range(m.dim(k))]
        elif Subspace.span(F, m.dim(k), flags[k]).dim != m.dim(k) or len(flags[k]) != m.dim(k):
            raise QuiverError(f"flag at {k} is not a basis")
    used = {k: 0 for k in counts}
    out = [Subspace.zero(F, ld.tilde_dim)]
    for j in steps:
        used[j] += 1
        vecs = []
        for h in ld.arrows:
            k = m.graph.arrows[h].target
            blk = ld.block(h)
            for b in flags.get(k, [])[: used.get(k, 0)]:
                v = [F(0)] * ld.tilde_dim
                for pos, c in zip(blk, b):
                    v[pos] = F(c)
                vecs.append(v)
        out.append(Subspace.span(F, ld.tilde_dim, vecs))
    return out


def triangular_basis(
    m: LambdaModule, i: str, steps: Sequence[str], flags: Mapping[str, Sequence[Sequence]] | None = None
) -> list[tuple] | None:
    """Basis adapted to the induced tilde filtration with x strictly upper triangular.

    Returns None when x does not preserve the filtration.
    """
    ld = local_data(m, i)
    F = m.field
    filt = tilde_filtration(m, i, steps, flags)
    x = ld.x
    for sub in filt:
        if not sub.image(x) <= sub:
            return None
    basis: list[tuple] = []
    for prev, cur in zip(filt, filt[1:]):
        new = []
        span = prev
        for b in cur.basis:
            if not span.contains(b):
                new.append(b)
                span = span.with_vectors([b])
        if not new:
            continue
        # induced map on cur/prev in the coordinates of ``new``
        frame = Matrix.from_columns(F, list(prev.basis) + new, ld.tilde_dim)
        d0 = prev.dim
        ind_cols = []
        for v in new:
            coords = solve_preimage(frame, x.apply(v))
            ind_cols.append(coords[d0:])
        xbar = Matrix.from_columns(F, ind_cols, len(new))
        # kernel chain ker xbar <= ker xbar^2 <= ... gives a triangular basis
        chain_basis = Subspace.zero(F, len(new))
        power = xbar
        ordered: list[tuple] = []
        while chain_basis.dim < len(new):
            kern = power.kernel()
            for b in kern.basis:
                if not chain_basis.contains(b):
                    ordered.append(b)
                    chain_basis = chain_basis.with_vectors([b])
            power = power @ xbar
        p = F.characteristic
        for c in ordered:
            v = [F(0)] * ld.tilde_dim
            for coef, w in zip(c, new):
                if coef:
                    v = [((a + coef * b) % p if p else a + coef * b) for a, b in zip(v, w)]
            basis.append(tuple(v))
    return basis


def edge_extension(graph: QuiverGraph, h: str, t=1, field: FieldSpec = QQ) -> LambdaModule:
    """Dimension 1 at both ends of ``h``, M_h = [t], every other arrow zero."""
    a = graph.arrows[h]
    return module(graph, {a.source: 1, a.target: 1}, {h: [[t]]}, field)
