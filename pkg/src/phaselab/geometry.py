"""Discrete interface extraction and distance diagnostics.

The interface of a phase field u is the level set {u = α}.  Marching
squares on the cell-center lattice produces its polyline approximation
with linear interpolation along lattice edges; every segment is emitted
so that the {u < level} region lies on its left, which makes loops
around a low-phase droplet counterclockwise.  Saddle squares are split
by comparing the square's average against the level.  Level sets that
run into the domain boundary come back as boundary-terminated chains
rather than loops.

Signed distances are exact brute-force point-to-segment distances
(desk-scale grids), clamped at ±clamp, with the sign positive outside
the enclosed region.  When the phase field is available the sign is
read directly from u against the level (the enclosed region of the
transition problems studied here is the low phase); otherwise a winding
parity test on the loops decides.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .model import BistableModel
from .pde import Grid2D, SimState
from .profiles import StandingWave

__all__ = [
    "Contour",
    "SignedDistanceField",
    "GeometryError",
    "extract_contour",
    "signed_distance",
    "points_to_polyline_distance",
    "interface_width",
    "cross_section",
    "is_graph_over",
    "write_contour_csv",
]


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Contour:
    """Level-set polylines: closed loops plus boundary-terminated chains.

    Loop vertex lists do not repeat the first point; closure is implied.
    """

    loops: list = field(default_factory=list)
    chains: list = field(default_factory=list)
    level: float = 0.0

    @property
    def is_empty(self) -> bool:
        return not self.loops and not self.chains

    def all_points(self) -> np.ndarray:
        parts = list(self.loops) + list(self.chains)
        return np.vstack(parts) if parts else np.empty((0, 2))

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """(start, end) arrays over all loop (wrapped) and chain segments."""
        starts, ends = [], []
        for loop in self.loops:
            starts.append(loop)
            ends.append(np.roll(loop, -1, axis=0))
        for chain in self.chains:
            starts.append(chain[:-1])
            ends.append(chain[1:])
        if not starts:
            return np.empty((0, 2)), np.empty((0, 2))
        return np.vstack(starts), np.vstack(ends)


@dataclass(frozen=True)
class SignedDistanceField:
    d: np.ndarray
    reference: Contour
    clamp: float
    signed_from_field: bool


# ---------------------------------------------------------------------------
# Marching squares
# ---------------------------------------------------------------------------
# Square corner bits (y up, row j is the bottom edge): 1=BL, 2=BR, 4=TR,
# 8=TL, set when the corner value is below the level.  Each entry maps a
# case to (entry edge, exit edge) pairs; walking entry -> exit keeps the
# below-level region on the left.  Edge keys are local: b/t/l/r.

_CASE_SEGMENTS = {
    1: [("b", "l")], 2: [("r", "b")], 3: [("r", "l")], 4: [("t", "r")],
    6: [("t", "b")], 7: [("t", "l")], 8: [("l", "t")], 9: [("b", "t")],
    11: [("r", "t")], 12: [("l", "r")], 13: [("b", "r")], 14: [("l", "b")],
}
_SADDLE = {
    5: {True: [("b", "r"), ("t", "l")], False: [("b", "l"), ("t", "r")]},
    10: {True: [("l", "b"), ("r", "t")], False: [("r", "b"), ("l", "t")]},
}


def _edge_key(local: str, j: int, i: int):
    if local == "b":
        return ("h", j, i)
    if local == "t":
        return ("h", j + 1, i)
    if local == "l":
        return ("v", j, i)
    return ("v", j, i + 1)


def extract_contour(state: SimState, level: float) -> Contour:
    """Marching-squares level set of the field at the given level.

    Returns an empty contour when the level does not separate the field
    (never raises for that).  Loops are oriented counterclockwise around
    the {u < level} region.
    """
    u = state.u
    g = state.grid
    umin, umax = float(u.min()), float(u.max())
    if not (umin < level < umax):
        return Contour([], [], level)

    below = u < level
    case = (below[:-1, :-1] * 1 + below[:-1, 1:] * 2
            + below[1:, 1:] * 4 + below[1:, :-1] * 8).astype(np.int8)
    squares = np.argwhere((case != 0) & (case != 15))

    xs = g.x0 + (np.arange(g.nx) + 0.5) * g.dx
    ys = g.y0 + (np.arange(g.ny) + 0.5) * g.dy

    points: dict = {}

    def crossing(key) -> np.ndarray:
        pt = points.get(key)
        if pt is not None:
            return pt
        kind, j, i = key
        if kind == "h":
            va, vb = u[j, i], u[j, i + 1]
            t = (level - va) / (vb - va)
            pt = np.array([xs[i] + t * g.dx, ys[j]])
        else:
            va, vb = u[j, i], u[j + 1, i]
            t = (level - va) / (vb - va)
            pt = np.array([xs[i], ys[j] + t * g.dy])
        points[key] = pt
        return pt

    seg_out: dict = {}
    for j, i in squares:
        c = int(case[j, i])
        if c in _SADDLE:
            avg_below = (u[j, i] + u[j, i + 1] + u[j + 1, i + 1]
                         + u[j + 1, i]) * 0.25 < level
            segs = _SADDLE[c][bool(avg_below)]
        else:
            segs = _CASE_SEGMENTS[c]
        for loc_in, loc_out in segs:
            e_in = _edge_key(loc_in, j, i)
            e_out = _edge_key(loc_out, j, i)
            crossing(e_in)
            crossing(e_out)
            seg_out[e_in] = e_out

    exits = set(seg_out.values())
    heads = [e for e in seg_out if e not in exits]

    loops, chains = [], []
    visited = set()

    def walk(start, stop_at_start):
        path = [start]
        visited.add(start)
        cur = seg_out.get(start)
        while cur is not None and not (stop_at_start and cur == start):
            path.append(cur)
            visited.add(cur)
            cur = seg_out.get(cur)
        return path, (cur == start)

    for head in heads:
        path, _closed = walk(head, stop_at_start=False)
        chains.append(np.array([points[e] for e in path]))
    for start in seg_out:
        if start in visited:
            continue
        path, closed = walk(start, stop_at_start=True)
        arr = np.array([points[e] for e in path])
        if closed:
            loops.append(arr)
        else:
            chains.append(arr)
    return Contour(loops, chains, level)


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------

def _segment_distance_chunk(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Min distance from each point to any segment (a[k], b[k])."""
    ab = b - a
    denom = np.einsum("kd,kd->k", ab, ab)
    denom = np.where(denom == 0, 1.0, denom)
    ap = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("mkd,kd->mk", ap, ab) / denom, 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    diff = pts[:, None, :] - closest
    return np.sqrt(np.min(np.einsum("mkd,mkd->mk", diff, diff), axis=1))


def points_to_polyline_distance(pts: np.ndarray, starts: np.ndarray,
                                ends: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Exact distance from each point to the nearest polyline segment.

    Brute force over all segments, chunked over points to bound memory;
    exact at desk scale per the geometry contracts.
    """
    pts = np.atleast_2d(pts)
    m = pts.shape[0]
    out = np.empty(m)
    if starts.shape[0] == 0:
        out.fill(np.inf)
        return out
    for k0 in range(0, m, chunk):
        sl = slice(k0, min(k0 + chunk, m))
        out[sl] = _segment_distance_chunk(pts[sl], starts, ends)
    return out


def _winding_inside(pts: np.ndarray, loops: list) -> np.ndarray:
    """Even-odd parity: True where the point lies inside some loop."""
    inside = np.zeros(pts.shape[0], dtype=bool)
    for loop in loops:
        a = loop
        b = np.roll(loop, -1, axis=0)
        y1, y2 = a[:, 1], b[:, 1]
        for k0 in range(0, pts.shape[0], 4096):
            sl = slice(k0, min(k0 + 4096, pts.shape[0]))
            px = pts[sl, 0][:, None]
            py = pts[sl, 1][:, None]
            straddle = (y1[None, :] > py) != (y2[None, :] > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                x_int = a[None, :, 0] + (py - y1[None, :]) / (
                    y2[None, :] - y1[None, :]) * (b[None, :, 0] - a[None, :, 0])
            crossings = np.sum(straddle & (px < x_int), axis=1)
            inside[sl] ^= (crossings % 2).astype(bool)
    return inside


def signed_distance(contour: Contour, grid: Grid2D, clamp: float,
                    u: np.ndarray | None = None) -> SignedDistanceField:
    """Signed distance to the contour on the grid, clamped at ±clamp.

    Positive outside the enclosed region.  With ``u`` given, the sign is
    sign(u − level) (enclosed phase below the level); without it a
    winding parity test is used, which requires closed loops — open
    chains raise GeometryError in that case.
    """
    if contour.is_empty:
        raise GeometryError("signed_distance requires a non-empty contour")
    if clamp <= 0:
        raise ValueError("clamp must be positive")
    X, Y = grid.cell_centers()
    pts = np.column_stack([X.ravel(), Y.ravel()])
    starts, ends = contour.segments()
    # nearest-vertex distance lower-bounds the segment distance by at
    # most one segment length; cells provably beyond the clamp keep it
    vert_tree = cKDTree(np.vstack([starts, ends]))
    d_vert, _ = vert_tree.query(pts, k=1)
    seg_max = float(np.max(np.linalg.norm(ends - starts, axis=1)))
    dist = np.full(pts.shape[0], clamp)
    band = d_vert - seg_max <= clamp
    dist[band] = points_to_polyline_distance(pts[band], starts, ends)
    if u is not None:
        sign = np.where(u.ravel() >= contour.level, 1.0, -1.0)
        from_field = True
    else:
        if contour.chains:
            raise GeometryError(
                "winding sign undefined for boundary-terminated chains; "
                "pass the phase field u")
        sign = np.where(_winding_inside(pts, contour.loops), -1.0, 1.0)
        from_field = False
    d = np.clip(sign * dist, -clamp, clamp).reshape(grid.ny, grid.nx)
    return SignedDistanceField(d, contour, float(clamp), from_field)


def interface_width(state: SimState, model: BistableModel, eta: float) -> float:
    """Smallest r with all η-intermediate cells within distance r of the level set."""
    if not (0 < eta < model.eta0):
        raise ValueError(f"eta must lie in (0, {model.eta0})")
    contour = extract_contour(state, model.alpha)
    mask = ((state.u > model.alpha_minus + eta)
            & (state.u < model.alpha_plus - eta))
    if not mask.any() or contour.is_empty:
        return 0.0
    X, Y = state.grid.cell_centers()
    pts = np.column_stack([X[mask], Y[mask]])
    starts, ends = contour.segments()
    return float(np.max(points_to_polyline_distance(pts, starts, ends)))


def cross_section(state: SimState, contour: Contour, wave: StandingWave,
                  epsilon: float, clamp: float = 0.08) -> float:
    """sup over the band {|d| ≤ clamp} of |u − U₀(d/ε)|.

    The profile comparison of the singular limit: the field should look
    like the standing wave in the normal coordinate d/ε near the level
    set.  Empty contour (pure phase) returns 0 by convention.
    """
    if contour.is_empty:
        return 0.0
    sdf = signed_distance(contour, state.grid, clamp, u=state.u)
    mask = np.abs(sdf.d) < clamp
    if not mask.any():
        return 0.0
    want = wave.evaluate(sdf.d[mask] / epsilon)
    return float(np.max(np.abs(state.u[mask] - want)))


def _single_loop(obj) -> np.ndarray:
    if isinstance(obj, Contour):
        if len(obj.loops) != 1 or obj.chains:
            raise GeometryError("expected exactly one closed loop")
        return obj.loops[0]
    arr = np.asarray(obj, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise GeometryError("reference must be an (n, 2) closed polyline")
    return arr


def is_graph_over(contour, reference, angular_tol: float = 1e-3):
    """Whether the contour projects injectively onto the reference front.

    Each contour vertex is dropped to its nearest point on the reference
    loop; the resulting arclength parameters must wind exactly once
    without folding back (beyond ``angular_tol`` radians).  Returns
    (graph_over, max_normal_offset).
    """
    loop = _single_loop(contour)
    ref = _single_loop(reference)
    ref_next = np.roll(ref, -1, axis=0)
    seg_vec = ref_next - ref
    seg_len = np.linalg.norm(seg_vec, axis=1)
    total = float(seg_len.sum())
    arc0 = np.concatenate([[0.0], np.cumsum(seg_len)[:-1]])

    ab = seg_vec
    denom = np.where(seg_len == 0, 1.0, seg_len ** 2)
    ap = loop[:, None, :] - ref[None, :, :]
    t = np.clip(np.einsum("mkd,kd->mk", ap, ab) / denom, 0.0, 1.0)
    closest = ref[None, :, :] + t[:, :, None] * ab[None, :, :]
    diff = loop[:, None, :] - closest
    d2 = np.einsum("mkd,mkd->mk", diff, diff)
    nearest = np.argmin(d2, axis=1)
    rows = np.arange(loop.shape[0])
    offsets = np.sqrt(d2[rows, nearest])
    s = arc0[nearest] + t[rows, nearest] * seg_len[nearest]

    theta = 2.0 * np.pi * s / total
    inc = np.diff(np.concatenate([theta, theta[:1]]))
    inc = (inc + np.pi) % (2.0 * np.pi) - np.pi
    winding = float(inc.sum())
    ok = bool((inc >= -angular_tol).all()
              and abs(winding - 2.0 * np.pi) < 1e-2)
    return ok, float(offsets.max())


def write_contour_csv(contour: Contour, path) -> None:
    """CSV polyline dump: loop_id, x, y (chains get negative ids)."""
    with open(path, "w") as fh:
        fh.write("loop_id,x,y\n")
        for k, loop in enumerate(contour.loops):
            for x, y in loop:
                fh.write(f"{k},{x:.17g},{y:.17g}\n")
        for k, chain in enumerate(contour.chains):
            for x, y in chain:
                fh.write(f"{-(k + 1)},{x:.17g},{y:.17g}\n")
