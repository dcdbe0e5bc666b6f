"""2D building map, user placement and line-of-sight queries."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

BS_HEIGHT_M = 10.0
USER_HEIGHT_M = 1.5

# Fixed translation applied to every query segment so that segments passing
# exactly through a polygon vertex or along an edge get a well-defined
# crossing count.  Irrational-ish direction, never parallel to an axis.
_PERTURB = 1e-9 * np.array([0.7548776662466927, 0.5698402909980532])


class MapError(ValueError):
    pass


def _signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _is_simple(poly: np.ndarray) -> bool:
    n = len(poly)
    for i in range(n):
        a1, a2 = poly[i], poly[(i + 1) % n]
        if np.allclose(a1, a2):
            return False
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(a1, a2, poly[j], poly[(j + 1) % n]):
                return False
    return True


def _points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd ray casting towards +x, half-open in y."""
    x, y = points[:, 0:1], points[:, 1:2]
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (x < x_cross)
    return (np.count_nonzero(hits, axis=1) % 2) == 1


@dataclass(frozen=True)
class BuildingMap:
    """Building footprints (counter-clockwise vertex arrays, metres) and the
    axis-aligned bounds ``(xmin, ymin, xmax, ymax)`` of the simulated area."""

    buildings: tuple
    bounds: tuple
    _edges: tuple = field(init=False, repr=False, compare=False)

    def __init__(self, buildings: Sequence, bounds: Sequence[float]):
        xmin, ymin, xmax, ymax = (float(v) for v in bounds)
        if not (xmax > xmin and ymax > ymin):
            raise MapError(f"degenerate bounds {tuple(bounds)}")
        polys = []
        for k, raw in enumerate(buildings):
            poly = np.asarray(raw, dtype=float).reshape(-1, 2)
            if len(poly) >= 2 and np.allclose(poly[0], poly[-1]):
                poly = poly[:-1]
            if len(poly) < 3:
                raise MapError(f"building {k} has fewer than 3 vertices")
            if (poly[:, 0].min() < xmin or poly[:, 0].max() > xmax
                    or poly[:, 1].min() < ymin or poly[:, 1].max() > ymax):
                raise MapError(f"building {k} extends outside the map bounds")
            area = _signed_area(poly)
            if area == 0.0 or not _is_simple(poly):
                raise MapError(f"building {k} is not a simple polygon")
            if area < 0:
                poly = poly[::-1].copy()
            poly.setflags(write=False)
            polys.append(poly)
        for i, a in enumerate(polys):
            for j, b in enumerate(polys):
                if i != j and _points_in_polygon(a[:1], b)[0] and _points_in_polygon(a, b).all():
                    raise MapError(f"building {i} is nested inside building {j}")
        object.__setattr__(self, "buildings", tuple(polys))
        object.__setattr__(self, "bounds", (xmin, ymin, xmax, ymax))

        if polys:
            e0 = np.concatenate(polys)
            e1 = np.concatenate([np.roll(p, -1, axis=0) for p in polys])
            owner = np.concatenate([np.full(len(p), k) for k, p in enumerate(polys)])
        else:
            e0 = e1 = np.zeros((0, 2))
            owner = np.zeros(0, dtype=int)
        object.__setattr__(self, "_edges", (e0, e1, owner))

    @property
    def area(self) -> float:
        xmin, ymin, xmax, ymax = self.bounds
        return (xmax - xmin) * (ymax - ymin)

    def building_fraction(self) -> float:
        return sum(_signed_area(p) for p in self.buildings) / self.area

    def contains(self, point) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return xmin <= point[0] <= xmax and ymin <= point[1] <= ymax

    def indoor(self, points) -> np.ndarray:
        """Boolean mask of points lying inside any building."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))[:, :2]
        mask = np.zeros(len(pts), dtype=bool)
        for poly in self.buildings:
            mask |= _points_in_polygon(pts, poly)
        return mask


def load_map(path) -> BuildingMap:
    """Read a map file.

    Grammar (``#`` starts a comment, blank lines ignored)::

        map      := bounds NEWLINE { polygon NEWLINE }
        bounds   := xmin "," ymin "," xmax "," ymax
        polygon  := x "," y { "," x "," y }        (at least 3 vertices)
    """
    text = Path(path).read_text()
    return parse_map(text, source=str(path))


def parse_map(text: str, source: str = "<string>") -> BuildingMap:
    bounds = None
    buildings = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values = [float(v) for v in line.split(",")]
        except ValueError:
            raise MapError(f"{source}:{lineno}: non-numeric value in {line!r}") from None
        if bounds is None:
            if len(values) != 4:
                raise MapError(f"{source}:{lineno}: bounds line needs 4 values")
            bounds = values
            continue
        if len(values) % 2 or len(values) < 6:
            raise MapError(f"{source}:{lineno}: polygon needs an even count of >= 6 values")
        buildings.append(np.reshape(values, (-1, 2)))
    if bounds is None:
        raise MapError(f"{source}: missing bounds line")
    return BuildingMap(buildings, bounds)


def campus_map() -> BuildingMap:
    """Synthetic 400 m x 300 m campus with eight rectangular buildings
    (about 25 % of the area built up)."""
    text = resources.files("vrcell.data").joinpath("campus.map").read_text()
    return parse_map(text, source="campus.map")


#: Fixed base-station sites of the campus scenario (x, y, height).
CAMPUS_BS = np.array([
    [130.0, 105.0, BS_HEIGHT_M],
    [275.0, 110.0, BS_HEIGHT_M],
    [190.0, 205.0, BS_HEIGHT_M],
])


def place_users(bmap: BuildingMap, n: int, rng_seed, height: float = USER_HEIGHT_M) -> np.ndarray:
    """Drop ``n`` users uniformly over the map bounds, indoors included.

    Returns an ``(n, 3)`` array.  Draws are consumed row by row, so the first
    ``k`` users for a seed are the same whatever ``n >= k`` is requested.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    xmin, ymin, xmax, ymax = bmap.bounds
    u = rng.random((n, 2))
    pts = np.empty((n, 3))
    pts[:, 0] = xmin + u[:, 0] * (xmax - xmin)
    pts[:, 1] = ymin + u[:, 1] * (ymax - ymin)
    pts[:, 2] = height
    return pts


def path_profile(a, b, bmap: BuildingMap) -> tuple[int, float]:
    """Wall crossings and indoor length of the ground segment ``a -> b``.

    Only the x/y coordinates are used.  Returns ``(wall_crossings,
    indoor_distance_m)``.
    """
    p = np.asarray(a, dtype=float)[:2] + _PERTURB
    q = np.asarray(b, dtype=float)[:2] + _PERTURB
    e0, e1, owner = bmap._edges
    if len(e0) == 0:
        return 0, 0.0
    d = q - p
    length = float(np.hypot(d[0], d[1]))
    if length == 0.0:
        return 0, 0.0
    e = e1 - e0
    w = e0 - p
    denom = d[0] * e[:, 1] - d[1] * e[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / denom
        u = (w[:, 0] * d[1] - w[:, 1] * d[0]) / denom
    hit = (denom != 0) & (t > 0) & (t < 1) & (u >= 0) & (u < 1)
    crossings = int(np.count_nonzero(hit))
    if crossings == 0:
        # either entirely outdoors or entirely inside one building
        inside = bmap.indoor(p[None, :])[0]
        return 0, length if inside else 0.0

    indoor = 0.0
    for k in np.unique(owner[hit]):
        ts = np.sort(t[hit & (owner == k)])
        inside = bool(_points_in_polygon(p[None, :], bmap.buildings[k])[0])
        prev = 0.0
        for tk in ts:
            if inside:
                indoor += tk - prev
            inside = not inside
            prev = tk
        if inside:
            indoor += 1.0 - prev
    return crossings, indoor * length


def is_los(a, b, bmap: BuildingMap) -> bool:
    return path_profile(a, b, bmap)[0] == 0


def rank_bs(user, bss) -> list[int]:
    """Base-station indices by ascending 3D distance, ties to the lower index."""
    bss = np.atleast_2d(np.asarray(bss, dtype=float))
    if bss.size == 0:
        raise ValueError("rank_bs needs at least one base station")
    user = np.asarray(user, dtype=float)
    dim = min(bss.shape[1], user.shape[0])
    dist = np.linalg.norm(bss[:, :dim] - user[:dim], axis=1)
    return [int(i) for i in np.argsort(dist, kind="stable")]


@dataclass(frozen=True)
class Scenario:
    """Map plus base-station and user positions, each an ``(n, 3)`` array of
    x, y and antenna height in metres."""

    bmap: BuildingMap
    bs_positions: np.ndarray
    user_positions: np.ndarray

    def __post_init__(self):
        bs = np.atleast_2d(np.asarray(self.bs_positions, dtype=float)).reshape(-1, 3)
        users = np.asarray(self.user_positions, dtype=float).reshape(-1, 3)
        for kind, pts in (("base station", bs), ("user", users)):
            for p in pts:
                if not self.bmap.contains(p):
                    raise MapError(f"{kind} at {tuple(p[:2])} lies outside the map bounds")
        object.__setattr__(self, "bs_positions", bs)
        object.__setattr__(self, "user_positions", users)

    @property
    def n_users(self) -> int:
        return len(self.user_positions)

    @property
    def n_bs(self) -> int:
        return len(self.bs_positions)


def placement_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))


def campus_scenario(n_users: int, seed: int, bmap: BuildingMap | None = None,
                    bs_positions=None) -> Scenario:
    bmap = campus_map() if bmap is None else bmap
    bs = CAMPUS_BS if bs_positions is None else bs_positions
    return Scenario(bmap, bs, place_users(bmap, n_users, placement_rng(seed)))
