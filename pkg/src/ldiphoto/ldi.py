"""Layered depth image with explicit per-pixel connectivity.

Every lattice position holds zero or more pixels; each pixel stores color,
disparity (normalized inverse depth in [0, 1]) and at most one link per
cardinal direction. Links are always symmetric and connect pixels exactly one
lattice step apart. Pixel ids are append-only and never reused; deletion (not
used by the pipeline) would tombstone. The structure is single-writer with no
internal locking: concurrent read-only traversals are safe, mutation is not.

Binary container (little-endian, documented, versioned):

    magic   4 bytes  b"LDI1"
    width   u32
    height  u32
    count   u64      number of pixel records
    then `count` packed 27-byte records, alive pixels in id order with ids
    renumbered to 0..count-1:
        x u16, y u16, r u8, g u8, b u8, disparity f32,
        links 4 x u32 (left, right, up, down; 0xFFFFFFFF = none)

Round-tripping a container through load/save is bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ConsistencyError, InputError

LEFT, RIGHT, UP, DOWN = 0, 1, 2, 3
STEP = ((-1, 0), (1, 0), (0, -1), (0, 1))  # (dx, dy) per direction
OPPOSITE = (RIGHT, LEFT, DOWN, UP)
NO_LINK = 0xFFFFFFFF

_MAGIC = b"LDI1"
_HEADER = struct.Struct("<4sIIQ")
_RECORD = struct.Struct("<HH3BfIIII")


@dataclass
class SilhouettePair:
    """Pixels that lost (or are defined to lack) a link across one cut edge.

    foreground: nearer-side pixel ids; background: farther side. cut_links
    records only links physically removed by this cut, as (pid, direction,
    partner) triples, sufficient to undo it. open_directions lists every
    (background pid, direction) facing across the cut, including directions
    whose link never existed (edges induced by inpainting are born unlinked);
    region growth seeds from these.
    """

    foreground: frozenset = frozenset()
    background: frozenset = frozenset()
    cut_links: tuple = ()
    open_directions: tuple = ()

    @property
    def empty(self):
        return not self.background


class Ldi:
    """Struct-of-arrays pixel store plus a per-position index."""

    def __init__(self, width, height, capacity=0):
        if width <= 0 or height <= 0:
            raise InputError(f"bad LDI dimensions {width}x{height}")
        if width > 0xFFFF or height > 0xFFFF:
            raise InputError("LDI dimensions exceed u16 positions")
        self.width = int(width)
        self.height = int(height)
        n = max(int(capacity), 16)
        self._x = np.zeros(n, dtype=np.uint16)
        self._y = np.zeros(n, dtype=np.uint16)
        self._color = np.zeros((n, 3), dtype=np.uint8)
        self._disp = np.zeros(n, dtype=np.float32)
        self._links = np.full((n, 4), NO_LINK, dtype=np.uint32)
        self._alive = np.zeros(n, dtype=bool)
        self._count = 0
        # position key (y * width + x) -> list of pixel ids, insertion order
        self.index: dict[int, list[int]] = {}

    # -- storage ----------------------------------------------------------

    def __len__(self):
        return int(self._alive[: self._count].sum())

    @property
    def pixel_count(self):
        return len(self)

    def _grow(self, extra):
        need = self._count + extra
        cap = self._x.shape[0]
        if need <= cap:
            return
        new = max(need, cap * 2)
        for name in ("_x", "_y", "_disp", "_alive"):
            arr = getattr(self, name)
            grown = np.zeros(new, dtype=arr.dtype)
            grown[:cap] = arr
            setattr(self, name, grown)
        color = np.zeros((new, 3), dtype=np.uint8)
        color[:cap] = self._color
        self._color = color
        links = np.full((new, 4), NO_LINK, dtype=np.uint32)
        links[:cap] = self._links
        self._links = links

    def pos_key(self, x, y):
        return int(y) * self.width + int(x)

    def add_pixel(self, x, y, color, disparity):
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise InputError(f"position ({x},{y}) outside lattice")
        self._grow(1)
        pid = self._count
        self._x[pid] = x
        self._y[pid] = y
        self._color[pid] = color
        self._disp[pid] = disparity
        self._alive[pid] = True
        self._count += 1
        self.index.setdefault(self.pos_key(x, y), []).append(pid)
        return pid

    # -- accessors ---------------------------------------------------------

    def alive(self, pid):
        return 0 <= pid < self._count and bool(self._alive[pid])

    def pos(self, pid):
        return int(self._x[pid]), int(self._y[pid])

    def color(self, pid):
        return self._color[pid].copy()

    def disparity(self, pid):
        return float(self._disp[pid])

    def link(self, pid, direction):
        v = int(self._links[pid, direction])
        return None if v == NO_LINK else v

    def pixels_at(self, x, y):
        return tuple(self.index.get(self.pos_key(x, y), ()))

    def alive_ids(self):
        return np.flatnonzero(self._alive[: self._count])

    def layer_count(self, x, y):
        return len(self.index.get(self.pos_key(x, y), ()))

    # -- mutations ---------------------------------------------------------

    def set_link(self, a, b, direction):
        """Create the symmetric link a -> b in `direction` (b -> a opposite)."""
        if self._links[a, direction] != NO_LINK or self._links[b, OPPOSITE[direction]] != NO_LINK:
            raise ConsistencyError(f"link slot occupied: {a} dir {direction} <-> {b}")
        ax, ay = self.pos(a)
        bx, by = self.pos(b)
        dx, dy = STEP[direction]
        if (ax + dx, ay + dy) != (bx, by):
            raise ConsistencyError(f"link {a}->{b} not one step in direction {direction}")
        self._links[a, direction] = b
        self._links[b, OPPOSITE[direction]] = a

    def clear_link(self, a, direction):
        """Remove the symmetric link; returns the former partner id."""
        b = int(self._links[a, direction])
        if b == NO_LINK:
            raise ConsistencyError(f"no link to clear: {a} dir {direction}")
        self._links[a, direction] = NO_LINK
        self._links[b, OPPOSITE[direction]] = NO_LINK
        return b

    # -- validation ---------------------------------------------------------

    def validate(self):
        """Full-structure check: link symmetry, geometry, index/store bijection."""
        n = self._count
        ids = np.flatnonzero(self._alive[:n])
        xs = self._x[ids].astype(np.int64)
        ys = self._y[ids].astype(np.int64)
        if ids.size and (xs.max() >= self.width or ys.max() >= self.height):
            raise ConsistencyError("pixel position outside lattice")
        links = self._links[ids]
        for d in range(4):
            m = links[:, d] != NO_LINK
            tgt = links[m, d].astype(np.int64)
            if tgt.size == 0:
                continue
            if tgt.max() >= n or not self._alive[tgt].all():
                raise ConsistencyError(f"dangling link in direction {d}")
            back = self._links[tgt, OPPOSITE[d]]
            if not (back == ids[m].astype(np.uint32)).all():
                raise ConsistencyError(f"asymmetric link in direction {d}")
            dx, dy = STEP[d]
            if not ((self._x[tgt].astype(np.int64) == xs[m] + dx).all() and (self._y[tgt].astype(np.int64) == ys[m] + dy).all()):
                raise ConsistencyError(f"link geometry broken in direction {d}")
        # index <-> store bijection
        total = 0
        keys = []
        lens = []
        chunks = []
        for key, lst in self.index.items():
            keys.append(key)
            lens.append(len(lst))
            chunks.append(lst)
            total += len(lst)
        if total != ids.size:
            raise ConsistencyError(f"index holds {total} ids, store holds {ids.size}")
        if total:
            flat = np.fromiter(
                (pid for lst in chunks for pid in lst), dtype=np.int64, count=total
            )
            if flat.max() >= n or not self._alive[flat].all():
                raise ConsistencyError("index references a dead pixel")
            if np.unique(flat).size != total:
                raise ConsistencyError("duplicate pixel id in index")
            key_of = self._y[flat].astype(np.int64) * self.width + self._x[flat].astype(np.int64)
            expect = np.repeat(np.asarray(keys, dtype=np.int64), np.asarray(lens, dtype=np.int64))
            if not (key_of == expect).all():
                raise ConsistencyError("index key does not match pixel position")

    # -- container ----------------------------------------------------------

    def to_bytes(self):
        ids = self.alive_ids()
        remap = np.full(self._count, NO_LINK, dtype=np.uint32)
        remap[ids] = np.arange(ids.size, dtype=np.uint32)
        out = bytearray(_HEADER.pack(_MAGIC, self.width, self.height, ids.size))
        for pid in ids:
            links = [
                int(remap[v]) if v != NO_LINK else NO_LINK
                for v in self._links[pid]
            ]
            out += _RECORD.pack(
                int(self._x[pid]),
                int(self._y[pid]),
                int(self._color[pid, 0]),
                int(self._color[pid, 1]),
                int(self._color[pid, 2]),
                float(self._disp[pid]),
                *links,
            )
        return bytes(out)

    def save(self, path):
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def from_bytes(cls, data):
        if len(data) < _HEADER.size:
            raise InputError("truncated LDI container")
        magic, width, height, count = _HEADER.unpack_from(data, 0)
        if magic != _MAGIC:
            raise InputError(f"bad LDI magic {magic!r}")
        need = _HEADER.size + count * _RECORD.size
        if len(data) != need:
            raise InputError(f"LDI container size {len(data)} != expected {need}")
        ldi = cls(width, height, capacity=count)
        off = _HEADER.size
        links_raw = np.empty((count, 4), dtype=np.uint32)
        for i in range(count):
            x, y, r, g, b, disp, l0, l1, l2, l3 = _RECORD.unpack_from(data, off)
            off += _RECORD.size
            ldi.add_pixel(x, y, (r, g, b), disp)
            links_raw[i] = (l0, l1, l2, l3)
        ldi._links[:count] = links_raw
        ldi.validate()
        return ldi

    @classmethod
    def load(cls, path):
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())


def lift_image(color, disparity):
    """Create the single-layer, fully 4-connected LDI of an RGB-D image."""
    color = np.asarray(color)
    disparity = np.asarray(disparity, dtype=np.float32)
    if color.ndim != 3 or color.shape[2] != 3:
        raise InputError(f"color image must be HxWx3, got {color.shape}")
    if color.shape[:2] != disparity.shape:
        raise InputError(
            f"color {color.shape[:2]} and disparity {disparity.shape} dimensions differ"
        )
    if not np.isfinite(disparity).all():
        raise InputError("disparity contains non-finite values")
    if disparity.min() < 0.0 or disparity.max() > 1.0:
        raise InputError("disparity must be normalized to [0, 1]")
    h, w = disparity.shape
    ldi = Ldi(w, h, capacity=h * w)
    n = h * w
    ldi._x[:n] = np.tile(np.arange(w, dtype=np.uint16), h)
    ldi._y[:n] = np.repeat(np.arange(h, dtype=np.uint16), w)
    ldi._color[:n] = color.reshape(n, 3)
    ldi._disp[:n] = disparity.reshape(n)
    ldi._alive[:n] = True
    ldi._count = n
    pid = np.arange(n, dtype=np.uint32).reshape(h, w)
    links = np.full((h, w, 4), NO_LINK, dtype=np.uint32)
    links[:, 1:, LEFT] = pid[:, :-1]
    links[:, :-1, RIGHT] = pid[:, 1:]
    links[1:, :, UP] = pid[:-1, :]
    links[:-1, :, DOWN] = pid[1:, :]
    ldi._links[:n] = links.reshape(n, 4)
    # pixel ids are row-major, equal to their position keys at lift time
    ldi.index = {i: [i] for i in range(n)}
    return ldi


def cut_edge(ldi, edge, threshold):
    """Disconnect pixel pairs across a depth edge; returns the silhouettes.

    Pairs are re-verified against the threshold at cut time so layers merged
    after detection are never severed by a stale position pair. Pairs of a
    recursion-level edge (pid_pairs) are typically born unlinked; they are
    classified but nothing is removed.
    """
    fg: set[int] = set()
    bg: set[int] = set()
    removed = []
    open_dirs = []

    pixel_pairs = []
    if getattr(edge, "pid_pairs", None):
        for a, b in edge.pid_pairs:
            if not (ldi.alive(a) and ldi.alive(b)):
                raise ConsistencyError(f"stale pixel id in edge {edge.id}")
            pixel_pairs.append((a, b))
    else:
        for (fx, fy), (nx, ny) in edge.cut_pairs:
            dx, dy = nx - fx, ny - fy
            direction = STEP.index((dx, dy))
            for a in ldi.pixels_at(fx, fy):
                b = ldi.link(a, direction)
                if b is not None:
                    pixel_pairs.append((a, b))

    for a, b in pixel_pairs:
        da, db = ldi.disparity(a), ldi.disparity(b)
        if abs(da - db) <= threshold:
            continue
        near, far = (a, b) if da > db else (b, a)
        fx, fy = ldi.pos(far)
        nx, ny = ldi.pos(near)
        direction = STEP.index((nx - fx, ny - fy))
        if ldi.link(far, direction) == near:
            ldi.clear_link(far, direction)
            removed.append((far, direction, near))
        fg.add(near)
        bg.add(far)
        open_dirs.append((far, direction))

    fg -= bg  # a pixel on both sides of one edge belongs to background only
    open_dirs = tuple(sorted(set(open_dirs)))
    return SilhouettePair(
        foreground=frozenset(fg),
        background=frozenset(bg),
        cut_links=tuple(removed),
        open_directions=open_dirs,
    )


def undo_cut(ldi, silhouettes):
    """Restore every link removed by cut_edge; exact inverse on links."""
    for pid, direction, partner in silhouettes.cut_links:
        ldi.set_link(pid, partner, direction)
