"""Group post-processed digit detections into display rows and read them.

Two digits share a row when their vertical intervals overlap by at least half
the smaller box height; row membership is the transitive closure of that
relation, which makes the grouping invariant to uniform scaling and
translation. Rows are ordered top to bottom, digits within a row left to
right.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import BoundingBox, Detection, detection_sort_key

ROW_OVERLAP_FRAC = 0.5


@dataclass(frozen=True)
class ReadingRow:
    digits: str
    value: int
    boxes: tuple[BoundingBox, ...]


@dataclass(frozen=True)
class Reading:
    rows: tuple[ReadingRow, ...]

    def values(self) -> list[int]:
        return [row.value for row in self.rows]


def _same_row(a: BoundingBox, b: BoundingBox) -> bool:
    overlap = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    smaller = min(a.height, b.height)
    if smaller <= 0.0:
        return False
    return overlap >= ROW_OVERLAP_FRAC * smaller


def assemble(dets: list[Detection]) -> Reading:
    """Build the multi-row reading; empty input yields an empty Reading."""
    if not dets:
        return Reading(rows=())
    ordered = sorted(dets, key=detection_sort_key)

    # Union-find over the row relation's transitive closure.
    parent = list(range(len(ordered)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            if _same_row(ordered[i].box, ordered[j].box):
                parent[find(i)] = find(j)

    groups: dict[int, list[Detection]] = {}
    for i, det in enumerate(ordered):
        groups.setdefault(find(i), []).append(det)

    def mean_center_y(members: list[Detection]) -> float:
        return sum((d.box.ymin + d.box.ymax) / 2.0 for d in members) / len(members)

    def mean_center_x(members: list[Detection]) -> float:
        return sum((d.box.xmin + d.box.xmax) / 2.0 for d in members) / len(members)

    rows = []
    for members in sorted(groups.values(),
                          key=lambda m: (mean_center_y(m), mean_center_x(m))):
        members.sort(key=lambda d: (d.box.xmin, d.box.ymin))
        digits = "".join(str(d.label) for d in members)
        rows.append(ReadingRow(digits=digits, value=int(digits),
                               boxes=tuple(d.box for d in members)))
    return Reading(rows=tuple(rows))
