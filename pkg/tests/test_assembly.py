import random

from sevseg.assembly import Reading, assemble
from sevseg.geometry import BoundingBox, Detection


def det(x0, y0, x1, y1, label, score=0.9):
    return Detection(box=BoundingBox(float(x0), float(y0), float(x1), float(y1)),
                     label=label, score=score)


def test_empty_input():
    assert assemble([]) == Reading(rows=())


def test_single_digit():
    reading = assemble([det(10, 10, 20, 30, 7)])
    assert len(reading.rows) == 1
    assert reading.rows[0].digits == "7"
    assert reading.rows[0].value == 7


def test_left_to_right_ordering():
    dets = [det(50, 10, 60, 30, 2), det(10, 10, 20, 30, 1), det(90, 10, 100, 30, 0)]
    reading = assemble(dets)
    assert reading.values() == [120]
    assert reading.rows[0].digits == "120"


def test_three_row_blood_pressure_layout():
    rows = {0: "120", 60: "80", 120: "72"}
    dets = []
    for y, digits in rows.items():
        for i, ch in enumerate(digits):
            dets.append(det(10 + 25 * i, y, 28 + 25 * i, y + 35, int(ch)))
    reading = assemble(dets)
    assert reading.values() == [120, 80, 72]


def test_partial_vertical_overlap_splits_rows():
    # second box shares only 20% of its height with the first: separate rows
    dets = [det(10, 0, 20, 100, 1), det(40, 80, 50, 180, 2)]
    assert assemble(dets).values() == [1, 2]


def test_transitive_row_merge():
    # a overlaps b, b overlaps c, but a and c barely overlap directly
    a = det(10, 0, 20, 40, 1)
    b = det(30, 18, 40, 58, 2)
    c = det(50, 36, 60, 76, 3)
    reading = assemble([a, b, c])
    assert reading.values() == [123]


def test_invariant_under_scale_and_translation():
    base = [det(10, 10, 28, 45, 1), det(35, 10, 53, 45, 2),
            det(10, 70, 28, 105, 9), det(35, 70, 53, 105, 5)]
    reading_base = assemble(base)

    def transform(d, k, dx, dy):
        b = d.box
        return Detection(box=BoundingBox(b.xmin * k + dx, b.ymin * k + dy,
                                         b.xmax * k + dx, b.ymax * k + dy),
                         label=d.label, score=d.score)

    for k, dx, dy in [(2.0, 5.0, 9.0), (0.5, 100.0, 3.0), (7.3, 0.0, 0.0)]:
        moved = [transform(d, k, dx, dy) for d in base]
        assert [r.digits for r in assemble(moved).rows] == \
               [r.digits for r in reading_base.rows]


def test_invariant_under_input_permutation():
    rng = random.Random(5)
    dets = [det(10 + 30 * i, 40 * (i % 2), 26 + 30 * i, 35 + 40 * (i % 2), i % 10,
                score=0.5 + 0.05 * i)
            for i in range(6)]
    expected = assemble(dets)
    for _ in range(20):
        shuffled = dets[:]
        rng.shuffle(shuffled)
        assert assemble(shuffled) == expected


def test_x_strictly_increasing_within_row():
    dets = [det(10, 10, 30, 50, 3), det(32, 12, 52, 48, 4), det(54, 9, 74, 51, 5)]
    reading = assemble(dets)
    for row in reading.rows:
        xs = [b.xmin for b in row.boxes]
        assert xs == sorted(xs)
        assert len(set(xs)) == len(xs)
