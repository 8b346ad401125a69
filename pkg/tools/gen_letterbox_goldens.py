#!/usr/bin/env python3
"""Regenerate golden/letterbox_vectors.json from the primary toolkit.

The bridge re-implements the letterbox arithmetic against these vectors, so
any change to the primary convention must regenerate this file.
"""

import json
import random
from pathlib import Path

from sevseg.preprocess import letterbox_transform, to_model_frame
from sevseg.geometry import BoundingBox

OUT = Path(__file__).resolve().parent.parent / "golden" / "letterbox_vectors.json"


def main() -> None:
    rng = random.Random(987654321)
    cases = []
    fixed = [(4032, 3024, 384), (3024, 4032, 384), (500, 500, 384),
             (640, 480, 320), (1920, 1080, 768), (100, 900, 448)]
    sizes = [320, 384, 448, 512, 640, 768]
    while len(fixed) < 30:
        fixed.append((rng.randint(16, 4100), rng.randint(16, 4100), rng.choice(sizes)))

    for width, height, target in fixed:
        t = letterbox_transform(width, height, target)
        boxes = []
        for _ in range(4):
            x0 = rng.uniform(0, width - 2)
            y0 = rng.uniform(0, height - 2)
            box = BoundingBox(x0, y0, x0 + rng.uniform(1, width - x0),
                              y0 + rng.uniform(1, height - y0))
            boxes.append({"original": list(box.as_tuple()),
                          "model": list(to_model_frame(box, t).as_tuple())})
        cases.append({
            "width": width, "height": height, "target": target,
            "scale": t.scale, "pad_right": t.pad_right, "pad_bottom": t.pad_bottom,
            "boxes": boxes,
        })

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"cases": cases}, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(cases)} cases to {OUT}")


if __name__ == "__main__":
    main()
