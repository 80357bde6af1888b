#!/usr/bin/env python3
"""Regenerate the synthetic asymmetric instances shipped under instances/.

These are seeded uniform-random ATSP matrices, not TSPLIB originals; the
rnd prefix marks them as locally generated. Sizes 53 and 64 feed the paired
SGA-vs-PGA benchmarks, 171 exists for larger CLI demos. Running this script
again reproduces the files byte-for-byte.
"""

import random
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mrtsp.tsplib import Instance, format_instance, random_instance

OUT_DIR = Path(__file__).resolve().parent.parent / "instances"

SPECS = [  # (name, n, seed)
    ("rnd053", 53, 53),
    ("rnd064", 64, 64),
    ("rnd171", 171, 171),
]


def build(name: str, n: int, seed: int) -> Instance:
    if n <= 64:
        base = random_instance(n, (1, 100), seed)
        return Instance(name, n, np.array(base.distances))
    rng = random.Random(seed)
    mat = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if i != j:
                mat[i, j] = rng.randint(1, 100)
    return Instance(name, n, mat)


def main():
    for name, n, seed in SPECS:
        path = OUT_DIR / f"{name}.atsp"
        path.write_text(format_instance(build(name, n, seed)))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
