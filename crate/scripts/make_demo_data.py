"""Writes the synthetic demo data sets under demo/."""

import csv
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "demo"


def step_1d(rng):
    rows = []
    for _ in range(80):
        x = rng.uniform(-1.0, 1.0)
        y = 0.5 * x + (1.5 if x >= 0.0 else 0.0) + rng.gauss(0.0, 0.5)
        rows.append((round(x, 6), round(y, 6)))
    return sorted(rows)


def left_of(path, p):
    # the demo border is x-monotone, so compare against its height at p.x
    for (ax, ay), (bx, by) in zip(path, path[1:]):
        if ax <= p[0] <= bx:
            return p[1] > ay + (p[0] - ax) / (bx - ax) * (by - ay)
    return p[1] > path[-1][1]


def region_2d(rng, path):
    rows = []
    for _ in range(150):
        p = (rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0))
        jump = 0.0 if left_of(path, p) else 1.0
        v = 0.3 * p[0] - 0.2 * p[1] + jump + rng.gauss(0.0, 0.3)
        rows.append((round(p[0], 6), round(p[1], 6), round(v, 6)))
    return rows


def main():
    rng = random.Random(20240101)
    with open(OUT / "step.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "y"])
        w.writerows(step_1d(rng))
    path = [(-2.0, 0.6), (-0.5, 0.1), (0.4, -0.4), (2.0, 0.2)]
    with open(OUT / "border.txt", "w") as f:
        f.write("# illustrative border, one 'x y' vertex per line\n")
        f.write("# points to the right of the direction of travel are the intervention side\n")
        for x, y in path:
            f.write(f"{x} {y}\n")
    with open(OUT / "regions.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["lon", "lat", "outcome"])
        w.writerows(region_2d(rng, path))


if __name__ == "__main__":
    main()
