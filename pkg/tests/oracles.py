"""Independent brute-force oracles the implementation is checked against."""

import numpy as np


def brute_dominates(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b)) and a != tuple(b) and any(x < y for x, y in zip(a, b))


def brute_nondominated_sort(objectives) -> list[list[int]]:
    """O(n^2 K) front peeling by repeated scans."""
    remaining = list(range(len(objectives)))
    fronts = []
    while remaining:
        front = [
            i
            for i in remaining
            if not any(brute_dominates(tuple(objectives[j]), tuple(objectives[i])) for j in remaining if j != i)
        ]
        fronts.append(front)
        remaining = [i for i in remaining if i not in front]
    return fronts


def brute_coverage(ours, theirs) -> float:
    covered = sum(
        1 for t in theirs if any(brute_dominates(tuple(o), tuple(t)) for o in ours)
    )
    return covered / len(theirs)


def mc_hypervolume(points, ref, n_samples: int = 1_000_000, seed: int = 0) -> float:
    """Monte-Carlo estimate of the dominated volume below ``ref``."""
    ref = np.asarray(ref, dtype=float)
    pts = np.minimum(np.asarray(points, dtype=float), ref)
    lower = pts.min(axis=0)
    box = np.prod(ref - lower)
    if box <= 0:
        return 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 200_000
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        samples = rng.uniform(lower, ref, size=(m, len(ref)))
        dominated = ((pts[None, :, :] <= samples[:, None, :]).all(axis=2)).any(axis=1)
        hits += int(dominated.sum())
        done += m
    return box * hits / n_samples
