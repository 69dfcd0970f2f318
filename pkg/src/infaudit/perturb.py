"""Random neighbours of a vector at a controlled distance."""

from __future__ import annotations

import numpy as np


def flip_bits(base: np.ndarray, d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """`count` copies of a binary vector, each with `d` distinct random coordinates flipped."""
    m = base.shape[0]
    if not 0 <= d <= m:
        raise ValueError(f"cannot flip {d} of {m} coordinates")
    out = np.tile(base, (count, 1))
    if d == 0 or count == 0:
        return out
    # argsort of uniform keys gives an independent random subset per row
    cols = np.argsort(rng.random((count, m)), axis=1)[:, :d]
    rows = np.repeat(np.arange(count), d)
    out[rows, cols.ravel()] = 1.0 - out[rows, cols.ravel()]
    return out


def perturb_manhattan(
    base: np.ndarray, target: float, count: int, rng: np.random.Generator, n_features: int | None = None
) -> np.ndarray:
    """`count` perturbations of a [-1, 1]^m vector with L1 displacement `target`.

    A random subset of features (size `n_features`, random if None) receives
    additive noise rescaled so its absolute values sum to `target`; values
    pushed past the domain edge are clipped, which can shorten the displacement.
    """
    m = base.shape[0]
    out = np.tile(base, (count, 1))
    for row in range(count):
        width = n_features if n_features is not None else int(rng.integers(1, m + 1))
        cols = rng.choice(m, size=min(width, m), replace=False)
        step = rng.standard_normal(cols.size)
        norm = np.abs(step).sum()
        if norm == 0:
            step[0], norm = 1.0, 1.0
        out[row, cols] += step * (target / norm)
    return np.clip(out, -1.0, 1.0)


def hamming_ball_sample(base: np.ndarray, r: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the Hamming ball B(base, r) minus the centre."""
    from scipy.special import comb

    m = base.shape[0]
    r = min(int(r), m)
    if r < 1:
        raise ValueError("radius must be at least 1")
    sizes = np.array([comb(m, d, exact=False) for d in range(1, r + 1)])
    d = int(rng.choice(np.arange(1, r + 1), p=sizes / sizes.sum()))
    return flip_bits(base, d, 1, rng)[0]
