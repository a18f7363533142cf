"""Shared fixtures: random unimodular loops built from unipotent factors."""

import numpy as np
import pytest

from loopcmc.loopalg import MatrixLoop, ScalarLoop, grid


def laurent_poly(rng, lo: int, hi: int, scale: float = 0.3) -> dict:
    return {k: scale * (rng.normal() + 1j * rng.normal()) for k in range(lo, hi + 1)}


def unipotent_loop(rng, trunc: int = 32, deg: int = 3, scale: float = 0.3) -> MatrixLoop:
    """``[[1, p], [0, 1]] [[1, 0], [q, 1]]`` with Laurent polynomials ``p, q``.

    The determinant is exactly 1 and the entries have degree ``<= 2 deg``, so
    the loop is exactly representable at ``trunc >= 2 deg``.
    """
    lam = grid(trunc)
    p = ScalarLoop.from_dict(laurent_poly(rng, -deg, deg, scale), trunc).eval(lam)
    q = ScalarLoop.from_dict(laurent_poly(rng, -deg, deg, scale), trunc).eval(lam)
    one = np.ones_like(lam)
    upper = np.stack([np.stack([one, p], -1), np.stack([0 * one, one], -1)], -2)
    lower = np.stack([np.stack([one, 0 * one], -1), np.stack([q, one], -1)], -2)
    return MatrixLoop.from_samples(upper @ lower, trunc)


def positive_loop(rng, trunc: int = 32, deg: int = 3, scale: float = 0.2) -> MatrixLoop:
    """Unimodular loop holomorphic inside the disk (nonnegative exponents only)."""
    lam = grid(trunc)
    p = ScalarLoop.from_dict(laurent_poly(rng, 0, deg, scale), trunc).eval(lam)
    q = ScalarLoop.from_dict(laurent_poly(rng, 0, deg, scale), trunc).eval(lam)
    one = np.ones_like(lam)
    upper = np.stack([np.stack([one, p], -1), np.stack([0 * one, one], -1)], -2)
    lower = np.stack([np.stack([one, 0 * one], -1), np.stack([q, one], -1)], -2)
    return MatrixLoop.from_samples(upper @ lower, trunc)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
