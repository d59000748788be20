"""Cross-checks between the two oracle formulations (loops vs shifts)."""

import numpy as np

from oracles import (
    hex_life_step,
    hex_life_step_fast,
    life_step,
    life_step_fast,
    suffix_parity,
    wireworld_step,
    wireworld_step_fast,
)


def test_life_fast_matches_loops():
    rng = np.random.default_rng(0)
    for toroidal in (False, True):
        for _ in range(20):
            board = rng.integers(0, 2, (6, 7))
            assert (life_step_fast(board, toroidal) == life_step(board, toroidal)).all()


def test_hex_life_fast_matches_loops():
    rng = np.random.default_rng(1)
    for _ in range(20):
        board = rng.integers(0, 2, (6, 5))
        assert (hex_life_step_fast(board) == hex_life_step(board)).all()


def test_wireworld_fast_matches_loops():
    rng = np.random.default_rng(2)
    for _ in range(20):
        board = rng.integers(0, 4, (6, 6))
        assert (wireworld_step_fast(board) == wireworld_step(board)).all()


def test_suffix_parity_by_hand():
    assert suffix_parity([1, 0, 1, 1]) == [1, 0, 0, 1]
    assert suffix_parity([1, 0, 1, 1], include_self=False) == [0, 0, 1, 0]
