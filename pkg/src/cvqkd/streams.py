"""
Counter-based random streams.

Every block of pulses gets its own Philox stream, keyed by the session seed and
addressed by the block index in the most significant counter word, so that any block
can be regenerated independently of the others and of the order of generation.
"""

from __future__ import annotations

import enum

import numpy as np


BLOCK_SIZE = 2**16

SCHEME = f"philox4x64-key=seed-counter=block-{BLOCK_SIZE}"


class StreamLabel(enum.IntEnum):
    """
    Labels separating the families of derived seeds.
    """

    NULL_TRIAL = 1
    ATTACK_TRIAL = 2
    BOOTSTRAP = 3
    SWEEP_POINT = 4


def block_generator(seed: int, block_index: int) -> np.random.Generator:
    """
    The generator for one block of pulses.

    Parameters
    ----------
    seed
        Session seed, used as the Philox key.
    block_index
        Index of the block; blocks hold `BLOCK_SIZE` consecutive pulses.
    """

    bit_generator = np.random.Philox(
        key=seed,
        counter=np.array([0, 0, 0, block_index], dtype=np.uint64),
    )

    return np.random.Generator(bit_generator)


def block_spans(n_pulses: int) -> list[tuple[int, int]]:
    """
    The (start, stop) pulse indices of each block.
    """

    return [
        (start, min(start + BLOCK_SIZE, n_pulses))
        for start in range(0, n_pulses, BLOCK_SIZE)
    ]


def derive_seed(seed: int, label: StreamLabel, index: int) -> int:
    """
    A 64-bit seed for an independent sub-experiment (trial, bootstrap, sweep point).
    """

    seed_seq = np.random.SeedSequence(entropy=[seed, int(label), index])

    (derived,) = seed_seq.generate_state(n_words=1, dtype=np.uint64)

    return int(derived)
