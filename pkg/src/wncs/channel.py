"""Memoryless Bernoulli packet drops on scheduled links."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ChannelOutcome:
    gamma: np.ndarray  # N x M, 1 where a scheduled packet got through
    theta: np.ndarray  # N, True where the controller received a packet


def realize(delta, q_bar, rng: np.random.Generator) -> ChannelOutcome:
    """Draw one uniform per scheduled link, in row-major (sensor, channel) order.

    Link ``(i, j)`` succeeds when its draw is below ``q_bar[i, j]``; ACK/NACK
    feedback is the outcome itself.
    """
    delta = np.asarray(delta)
    q = np.asarray(q_bar, dtype=float)
    rows, cols = np.nonzero(delta)
    gamma = np.zeros(delta.shape, dtype=np.int8)
    if rows.size:
        draws = rng.random(rows.size)
        gamma[rows, cols] = draws < q[rows, cols]
    theta = gamma.sum(axis=1) == 1
    return ChannelOutcome(gamma=gamma, theta=theta)
