"""Coarse-correlated equilibrium machinery.

A joint distribution sigma over strategy profiles is an epsilon-CCE when
no player can gain more than epsilon in expectation by committing to a
single strategy before the profile is drawn.  The central quantity is the
deviation gain

    gain_p(a') = sum_a sigma(a) * [G_p(a', a_-p) - G_p(a)],

the expected payoff change for player p from overriding every
recommendation with a'.  Stacking one row per (player, strategy) over all
joint profiles gives the deviation constraint matrix A, so the epsilon-CCE
condition is ``A @ sigma <= epsilon`` entrywise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .games import NormalFormGame

NEGATIVE_FLOOR = -1e-12
SUM_TOLERANCE = 1e-9

__all__ = [
    "DistributionError",
    "JointDistribution",
    "CCEConstraintMatrix",
    "CCECheck",
    "marginal",
    "pairwise_deviation_gain",
    "cce_deviation_gain",
    "deviation_gains",
    "cce_gap",
    "cce_constraint_matrix",
    "verify_cce",
]


class DistributionError(ValueError):
    """A probability vector fails validation."""


@dataclass(frozen=True)
class JointDistribution:
    """A distribution over joint strategy profiles, flat in row-major order.

    Entries below -1e-12 or a total off 1 by more than 1e-9 are
    construction errors; tiny negatives inside the floor are clamped to 0.
    """

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64).reshape(-1)
        if arr.size == 0:
            raise DistributionError("distribution must be non-empty")
        if not np.all(np.isfinite(arr)):
            raise DistributionError("distribution entries must be finite")
        if np.any(arr < NEGATIVE_FLOOR):
            worst = float(arr.min())
            raise DistributionError(
                f"negative probability {worst!r} below floor {NEGATIVE_FLOOR}"
            )
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise DistributionError(f"probabilities sum to {total!r}, expected 1")
        arr = np.clip(arr, 0.0, None)
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @classmethod
    def uniform(cls, size: int) -> "JointDistribution":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, size: int, index: int) -> "JointDistribution":
        probs = np.zeros(size)
        probs[index] = 1.0
        return cls(probs)

    @property
    def size(self) -> int:
        return self.probs.size

    def as_tensor(self, shape: tuple[int, ...]) -> np.ndarray:
        return self.probs.reshape(shape)


def _check_size(game: NormalFormGame, sigma: JointDistribution) -> None:
    if sigma.size != game.num_joints:
        raise DistributionError(
            f"distribution over {sigma.size} joints does not match game "
            f"with {game.num_joints}"
        )


def marginal(game: NormalFormGame, sigma: JointDistribution, player) -> np.ndarray:
    """Marginal distribution of one player's recommended strategy."""
    _check_size(game, sigma)
    p = game.player_index(player)
    axes = tuple(q for q in range(game.num_players) if q != p)
    return sigma.as_tensor(game.shape).sum(axis=axes)


def pairwise_deviation_gain(game: NormalFormGame, sigma: JointDistribution, player, deviation, recommendation) -> float:
    """Expected gain for ``player`` from playing ``deviation`` whenever
    ``recommendation`` is drawn for them (other recommendations obeyed)."""
    _check_size(game, sigma)
    p = game.player_index(player)
    i_dev = game.strategy_index(p, deviation)
    i_rec = game.strategy_index(p, recommendation)
    g = game.payoffs[p]
    sig_rec = np.take(sigma.as_tensor(game.shape), i_rec, axis=p)
    diff = np.take(g, i_dev, axis=p) - np.take(g, i_rec, axis=p)
    return float(np.sum(sig_rec * diff))


def cce_deviation_gain(game: NormalFormGame, sigma: JointDistribution, player, deviation) -> float:
    """Expected gain for ``player`` from always playing ``deviation``.

    Equals the sum of pairwise gains over all recommendations.
    """
    _check_size(game, sigma)
    p = game.player_index(player)
    i_dev = game.strategy_index(p, deviation)
    return float(_player_gains(game, sigma, p)[i_dev])


def _player_gains(game: NormalFormGame, sigma: JointDistribution, p: int) -> np.ndarray:
    """All of player p's deviation gains, computed from the definition."""
    g = game.payoffs[p]
    tensor = sigma.as_tensor(game.shape)
    expected = float(np.sum(tensor * g))
    opponent_marginal = tensor.sum(axis=p)
    moved = np.moveaxis(g, p, 0)
    axes = list(range(1, game.num_players))
    dev_payoffs = np.tensordot(moved, opponent_marginal, axes=(axes, list(range(len(axes)))))
    return dev_payoffs - expected


def deviation_gains(game: NormalFormGame, sigma: JointDistribution) -> tuple[np.ndarray, ...]:
    """Per-player vectors of deviation gains under ``sigma``."""
    _check_size(game, sigma)
    return tuple(_player_gains(game, sigma, p) for p in range(game.num_players))


def cce_gap(game: NormalFormGame, sigma: JointDistribution) -> float:
    """Distance of ``sigma`` from the CCE set: the sum over players of
    their largest deviation gain, clipped below at 0 per player."""
    gains = deviation_gains(game, sigma)
    return float(sum(max(0.0, float(g.max())) for g in gains))


@dataclass(frozen=True)
class CCECheck:
    """Result of an epsilon-CCE check; carries the binding constraint."""

    ok: bool
    epsilon: float
    worst_player: str
    worst_strategy: str
    worst_gain: float


def verify_cce(game: NormalFormGame, sigma: JointDistribution, epsilon: float = 0.0) -> CCECheck:
    """Check that every deviation gain under ``sigma`` is at most ``epsilon``."""
    gains = deviation_gains(game, sigma)
    worst_p, worst_i, worst = 0, 0, -np.inf
    for p, g in enumerate(gains):
        i = int(np.argmax(g))
        if g[i] > worst:
            worst_p, worst_i, worst = p, i, float(g[i])
    return CCECheck(
        ok=bool(worst <= epsilon),
        epsilon=float(epsilon),
        worst_player=game.players[worst_p],
        worst_strategy=game.strategies[worst_p][worst_i],
        worst_gain=worst,
    )


@dataclass(frozen=True)
class CCEConstraintMatrix:
    """The stacked deviation constraints of a game.

    ``values`` has one row per (player, strategy) pair — players in
    order, strategies in order within each player — and one column per
    joint profile in flat row-major order.  ``A @ sigma`` gives every
    deviation gain at once; row (p, a') is zero in every column whose
    p-th coordinate is a'.
    """

    values: np.ndarray
    players: tuple[str, ...]
    strategies: tuple[tuple[str, ...], ...]
    row_keys: tuple[tuple[int, int], ...]
    row_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for row, (p, i) in enumerate(self.row_keys):
            index[(self.players[p], self.strategies[p][i])] = row
        object.__setattr__(self, "row_index", index)

    @property
    def num_rows(self) -> int:
        return self.values.shape[0]

    @property
    def num_joints(self) -> int:
        return self.values.shape[1]

    def row(self, player: str, strategy: str) -> int:
        try:
            return self.row_index[(player, strategy)]
        except KeyError:
            raise KeyError(f"no constraint row for {(player, strategy)!r}") from None

    def iter_rows(self) -> Iterator[tuple[int, str, str]]:
        for row, (p, i) in enumerate(self.row_keys):
            yield row, self.players[p], self.strategies[p][i]


def cce_constraint_matrix(game: NormalFormGame) -> CCEConstraintMatrix:
    """Build the deviation constraint matrix of ``game``."""
    shape = game.shape
    rows = np.empty((sum(shape), game.num_joints))
    row_keys = []
    r = 0
    for p, g in enumerate(game.payoffs):
        for i in range(shape[p]):
            dev = np.expand_dims(np.take(g, i, axis=p), axis=p)
            rows[r] = (np.broadcast_to(dev, shape) - g).reshape(-1)
            row_keys.append((p, i))
            r += 1
    rows.setflags(write=False)
    return CCEConstraintMatrix(
        values=rows,
        players=game.players,
        strategies=game.strategies,
        row_keys=tuple(row_keys),
    )
