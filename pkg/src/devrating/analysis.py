"""Equilibrium analysis and practical reductions.

Task contributions decompose a model's rating into per-task terms at the
reported equilibrium.  Symmetrization projects a game onto its symmetric
part for a pair of players; joint deduplication merges identical
constraint columns (e.g. those introduced by clones) so the rating LPs
shrink without changing any rating.  The property-check harness verifies
rating invariances (clone, mixture, offset, permutation, dominance,
bounds) on concrete games and reports witnesses on failure.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .cce import CCEConstraintMatrix, JointDistribution, cce_constraint_matrix
from .games import (
    GameValidationError,
    NormalFormGame,
    OffsetSpec,
    append_strategy,
    apply_offset,
    build_game,
    clone_strategy,
    game_to_dict,
    mix_strategy,
    permute_strategies,
    quantize,
)
from .rating import RatingResult, SolverConfig, _rate_rows, _wrap_core

__all__ = [
    "ContributionMatrix",
    "task_contributions",
    "save_contributions",
    "symmetrize_payoffs",
    "ReducedConstraintSystem",
    "dedup_joints",
    "rate_reduced",
    "quantize",
    "PropertyReport",
    "PROPERTY_NAMES",
    "check_property",
]


@dataclass(frozen=True)
class ContributionMatrix:
    """Per-task contributions to one model player's deviation ratings.

    Row sums equal the model ratings (the rating decomposes task by task
    at the equilibrium the ratings were computed from).
    """

    model_player: str
    models: tuple[str, ...]
    tasks: tuple[str, ...]
    values: np.ndarray
    ratings: np.ndarray


def task_contributions(game: NormalFormGame, result: RatingResult, model_player, task_player=None) -> ContributionMatrix:
    """Split each model's rating into per-task terms at ``result``'s
    equilibrium: the expected gain from switching to the model, restricted
    to profiles where each task was recommended."""
    if game.num_players != 3:
        raise GameValidationError("task contributions require a three-player game")
    p = game.player_index(model_player)
    t_axis = game.player_index(task_player) if task_player is not None else 2
    if p == t_axis:
        raise GameValidationError("model player and task player must differ")
    sigma = result.equilibrium.as_tensor(game.shape)
    g = game.payoffs[p]
    sum_axes = tuple(q for q in range(3) if q != t_axis)
    values = np.empty((game.shape[p], game.shape[t_axis]))
    for i in range(game.shape[p]):
        dev = np.expand_dims(np.take(g, i, axis=p), axis=p)
        values[i] = (sigma * (np.broadcast_to(dev, game.shape) - g)).sum(axis=sum_axes)
    return ContributionMatrix(
        model_player=game.players[p],
        models=game.strategies[p],
        tasks=game.strategies[t_axis],
        values=values,
        ratings=np.asarray(result.ratings[p], dtype=np.float64),
    )


def save_contributions(matrix: ContributionMatrix, path) -> None:
    """CSV with one row per model, one column per task, and a trailing
    ``rating`` column."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", *matrix.tasks, "rating"])
        for i, model in enumerate(matrix.models):
            row = [repr(float(x)) for x in matrix.values[i]]
            writer.writerow([model, *row, repr(float(matrix.ratings[i]))])


def symmetrize_payoffs(game: NormalFormGame, p, q) -> NormalFormGame:
    """Project the game onto its symmetric part for players ``p`` and ``q``.

    The output is invariant under exchanging the two players (averaging
    each payoff with the exchanged-role payoff at the swapped profile);
    already-symmetric games come back unchanged.
    """
    pi = game.player_index(p)
    qi = game.player_index(q)
    if pi == qi:
        raise GameValidationError("symmetrization needs two distinct players")
    if game.shape[pi] != game.shape[qi]:
        raise GameValidationError(
            "symmetrization requires equal strategy counts for the two players"
        )
    tensors = []
    for r, g in enumerate(game.payoffs):
        if r == pi:
            partner = game.payoffs[qi]
        elif r == qi:
            partner = game.payoffs[pi]
        else:
            partner = g
        tensors.append(0.5 * (g + np.swapaxes(partner, pi, qi)))
    return build_game(game.players, game.strategies, tensors)


@dataclass(frozen=True)
class ReducedConstraintSystem:
    """A constraint matrix with duplicate joint columns merged.

    ``column_groups[k]`` lists the original joint indices whose columns
    collapsed into reduced column k; mass assigned to a reduced column is
    spread uniformly over its group on expansion.
    """

    matrix: CCEConstraintMatrix
    column_groups: tuple[tuple[int, ...], ...]
    num_original_joints: int

    def expand(self, reduced_probs: np.ndarray) -> np.ndarray:
        probs = np.zeros(self.num_original_joints)
        for k, group in enumerate(self.column_groups):
            probs[list(group)] = reduced_probs[k] / len(group)
        return probs


def dedup_joints(matrix: CCEConstraintMatrix, decimals: int = 14) -> ReducedConstraintSystem:
    """Merge joint columns that are identical after quantization.

    Gains depend on columns only through their values, so any rating
    computed on the reduced system equals the full-system rating.
    """
    vals = quantize(matrix.values, decimals)
    order: dict[bytes, int] = {}
    groups: list[list[int]] = []
    cols = np.ascontiguousarray(vals.T)
    for j in range(cols.shape[0]):
        key = cols[j].tobytes()
        k = order.get(key)
        if k is None:
            order[key] = len(groups)
            groups.append([j])
        else:
            groups[k].append(j)
    keep = [g[0] for g in groups]
    reduced = CCEConstraintMatrix(
        values=vals[:, keep],
        players=matrix.players,
        strategies=matrix.strategies,
        row_keys=matrix.row_keys,
    )
    return ReducedConstraintSystem(
        matrix=reduced,
        column_groups=tuple(tuple(g) for g in groups),
        num_original_joints=matrix.num_joints,
    )


def rate_reduced(game: NormalFormGame, config: SolverConfig = SolverConfig(), symmetrize: Sequence[tuple] = (), decimals: int = 14) -> RatingResult:
    """Deviation ratings computed on the deduplicated constraint system.

    ``symmetrize`` lists player pairs to symmetrize first (a no-op when
    the game is already symmetric in those pairs).  The returned
    equilibrium is expanded back to the full joint space.
    """
    for p, q in symmetrize:
        game = symmetrize_payoffs(game, p, q)
    matrix = cce_constraint_matrix(game)
    system = dedup_joints(matrix, decimals)
    spread = game.payoff_spread()
    values = system.matrix.values
    if config.scale_normalize and spread > 0.0:
        values = values / spread
        factor, detect_scale = spread, 1.0
    else:
        factor, detect_scale = 1.0, max(1.0, spread)
    core = _rate_rows(values, config, detect_scale)
    expanded = replace(core, sigma=system.expand(core.sigma))
    return _wrap_core(game, matrix, expanded, factor)


PROPERTY_NAMES = ("clone", "mixture", "offset", "permutation", "dominance", "bounds")

_DEFAULT_TOL = {
    "clone": 1e-6,
    "mixture": 1e-6,
    "offset": 1e-6,
    "permutation": 1e-6,
    "dominance": 1e-7,
    "bounds": 1e-7,
}

Rater = Callable[[NormalFormGame], tuple[np.ndarray, ...]]


@dataclass(frozen=True)
class PropertyReport:
    property: str
    passed: bool
    deviation: float
    tolerance: float
    seed: int
    detail: str
    witness: dict | None = None


def _ratings_of(rater: Rater, game: NormalFormGame) -> tuple[np.ndarray, ...]:
    out = rater(game)
    ratings = getattr(out, "ratings", out)
    return tuple(np.asarray(r, dtype=np.float64) for r in ratings)


def check_property(game: NormalFormGame, property_name: str, rater: Rater, seed: int = 0, tolerance: float | None = None) -> PropertyReport:
    """Apply one seeded strategy-space transformation and verify that the
    rater responds as the property demands.  Works with any rater that
    returns per-player rating vectors (or a result exposing ``.ratings``),
    so baselines can be checked against the same battery.
    """
    if property_name not in PROPERTY_NAMES:
        raise ValueError(
            f"unknown property {property_name!r}; expected one of {PROPERTY_NAMES}"
        )
    tol = _DEFAULT_TOL[property_name] if tolerance is None else float(tolerance)
    rng = np.random.default_rng(seed)
    p = int(rng.integers(game.num_players))
    base = _ratings_of(rater, game)

    if property_name == "bounds":
        deviation = 0.0
        detail_rows = []
        for q in range(game.num_players):
            g = game.payoffs[q]
            for i in range(game.shape[q]):
                dev = np.expand_dims(np.take(g, i, axis=q), axis=q)
                lower = float((np.broadcast_to(dev, game.shape) - g).min())
                r = float(base[q][i])
                excess = max(r - 0.0, lower - r)
                if excess > deviation:
                    deviation = excess
                    detail_rows = [f"({game.players[q]}, {game.strategies[q][i]})"]
        detail = f"worst row {detail_rows[0]}" if detail_rows else "all within bounds"
        return PropertyReport("bounds", deviation <= tol, deviation, tol, seed, detail)

    i = int(rng.integers(game.shape[p]))
    if property_name == "clone":
        transformed = clone_strategy(game, p, i)
        after = _ratings_of(rater, transformed)
        deviation = max(
            float(np.max(np.abs(after[q][: game.shape[q]] - base[q])))
            for q in range(game.num_players)
        )
        deviation = max(deviation, abs(float(after[p][-1]) - float(base[p][i])))
        detail = f"cloned ({game.players[p]}, {game.strategies[p][i]})"
    elif property_name == "mixture":
        weights = rng.dirichlet(np.ones(game.shape[p]))
        transformed = mix_strategy(game, p, weights)
        after = _ratings_of(rater, transformed)
        deviation = max(
            float(np.max(np.abs(after[q][: game.shape[q]] - base[q])))
            for q in range(game.num_players)
        )
        expected = float(weights @ base[p])
        deviation = max(deviation, abs(float(after[p][-1]) - expected))
        detail = f"mixed player {game.players[p]} with weights {np.round(weights, 4).tolist()}"
    elif property_name == "offset":
        neg_shape = tuple(n for q, n in enumerate(game.shape) if q != p)
        scale = max(1.0, game.payoff_spread())
        offset = OffsetSpec(p, rng.uniform(-scale, scale, neg_shape))
        transformed = apply_offset(game, offset)
        after = _ratings_of(rater, transformed)
        deviation = max(
            float(np.max(np.abs(after[q] - base[q])))
            for q in range(game.num_players)
        )
        detail = f"offset player {game.players[p]} payoffs"
    elif property_name == "permutation":
        order = rng.permutation(game.shape[p])
        transformed = permute_strategies(game, p, order)
        after = _ratings_of(rater, transformed)
        deviation = 0.0
        for q in range(game.num_players):
            expected = base[q][order] if q == p else base[q]
            deviation = max(deviation, float(np.max(np.abs(after[q] - expected))))
        detail = f"permuted player {game.players[p]} with order {order.tolist()}"
    else:  # dominance
        gap = rng.uniform(0.05, 0.5, tuple(n for q, n in enumerate(game.shape) if q != p))
        slices = [np.take(g, i, axis=p) for g in game.payoffs]
        slices[p] = slices[p] - gap
        transformed = append_strategy(game, p, f"{game.strategies[p][i]}#dominated", slices)
        after = _ratings_of(rater, transformed)
        deviation = max(0.0, float(after[p][-1]) - float(after[p][i]))
        detail = (
            f"appended strategy dominated by ({game.players[p]}, "
            f"{game.strategies[p][i]})"
        )

    passed = deviation <= tol
    witness = None
    if not passed:
        witness = {"game": game_to_dict(game), "transformed": game_to_dict(transformed)}
    return PropertyReport(property_name, passed, deviation, tol, seed, detail, witness)
