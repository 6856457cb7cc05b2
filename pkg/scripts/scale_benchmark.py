#!/usr/bin/env python3
"""Stress the rater on a leaderboard-sized model x task score table.

Generates a synthetic score table with a configurable number of models
and tasks, plants duplicated copies of a strictly-best model at the top,
gamifies it into the 3-player evaluation game, and rates it with the
deviation rater.  Prints wall time, stage count, certificate quality,
and the top of the resulting leaderboard — the duplicated rows must tie
exactly, everything else must rate strictly below them.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from devrating.cce import verify_cce
from devrating.gamify import ScoreTable, game_from_table_3p
from devrating.rating import deviation_rating, rating_certificate


def build_table(models: int, tasks: int, copies: int, rng: np.random.Generator) -> ScoreTable:
    base = rng.uniform(0.05, 0.85, size=(models - copies, tasks))
    top = base.max(axis=0) + 0.05
    scores = np.vstack([np.tile(top, (copies, 1)), base])
    names = tuple(f"model{i:02d}" for i in range(models))
    task_names = tuple(f"task{t:02d}" for t in range(tasks))
    return ScoreTable(models=names, tasks=task_names, scores=scores)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--models", type=int, default=66, help="total rows incl. copies (default 66)")
    parser.add_argument("--tasks", type=int, default=18, help="table columns (default 18)")
    parser.add_argument("--copies", type=int, default=4, help="duplicated top rows (default 4)")
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--epsilon", type=float, default=1e-7,
                        help="CCE tolerance for the certificate check (default 1e-7)")
    args = parser.parse_args(argv)
    if not 1 <= args.copies < args.models:
        parser.error("--copies must be in [1, models)")

    table = build_table(args.models, args.tasks, args.copies, np.random.default_rng(args.seed))
    game = game_from_table_3p(table)
    joints = int(np.prod([len(s) for s in game.strategies]))
    rows = sum(len(s) for s in game.strategies)
    print(f"game: {'x'.join(str(len(s)) for s in game.strategies)}"
          f"  ({joints} joints, {rows} constraint rows)")

    start = time.perf_counter()
    result = deviation_rating(game)
    elapsed = time.perf_counter() - start

    cert = rating_certificate(game, result)
    check = verify_cce(game, result.equilibrium, epsilon=args.epsilon)
    ratings = result.ratings[0]
    order = np.argsort(ratings)[::-1]

    print(f"rated in {elapsed:.1f} s, {cert.stage_count} stages (bound {cert.stage_bound})")
    print(f"certificate: epsilon {cert.epsilon:.2e}, max |gain - rating| {cert.max_gain_error:.2e},"
          f" objectives non-increasing: {cert.objectives_non_increasing}")
    print(f"equilibrium is a {args.epsilon:g}-CCE: {check.ok}")
    print(f"top-{args.copies} spread: {np.ptp(ratings[order[:args.copies]]):.2e}")
    print("leaderboard head:")
    for rank, i in enumerate(order[: args.copies + 3], start=1):
        print(f"  {rank:2d}. {table.models[i]:<10} {ratings[i]:+.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
