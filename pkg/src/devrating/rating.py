"""Deviation ratings via iterative tightening of CCE deviation constraints.

The rating of a strategy is its deviation gain at the strictest
coarse-correlated equilibrium found by repeatedly minimizing the largest
gain that is still free to move.  Each stage solves one LP over the
joint-distribution simplex:

    minimize   t
    subject to A_u @ sigma <= t          (rows not yet frozen)
               A_f @ sigma == r_f        (rows frozen at earlier stages)
               sigma in the simplex

Rows whose gain reaches the stage optimum (within ``active_tol``, or
flagged by a positive dual) are frozen at their achieved gain, so the
current solution stays feasible for every later stage and stage
objectives never increase.  Every stage freezes at least one row, hence
at most sum_p |A_p| stages run.  Rows that are identically zero (e.g. a
player with a single strategy) are frozen at 0 up front; their pinned
equations are vacuous, so this changes nothing except the stage count.

Ratings are invariant to cloning, mixing, payoff offsets, and strategy
relabeling, and never exceed 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .cce import CCEConstraintMatrix, JointDistribution, cce_constraint_matrix, deviation_gains, verify_cce
from .games import NormalFormGame

__all__ = [
    "RatingError",
    "RatingInfeasibleError",
    "StageBudgetError",
    "SolverConfig",
    "FreezeRecord",
    "RatingResult",
    "RatingCertificate",
    "solve_stage",
    "detect_active",
    "deviation_rating",
    "rating_certificate",
    "result_to_dict",
    "save_result",
]


class RatingError(Exception):
    """The rating engine failed to produce a result."""


class RatingInfeasibleError(RatingError):
    """A stage LP with pinned constraints reported infeasibility.

    Pinned values are gains achieved by the previous stage's solution, so
    this indicates solver failure rather than a genuinely empty system.
    """

    def __init__(self, message: str, frozen: dict):
        super().__init__(message)
        self.frozen = frozen


class StageBudgetError(RatingError):
    """More stages ran than there are constraint rows."""


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and knobs for the rating engine.

    active_tol        half-width of the tie band around a stage optimum,
                      relative to the payoff scale
    feasibility_tol   tolerance for pin-consistency and distribution checks
    max_stages        stage budget (default: number of constraint rows)
    scale_normalize   divide constraints by the payoff spread before
                      solving and scale results back (one global factor,
                      so exact cross-player ties survive)
    """

    active_tol: float = 1e-8
    feasibility_tol: float = 1e-9
    max_stages: int | None = None
    scale_normalize: bool = True


@dataclass(frozen=True)
class FreezeRecord:
    """One stage of the engine: which rows froze and at what objective."""

    stage: int
    rows: tuple[tuple[str, str], ...]
    objective: float


@dataclass(frozen=True)
class RatingResult:
    players: tuple[str, ...]
    strategies: tuple[tuple[str, ...], ...]
    ratings: tuple[np.ndarray, ...]
    equilibrium: JointDistribution
    freeze_log: tuple[FreezeRecord, ...]
    stage_count: int

    def rating(self, player, strategy) -> float:
        p = self.players.index(player) if isinstance(player, str) else int(player)
        if isinstance(strategy, str):
            i = self.strategies[p].index(strategy)
        else:
            i = int(strategy)
        return float(self.ratings[p][i])

    def by_label(self) -> dict[str, dict[str, float]]:
        return {
            player: {
                s: float(self.ratings[p][i])
                for i, s in enumerate(self.strategies[p])
            }
            for p, player in enumerate(self.players)
        }


def _stage_lp(values: np.ndarray, unfrozen: np.ndarray, frozen_rows: np.ndarray, frozen_vals: np.ndarray, config: SolverConfig):
    """Solve one stage LP; returns (raw sigma, objective, duals for unfrozen rows)."""
    num_joints = values.shape[1]
    n = num_joints + 1
    cost = np.zeros(n)
    cost[-1] = 1.0
    neg_t = sp.csr_matrix(-np.ones((unfrozen.size, 1)))
    a_ub = sp.hstack([sp.csr_matrix(values[unfrozen]), neg_t], format="csr")
    simplex_row = np.concatenate([np.ones(num_joints), [0.0]])[None, :]
    eq_blocks = [sp.csr_matrix(simplex_row)]
    b_eq = [1.0]
    if frozen_rows.size:
        zeros_t = sp.csr_matrix(np.zeros((frozen_rows.size, 1)))
        eq_blocks.append(sp.hstack([sp.csr_matrix(values[frozen_rows]), zeros_t], format="csr"))
        b_eq.extend(frozen_vals.tolist())
    a_eq = sp.vstack(eq_blocks, format="csr")
    bounds = np.zeros((n, 2))
    bounds[:, 1] = np.inf
    bounds[-1] = (-np.inf, np.inf)
    # Pinned values are gains achieved by an earlier stage's solution, so
    # the equality system always has a feasible point within solver
    # tolerance.  Tightened tolerances or presolve can still misreport
    # nearly rank-deficient pin blocks as infeasible, hence the retry
    # ladder before declaring a genuine inconsistency.
    attempts = (
        {"method": "highs", "options": None},
        {"method": "highs", "options": {"presolve": False}},
        {"method": "highs-ipm", "options": {"presolve": False}},
    )
    res = None
    for attempt in attempts:
        res = linprog(
            cost,
            A_ub=a_ub,
            b_ub=np.zeros(unfrozen.size),
            A_eq=a_eq,
            b_eq=np.asarray(b_eq),
            bounds=bounds,
            method=attempt["method"],
            options=attempt["options"],
        )
        if res.status != 2:
            break
    if res.status == 2:
        raise RatingInfeasibleError(
            f"stage LP infeasible with {frozen_rows.size} pinned rows: {res.message}",
            frozen={int(r): float(v) for r, v in zip(frozen_rows, frozen_vals)},
        )
    if res.status != 0:
        raise RatingError(f"stage LP failed (status {res.status}): {res.message}")
    duals = -np.asarray(res.ineqlin.marginals)
    return res.x[:num_joints], float(res.fun), duals


def _sanitize(sigma_raw: np.ndarray) -> np.ndarray:
    """Clip solver noise below 0 and renormalize to an exact unit sum."""
    sigma = np.clip(sigma_raw, 0.0, None)
    total = sigma.sum()
    if total <= 0.0:
        raise RatingError("stage LP returned a zero distribution")
    return sigma / total


def detect_active(row_gains: np.ndarray, objective: float, duals: Mapping[int, float] | None = None, config: SolverConfig = SolverConfig(), frozen: frozenset | set = frozenset(), scale: float = 1.0) -> tuple[int, ...]:
    """Rows to freeze after a stage: every unfrozen row whose gain lies
    within ``active_tol * max(1, scale)`` of the objective, plus any row
    with a positive dual; falls back to the argmax row so at least one
    row always freezes.  Ties freeze together, which is what keeps exact
    duplicates (clones) at identical ratings."""
    band = config.active_tol * max(1.0, scale)
    active = {
        i
        for i in range(row_gains.size)
        if i not in frozen and abs(row_gains[i] - objective) <= band
    }
    if duals:
        active |= {
            i for i, d in duals.items() if i not in frozen and d > config.active_tol
        }
    if not active:
        candidates = [i for i in range(row_gains.size) if i not in frozen]
        active = {max(candidates, key=lambda i: row_gains[i])}
    return tuple(sorted(active))


@dataclass(frozen=True)
class _CoreResult:
    row_ratings: np.ndarray
    sigma: np.ndarray
    freeze_log: tuple[tuple[int, tuple[int, ...], float], ...]
    stage_count: int


class _PinBasis:
    """Incrementally selected linearly independent subset of frozen rows.

    A frozen row that lies in the span of already-pinned rows carries no
    new information: its gain is a fixed linear combination of the pinned
    gains at every joint distribution.  Keeping such rows as explicit LP
    equalities only injects the accumulated floating-point drift between
    stages, which can make the solver reject an (exactly redundant) pin
    system as infeasible.  Only basis rows are therefore passed to the
    stage LPs."""

    def __init__(self, num_joints: int):
        self._q = np.empty((num_joints, 0))
        self.rows: list[int] = []

    def try_add(self, index: int, vector: np.ndarray, rel_tol: float = 1e-9) -> bool:
        norm = float(np.linalg.norm(vector))
        if norm == 0.0:
            return False
        v = np.array(vector, dtype=float)
        if self._q.shape[1]:
            v -= self._q @ (self._q.T @ v)
            v -= self._q @ (self._q.T @ v)
        residual = float(np.linalg.norm(v))
        if residual <= rel_tol * norm:
            return False
        self._q = np.hstack([self._q, (v / residual)[:, None]])
        self.rows.append(index)
        return True


def _rate_rows(values: np.ndarray, config: SolverConfig, detect_scale: float) -> _CoreResult:
    """Run the full freezing loop on a raw constraint matrix."""
    num_rows, num_joints = values.shape
    budget = config.max_stages if config.max_stages is not None else num_rows
    ratings = np.full(num_rows, np.nan)
    frozen: set[int] = set()
    basis = _PinBasis(num_joints)
    log: list[tuple[int, tuple[int, ...], float]] = []

    zero_rows = tuple(int(i) for i in np.flatnonzero(~values.any(axis=1)))
    if zero_rows:
        ratings[list(zero_rows)] = 0.0
        frozen.update(zero_rows)
        log.append((0, zero_rows, 0.0))

    sigma = np.full(num_joints, 1.0 / num_joints)
    stage = 0
    while len(frozen) < num_rows:
        stage += 1
        if stage > budget:
            raise StageBudgetError(
                f"exceeded stage budget {budget} with {num_rows - len(frozen)} rows left"
            )
        unfrozen = np.array(sorted(set(range(num_rows)) - frozen), dtype=int)
        frozen_rows = np.array(basis.rows, dtype=int)
        frozen_vals = ratings[frozen_rows] if frozen_rows.size else np.empty(0)
        sigma_raw, objective, dual_vec = _stage_lp(values, unfrozen, frozen_rows, frozen_vals, config)
        sigma = _sanitize(sigma_raw)
        gains = values @ sigma
        duals = {int(r): float(d) for r, d in zip(unfrozen, dual_vec)}
        active = detect_active(gains, objective, duals, config, frozenset(frozen), detect_scale)
        for i in active:
            ratings[i] = gains[i]
            basis.try_add(i, values[i])
        frozen.update(active)
        log.append((stage, active, objective))
    return _CoreResult(ratings, sigma, tuple(log), stage)


def solve_stage(matrix: CCEConstraintMatrix, frozen: Mapping[tuple[str, str], float], config: SolverConfig = SolverConfig()):
    """Solve a single stage LP against ``matrix``.

    ``frozen`` maps (player, strategy) keys to pinned gain values.
    Returns ``(sigma, objective, row_gains)`` with gains for every row.
    """
    items = sorted((matrix.row(p, s), float(v)) for (p, s), v in frozen.items())
    if len(items) >= matrix.num_rows:
        raise RatingError("every constraint row is already pinned")
    rows = np.array([r for r, _ in items], dtype=int)
    vals = np.array([v for _, v in items])
    unfrozen = np.array([i for i in range(matrix.num_rows) if i not in set(rows.tolist())], dtype=int)
    sigma_raw, objective, _ = _stage_lp(matrix.values, unfrozen, rows, vals, config)
    sigma = _sanitize(sigma_raw)
    return JointDistribution(sigma), objective, matrix.values @ sigma


def _wrap_core(game: NormalFormGame, matrix: CCEConstraintMatrix, core: _CoreResult, factor: float) -> RatingResult:
    ratings = []
    cursor = 0
    for p in range(game.num_players):
        n = game.shape[p]
        arr = core.row_ratings[cursor : cursor + n] * factor
        arr.setflags(write=False)
        ratings.append(arr)
        cursor += n
    labels = [
        (matrix.players[p], matrix.strategies[p][i]) for p, i in matrix.row_keys
    ]
    freeze_log = tuple(
        FreezeRecord(
            stage=stage,
            rows=tuple(labels[i] for i in rows),
            objective=objective * factor,
        )
        for stage, rows, objective in core.freeze_log
    )
    return RatingResult(
        players=game.players,
        strategies=game.strategies,
        ratings=tuple(ratings),
        equilibrium=JointDistribution(core.sigma),
        freeze_log=freeze_log,
        stage_count=core.stage_count,
    )


def deviation_rating(game: NormalFormGame, config: SolverConfig = SolverConfig()) -> RatingResult:
    """Rate every strategy of ``game`` by its deviation gain at the
    strictest reachable coarse-correlated equilibrium."""
    matrix = cce_constraint_matrix(game)
    spread = game.payoff_spread()
    if config.scale_normalize and spread > 0.0:
        values = matrix.values / spread
        factor, detect_scale = spread, 1.0
    else:
        values = matrix.values
        factor, detect_scale = 1.0, max(1.0, spread)
    core = _rate_rows(values, config, detect_scale)
    return _wrap_core(game, matrix, core, factor)


@dataclass(frozen=True)
class RatingCertificate:
    """Self-check of a rating run, recomputed from the equilibrium.

    Discrepancies are reported here rather than raised; ``ok`` applies
    the default tolerances.
    """

    epsilon: float
    max_gain_error: float
    objectives_non_increasing: bool
    stage_count: int
    stage_bound: int

    def ok(self, epsilon_tol: float = 1e-7, gain_tol: float = 1e-6) -> bool:
        return (
            self.epsilon <= epsilon_tol
            and self.max_gain_error <= gain_tol
            and self.objectives_non_increasing
            and self.stage_count <= self.stage_bound
        )

    def to_dict(self) -> dict:
        return {
            "epsilon": float(self.epsilon),
            "max_gain_error": float(self.max_gain_error),
            "objectives_non_increasing": bool(self.objectives_non_increasing),
            "stage_count": int(self.stage_count),
            "stage_bound": int(self.stage_bound),
        }


def rating_certificate(game: NormalFormGame, result: RatingResult) -> RatingCertificate:
    """Recompute deviation gains at the reported equilibrium and compare
    them with the ratings; also check the freeze-log invariants."""
    gains = deviation_gains(game, result.equilibrium)
    check = verify_cce(game, result.equilibrium, epsilon=0.0)
    max_err = max(
        float(np.max(np.abs(g - r))) for g, r in zip(gains, result.ratings)
    )
    objectives = [rec.objective for rec in result.freeze_log if rec.stage > 0]
    monotone = all(b <= a + 1e-9 for a, b in zip(objectives, objectives[1:]))
    return RatingCertificate(
        epsilon=check.worst_gain,
        max_gain_error=max_err,
        objectives_non_increasing=monotone,
        stage_count=result.stage_count,
        stage_bound=sum(game.shape),
    )


def result_to_dict(result: RatingResult, certificate: RatingCertificate | None = None) -> dict:
    """JSON form: ratings keyed by player and strategy, the equilibrium as
    a flat row-major array, the freeze log, and the certificate."""
    return {
        "ratings": result.by_label(),
        "equilibrium": [float(x) for x in result.equilibrium.probs],
        "freeze_log": [
            {
                "stage": rec.stage,
                "rows": [[p, s] for p, s in rec.rows],
                "objective": float(rec.objective),
            }
            for rec in result.freeze_log
        ],
        "certificate": certificate.to_dict() if certificate is not None else None,
    }


def save_result(path, result: RatingResult, certificate: RatingCertificate | None = None) -> None:
    import json

    text = json.dumps(result_to_dict(result, certificate), indent=2, sort_keys=True) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
