"""
Linear Programming Core

Inequality-form LPs  min c·x  s.t.  G x <= h,  lo <= x <= up
solved with the HiGHS dual simplex behind scipy.optimize.linprog.
"""

import logging
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from config.config import SolverConfig
from .errors import LpSolverError

logger = logging.getLogger(__name__)


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


_HIGHS_STATUS = {0: LpStatus.OPTIMAL, 2: LpStatus.INFEASIBLE, 3: LpStatus.UNBOUNDED}


@dataclass(frozen=True)
class LinearProgram:
    """Cost, sparse inequality triplets (rows, cols, vals) with right-hand side h, and variable bounds"""

    c: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    h: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    name: str = ""

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        rows = np.array(self.rows, dtype=int)
        cols = np.array(self.cols, dtype=int)
        vals = np.array(self.vals, dtype=float)
        h = np.array(self.h, dtype=float)
        lower = np.array(self.lower, dtype=float)
        upper = np.array(self.upper, dtype=float)
        n, m = len(c), len(h)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("Constraint triplets must have equal length")
        if lower.shape != (n,) or upper.shape != (n,):
            raise ValueError(f"Bounds must have length {n}")
        if rows.size and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
            raise ValueError("Constraint triplet index out of range")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(vals)) and np.all(np.isfinite(h))):
            raise ValueError("Costs and constraint data must be finite")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)) or np.any(lower > upper):
            raise ValueError("Variable bounds must satisfy lower <= upper")
        for name, arr in (("c", c), ("rows", rows), ("cols", cols), ("vals", vals),
                          ("h", h), ("lower", lower), ("upper", upper)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_dense(cls, c, G, h, lower=None, upper=None, name: str = "") -> "LinearProgram":
        """Build from a dense G; missing bounds mean free variables"""
        c = np.asarray(c, dtype=float)
        G = np.asarray(G, dtype=float).reshape(-1, len(c))
        coo = sparse.coo_matrix(G)
        lower = np.full(len(c), -np.inf) if lower is None else lower
        upper = np.full(len(c), np.inf) if upper is None else upper
        return cls(c, coo.row, coo.col, coo.data, h, lower, upper, name)

    @property
    def n_variables(self) -> int:
        return len(self.c)

    @property
    def n_constraints(self) -> int:
        """Inequality rows; variable bounds are not counted"""
        return len(self.h)

    def to_csr(self) -> sparse.csr_matrix:
        return sparse.csr_matrix((self.vals, (self.rows, self.cols)),
                                 shape=(self.n_constraints, self.n_variables))

    def with_cost(self, c) -> "LinearProgram":
        return LinearProgram(c, self.rows, self.cols, self.vals, self.h, self.lower, self.upper, self.name)

    def max_violation(self, x) -> float:
        """Largest inequality or bound violation at x"""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.n_constraints:
            worst = max(worst, float(np.max(self.to_csr() @ x - self.h)))
        worst = max(worst, float(np.max(self.lower - x)), float(np.max(x - self.upper)))
        return max(worst, 0.0)


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: Optional[np.ndarray]
    objective: Optional[float]
    dual_bound: Optional[float] = None
    iterations: int = 0
    solve_time: float = 0.0
    lexicographic: bool = False
    max_violation: float = 0.0

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _bounds(lower: np.ndarray, upper: np.ndarray):
    return [(None if not np.isfinite(lo) else float(lo), None if not np.isfinite(up) else float(up))
            for lo, up in zip(lower, upper)]


def _linprog(c, G, h, lower, upper, method):
    result = linprog(
        c,
        A_ub=G if G.shape[0] else None,
        b_ub=h if G.shape[0] else None,
        bounds=_bounds(lower, upper),
        method=method,
    )
    status = _HIGHS_STATUS.get(result.status)
    if status is None:
        raise LpSolverError(f"Solver ended with status {result.status}: {result.message}")
    return result, status


def _dual_bound(result, h, lower, upper) -> Optional[float]:
    """Dual objective from the solver's marginals"""
    try:
        bound = float(np.dot(result.ineqlin.marginals, h)) if len(h) else 0.0
        for marginals, values in ((result.lower.marginals, lower), (result.upper.marginals, upper)):
            finite = np.isfinite(values)
            bound += float(np.dot(np.asarray(marginals)[finite], values[finite]))
        return bound
    except AttributeError:
        return None


def solve(lp: LinearProgram, method: str = SolverConfig.LP_METHOD) -> LpSolution:
    """
    Solve an LP. Costs spanning more than SolverConfig.COST_SPLIT_RATIO are
    solved lexicographically: the large-cost terms first, then the rest with
    the first optimum held.
    """
    start = time.perf_counter()
    G = lp.to_csr()
    c = np.array(lp.c)
    magnitude = np.abs(c)
    nonzero = magnitude[magnitude > 0]

    if nonzero.size and nonzero.max() > SolverConfig.COST_SPLIT_RATIO * nonzero.min():
        solution = _solve_lexicographic(lp, G, method)
    else:
        result, status = _linprog(c, G, lp.h, lp.lower, lp.upper, method)
        if status is LpStatus.OPTIMAL:
            x = np.asarray(result.x, dtype=float)
            solution = LpSolution(status, x, float(c @ x), _dual_bound(result, lp.h, lp.lower, lp.upper),
                                  int(result.nit), 0.0, False, lp.max_violation(x))
        else:
            solution = LpSolution(status, None, None, iterations=int(result.nit))

    elapsed = time.perf_counter() - start
    logger.debug(f"LP {lp.name or '<anonymous>'} ({lp.n_variables} vars, {lp.n_constraints} rows): "
                 f"{solution.status.value} in {elapsed * 1e3:.2f} ms")
    return LpSolution(solution.status, solution.x, solution.objective, solution.dual_bound,
                      solution.iterations, elapsed, solution.lexicographic, solution.max_violation)


def _solve_lexicographic(lp: LinearProgram, G: sparse.csr_matrix, method: str) -> LpSolution:
    c = np.array(lp.c)
    high = np.abs(c) > np.abs(c).max() / SolverConfig.COST_SPLIT_RATIO
    c_high = np.where(high, c, 0.0)
    c_low = np.where(high, 0.0, c)

    first, status = _linprog(c_high, G, lp.h, lp.lower, lp.upper, method)
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status, None, None, iterations=int(first.nit), lexicographic=True)
    # first-level optimum held on a row scaled to unit max coefficient
    scale = float(np.abs(c_high).max())
    level = float(c_high @ first.x) / scale
    held = sparse.vstack([G, sparse.csr_matrix(c_high[None, :] / scale)], format="csr")
    h_held = np.append(lp.h, level + SolverConfig.LEVEL_HOLD_TOL * (1.0 + abs(level)))
    second, status = _linprog(c_low, held, h_held, lp.lower, lp.upper, method)
    iterations = int(first.nit) + int(second.nit)
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status, None, None, iterations=iterations, lexicographic=True)
    x = np.asarray(second.x, dtype=float)
    return LpSolution(LpStatus.OPTIMAL, x, float(c @ x), None, iterations, 0.0, True, lp.max_violation(x))


def dump_lp(lp: LinearProgram, path) -> Path:
    """Write the LP as plain text: cost, one row per inequality, bounds"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    G = lp.to_csr()
    lines = [f"# {lp.name}", f"variables {lp.n_variables}", f"rows {lp.n_constraints}", "minimize"]
    lines.append(" ".join(repr(float(v)) for v in lp.c))
    lines.append("subject to")
    for i in range(lp.n_constraints):
        start, end = G.indptr[i], G.indptr[i + 1]
        terms = " ".join(f"{int(j)}:{float(v)!r}" for j, v in zip(G.indices[start:end], G.data[start:end]))
        lines.append(f"{terms} <= {float(lp.h[i])!r}")
    lines.append("bounds")
    for j, (lo, up) in enumerate(zip(lp.lower, lp.upper)):
        lines.append(f"{j} {float(lo)!r} {float(up)!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug(f"LP written to {path}")
    return path
