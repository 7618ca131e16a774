"""
Dense linear-algebra and optimisation kernels used by the allocators and the
controllers: pseudoinverse, nullspace basis, a primal active-set QP solver and
a Hamiltonian-Schur CARE solver.
"""
import logging
from typing import NamedTuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray
from scipy.optimize import linprog

from classes.qp_problem import QpProblem, QpSolution, QpStatus

logger = logging.getLogger(__name__)

SVD_RCOND = 1e-10
# Newton-Kleinman refinements applied after the Schur solution.
NEWTON_STEPS = 3


class RiccatiError(RuntimeError):
    """Raised by solve_care(strict=True) when no stabilising solution exists."""


class CareResult(NamedTuple):
    P: NDArray[np.float64]
    K: NDArray[np.float64]
    stabilizing: bool
    residual: float


def pseudoinverse(M: NDArray[np.float64], rcond: float = SVD_RCOND) -> NDArray[np.float64]:
    """Moore-Penrose pseudoinverse; singular values below rcond * sigma_max count as zero."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[1], M.shape[0]))
    s_inv = np.where(s > rcond * s[0], 1.0 / np.where(s > 0.0, s, 1.0), 0.0)
    return (Vt.T * s_inv) @ U.T


def nullspace_basis(M: NDArray[np.float64], rank: int | None = None, rcond: float = SVD_RCOND) -> NDArray[np.float64]:
    """
    Orthonormal basis of the nullspace of M, one column per direction.

    Args:
        M (NDArray): m x n matrix.
        rank (int | None): Known rank of M. Estimated from the SVD when omitted.

    Returns:
        NDArray: n x (n - rank) matrix N with M N = 0 and N'N = I.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    if rank is None:
        rank = int(np.sum(s > rcond * s[0])) if s.size and s[0] > 0.0 else 0
    return Vt[rank:].T.copy()


# --- quadratic programming -------------------------------------------------


def _inequalities(problem: QpProblem) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Stack general inequalities, then finite upper bounds, then finite lower bounds, as C x <= d."""
    n = problem.n
    eye = np.eye(n)
    upper = np.flatnonzero(np.isfinite(problem.ub))
    lower = np.flatnonzero(np.isfinite(problem.lb))
    C = np.vstack([problem.A_in, eye[upper], -eye[lower]])
    d = np.concatenate([problem.b_in, problem.ub[upper], -problem.lb[lower]])
    return C, d


def _is_feasible(x: NDArray[np.float64], problem: QpProblem, C: NDArray[np.float64], d: NDArray[np.float64], tol: float) -> bool:
    if not np.all(np.isfinite(x)):
        return False
    if problem.A_eq.shape[0] and np.max(np.abs(problem.A_eq @ x - problem.b_eq)) > tol * (1.0 + np.max(np.abs(problem.b_eq))):
        return False
    return not (C.shape[0] and np.max(C @ x - d) > tol)


def _feasible_start(
    problem: QpProblem,
    C: NDArray[np.float64],
    d: NDArray[np.float64],
    x0: NDArray[np.float64] | None,
    tol: float,
) -> NDArray[np.float64] | None:
    candidates = []
    if x0 is not None:
        candidates.append(np.asarray(x0, dtype=float).reshape(problem.n))
    box_centre = np.clip(np.zeros(problem.n), problem.lb, problem.ub)
    candidates.append(box_centre)
    if problem.A_eq.shape[0]:
        correction = pseudoinverse(problem.A_eq) @ (problem.b_eq - problem.A_eq @ box_centre)
        candidates.append(box_centre + correction)
    for candidate in candidates:
        if _is_feasible(candidate, problem, C, d, tol):
            return candidate

    # Phase 1: any point of the feasible polyhedron.
    result = linprog(
        c=np.zeros(problem.n),
        A_ub=C if C.shape[0] else None,
        b_ub=d if C.shape[0] else None,
        A_eq=problem.A_eq if problem.A_eq.shape[0] else None,
        b_eq=problem.b_eq if problem.A_eq.shape[0] else None,
        bounds=[(None, None)] * problem.n,
        method="highs",
    )
    if not result.success:
        logger.debug("QP phase 1 failed: %s", result.message)
        return None
    return np.asarray(result.x, dtype=float)


def _solve_kkt(
    H: NDArray[np.float64], A: NDArray[np.float64], grad: NDArray[np.float64], r: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Step p and multipliers lam of  min 1/2 p'Hp + grad'p  s.t.  A p = r."""
    n, m = H.shape[0], A.shape[0]
    K = np.zeros((n + m, n + m))
    K[:n, :n] = H
    K[:n, n:] = A.T
    K[n:, :n] = A
    rhs = np.concatenate([-grad, r])
    try:
        sol = scipy.linalg.solve(K, rhs, assume_a="sym")
        if not np.all(np.isfinite(sol)):
            raise np.linalg.LinAlgError("non-finite KKT solution")
    except (np.linalg.LinAlgError, ValueError):
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:n], sol[n:]


def _independent(rows: NDArray[np.float64], candidate: NDArray[np.float64]) -> bool:
    if rows.shape[0] == 0:
        return bool(np.linalg.norm(candidate) > 0.0)
    stacked = np.vstack([rows, candidate])
    return bool(np.linalg.matrix_rank(stacked) > np.linalg.matrix_rank(rows))


def solve_qp(
    problem: QpProblem,
    x0: NDArray[np.float64] | None = None,
    tol: float = 1e-8,
    max_iter: int = 200,
    working_set: list[int] | None = None,
) -> QpSolution:
    """
    Primal active-set solver for small dense convex QPs.

    Inequality rows are numbered as general inequalities first, then the
    finite upper bounds, then the finite lower bounds; ``working_set`` and
    the returned ``active_set`` use that numbering, so a previous solution's
    active set can warm-start the next call.

    Args:
        problem (QpProblem): The problem to solve.
        x0 (NDArray | None): Starting point; used when feasible.
        tol (float): Feasibility, stationarity and complementarity tolerance.
        max_iter (int): Iteration cap; the best iterate is returned on overrun.
        working_set (list[int] | None): Inequality rows to start active.

    Returns:
        QpSolution: The solution with its status and KKT residual.
    """
    H, g = problem.H, problem.g
    E, f = problem.A_eq, problem.b_eq
    C, d = _inequalities(problem)
    m_eq = E.shape[0]

    x = _feasible_start(problem, C, d, x0, max(tol, 1e-7))
    if x is None:
        fallback = np.zeros(problem.n) if x0 is None else np.asarray(x0, dtype=float).reshape(problem.n)
        return QpSolution(x=fallback, status=QpStatus.INFEASIBLE)

    # Start from the suggested rows that are active here, keeping them independent.
    slack = d - C @ x
    working: list[int] = []
    rows = E.copy()
    for i in working_set or []:
        if 0 <= i < C.shape[0] and abs(slack[i]) <= 1e-7 and i not in working and _independent(rows, C[i]):
            working.append(i)
            rows = np.vstack([rows, C[i]])

    lam = np.zeros(m_eq + len(working))
    status = QpStatus.MAX_ITER
    iterations = 0
    for iterations in range(1, max_iter + 1):
        A_w = np.vstack([E, C[working]]) if working else E
        r = np.concatenate([f - E @ x, d[working] - C[working] @ x]) if working else f - E @ x
        grad = H @ x + g
        p, lam = _solve_kkt(H, A_w, grad, r)

        if np.max(np.abs(p), initial=0.0) <= 1e-12 * (1.0 + np.max(np.abs(x), initial=0.0)):
            mult = lam[m_eq:]
            if not working or np.min(mult) >= -tol:
                status = QpStatus.OPTIMAL
                break
            working.pop(int(np.argmin(mult)))
            continue

        # Ratio test over the inactive inequality rows.
        step, blocking = 1.0, None
        if C.shape[0]:
            Cp = C @ p
            slack = d - C @ x
            for i in np.flatnonzero(Cp > 1e-14):
                if i in working:
                    continue
                ratio = max(slack[i], 0.0) / Cp[i]
                if ratio < step:
                    step, blocking = ratio, int(i)
        x = x + step * p
        if blocking is not None:
            working.append(blocking)

    multipliers = np.zeros(C.shape[0])
    if working and lam.shape[0] == m_eq + len(working):
        multipliers[working] = lam[m_eq:]
    mu = lam[:m_eq] if lam.shape[0] >= m_eq else np.zeros(m_eq)

    stationarity = H @ x + g + E.T @ mu + C.T @ multipliers
    residual = max(
        np.max(np.abs(stationarity), initial=0.0),
        np.max(np.abs(E @ x - f), initial=0.0),
        np.max(C @ x - d, initial=0.0),
        np.max(np.abs(multipliers * (C @ x - d)), initial=0.0),
        -np.min(multipliers, initial=0.0),
    )
    if status is QpStatus.MAX_ITER:
        logger.debug("QP stopped after %d iterations, KKT residual %.3g", max_iter, residual)
    return QpSolution(
        x=x,
        status=status,
        iterations=iterations,
        kkt_residual=float(residual),
        active_set=sorted(working),
        multipliers=multipliers,
    )


# --- Riccati ---------------------------------------------------------------


def care_residual(A: NDArray[np.float64], B: NDArray[np.float64], Q: NDArray[np.float64], R: NDArray[np.float64], P: NDArray[np.float64]) -> float:
    S = B @ np.linalg.solve(R, B.T)
    return float(np.linalg.norm(A.T @ P + P @ A - P @ S @ P + Q, ord="fro"))


def solve_care(
    A: NDArray[np.float64],
    B: NDArray[np.float64],
    Q: NDArray[np.float64],
    R: NDArray[np.float64],
    strict: bool = False,
) -> CareResult:
    """
    Stabilising solution of A'P + PA - P B R^-1 B' P + Q = 0.

    The stable invariant subspace of the Hamiltonian comes from an ordered
    real Schur form; a few Newton-Kleinman steps then polish P.

    Args:
        A, B, Q, R: System and weight matrices, Q >= 0 and R > 0.
        strict (bool): Raise RiccatiError instead of flagging a failure.

    Returns:
        CareResult: P, K = R^-1 B'P, whether A - BK is Hurwitz, and the residual.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    n = A.shape[0]

    S = B @ np.linalg.solve(R, B.T)
    hamiltonian = np.block([[A, -S], [-Q, -A.T]])
    _, Z, sdim = scipy.linalg.schur(hamiltonian, output="real", sort="lhp")

    P = np.full((n, n), np.nan)
    if sdim == n:
        U11, U21 = Z[:n, :n], Z[n:, :n]
        try:
            P = np.linalg.solve(U11.T, U21.T).T
            P = (P + P.T) / 2
        except np.linalg.LinAlgError:
            pass

    for _ in range(NEWTON_STEPS):
        if not np.all(np.isfinite(P)):
            break
        K = np.linalg.solve(R, B.T @ P)
        A_cl = A - B @ K
        if np.max(np.linalg.eigvals(A_cl).real) >= 0.0:
            break
        refined = scipy.linalg.solve_continuous_lyapunov(A_cl.T, -(Q + K.T @ R @ K))
        refined = (refined + refined.T) / 2
        if not care_residual(A, B, Q, R, refined) < care_residual(A, B, Q, R, P):
            break
        P = refined

    if not np.all(np.isfinite(P)):
        message = f"No stabilising CARE solution ({sdim} stable eigenvalues of {n} needed)"
        if strict:
            raise RiccatiError(message)
        logger.warning(message)
        return CareResult(P, np.full((B.shape[1], n), np.nan), False, float("inf"))

    K = np.linalg.solve(R, B.T @ P)
    stabilizing = bool(np.max(np.linalg.eigvals(A - B @ K).real) < 0.0)
    residual = care_residual(A, B, Q, R, P)
    if not stabilizing:
        message = "CARE solution does not stabilise the closed loop"
        if strict:
            raise RiccatiError(message)
        logger.warning(message)
    return CareResult(P, K, stabilizing, residual)
