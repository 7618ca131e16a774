"""
Control allocation: turn the desired body wrench into hinge angles and
quadcopter thrusts.

Two allocators share the constant allocation matrix W of the intermediate
forces F = [F_s0, F_c0, ..., F_s3, F_c3]: the nominal force decomposition
(least-squares plus an optional nullspace component) and the constrained
nullspace allocator, which linearises around the previous inputs, solves a
slack QP under box and rate limits and projects the result back onto the
exact solutions of W F = u.
"""
import logging

import numpy as np
from numpy.typing import NDArray

from classes.allocation_limits import AllocationLimits
from classes.allocation_solution import AllocationSolution
from classes.platform_params import PlatformParams
from classes.qp_problem import QpProblem, QpStatus
from classes.wrench_command import WrenchCommand
from model import forces_to_inputs, inputs_to_forces
from numerics import nullspace_basis, pseudoinverse, solve_qp

logger = logging.getLogger(__name__)

# Clamps of the previous inputs larger than this are reported as warnings.
CLAMP_WARN = 1e-3
# Inputs this close to a box limit count as constrained.
BOUND_TOL = 1e-9


def build_W(l: float) -> NDArray[np.float64]:
    """6x8 allocation matrix: W F = [J_xi T; J_nu T] for F = inputs_to_forces(alpha, T)."""
    W = np.zeros((6, 8))
    # Columns 2i and 2i+1 are F_si and F_ci.
    W[0, 0], W[0, 4] = -1.0, 1.0
    W[1, 2], W[1, 6] = 1.0, -1.0
    W[2, 1::2] = 1.0
    W[3, 1], W[3, 5] = -l, l
    W[4, 3], W[4, 7] = l, -l
    W[5, 0::2] = l
    return W


def force_jacobian(alpha: NDArray[np.float64], T: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    dF/dX for X = [alpha; T]: 8x8, each quadcopter a 2x2 block spread over
    column i (its angle) and column 4 + i (its thrust).
    """
    s, c = np.sin(alpha), np.cos(alpha)
    J = np.zeros((8, 8))
    for i in range(4):
        J[2 * i, i] = c[i] * T[i]
        J[2 * i, 4 + i] = s[i]
        J[2 * i + 1, i] = -s[i] * T[i]
        J[2 * i + 1, 4 + i] = c[i]
    return J


class Allocator(object):
    """
    Holds the constant allocation data: W, its pseudoinverse, an orthonormal
    nullspace basis N and the default QP weights. Allocation calls do not
    change the object.
    """

    def __init__(
        self,
        params: PlatformParams,
        P: NDArray[np.float64] | None = None,
        Q: NDArray[np.float64] | None = None,
        W: NDArray[np.float64] | None = None,
        Z_weight: float = 1.0,
    ) -> None:
        self.params = params
        self.W = build_W(params.l) if W is None else np.asarray(W, dtype=float)
        self.W_pinv = pseudoinverse(self.W)
        self.N = nullspace_basis(self.W)
        # N has orthonormal columns, so N N^+ = N N'.
        self.projector = self.N @ self.N.T
        self.P = np.eye(8) if P is None else np.asarray(P, dtype=float)
        self.Q = 1e3 * np.eye(8) if Q is None else np.asarray(Q, dtype=float)
        if Z_weight < 0.0:
            raise ValueError(f"Z_weight must be non-negative, got {Z_weight}")
        self.Z_weight = float(Z_weight)
        self.slack_metric = self._slack_metric(self.Q)
        self.W.setflags(write=False)
        logger.debug("Allocator ready: W rank %d, nullspace dim %d", 8 - self.N.shape[1], self.N.shape[1])

    def _slack_metric(self, Q: NDArray[np.float64]) -> NDArray[np.float64]:
        """M = (W Q^-1 W')^-1, so min s'Qs subject to W s = r costs r' M r."""
        M = np.linalg.inv(self.W @ np.linalg.solve(Q, self.W.T))
        return (M + M.T) / 2

    def _solution(
        self,
        F: NDArray[np.float64],
        alpha_prev: NDArray[np.float64] | None,
        **extra: object,
    ) -> AllocationSolution:
        alpha, T = forces_to_inputs(F, alpha_prev)
        return AllocationSolution(
            alpha=alpha,
            T=T,
            F=F,
            u_achieved=WrenchCommand.from_vector(self.W @ F),
            **extra,  # type: ignore[arg-type]
        )

    def fd_allocate(
        self,
        u_d: WrenchCommand,
        Z: NDArray[np.float64] | None = None,
        alpha_prev: NDArray[np.float64] | None = None,
    ) -> AllocationSolution:
        """
        Nominal force decomposition: F = W^+ u + N Z. Thrust limits are not
        considered.

        Args:
            u_d (WrenchCommand): Desired body wrench.
            Z (NDArray | None): Nullspace coordinates; least-norm forces when omitted.
            alpha_prev (NDArray | None): Angles kept by quadcopters left without force.

        Returns:
            AllocationSolution: Angles, thrusts and forces.
        """
        F = self.W_pinv @ u_d.as_vector()
        if Z is not None:
            F = F + self.N @ np.asarray(Z, dtype=float)
        return self._solution(F, alpha_prev)

    def nullspace_allocate(
        self,
        u_d: WrenchCommand,
        X_prev: NDArray[np.float64],
        limits: AllocationLimits,
        P: NDArray[np.float64] | None = None,
        Q: NDArray[np.float64] | None = None,
        warm_start: list[int] | None = None,
    ) -> AllocationSolution:
        """
        Constrained allocation around the previous inputs X_prev = [alpha; T].

        The QP over z = [dX; s] is
            min dX' P dX + s' Q s + rho |N'(F(X_o) + J dX)|^2
            s.t. W (F(X_o) + J dX + s) = u,
                 X_min <= X_o + dX <= X_max,  |dX| <= dX_max,
        after which F* = (I - N N^+) W^+ u + N N^+ F(X_o + dX) restores the
        wrench exactly. The free slack is minimised out analytically, leaving a
        box-constrained QP in dX alone. The rho term (``Z_weight``) pulls
        the nullspace coordinates back toward the least-norm forces whenever
        the limits leave room, so repeated calls do not drift along the
        nullspace.
        """
        P = self.P if P is None else P
        Q = self.Q if Q is None else Q
        u = u_d.as_vector()

        X_given = np.asarray(X_prev, dtype=float).reshape(8)
        X_o = np.clip(X_given, limits.X_min, limits.X_max)
        clamp = np.max(np.abs(X_o - X_given))
        if clamp > CLAMP_WARN:
            logger.warning("Previous allocation outside the limits by %.4g, clamped", clamp)
        elif clamp > 0.0:
            logger.debug("Previous allocation clamped by %.3g", clamp)

        alpha_o, T_o = X_o[:4], X_o[4:]
        F_o = inputs_to_forces(alpha_o, T_o)
        J = force_jacobian(alpha_o, T_o)

        # The slack is free, so it is minimised out: s = Q^-1 W' M (b - G dX).
        M = self.slack_metric if Q is self.Q else self._slack_metric(Q)
        G = self.W @ J
        b = u - self.W @ F_o
        H = 2 * (P + G.T @ M @ G)
        g = -2 * G.T @ M @ b
        if self.Z_weight > 0.0:
            NJ = self.N.T @ J
            H += 2 * self.Z_weight * NJ.T @ NJ
            g += 2 * self.Z_weight * NJ.T @ (self.N.T @ F_o)

        lb = np.maximum(limits.X_min - X_o, -limits.dX_max)
        ub = np.minimum(limits.X_max - X_o, limits.dX_max)
        problem = QpProblem(H=H, g=g, lb=lb, ub=ub)
        # X_o is clipped into the box, so dX = 0 is always feasible.
        qp = solve_qp(problem, x0=np.zeros(8), working_set=warm_start)
        if qp.status is QpStatus.INFEASIBLE:
            logger.warning("Allocation QP infeasible, holding the previous inputs")
            dX = np.zeros(8)
        else:
            if qp.status is QpStatus.MAX_ITER:
                logger.warning("Allocation QP hit the iteration limit (KKT residual %.3g)", qp.kkt_residual)
            dX = qp.x
        s = np.linalg.solve(Q, self.W.T @ (M @ (b - G @ dX)))

        X = X_o + dX
        F_X = inputs_to_forces(X[:4], X[4:])
        F_star = self.W_pinv @ u - self.projector @ (self.W_pinv @ u) + self.projector @ F_X
        slack_norm = float(np.linalg.norm(s))
        on_bound = bool(np.any(X <= limits.X_min + BOUND_TOL) or np.any(X >= limits.X_max - BOUND_TOL))
        constrained = (
            bool(qp.active_set) or on_bound or slack_norm > 1e-9 or qp.status is not QpStatus.OPTIMAL
        )
        return self._solution(
            F_star,
            X[:4],
            slack_norm=slack_norm,
            constrained=constrained,
            qp_status=qp.status,
            delta_X=dX,
            active_set=qp.active_set,
        )
