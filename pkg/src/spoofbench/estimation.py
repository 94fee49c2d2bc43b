"""Constant-velocity Kalman core shared by both trackers.

State is (px, py, vx, vy); measurements are position-only. The update
uses the Joseph form and the covariance is re-symmetrized after every
step so long adversarial runs cannot drift out of PSD.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sensing import DetectionFrame

# chi-square(2) quantile at 99%: default gating threshold
GAMMA_DEFAULT = 9.21

# position-only measurement matrix
H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])

V_MAX_DEFAULT = 50.0


@dataclass
class KinematicEstimate:
    """State mean x = (px, py, vx, vy) and covariance P (4x4)."""

    x: np.ndarray
    P: np.ndarray

    def position(self) -> np.ndarray:
        return self.x[:2]

    def velocity(self) -> np.ndarray:
        return self.x[2:]


@dataclass(frozen=True)
class GateResult:
    """Detections of one frame that fall inside a track's gate.

    Parallel tuples, ordered by detection_id: indices into the frame,
    detection ids, squared Mahalanobis distances, and the innovation
    covariance used for each pair.
    """

    track_id: int
    indices: tuple[int, ...]
    detection_ids: tuple[int, ...]
    d2: tuple[float, ...]
    S: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.indices)


def cv_transition(dt: float) -> np.ndarray:
    F = np.eye(4)
    F[0, 2] = dt
    F[1, 3] = dt
    return F


def white_accel_Q(dt: float, q: float) -> np.ndarray:
    """Process noise for piecewise-constant white acceleration, scale q.

    Per axis: [[dt^4/4, dt^3/2], [dt^3/2, dt^2]] * q in the (pos, vel)
    blocks.
    """
    q11 = 0.25 * dt**4 * q
    q12 = 0.5 * dt**3 * q
    q22 = dt**2 * q
    Q = np.zeros((4, 4))
    Q[0, 0] = Q[1, 1] = q11
    Q[0, 2] = Q[2, 0] = Q[1, 3] = Q[3, 1] = q12
    Q[2, 2] = Q[3, 3] = q22
    return Q


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def kf_predict(est: KinematicEstimate, dt: float, q: float) -> KinematicEstimate:
    """Propagate mean and covariance one step of dt seconds.

    Raises ValueError on non-finite state or covariance.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not (np.all(np.isfinite(est.x)) and np.all(np.isfinite(est.P))):
        raise ValueError("non-finite state estimate")
    F = cv_transition(dt)
    x = F @ est.x
    P = _symmetrize(F @ est.P @ F.T + white_accel_Q(dt, q))
    return KinematicEstimate(x=x, P=P)


def innovation_covariance(est: KinematicEstimate, R: np.ndarray) -> np.ndarray:
    return H @ est.P @ H.T + np.asarray(R, dtype=float)


def _solve_S(S: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    det = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
    if not np.isfinite(det) or det <= 0.0:
        raise np.linalg.LinAlgError(f"degenerate innovation covariance, det={det}")
    return np.linalg.solve(S, rhs)


def kf_update(
    est: KinematicEstimate, z: np.ndarray, R: np.ndarray
) -> tuple[KinematicEstimate, np.ndarray, np.ndarray]:
    """Measurement update; returns (posterior, innovation, S).

    Joseph-form covariance keeps P PSD under roundoff. Raises
    numpy.linalg.LinAlgError when S is singular.
    """
    z = np.asarray(z, dtype=float)
    S = innovation_covariance(est, R)
    nu = z - H @ est.x
    # K = P H^T S^-1, via solve on the symmetric S
    K = _solve_S(S, H @ est.P).T
    x = est.x + K @ nu
    I_KH = np.eye(4) - K @ H
    P = I_KH @ est.P @ I_KH.T + K @ np.asarray(R, dtype=float) @ K.T
    return KinematicEstimate(x=x, P=_symmetrize(P)), nu, S


def mahalanobis2(z: np.ndarray, est: KinematicEstimate, R: np.ndarray) -> float:
    """Squared Mahalanobis distance of z from the predicted measurement."""
    S = innovation_covariance(est, R)
    nu = np.asarray(z, dtype=float) - H @ est.x
    return float(nu @ _solve_S(S, nu))


def gate(
    frame: DetectionFrame,
    est: KinematicEstimate,
    R: Optional[np.ndarray] = None,
    gamma: float = GAMMA_DEFAULT,
    track_id: int = -1,
) -> GateResult:
    """Detections with squared Mahalanobis distance <= gamma.

    R=None uses each detection's own reported covariance; an explicit R
    overrides it for every detection.
    """
    if gamma < 0.0:
        raise ValueError("gamma must be non-negative")
    indices: list[int] = []
    ids: list[int] = []
    d2s: list[float] = []
    Ss: list[np.ndarray] = []
    for i, det in enumerate(frame.detections):
        R_i = det.R if R is None else R
        S = innovation_covariance(est, R_i)
        nu = det.z - H @ est.x
        d2 = float(nu @ _solve_S(S, nu))
        if d2 <= gamma:
            indices.append(i)
            ids.append(det.detection_id)
            d2s.append(d2)
            Ss.append(S)
    return GateResult(
        track_id=track_id,
        indices=tuple(indices),
        detection_ids=tuple(ids),
        d2=tuple(d2s),
        S=tuple(Ss),
    )


def estimate_from_detection(
    z: np.ndarray, R: np.ndarray, v_max: float = V_MAX_DEFAULT
) -> KinematicEstimate:
    """Single-detection track initialization.

    Position from the measurement, zero velocity, velocity variance
    v_max^2 so the first gate admits any plausible mover.
    """
    x = np.array([float(z[0]), float(z[1]), 0.0, 0.0])
    P = np.zeros((4, 4))
    P[:2, :2] = np.asarray(R, dtype=float)
    P[2, 2] = P[3, 3] = v_max * v_max
    return KinematicEstimate(x=x, P=P)


def nees(est: KinematicEstimate, x_true: np.ndarray) -> float:
    """Normalized estimation error squared against a true state."""
    e = est.x - np.asarray(x_true, dtype=float)
    return float(e @ np.linalg.solve(est.P, e))
