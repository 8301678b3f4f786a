"""Dense statevector backend for small non-Clifford workloads.

Little-endian convention: basis index bit ``q`` is qubit ``q``.  Noise is
Monte-Carlo: sampled error events are inserted as operators (quantum
trajectories), so each shot stays a pure state.
"""

from __future__ import annotations

import math

import numpy as np

from .cliffords import PAULI_1Q, rz_matrix, u1q_matrix
from .errors import CapExceeded, QubitOutOfRange

DEFAULT_CAP = 14


class StateVector:
    def __init__(self, n: int, cap: int = DEFAULT_CAP):
        if n > cap:
            raise CapExceeded(f"{n} qubits above statevector cap {cap}")
        self.n = n
        self.psi = np.zeros(2**n, dtype=complex)
        self.psi[0] = 1.0
        self.leaked = np.zeros(n, dtype=bool)

    def _check(self, q: int):
        if not 0 <= q < self.n:
            raise QubitOutOfRange(f"qubit {q} outside register of {self.n}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))

    # ------------------------------------------------------------------ gates

    def apply_1q(self, q: int, mat: np.ndarray) -> None:
        self._check(q)
        if self.leaked[q]:
            return
        psi = self.psi.reshape([2] * self.n)
        axis = self.n - 1 - q
        psi = np.moveaxis(psi, axis, -1)
        psi = psi @ mat.T
        self.psi = np.moveaxis(psi, -1, axis).reshape(-1)

    def apply_2q(self, q0: int, q1: int, mat: np.ndarray) -> None:
        """mat is 4x4 in (q0, q1) order with q0 the more significant bit."""
        self._check(q0)
        self._check(q1)
        psi = self.psi.reshape([2] * self.n)
        a0, a1 = self.n - 1 - q0, self.n - 1 - q1
        psi = np.moveaxis(psi, (a0, a1), (-2, -1))
        shape = psi.shape
        psi = psi.reshape(-1, 4) @ mat.T
        psi = psi.reshape(shape)
        self.psi = np.moveaxis(psi, (-2, -1), (a0, a1)).reshape(-1)

    def apply_u1q(self, q: int, theta: float, phi: float) -> None:
        self.apply_1q(q, u1q_matrix(theta, phi))

    def apply_rz(self, q: int, theta: float) -> None:
        self.apply_1q(q, rz_matrix(theta))

    def apply_rzz(self, q0: int, q1: int, theta: float) -> None:
        self._check(q0)
        self._check(q1)
        if self.leaked[q0] or self.leaked[q1]:
            return
        idx = np.arange(2**self.n)
        b0 = (idx >> q0) & 1
        b1 = (idx >> q1) & 1
        sign = 1 - 2 * (b0 ^ b1)  # +1 on even parity
        self.psi = self.psi * np.exp(-1j * theta / 2 * sign)

    def apply_pauli(self, q: int, code: str) -> None:
        if code != "I":
            self.apply_1q(q, PAULI_1Q[code])

    # ---------------------------------------------------------- measurements

    def prob_one(self, q: int) -> float:
        self._check(q)
        idx = np.arange(2**self.n)
        mask = ((idx >> q) & 1).astype(bool)
        return float(np.sum(np.abs(self.psi[mask]) ** 2))

    def measure_z(self, q: int, rng: np.random.Generator) -> int:
        p1 = self.prob_one(q)
        outcome = int(rng.random() < p1)
        self._collapse(q, outcome)
        return outcome

    def _collapse(self, q: int, outcome: int) -> None:
        idx = np.arange(2**self.n)
        keep = ((idx >> q) & 1) == outcome
        self.psi[~keep] = 0.0
        nrm = np.linalg.norm(self.psi)
        if nrm < 1e-12:
            raise RuntimeError("collapse onto zero-probability branch")
        self.psi /= nrm

    def reset_z(self, q: int, rng: np.random.Generator) -> None:
        outcome = self.measure_z(q, rng)
        if outcome:
            self.apply_pauli(q, "X")

    def leak(self, q: int, rng: np.random.Generator) -> None:
        if self.leaked[q]:
            return
        self.measure_z(q, rng)
        self.leaked[q] = True

    def unleak_to_zero(self, q: int, rng: np.random.Generator) -> None:
        self.leaked[q] = False
        self.reset_z(q, rng)


def haar_1q(rng: np.random.Generator) -> np.ndarray:
    """Haar-random SU(2) element."""
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    u = q @ np.diag(d / np.abs(d))
    u = u / np.sqrt(np.linalg.det(u).astype(complex))
    return u


def u1q_params_of(u: np.ndarray) -> tuple[float, float, float]:
    """Decompose a 2x2 unitary as u1q(theta, phi) . rz(lam) up to phase.

    Returns (lam, theta, phi): one physical pulse plus a software Z.
    """
    u = u / np.sqrt(np.linalg.det(u).astype(complex))
    # u = cos(t/2) Rz-part ... solve directly: u = u1q(theta,phi) @ rz(lam)
    # |u00| = cos(theta/2)
    c = min(1.0, abs(u[0, 0]))
    theta = 2 * math.acos(c)
    if abs(math.sin(theta / 2)) < 1e-12:
        lam = 2 * np.angle(u[1, 1])
        return (float(lam), 0.0, 0.0)
    if abs(c) < 1e-12:
        lam = 0.0
        phi = np.angle(u[1, 0]) + math.pi / 2
        return (float(lam), float(theta), float(phi))
    lam = np.angle(u[1, 1]) - np.angle(u[0, 0])
    phi = np.angle(u[1, 0]) - np.angle(u[0, 0]) + math.pi / 2
    return (float(lam), float(theta), float(phi))
