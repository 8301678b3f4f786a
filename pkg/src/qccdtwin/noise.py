"""Component error rates and their conversion to samplable stochastic events.

The parameter set mirrors the component-benchmark table of the reference
machine: SPAM conditional rates, one- and two-qubit gate infidelities with
leakage rates, a quadratic transport-idle memory model, and measurement
crosstalk conditional rates split by spectator position (laser-adjacent
"local", other operation-zone, and ring storage).

Conventions:

* Average infidelity of a stochastic Pauli channel with error probabilities
  ``p_i`` and leakage ``p_L``:  d/(d+1) * sum_{i>0} p_i + p_L.
* Pauli fidelities f_i = sum_j (-1)^{<i,j>} p_j (on the non-leak-normalized
  subchannel) and the inverse transform p_i = d^-2 sum_j (-1)^{<i,j>} f_j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NonPhysicalChannel

PAULIS_1Q = ("I", "X", "Y", "Z")
PAULIS_2Q = tuple(a + b for a in PAULIS_1Q for b in PAULIS_1Q)

_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


def _symplectic_sign_matrix(labels) -> np.ndarray:
    n = len(labels[0])
    m = np.zeros((len(labels), len(labels)), dtype=np.int8)
    for i, a in enumerate(labels):
        for j, b in enumerate(labels):
            acc = 0
            for q in range(n):
                xa, za = _XZ[a[q]]
                xb, zb = _XZ[b[q]]
                acc ^= (xa & zb) ^ (za & xb)
            m[i, j] = -1 if acc else 1
    return m

SIGN_1Q = _symplectic_sign_matrix(PAULIS_1Q)
SIGN_2Q = _symplectic_sign_matrix(PAULIS_2Q)


@dataclass(frozen=True)
class PauliChannel:
    """Stochastic Pauli channel; probs[0] is the identity component."""

    labels: tuple[str, ...]
    probs: np.ndarray
    leak_prob: float = 0.0

    def __post_init__(self):
        total = float(np.sum(self.probs)) + self.leak_prob
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"channel probabilities sum to {total}, not 1")
        if np.any(self.probs < -1e-12) or self.leak_prob < -1e-12:
            raise ValueError("negative channel probability")

    @property
    def dim(self) -> int:
        return 2 ** len(self.labels[0])

    @property
    def error_prob(self) -> float:
        return float(np.sum(self.probs[1:]))

    def avg_infidelity(self) -> float:
        d = self.dim
        return d / (d + 1) * self.error_prob + self.leak_prob

    def process_infidelity(self) -> float:
        return self.error_prob + self.leak_prob

    def as_json_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "probs": [float(p) for p in self.probs],
            "leak_prob": self.leak_prob,
        }


def identity_channel(n_qubits: int) -> PauliChannel:
    labels = PAULIS_1Q if n_qubits == 1 else PAULIS_2Q
    probs = np.zeros(len(labels))
    probs[0] = 1.0
    return PauliChannel(labels, probs)


def fidelities_from_probs(ch: PauliChannel) -> np.ndarray:
    """Pauli fidelities of the non-leak-normalized subchannel."""
    sign = SIGN_1Q if ch.dim == 2 else SIGN_2Q
    p = np.asarray(ch.probs, dtype=float)
    total = p.sum()
    if total <= 0:
        raise ValueError("channel has no non-leak component")
    return sign @ (p / total)


def probs_from_fidelities(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape[0] == 4:
        sign, d2 = SIGN_1Q, 4
    elif f.shape[0] == 16:
        sign, d2 = SIGN_2Q, 16
    else:
        raise ValueError(f"fidelity vector length {f.shape[0]} is not 4 or 16")
    p = sign @ f / d2
    if np.any(p < -1e-9):
        raise NonPhysicalChannel(f"negative probability {p.min():.3e}")
    return np.clip(p, 0.0, None)


# --------------------------------------------------------------------------
# parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SpamRates:
    p1_given_0: float = 0.0
    p0_given_1: float = 0.0

    @property
    def avg(self) -> float:
        return 0.5 * (self.p1_given_0 + self.p0_given_1)


@dataclass(frozen=True)
class TernaryRates:
    pL_given_0: float = 0.0
    pL_given_1: float = 0.0
    p1_given_0: float = 0.0
    p0_given_1: float = 0.0


@dataclass(frozen=True)
class MemoryParams:
    """Average infidelity per qubit grows as a + b*n + c*n^2 over n
    depth-1 transport units; b_leak*n of it is leakage."""

    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    b_leak: float = 0.0


@dataclass(frozen=True)
class CrosstalkRates:
    p1_given_0: float = 0.0
    p0_given_1: float = 0.0
    pL_given_0: float = 0.0
    pL_given_1: float = 0.0

    def scaled(self, factor: float) -> "CrosstalkRates":
        return CrosstalkRates(
            self.p1_given_0 * factor,
            self.p0_given_1 * factor,
            self.pL_given_0 * factor,
            self.pL_given_1 * factor,
        )


@dataclass(frozen=True)
class NoiseParams:
    spam: SpamRates = SpamRates()
    ternary: TernaryRates = TernaryRates()
    spam_prep_share: float = 0.5
    eps_1q_avg: float = 0.0
    r_L_1q: float = 0.0
    eps_2q_avg: float = 0.0
    r_L_2q: float = 0.0
    twoq_shape: tuple[float, ...] | None = None   # 15 non-identity weights
    memory: MemoryParams = MemoryParams()
    mcmr_local: CrosstalkRates = CrosstalkRates()
    mcmr_zone: CrosstalkRates = CrosstalkRates()
    mcmr_ring: CrosstalkRates = CrosstalkRates()
    p_el: float = 0.0

    @property
    def is_zero(self) -> bool:
        return (
            self.spam.avg == 0
            and self.ternary == TernaryRates()
            and self.eps_1q_avg == 0
            and self.eps_2q_avg == 0
            and self.memory == MemoryParams()
            and self.mcmr_local == CrosstalkRates()
            and self.mcmr_zone == CrosstalkRates()
            and self.mcmr_ring == CrosstalkRates()
        )


# Two-qubit error-channel shape measured by cycle benchmarking, as relative
# weights of the 15 non-identity Paulis (order follows PAULIS_2Q[1:]).
_CB_CLASS_WEIGHTS = {
    "IX": 4.5, "IY": 4.5, "ZX": 4.5, "ZY": 4.5,
    "XI": 5.8, "YI": 5.8, "XZ": 5.8, "YZ": 5.8,
    "XX": 0.06, "XY": 0.06, "YX": 0.06, "YY": 0.06,
    "IZ": 19.0, "ZI": 19.0, "ZZ": 5.9,
}
CB_SHAPE = tuple(_CB_CLASS_WEIGHTS[p] for p in PAULIS_2Q[1:])


def depolarizing_channel(n_qubits: int, eps_avg: float, leak: float = 0.0) -> PauliChannel:
    d = 2**n_qubits
    labels = PAULIS_1Q if n_qubits == 1 else PAULIS_2Q
    err = (d + 1) / d * max(0.0, eps_avg - leak)
    probs = np.full(len(labels), err / (len(labels) - 1))
    probs[0] = 1.0 - err - leak
    return PauliChannel(labels, probs, leak)


def shaped_2q_channel(eps_avg: float, leak: float, shape=None) -> PauliChannel:
    shape = np.asarray(shape if shape is not None else CB_SHAPE, dtype=float)
    if shape.shape != (15,):
        raise ValueError("two-qubit shape needs 15 non-identity weights")
    err = 1.25 * max(0.0, eps_avg - leak)
    probs = np.zeros(16)
    if shape.sum() > 0:
        probs[1:] = shape / shape.sum() * err
    probs[0] = 1.0 - probs[1:].sum() - leak
    return PauliChannel(PAULIS_2Q, probs, leak)


def oneq_gate_channel(params: NoiseParams) -> PauliChannel:
    return depolarizing_channel(1, params.eps_1q_avg, params.r_L_1q)


def twoq_gate_channel(params: NoiseParams) -> PauliChannel:
    return shaped_2q_channel(params.eps_2q_avg, params.r_L_2q, params.twoq_shape)


def memory_error(n: float, params: MemoryParams) -> tuple[float, float]:
    """(average infidelity, leak fraction) after n depth-1 units."""
    if n < 0:
        raise ValueError("negative depth count")
    eps = params.a + params.b * n + params.c * n * n
    return eps, params.b_leak * n


def memory_segment_channel(n: float, params: MemoryParams) -> PauliChannel:
    """Dephasing-dominant realization whose infidelity matches memory_error."""
    if n <= 0:
        return identity_channel(1)
    eps, leak = memory_error(n, params)
    z_prob = 1.5 * max(0.0, eps - leak)
    probs = np.array([1.0 - z_prob - leak, 0.0, 0.0, z_prob])
    return PauliChannel(PAULIS_1Q, probs, leak)


def mcmr_avg_infidelity(rates: CrosstalkRates, p_el: float = 0.0) -> float:
    p_z = (rates.p1_given_0 + rates.p0_given_1 + rates.pL_given_1 + rates.pL_given_0 + p_el) / 4.0
    return (
        rates.p0_given_1
        + rates.p1_given_0
        + 2 * rates.pL_given_0
        + 2 * rates.pL_given_1
        + 4 * p_z
    ) / 6.0


def crosstalk_channel(rates: CrosstalkRates, p_el: float = 0.0) -> PauliChannel:
    """Symmetric Pauli approximation used for spectators in superposition."""
    p_x = 0.5 * (rates.p1_given_0 + rates.p0_given_1)
    p_z = (rates.p1_given_0 + rates.p0_given_1 + rates.pL_given_1 + rates.pL_given_0 + p_el) / 4.0
    leak = 0.5 * (rates.pL_given_0 + rates.pL_given_1)
    probs = np.array([1.0 - p_x - p_z - leak, p_x, 0.0, p_z])
    return PauliChannel(PAULIS_1Q, probs, leak)


def effective_2q_error(params: NoiseParams) -> float:
    """Depolarizing-equivalent per-pair error absorbing gate plus memory."""
    eps_mem, _ = memory_error(1.0, params.memory)
    return 0.8 * (1.25 * params.eps_2q_avg + 2 * 1.5 * eps_mem)


def effective_mcmr_error(
    params: NoiseParams,
    n_m: int,
    protected: bool = False,
    n_ring_spectators: int = 82,
    n_zone_spectators: int | None = None,
) -> float:
    if n_zone_spectators is None:
        n_zone_spectators = n_m
    eps = params.spam.avg
    eps += n_ring_spectators * mcmr_avg_infidelity(params.mcmr_ring, params.p_el)
    if not protected:
        eps += n_zone_spectators * mcmr_avg_infidelity(params.mcmr_zone, params.p_el)
    return eps


# --------------------------------------------------------------------------
# sampling
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorEvent:
    kind: str                      # "pauli" | "leak" | "none"
    label: str = ""
    qubit_offset: int = 0          # which operand leaks (two-qubit channels)


EVENT_NONE = ErrorEvent("none")


def sample_error(ch: PauliChannel, rng: np.random.Generator) -> ErrorEvent:
    u = rng.random()
    acc = float(ch.probs[0])
    if u < acc:
        return EVENT_NONE
    for i in range(1, len(ch.probs)):
        acc += float(ch.probs[i])
        if u < acc:
            return ErrorEvent("pauli", ch.labels[i])
    # leak: split evenly between operands for two-qubit channels
    offset = 0
    if ch.dim == 4:
        offset = int(rng.integers(2))
    return ErrorEvent("leak", qubit_offset=offset)


# --------------------------------------------------------------------------
# presets
# --------------------------------------------------------------------------

_GLOBAL_RATES = CrosstalkRates(1.2e-5, 2.8e-5, 2.1e-5, 4.8e-5)
_LOCAL_RATES = CrosstalkRates(0.7e-4, 1.6e-4, 0.8e-4, 1.8e-4)


def _rates_for_target(shape: CrosstalkRates, target_eps: float, p_el: float = 0.0) -> CrosstalkRates:
    base = mcmr_avg_infidelity(shape, p_el)
    return shape.scaled(target_eps / base)


def zero_noise() -> NoiseParams:
    return NoiseParams()


def helios_defaults() -> NoiseParams:
    """Component-benchmark table values; zone/ring crosstalk uses the
    effective per-spectator infidelities from the system-level accounting
    (1.51e-5 ring, 6.5e-5 zone)."""
    return NoiseParams(
        spam=SpamRates(8.1e-4, 1.6e-4),
        ternary=TernaryRates(2.7e-3, 5.7e-3, 7e-4, 2.8e-3),
        eps_1q_avg=2.5e-5,
        r_L_1q=1.12e-5,
        eps_2q_avg=7.9e-4,
        r_L_2q=2.4e-4,
        twoq_shape=CB_SHAPE,
        memory=MemoryParams(a=0.3e-4, b=5e-4, c=0.7e-4, b_leak=4.0e-4),
        mcmr_local=_LOCAL_RATES,
        mcmr_zone=_rates_for_target(_GLOBAL_RATES, 6.5e-5),
        mcmr_ring=_rates_for_target(_GLOBAL_RATES, 1.51e-5),
        p_el=0.0,
    )


def figure_values() -> NoiseParams:
    """Variant preset using the simultaneous-target experiment numbers for
    zone/ring crosstalk (5.2e-5 zone, 1.21e-5 ring)."""
    return replace(
        helios_defaults(),
        mcmr_zone=_rates_for_target(_GLOBAL_RATES, 5.2e-5),
        mcmr_ring=_rates_for_target(_GLOBAL_RATES, 1.21e-5),
    )


PRESETS = {
    "helios-defaults": helios_defaults,
    "zero-noise": zero_noise,
    "figure-values": figure_values,
}
