"""Single- and two-qubit Clifford group machinery.

Everything here works on exact small unitaries (2x2 / 4x4), with groups
identified by a phase-normalized fingerprint.  The two-qubit group (11520
elements) is enumerated through the standard class decomposition

    local (576) | entangler-1 (5184) | entangler-2 (5184) | swap (576)

where every element is written uniquely as (A1 (x) A2) . E_k . (V^a (x) V^b)
with A in the 24-element single-qubit group, V the axis cycle X->Y->Z->X and
E_k built from k native ZZ(pi/2) interactions.  Native synthesis therefore
uses 0/1/2/3 two-qubit gates per element, averaging exactly 1.5 over the
group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

I2 = np.eye(2, dtype=complex)
PX = np.array([[0, 1], [1, 0]], dtype=complex)
PY = np.array([[0, -1j], [1j, 0]], dtype=complex)
PZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_1Q = {"I": I2, "X": PX, "Y": PY, "Z": PZ}
PAULI_CODES = "IXYZ"

H_MAT = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
S_MAT = np.array([[1, 0], [0, 1j]], dtype=complex)


def u1q_matrix(theta: float, phi: float) -> np.ndarray:
    """exp(-i theta/2 (cos(phi) X + sin(phi) Y))."""
    axis = math.cos(phi) * PX + math.sin(phi) * PY
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * axis


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]])


def rzz_matrix(theta: float) -> np.ndarray:
    ph = np.exp(-1j * theta / 2)
    return np.diag([ph, ph.conjugate(), ph.conjugate(), ph])


RZZ90 = rzz_matrix(math.pi / 2)


def fingerprint(u: np.ndarray, decimals: int = 6) -> bytes:
    """Canonical bytes for a unitary modulo global phase."""
    flat = u.ravel()
    idx = int(np.argmax(np.abs(flat) > 0.25))
    norm = flat[idx] / abs(flat[idx])
    v = np.round((u / norm).astype(complex), decimals) + 0.0
    return v.tobytes()


# --------------------------------------------------------------------------
# single-qubit group
# --------------------------------------------------------------------------


def _generate_c1() -> list[np.ndarray]:
    seen: dict[bytes, np.ndarray] = {}
    frontier = [I2]
    seen[fingerprint(I2)] = I2
    while frontier:
        nxt = []
        for u in frontier:
            for g in (H_MAT, S_MAT):
                v = g @ u
                fp = fingerprint(v)
                if fp not in seen:
                    seen[fp] = v
                    nxt.append(v)
        frontier = nxt
    mats = list(seen.values())
    assert len(mats) == 24
    return mats


C1_MATS: list[np.ndarray] = _generate_c1()
_C1_INDEX: dict[bytes, int] = {fingerprint(u): i for i, u in enumerate(C1_MATS)}
C1_IDENTITY: int = _C1_INDEX[fingerprint(I2)]


def c1_index_of(u: np.ndarray) -> int:
    return _C1_INDEX[fingerprint(u)]


def c1_compose(second: int, first: int) -> int:
    """Index of the element 'apply first, then second'."""
    return _C1_COMPOSE[second, first]


def c1_inverse(g: int) -> int:
    return int(_C1_INVERSE[g])


_C1_COMPOSE = np.zeros((24, 24), dtype=np.int8)
for _a in range(24):
    for _b in range(24):
        _C1_COMPOSE[_a, _b] = c1_index_of(C1_MATS[_a] @ C1_MATS[_b])
_C1_INVERSE = np.zeros(24, dtype=np.int8)
for _a in range(24):
    _C1_INVERSE[_a] = c1_index_of(C1_MATS[_a].conj().T)


def _pauli_conjugation_tables():
    """For each element g and Pauli p: g p g^dag = sign * p'."""
    new_code = np.zeros((24, 4), dtype=np.int8)
    sign = np.ones((24, 4), dtype=np.int8)
    for g in range(24):
        u = C1_MATS[g]
        for p in range(4):
            img = u @ PAULI_1Q[PAULI_CODES[p]] @ u.conj().T
            for p2 in range(4):
                target = PAULI_1Q[PAULI_CODES[p2]]
                if np.allclose(img, target, atol=1e-9):
                    new_code[g, p], sign[g, p] = p2, 1
                    break
                if np.allclose(img, -target, atol=1e-9):
                    new_code[g, p], sign[g, p] = p2, -1
                    break
            else:
                raise AssertionError("non-Clifford conjugation")
    return new_code, sign


C1_PAULI_MAP, C1_PAULI_SIGN = _pauli_conjugation_tables()

# Pauli code <-> (x, z) bits: I=(0,0) X=(1,0) Y=(1,1) Z=(0,1)
_CODE_TO_XZ = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=np.uint8)
_XZ_TO_CODE = np.zeros((2, 2), dtype=np.int8)
for _c, (_x, _z) in enumerate(_CODE_TO_XZ):
    _XZ_TO_CODE[_x, _z] = _c


def _tableau_tables():
    """Per-element symplectic 2x2 bit action plus sign flags indexed by
    the (x, z) code of the input Pauli (code = 2*x + z)."""
    bits = np.zeros((24, 2, 2), dtype=np.uint8)   # [g][out(x=0,z=1)][in(x=0,z=1)]
    flip = np.zeros((24, 4), dtype=np.uint8)      # [g][2*x + z]
    for g in range(24):
        for p_in, (x, z) in ((1, (1, 0)), (3, (0, 1))):
            p_out = C1_PAULI_MAP[g, p_in]
            ox, oz = _CODE_TO_XZ[p_out]
            col = 0 if (x, z) == (1, 0) else 1
            bits[g, 0, col] = ox
            bits[g, 1, col] = oz
        for x in (0, 1):
            for z in (0, 1):
                p_in = _XZ_TO_CODE[x, z]
                flip[g, 2 * x + z] = 1 if C1_PAULI_SIGN[g, p_in] < 0 else 0
    return bits, flip


C1_BITS, C1_FLIP = _tableau_tables()


@dataclass(frozen=True)
class NativeC1:
    """rz(lam) followed by a physical u1q(theta, phi) pulse."""

    lam: float
    theta: float
    phi: float

    @property
    def pulse_kind(self) -> str:
        if abs(self.theta) < 1e-12:
            return "none"
        return "pi/2" if abs(self.theta - math.pi / 2) < 1e-9 else "pi"


def _decompose_c1() -> list[NativeC1]:
    thetas = (0.0, math.pi / 2, math.pi)
    phis = tuple(k * math.pi / 4 for k in range(8))
    lams = tuple(k * math.pi / 2 for k in range(4))
    out: list[NativeC1] = []
    for g in range(24):
        target = fingerprint(C1_MATS[g])
        found = None
        for th in thetas:
            for ph in phis if th > 0 else (0.0,):
                for lam in lams:
                    u = u1q_matrix(th, ph) @ rz_matrix(lam)
                    if fingerprint(u) == target:
                        found = NativeC1(lam, th, ph)
                        break
                if found:
                    break
            if found:
                break
        assert found is not None, f"no native form for element {g}"
        out.append(found)
    return out


C1_NATIVE: list[NativeC1] = _decompose_c1()


def c1_pulse_audit() -> tuple[float, float]:
    """Mean (pi/2, pi) physical pulse counts per group element."""
    half = sum(1 for n in C1_NATIVE if n.pulse_kind == "pi/2")
    full = sum(1 for n in C1_NATIVE if n.pulse_kind == "pi")
    return half / 24.0, full / 24.0


@lru_cache(maxsize=4096)
def u1q_clifford_index(theta: float, phi: float) -> int | None:
    try:
        return _C1_INDEX.get(fingerprint(u1q_matrix(theta, phi)))
    except Exception:
        return None


@lru_cache(maxsize=256)
def rz_clifford_index(theta: float) -> int | None:
    return _C1_INDEX.get(fingerprint(rz_matrix(theta)))


# Frequently used element indices.
C1_H = c1_index_of(H_MAT)
C1_S = c1_index_of(S_MAT)
C1_SDG = c1_index_of(S_MAT.conj().T)
C1_X = c1_index_of(PX)
C1_Y = c1_index_of(PY)
C1_Z = c1_index_of(PZ)
V_MAT = 0.5 * (I2 - 1j * (PX + PY + PZ))   # 120 deg about (1,1,1): X->Y->Z->X
C1_V = c1_index_of(V_MAT)
C1_V2 = c1_index_of(V_MAT @ V_MAT)
# X/Y basis-change helpers: map X->Z and Y->Z respectively
C1_X_TO_Z = c1_index_of(H_MAT)
C1_Y_TO_Z = c1_index_of(H_MAT @ S_MAT.conj().T)

PAULI_C1 = {"I": C1_IDENTITY, "X": C1_X, "Y": C1_Y, "Z": C1_Z}


# --------------------------------------------------------------------------
# two-qubit group
# --------------------------------------------------------------------------

CLASS_SIZES = (576, 5184, 5184, 576)
C2_ORDER = sum(CLASS_SIZES)
CLASS_RZZ_COUNT = (0, 1, 2, 3)


def _kron(a: int, b: int) -> np.ndarray:
    return np.kron(C1_MATS[a], C1_MATS[b])


CZ_MAT = np.diag([1, 1, 1, -1]).astype(complex)
SWAP_MAT = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)
# entangler representatives; E2 is a double two-qubit interaction (DCX-like)
E_MATS = (
    np.eye(4, dtype=complex),
    CZ_MAT,
    np.kron(I2, H_MAT) @ CZ_MAT @ np.kron(H_MAT, H_MAT) @ CZ_MAT @ np.kron(H_MAT, I2),
    SWAP_MAT,
)

# native gate templates realizing each entangler via ZZ(pi/2):
#   CZ = (Sdg x Sdg) . ZZ90  (up to phase)
# Templates are lists of layers applied left-to-right in circuit order:
# ("locals", g1, g2) or ("rzz",).
_CZ_LAYERS = [("rzz",), ("locals", C1_SDG, C1_SDG)]
_E_TEMPLATES: tuple[tuple, ...] = (
    (),
    tuple(_CZ_LAYERS),
    tuple(
        [("locals", C1_H, 0)]
        + _CZ_LAYERS
        + [("locals", C1_H, C1_H)]
        + _CZ_LAYERS
        + [("locals", 0, C1_H)]
    ),
    tuple(
        [("locals", 0, C1_H)]
        + _CZ_LAYERS
        + [("locals", C1_H, C1_H)]
        + _CZ_LAYERS
        + [("locals", C1_H, C1_H)]
        + _CZ_LAYERS
        + [("locals", 0, C1_H)]
    ),
)


def _fix_template_identity():
    # template layers reference element indices; 0 above must be the identity
    fixed = []
    for tpl in _E_TEMPLATES:
        layers = []
        for layer in tpl:
            if layer[0] == "locals":
                g1 = layer[1] if layer[1] != 0 else C1_IDENTITY
                g2 = layer[2] if layer[2] != 0 else C1_IDENTITY
                layers.append(("locals", g1, g2))
            else:
                layers.append(layer)
        fixed.append(tuple(layers))
    return tuple(fixed)


E_TEMPLATES = _fix_template_identity()

_V_POW = (C1_IDENTITY, C1_V, C1_V2)


def c2_tuple_of_index(idx: int) -> tuple[int, int, int, int, int]:
    """(cls, a1, a2, g1, g2); g's are 0 for classes 0 and 3."""
    if not 0 <= idx < C2_ORDER:
        raise ValueError(f"two-qubit Clifford index {idx} out of range")
    if idx < 576:
        return (0, idx // 24, idx % 24, 0, 0)
    idx -= 576
    if idx < 5184:
        g2 = idx % 3
        g1 = (idx // 3) % 3
        rest = idx // 9
        return (1, rest // 24, rest % 24, g1, g2)
    idx -= 5184
    if idx < 5184:
        g2 = idx % 3
        g1 = (idx // 3) % 3
        rest = idx // 9
        return (2, rest // 24, rest % 24, g1, g2)
    idx -= 5184
    return (3, idx // 24, idx % 24, 0, 0)


def c2_index_of_tuple(cls: int, a1: int, a2: int, g1: int = 0, g2: int = 0) -> int:
    if cls == 0:
        return a1 * 24 + a2
    if cls == 1:
        return 576 + ((a1 * 24 + a2) * 3 + g1) * 3 + g2
    if cls == 2:
        return 576 + 5184 + ((a1 * 24 + a2) * 3 + g1) * 3 + g2
    return 576 + 2 * 5184 + a1 * 24 + a2


def c2_matrix(idx: int) -> np.ndarray:
    cls, a1, a2, g1, g2 = c2_tuple_of_index(idx)
    pre = _kron(_V_POW[g1], _V_POW[g2]) if cls in (1, 2) else np.eye(4, dtype=complex)
    return _kron(a1, a2) @ E_MATS[cls] @ pre


@lru_cache(maxsize=1)
def _c2_index_table() -> dict[bytes, int]:
    table: dict[bytes, int] = {}
    for idx in range(C2_ORDER):
        table[fingerprint(c2_matrix(idx))] = idx
    assert len(table) == C2_ORDER, "two-qubit enumeration is not free"
    return table


def c2_index_of(u: np.ndarray) -> int:
    return _c2_index_table()[fingerprint(u)]


def c2_inverse(idx: int) -> int:
    return c2_index_of(c2_matrix(idx).conj().T)


def c2_compose(second: int, first: int) -> int:
    return c2_index_of(c2_matrix(second) @ c2_matrix(first))


def c2_rzz_count(idx: int) -> int:
    return CLASS_RZZ_COUNT[c2_tuple_of_index(idx)[0]]


def sample_c2(rng: np.random.Generator) -> int:
    return int(rng.integers(C2_ORDER))


def c2_layers(idx: int) -> list[tuple]:
    """Circuit-order layers realizing the element with native gates.

    Layers: ("locals", g1, g2) single-qubit Cliffords on the pair, or
    ("rzz",) one ZZ(pi/2).  Adjacent local layers are merged.
    """
    cls, a1, a2, g1, g2 = c2_tuple_of_index(idx)
    layers: list[tuple] = []
    if cls in (1, 2):
        layers.append(("locals", _V_POW[g1], _V_POW[g2]))
    layers.extend(E_TEMPLATES[cls])
    layers.append(("locals", a1, a2))
    # merge adjacent local layers (compose: later gate after earlier one)
    merged: list[tuple] = []
    for layer in layers:
        if layer[0] == "locals" and merged and merged[-1][0] == "locals":
            prev = merged.pop()
            merged.append(
                ("locals", c1_compose(layer[1], prev[1]), c1_compose(layer[2], prev[2]))
            )
        else:
            merged.append(layer)
    out = [
        layer
        for layer in merged
        if layer[0] == "rzz" or (layer[1] != C1_IDENTITY or layer[2] != C1_IDENTITY)
    ]
    return out


def c2_layers_rzz_count(layers: list[tuple]) -> int:
    return sum(1 for l in layers if l[0] == "rzz")


# --------------------------------------------------------------------------
# Pauli propagation helpers (used by stabilizer tracking)
# --------------------------------------------------------------------------


def conjugate_pauli_c1(gate: int, code: int) -> tuple[int, int]:
    """Return (new_code, sign) for g P g^dag with codes in I,X,Y,Z = 0..3."""
    return int(C1_PAULI_MAP[gate, code]), int(C1_PAULI_SIGN[gate, code])


def conjugate_xz_rzz(x1: int, z1: int, x2: int, z2: int) -> tuple[int, int, int, int, int]:
    """Conjugate a two-qubit Pauli (bit form) by ZZ(pi/2).

    Returns (x1, z1', x2, z2', sign) with sign in {+1, -1}.
    """
    t = x1 ^ x2
    flip = t & ((x1 & z1) ^ (x2 & z2))
    return x1, z1 ^ t, x2, z2 ^ t, -1 if flip else 1
