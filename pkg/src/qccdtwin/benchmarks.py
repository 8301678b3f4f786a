"""Benchmark circuit families: generation, tracking, and experiment runners.

Each generator returns TrackedCircuit objects whose metadata suffices to
score shots (target bitstrings for RB, stabilizer bookkeeping for the random
Clifford + MCMR system benchmark, preparation bases for cycle benchmarking,
initial states for mirrored random circuits).  Runners execute circuits
through the engine and reduce shot records into DecayDataset points for the
estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import circuit as cir
from . import noise as nz
from .cliffords import (
    C1_IDENTITY,
    C1_PAULI_MAP,
    C1_PAULI_SIGN,
    C1_X,
    C1_X_TO_Z,
    C1_Y_TO_Z,
    C1_H,
    C1_Z,
    PAULI_C1,
    c1_compose,
    c1_inverse,
    c2_compose,
    c2_index_of_tuple,
    c2_inverse,
    c2_layers,
    c2_layers_rzz_count,
    conjugate_xz_rzz,
    sample_c2,
)
from .engine import LEAK, CompiledCircuit, compile_circuit, run_many
from .errors import OddDepth
from .statevector import haar_1q, u1q_params_of
from .timing import TimingTable
from .trap import TrapState, build_layout, default_initial_state

FAMILIES = (
    "rb1q",
    "rb2q",
    "cb2q",
    "transport_rb",
    "mcmr_crosstalk",
    "qirb",
    "mirror_rcs",
    "workload",
)


@dataclass
class BenchmarkSpec:
    family: str
    lengths: tuple[int, ...] = ()
    circuits_per_length: int = 10
    shots_per_circuit: int = 100
    n_qubits: int = 16
    seed: int = 0
    # family-specific knobs
    n_pairs: int = 8
    k_groups: tuple[int, ...] = (1, 2, 4, 8)
    n_m_values: tuple[int, ...] = (0, 8, 16)
    density: float = 1.0
    pairing: str = "random"            # workloads: random | nn2d
    targets: tuple[int, ...] = ()      # mcmr targets (empty: sweep 0..15)
    simultaneous: bool = False         # mcmr: 8-target mode
    n_connectivities: int = 100        # mirror RCS

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.lengths and list(self.lengths) != sorted(self.lengths):
            raise ValueError("lengths must be ascending")
        if self.circuits_per_length <= 0 or self.shots_per_circuit <= 0:
            raise ValueError("counts must be positive")


@dataclass
class TrackedCircuit:
    circuit: cir.Circuit
    meta: dict = field(default_factory=dict)


@dataclass
class DecayPoint:
    length: float
    group: str
    circuit: int
    successes: int = 0
    trials: int = 0
    leaked: int = 0
    shots: int = 0
    extra: dict = field(default_factory=dict)

    def as_json_dict(self) -> dict:
        return {
            "length": self.length,
            "group": self.group,
            "circuit": self.circuit,
            "successes": self.successes,
            "trials": self.trials,
            "leaked": self.leaked,
            "shots": self.shots,
            "extra": self.extra,
        }


@dataclass
class DecayDataset:
    family: str
    points: list[DecayPoint] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def groups(self) -> list[str]:
        return sorted({p.group for p in self.points})

    def select(self, group: Optional[str] = None) -> list[DecayPoint]:
        return [p for p in self.points if group is None or p.group == group]

    def as_json_dict(self) -> dict:
        return {
            "family": self.family,
            "meta": self.meta,
            "points": [p.as_json_dict() for p in self.points],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DecayDataset":
        ds = cls(d["family"], meta=d.get("meta", {}))
        for e in d["points"]:
            ds.points.append(
                DecayPoint(
                    e["length"],
                    e["group"],
                    e["circuit"],
                    e["successes"],
                    e["trials"],
                    e["leaked"],
                    e["shots"],
                    e.get("extra", {}),
                )
            )
        return ds


def _rng_for(spec: BenchmarkSpec, *key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=spec.seed, spawn_key=tuple(key)))


# --------------------------------------------------------------------------
# single-qubit RB
# --------------------------------------------------------------------------


def gen_rb1q(spec: BenchmarkSpec) -> list[TrackedCircuit]:
    """Simultaneous distinct Clifford sequences on the zone qubits, closed by
    the composed inverse with a random bit-flip."""
    out = []
    n = spec.n_qubits
    for li, length in enumerate(spec.lengths):
        for ci in range(spec.circuits_per_length):
            rng = _rng_for(spec, li, ci)
            c = cir.Circuit(n)
            totals = [C1_IDENTITY] * n
            for _ in range(length):
                for q in range(n):
                    g = int(rng.integers(24))
                    totals[q] = c1_compose(g, totals[q])
                    c.add(cir.c1(q, g))
            targets = []
            for q in range(n):
                inv = c1_inverse(totals[q])
                flip = int(rng.integers(2))
                if flip:
                    inv = c1_compose(C1_X, inv)
                c.add(cir.c1(q, inv))
                targets.append(flip)
            for q in range(n):
                c.add(cir.measure(q, mode=cir.MEASURE_TERNARY))
            out.append(
                TrackedCircuit(c, {"length": length, "circuit": ci, "targets": targets})
            )
    return out


def score_rb1q(spec: BenchmarkSpec, tracked, records) -> DecayDataset:
    ds = DecayDataset("rb1q", meta={"n_qubits": spec.n_qubits})
    for tc, recs in zip(tracked, records):
        per_qubit = {q: [0, 0, 0] for q in range(spec.n_qubits)}  # succ, nonleak, leak
        for rec in recs:
            vals = rec.by_qubit()
            for q in range(spec.n_qubits):
                v = vals[q][-1]
                if v == LEAK:
                    per_qubit[q][2] += 1
                else:
                    per_qubit[q][1] += 1
                    if v == tc.meta["targets"][q]:
                        per_qubit[q][0] += 1
        for q, (s, t, l) in per_qubit.items():
            ds.points.append(
                DecayPoint(
                    tc.meta["length"],
                    f"q{q}",
                    tc.meta["circuit"],
                    s,
                    t,
                    l,
                    len(recs),
                )
            )
    return ds


# --------------------------------------------------------------------------
# two-qubit RB
# --------------------------------------------------------------------------


def _emit_c2(c: cir.Circuit, qa: int, qb: int, idx: int) -> None:
    for layer in c2_layers(idx):
        if layer[0] == "rzz":
            c.add(cir.rzz(qa, qb, math.pi / 2))
        else:
            if layer[1] != C1_IDENTITY:
                c.add(cir.c1(qa, layer[1]))
            if layer[2] != C1_IDENTITY:
                c.add(cir.c1(qb, layer[2]))


_PAULI2_FLIPS = {
    (0, 0): c2_index_of_tuple(0, C1_IDENTITY, C1_IDENTITY),
    (0, 1): c2_index_of_tuple(0, C1_IDENTITY, C1_X),
    (1, 0): c2_index_of_tuple(0, C1_X, C1_IDENTITY),
    (1, 1): c2_index_of_tuple(0, C1_X, C1_X),
}


def gen_rb2q(spec: BenchmarkSpec) -> list[TrackedCircuit]:
    """Simultaneous two-qubit Clifford sequences on zone partner pairs."""
    out = []
    pairs = [(2 * i, 2 * i + 1) for i in range(spec.n_pairs)]
    n = 2 * spec.n_pairs
    for li, length in enumerate(spec.lengths):
        for ci in range(spec.circuits_per_length):
            rng = _rng_for(spec, li, ci)
            c = cir.Circuit(n)
            totals = {p: c2_index_of_tuple(0, C1_IDENTITY, C1_IDENTITY) for p in pairs}
            rzz_count = 0
            for _ in range(length):
                for p in pairs:
                    idx = sample_c2(rng)
                    rzz_count += c2_layers_rzz_count(c2_layers(idx))
                    totals[p] = c2_compose(idx, totals[p])
                    _emit_c2(c, p[0], p[1], idx)
            targets = {}
            for p in pairs:
                inv = c2_inverse(totals[p])
                bits = (int(rng.integers(2)), int(rng.integers(2)))
                inv = c2_compose(_PAULI2_FLIPS[bits], inv)
                _emit_c2(c, p[0], p[1], inv)
                targets[p] = bits
            for q in range(n):
                c.add(cir.measure(q, mode=cir.MEASURE_TERNARY))
            out.append(
                TrackedCircuit(
                    c,
                    {
                        "length": length,
                        "circuit": ci,
                        "targets": {f"{a},{b}": v for (a, b), v in targets.items()},
                        "rzz_count": rzz_count,
                        "n_cliffords": length * len(pairs),
                    },
                )
            )
    return out


def score_rb2q(spec: BenchmarkSpec, tracked, records) -> DecayDataset:
    ds = DecayDataset("rb2q", meta={"n_pairs": spec.n_pairs})
    pairs = [(2 * i, 2 * i + 1) for i in range(spec.n_pairs)]
    for tc, recs in zip(tracked, records):
        per_pair = {p: [0, 0, 0] for p in pairs}
        for rec in recs:
            vals = rec.by_qubit()
            for p in pairs:
                va, vb = vals[p[0]][-1], vals[p[1]][-1]
                if va == LEAK or vb == LEAK:
                    per_pair[p][2] += 1
                else:
                    per_pair[p][1] += 1
                    if (va, vb) == tuple(tc.meta["targets"][f"{p[0]},{p[1]}"]):
                        per_pair[p][0] += 1
        for p, (s, t, l) in per_pair.items():
            ds.points.append(
                DecayPoint(
                    tc.meta["length"],
                    f"pair{p[0]}-{p[1]}",
                    tc.meta["circuit"],
                    s,
                    t,
                    l,
                    len(recs),
                )
            )
    return ds


def rzz_per_clifford_audit(spec: BenchmarkSpec, n_samples: int = 10000) -> float:
    rng = _rng_for(spec, 999)
    total = 0
    for _ in range(n_samples):
        total += c2_layers_rzz_count(c2_layers(sample_c2(rng)))
    return total / n_samples


# --------------------------------------------------------------------------
# two-qubit cycle benchmarking
# --------------------------------------------------------------------------

CB_PREPS = ("00", "01", "10", "11", "++", "+-", "-+", "--")


def _prep_gates(state_char: str) -> list[int]:
    if state_char == "0":
        return []
    if state_char == "1":
        return [C1_X]
    if state_char == "+":
        return [C1_H]
    if state_char == "-":
        return [C1_X, C1_H]
    raise ValueError(state_char)


def gen_cb2q(spec: BenchmarkSpec) -> list[TrackedCircuit]:
    """Pauli-twirled repetitions of ZZ(pi/2) on tensor-product eigenstates.

    One circuit per (preparation, length); twirling frames are drawn fresh
    every shot by the engine.  Lengths must be multiples of 4 so the ideal
    circuit is the identity map.
    """
    out = []
    pairs = [(2 * i, 2 * i + 1) for i in range(spec.n_pairs)]
    n = 2 * spec.n_pairs
    for length in spec.lengths:
        if length % 4:
            raise ValueError("cycle benchmarking lengths must be multiples of 4")
        for prep in CB_PREPS:
            c = cir.Circuit(n)
            for qa, qb in pairs:
                for g in _prep_gates(prep[0]):
                    c.add(cir.c1(qa, g))
                for g in _prep_gates(prep[1]):
                    c.add(cir.c1(qb, g))
            for _ in range(length):
                for qa, qb in pairs:
                    c.add(cir.rzz(qa, qb, math.pi / 2, twirled=True))
            for qa, qb in pairs:
                if prep[0] in "+-":
                    c.add(cir.c1(qa, C1_H))
                if prep[1] in "+-":
                    c.add(cir.c1(qb, C1_H))
            for q in range(n):
                c.add(cir.measure(q, mode=cir.MEASURE_TERNARY))
            out.append(TrackedCircuit(c, {"length": length, "prep": prep}))
    return out


def score_cb2q(spec: BenchmarkSpec, tracked, records) -> DecayDataset:
    """Aggregate two-bit outcome counts per (prep, length) over all pairs."""
    ds = DecayDataset("cb2q", meta={"n_pairs": spec.n_pairs})
    pairs = [(2 * i, 2 * i + 1) for i in range(spec.n_pairs)]
    for tc, recs in zip(tracked, records):
        counts = {"00": 0, "01": 0, "10": 0, "11": 0}
        leaked = 0
        trials = 0
        for rec in recs:
            vals = rec.by_qubit()
            for qa, qb in pairs:
                va, vb = vals[qa][-1], vals[qb][-1]
                if va == LEAK or vb == LEAK:
                    leaked += 1
                else:
                    trials += 1
                    counts[f"{va}{vb}"] += 1
        ds.points.append(
            DecayPoint(
                tc.meta["length"],
                tc.meta["prep"],
                0,
                trials=trials,
                leaked=leaked,
                shots=len(recs) * len(pairs),
                extra={"counts": counts},
            )
        )
    return ds


# --------------------------------------------------------------------------
# transport-interleaved single-qubit RB
# --------------------------------------------------------------------------


def gen_transport_rb(spec: BenchmarkSpec) -> list[TrackedCircuit]:
    """Random full-register pairing rounds (zero-angle ZZ: transport and
    cooling only) with a tracked Clifford every k rounds per group."""
    out = []
    n = spec.n_qubits
    groups = {q: spec.k_groups[q % len(spec.k_groups)] for q in range(n)}
    for li, length in enumerate(spec.lengths):
        for k in spec.k_groups:
            if length % k:
                raise ValueError(f"length {length} not a multiple of group {k}")
        for ci in range(spec.circuits_per_length):
            rng = _rng_for(spec, li, ci)
            c = cir.Circuit(n)
            totals = [C1_IDENTITY] * n
            for r in range(length):
                if r > 0:
                    for q in range(n):
                        if r % groups[q] == 0:
                            g = int(rng.integers(24))
                            totals[q] = c1_compose(g, totals[q])
                            c.add(cir.c1(q, g))
                perm = rng.permutation(n)
                for j in range(n // 2):
                    c.add(cir.rzz(int(perm[2 * j]), int(perm[2 * j + 1]), 0.0))
            for q in range(n):
                g = int(rng.integers(24))
                totals[q] = c1_compose(g, totals[q])
                c.add(cir.c1(q, g))
            targets = []
            for q in range(n):
                inv = c1_inverse(totals[q])
                flip = int(rng.integers(2))
                if flip:
                    inv = c1_compose(C1_X, inv)
                c.add(cir.c1(q, inv))
                targets.append(flip)
            for q in range(n):
                c.add(cir.measure(q, mode=cir.MEASURE_TERNARY))
            out.append(
                TrackedCircuit(
                    c,
                    {
                        "length": length,
                        "circuit": ci,
                        "targets": targets,
                        "groups": [groups[q] for q in range(n)],
                    },
                )
            )
    return out


def score_transport_rb(spec: BenchmarkSpec, tracked, records) -> DecayDataset:
    ds = DecayDataset("transport_rb", meta={"k_groups": list(spec.k_groups)})
    n = spec.n_qubits
    for tc, recs in zip(tracked, records):
        by_group = {k: [0, 0, 0] for k in spec.k_groups}
        for rec in recs:
            vals = rec.by_qubit()
            for q in range(n):
                k = tc.meta["groups"][q]
                v = vals[q][-1]
                if v == LEAK:
                    by_group[k][2] += 1
                else:
                    by_group[k][1] += 1
                    if v == tc.meta["targets"][q]:
                        by_group[k][0] += 1
        group_sizes = {k: tc.meta["groups"].count(k) for k in spec.k_groups}
        for k, (s, t, l) in by_group.items():
            ds.points.append(
                DecayPoint(
                    tc.meta["length"],
                    f"k{k}",
                    tc.meta["circuit"],
                    s,
                    t,
                    l,
                    len(recs) * group_sizes[k],
                )
            )
    return ds


# --------------------------------------------------------------------------
# MCMR crosstalk
# --------------------------------------------------------------------------


def mcmr_local_spectators(target: int, n_zones: int = 8) -> set[int]:
    """Laser-adjacent spectators: zone partner plus the vertically adjacent
    zone's occupants (zone qubits are 2z and 2z+1)."""
    z = target // 2
    half = n_zones // 2
    vz = z + half if z < half else z - half
    return {target ^ 1, 2 * vz, 2 * vz + 1} - {target}


def gen_mcmr_crosstalk(spec: BenchmarkSpec) -> list[TrackedCircuit]:
    """Repeated measure-and-reset on targets with spectators prepared in
    computational states, closed by a ternary readout of everyone."""
    out = []
    n = spec.n_qubits
    targets = spec.targets or tuple(range(16))
    target_sets = [tuple(targets)] if spec.simultaneous else [(t,) for t in targets]
    for tset in target_sets:
        for variant in (0, 1):
            prep = {
                q: (q + variant) % 2 for q in range(n) if q not in tset
            }
            for m in spec.lengths:
                c = cir.Circuit(n)
                for q, b in prep.items():
                    if b:
                        c.add(cir.c1(q, C1_X))
                for _ in range(m):
                    for t in tset:
                        c.add(cir.measure(t))
                        c.add(cir.reset(t))
                for q in range(n):
                    c.add(cir.measure(q, mode=cir.MEASURE_TERNARY))
                out.append(
                    TrackedCircuit(
                        c,
                        {
                            "targets": list(tset),
                            "variant": variant,
                            "m": m,
                            "prep": prep,
                        },
                    )
                )
    return out


def score_mcmr(spec: BenchmarkSpec, tracked, records) -> DecayDataset:
    """Spectator flip/leak counts per (m, class, prepared state)."""
    ds = DecayDataset(
        "mcmr_crosstalk", meta={"simultaneous": spec.simultaneous, "n_qubits": spec.n_qubits}
    )
    for ti, (tc, recs) in enumerate(zip(tracked, records)):
        tset = set(tc.meta["targets"])
        local = set()
        for t in tset:
            local |= mcmr_local_spectators(t)
        local -= tset
        tally: dict[tuple[str, int], list[int]] = {}
        for rec in recs:
            vals = rec.by_qubit()
            for q, b in tc.meta["prep"].items():
                q = int(q)
                v = vals[q][-1]
                if q in local:
                    cls = "local"
                elif q < 16:
                    cls = "zone"
                else:
                    cls = "ring"
                key = (cls, b)
                t = tally.setdefault(key, [0, 0, 0])  # intact, flip, leak
                if v == LEAK:
                    t[2] += 1
                elif v == b:
                    t[0] += 1
                else:
                    t[1] += 1
        for (cls, b), (ok, flip, leak) in tally.items():
            ds.points.append(
                DecayPoint(
                    tc.meta["m"],
                    f"{cls}|{b}",
                    ti,
                    successes=ok,
                    trials=ok + flip,
                    leaked=leak,
                    shots=ok + flip + leak,
                    extra={"flips": flip},
                )
            )
    return ds


# --------------------------------------------------------------------------
# random Clifford layers with MCMR (system benchmark)
# --------------------------------------------------------------------------


def _biased_iz(rng: np.random.Generator) -> int:
    # pauli code: 0 = I (prob 1/4), 3 = Z (prob 3/4)
    return 3 if rng.random() < 0.75 else 0


def gen_qirb(spec: BenchmarkSpec) -> list[TrackedCircuit]:
    """Random Clifford layers with mid-circuit measure-and-reset, scored by
    propagating a biased random stabilizer through the circuit."""
    out = []
    n = spec.n_qubits
    for n_m in spec.n_m_values:
        for li, length in enumerate(spec.lengths):
            for ci in range(spec.circuits_per_length):
                rng = _rng_for(spec, n_m, li, ci)
                out.append(_gen_qirb_one(spec, rng, n, n_m, length, ci))
    return out


def _gen_qirb_one(spec, rng, n, n_m, length, ci) -> TrackedCircuit:
    c = cir.Circuit(n)
    stab = np.array([_biased_iz(rng) for _ in range(n)], dtype=np.int64)
    while not stab.any():
        stab = np.array([_biased_iz(rng) for _ in range(n)], dtype=np.int64)
    sign = 1
    counted: list[bool] = []   # one entry per mid-circuit measurement, in order
    for _layer in range(length):
        gates = rng.integers(0, 24, size=n)
        for q in range(n):
            c.add(cir.c1(q, int(gates[q])))
            sign *= int(C1_PAULI_SIGN[gates[q], stab[q]])
            stab[q] = C1_PAULI_MAP[gates[q], stab[q]]
        perm = rng.permutation(n)
        code_xz = ((0, 0), (1, 0), (1, 1), (0, 1))
        xz_code = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}
        for j in range(n // 2):
            a, b = int(perm[2 * j]), int(perm[2 * j + 1])
            c.add(cir.rzz(a, b, math.pi / 2, twirled=True))
            xa, za = code_xz[stab[a]]
            xb, zb = code_xz[stab[b]]
            xa, za, xb, zb, s = conjugate_xz_rzz(xa, za, xb, zb)
            stab[a] = xz_code[(xa, za)]
            stab[b] = xz_code[(xb, zb)]
            sign *= s
        if n_m:
            mq = rng.choice(n, size=n_m, replace=False)
            for q in sorted(int(x) for x in mq):
                corr = None
                if stab[q] == 1:
                    corr = C1_X_TO_Z
                elif stab[q] == 2:
                    corr = C1_Y_TO_Z
                if corr is not None:
                    c.add(cir.c1(q, corr))
                    sign *= int(C1_PAULI_SIGN[corr, stab[q]])
                    stab[q] = C1_PAULI_MAP[corr, stab[q]]
                counted.append((q, bool(stab[q] == 3)))
                c.add(cir.measure(q))
                c.add(cir.reset(q))
                stab[q] = _biased_iz(rng)
    final_counted = []
    for q in range(n):
        corr = None
        if stab[q] == 1:
            corr = C1_X_TO_Z
        elif stab[q] == 2:
            corr = C1_Y_TO_Z
        if corr is not None:
            c.add(cir.c1(q, corr))
            sign *= int(C1_PAULI_SIGN[corr, stab[q]])
            stab[q] = C1_PAULI_MAP[corr, stab[q]]
        final_counted.append(stab[q] == 3)
    for q in range(n):
        c.add(cir.measure(q))
    return TrackedCircuit(
        c,
        {
            "length": length,
            "circuit": ci,
            "n_m": n_m,
            "sign": sign,
            "counted_mid": counted,
            "counted_final": final_counted,
        },
    )


def qirb_success(tc: TrackedCircuit, rec) -> bool:
    """Measured-bit parity (counted measurements only) vs the tracked sign.

    Mid-circuit outcomes are matched per qubit in occurrence order, which is
    stable under the scheduler's batch reordering across qubits.
    """
    n = tc.circuit.n_qubits
    counted_mid = tc.meta["counted_mid"]
    n_mid = len(counted_mid)
    outcomes = rec.outcomes
    if len(outcomes) != n_mid + n:
        raise ValueError("unexpected measurement record length")
    mids: dict[int, list[int]] = {}
    for q, v in outcomes[:n_mid]:
        mids.setdefault(q, []).append(v)
    parity = 0
    for q, counted in counted_mid:
        v = mids[q].pop(0)
        if counted:
            parity ^= 1 if v == 1 or v == LEAK else 0
    by_q = {q: v for q, v in outcomes[n_mid:]}
    for q in range(n):
        if tc.meta["counted_final"][q]:
            v = by_q[q]
            parity ^= 1 if v == 1 or v == LEAK else 0
    want = 0 if tc.meta["sign"] > 0 else 1
    return parity == want


def score_qirb(spec: BenchmarkSpec, tracked, records) -> DecayDataset:
    ds = DecayDataset("qirb", meta={"n_qubits": spec.n_qubits})
    for tc, recs in zip(tracked, records):
        succ = sum(1 for rec in recs if qirb_success(tc, rec))
        ds.points.append(
            DecayPoint(
                tc.meta["length"],
                f"nm{tc.meta['n_m']}",
                tc.meta["circuit"],
                succ,
                len(recs),
                0,
                len(recs),
            )
        )
    return ds


# --------------------------------------------------------------------------
# mirrored random circuit sampling
# --------------------------------------------------------------------------


def _random_matchings(n: int, k: int, rng: np.random.Generator) -> list[list[tuple[int, int]]]:
    """k edge-disjoint perfect matchings (union of matchings kept simple)."""
    if n % 2:
        raise ValueError("need an even number of qubits")
    for _attempt in range(200):
        used: set[tuple[int, int]] = set()
        matchings = []
        ok = True
        for _ in range(k):
            perm = rng.permutation(n)
            m = []
            for j in range(n // 2):
                a, b = int(perm[2 * j]), int(perm[2 * j + 1])
                e = (min(a, b), max(a, b))
                if e in used:
                    ok = False
                    break
                used.add(e)
                m.append((a, b))
            if not ok:
                break
            matchings.append(m)
        if ok:
            return matchings
    raise RuntimeError("could not build edge-disjoint matchings")


def gen_mirror_rcs(spec: BenchmarkSpec) -> list[TrackedCircuit]:
    """Mirrored random circuits: forward Haar-1q/ZZ layers then the inverted
    layers with per-shot randomized compiling, starting from a random
    computational basis state."""
    out = []
    n = spec.n_qubits
    for li, depth in enumerate(spec.lengths):
        if depth % 2:
            raise OddDepth(f"mirrored depth {depth} must be even")
        d = depth // 2
        for ci in range(spec.circuits_per_length):
            rng = _rng_for(spec, li, ci)
            basis = [int(b) for b in rng.integers(0, 2, size=n)]
            matchings = _random_matchings(n, d, rng)
            haar_layers = [[haar_1q(rng) for _ in range(n)] for _ in range(d)]
            c = cir.Circuit(n)
            for q, b in enumerate(basis):
                if b:
                    c.add(cir.c1(q, C1_X))
            for j in range(d):
                for q in range(n):
                    lam, th, ph = u1q_params_of(haar_layers[j][q])
                    if abs(lam) > 1e-12:
                        c.add(cir.rz(q, lam))
                    if abs(th) > 1e-12:
                        c.add(cir.u1q(q, th, ph))
                for a, b2 in matchings[j]:
                    c.add(cir.rzz(a, b2, math.pi / 2, twirled=True))
            for j in reversed(range(d)):
                # ZZ(-pi/2) = ZZ(pi/2) . (Z x Z) up to phase; Z is software
                for a, b2 in matchings[j]:
                    c.add(cir.rzz(a, b2, math.pi / 2, twirled=True))
                    c.add(cir.rz(a, math.pi))
                    c.add(cir.rz(b2, math.pi))
                for q in range(n):
                    lam, th, ph = u1q_params_of(haar_layers[j][q].conj().T)
                    if abs(lam) > 1e-12:
                        c.add(cir.rz(q, lam))
                    if abs(th) > 1e-12:
                        c.add(cir.u1q(q, th, ph))
            for q in range(n):
                c.add(cir.measure(q))
            out.append(
                TrackedCircuit(c, {"depth": depth, "circuit": ci, "basis": basis})
            )
    return out


def score_mirror_rcs(spec: BenchmarkSpec, tracked, records) -> DecayDataset:
    ds = DecayDataset("mirror_rcs", meta={"n_qubits": spec.n_qubits})
    for tc, recs in zip(tracked, records):
        succ = 0
        for rec in recs:
            vals = rec.by_qubit()
            if all(
                vals[q][-1] == tc.meta["basis"][q] for q in range(spec.n_qubits)
            ):
                succ += 1
        ds.points.append(
            DecayPoint(
                tc.meta["depth"], "rcs", tc.meta["circuit"], succ, len(recs), 0, len(recs)
            )
        )
    return ds


# --------------------------------------------------------------------------
# profiling workloads
# --------------------------------------------------------------------------


def _nn2d_pairs(rows: int, cols: int, config: int) -> list[tuple[int, int]]:
    pairs = []
    if config in (0, 1):
        for r in range(rows):
            start = (r + config) % 2
            for ccol in range(start, cols - 1, 2):
                pairs.append((r * cols + ccol, r * cols + ccol + 1))
    else:
        for ccol in range(cols):
            start = (ccol + config) % 2
            for r in range(start, rows - 1, 2):
                pairs.append((r * cols + ccol, (r + 1) * cols + ccol))
    return pairs


def _near_square(n: int) -> tuple[int, int]:
    r = int(math.floor(math.sqrt(n)))
    while n % r:
        r -= 1
    return r, n // r


def gen_workload(
    mode: str, n: int, layers: int, seed: int = 0, density: float = 1.0
) -> cir.Circuit:
    """Profiling programs: prep layer, gate layers, final measurement."""
    rng = np.random.default_rng(seed)
    c = cir.Circuit(n)
    for q in range(n):
        c.add(cir.prep(q))
    if mode == "nn2d":
        rows, cols = _near_square(n)
    for layer in range(layers):
        for q in range(n):
            c.add(cir.c1(q, int(rng.integers(24))))
        if mode in ("dense", "half_dense"):
            d = 1.0 if mode == "dense" else 0.5
            d = density if mode == "dense" and density != 1.0 else d
            n_pairs = int(math.floor(d * n / 2))
            perm = rng.permutation(n)
            for j in range(n_pairs):
                c.add(cir.rzz(int(perm[2 * j]), int(perm[2 * j + 1]), math.pi / 2))
        elif mode == "nn2d":
            for a, b in _nn2d_pairs(rows, cols, layer % 4):
                c.add(cir.rzz(a, b, math.pi / 2))
        else:
            raise ValueError(f"unknown workload mode {mode!r}")
    for q in range(n):
        c.add(cir.measure(q))
    return c


# --------------------------------------------------------------------------
# generic runner
# --------------------------------------------------------------------------

_GENERATORS = {
    "rb1q": gen_rb1q,
    "rb2q": gen_rb2q,
    "cb2q": gen_cb2q,
    "transport_rb": gen_transport_rb,
    "mcmr_crosstalk": gen_mcmr_crosstalk,
    "qirb": gen_qirb,
    "mirror_rcs": gen_mirror_rcs,
}

_SCORERS = {
    "rb1q": score_rb1q,
    "rb2q": score_rb2q,
    "cb2q": score_cb2q,
    "transport_rb": score_transport_rb,
    "mcmr_crosstalk": score_mcmr,
    "qirb": score_qirb,
    "mirror_rcs": score_mirror_rcs,
}

DEFAULT_SPECS = {
    "rb1q": dict(lengths=(10, 1000, 2000), circuits_per_length=10, shots_per_circuit=100,
                 n_qubits=16),
    "rb2q": dict(lengths=(4, 150, 400), circuits_per_length=10, shots_per_circuit=100,
                 n_pairs=8, n_qubits=16),
    "cb2q": dict(lengths=(4, 100, 200, 400), circuits_per_length=1, shots_per_circuit=200,
                 n_pairs=8, n_qubits=16),
    "transport_rb": dict(lengths=(8, 64, 128), circuits_per_length=10,
                         shots_per_circuit=100, n_qubits=98),
    "mcmr_crosstalk": dict(lengths=(8, 32, 64), circuits_per_length=1,
                           shots_per_circuit=100, n_qubits=98),
    "qirb": dict(lengths=(2, 4, 6, 8), circuits_per_length=10, shots_per_circuit=100,
                 n_qubits=98, n_m_values=(0, 8, 16)),
    "mirror_rcs": dict(lengths=(2, 4, 8), circuits_per_length=50, shots_per_circuit=200,
                       n_qubits=6),
}


def default_spec(family: str, seed: int = 0, **overrides) -> BenchmarkSpec:
    kw = dict(DEFAULT_SPECS[family])
    kw.update(overrides)
    return BenchmarkSpec(family=family, seed=seed, **kw)


def generate(spec: BenchmarkSpec) -> list[TrackedCircuit]:
    return _GENERATORS[spec.family](spec)


def run_benchmark(
    spec: BenchmarkSpec,
    params: nz.NoiseParams,
    seed: Optional[int] = None,
    workers: int = 1,
    state: Optional[TrapState] = None,
    table: Optional[TimingTable] = None,
    tracked: Optional[list[TrackedCircuit]] = None,
) -> DecayDataset:
    """Generate, simulate, and score one benchmark family."""
    if tracked is None:
        tracked = generate(spec)
    if state is None and spec.family != "mirror_rcs":
        layout = build_layout()
        state = default_initial_state(layout, max(spec.n_qubits, 98))
    seed = spec.seed if seed is None else seed
    records = []
    for i, tc in enumerate(tracked):
        comp = compile_circuit(tc.circuit, state=state, table=table)
        recs = run_many(comp, params, seed + 7919 * (i + 1), spec.shots_per_circuit, workers)
        records.append(recs)
    return _SCORERS[spec.family](spec, tracked, records)
