"""Noisy execution of scheduled circuits.

A circuit is compiled once (allocation, slicing, transport planning, timing)
and then replayed per shot with fresh noise sampling.  Clifford circuits run
on the leak-aware tableau with whole-layer vectorized updates; circuits with
gates outside the Clifford set run on the dense statevector backend (no
transport model there: gate-level noise only).

Noise dispatch points:

* prep/reset: preparation flip;
* each single-qubit Clifford: depolarizing + leak channel;
* each ZZ(pi/2): the shaped two-qubit channel (leak split over operands);
  zero-angle ZZ is transport-only and carries no gate noise;
* accumulated transport memory per qubit, flushed into a dephasing+leak
  channel at the next gate or measurement on that qubit;
* measurement: assignment errors, ternary leak detection, measurement
  crosstalk on spectators (suppressed for zone spectators under the
  protected scheme).
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
    c1_compose,
    conjugate_xz_rzz,
    rz_clifford_index,
    u1q_clifford_index,
)
from .errors import NonCliffordGate
from .scheduler import (
    CoolingEvent,
    GateDispatch,
    MemoryTick,
    QubitMap,
    SlicePlan,
    allocate,
    build_slices,
    plan_circuit,
)
from .statevector import StateVector, haar_1q
from .tableau import LeakyTableau
from .timing import TimingTable, layer_time
from .trap import TransportOp, TrapState, build_layout, default_initial_state

LEAK = 2


@dataclass
class ShotRecord:
    shot: int
    outcomes: list[tuple[int, int]] = field(default_factory=list)  # (virt qubit, 0/1/2)
    labels: dict[str, int] = field(default_factory=dict)
    leaked: tuple[int, ...] = ()
    duration_us: float = 0.0

    def by_qubit(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for q, v in self.outcomes:
            out.setdefault(q, []).append(v)
        return out

    def as_json_dict(self) -> dict:
        return {
            "shot": self.shot,
            "outcomes": [[q, v] for q, v in self.outcomes],
            "labels": dict(self.labels),
            "leaked": list(self.leaked),
            "duration_us": self.duration_us,
        }


# ------------------------------------------------------------------ compile


@dataclass
class _C1Layer:
    qubits: np.ndarray
    gates: np.ndarray
    condition: Optional[tuple[str, int]] = None


@dataclass
class _RzzLayer:
    pairs: list[tuple[int, int]]
    quarter_turns: int          # theta in units of pi/2, mod 4
    twirled: bool
    noisy: bool
    condition: Optional[tuple[str, int]] = None


@dataclass
class _Measure:
    qubit: int
    ternary: bool
    protected: bool
    mcmr: bool
    label: Optional[str]
    local_spect: np.ndarray
    zone_spect: np.ndarray
    ring_spect: np.ndarray
    condition: Optional[tuple[str, int]] = None


@dataclass
class _Prep:
    qubit: int
    condition: Optional[tuple[str, int]] = None


@dataclass
class _Memory:
    units: float
    qubits: np.ndarray


@dataclass
class CompiledCircuit:
    circuit: cir.Circuit
    qmap: QubitMap
    backend: str                      # "tableau" | "statevector"
    items: list = field(default_factory=list)
    duration_us: float = 0.0
    n_batches_per_slice: list[int] = field(default_factory=list)
    plans: list[SlicePlan] = field(default_factory=list)


def _c1_of_instr(instr: cir.Instr) -> int:
    if instr.op == cir.C1:
        return instr.gate_index
    if instr.op == cir.U1Q:
        idx = u1q_clifford_index(*instr.params)
    elif instr.op == cir.RZ:
        idx = rz_clifford_index(instr.params[0])
    else:
        raise NonCliffordGate(str(instr))
    if idx is None:
        raise NonCliffordGate(f"{instr} is outside the Clifford set")
    return idx


def compile_circuit(
    circ: cir.Circuit,
    state: Optional[TrapState] = None,
    table: Optional[TimingTable] = None,
    statevector: Optional[bool] = None,
) -> CompiledCircuit:
    """Allocate, slice, plan transport, and lower to executable items."""
    if statevector is None:
        statevector = circ.has_non_clifford
    if statevector:
        return _compile_statevector(circ)
    if state is None:
        state = default_initial_state(build_layout(), max(circ.n_qubits, 1))
    table = table or TimingTable()
    final, slices, plans, qmap = plan_circuit(state, circ)
    phys2virt = {p: v for v, p in enumerate(qmap.virt_to_phys)}
    comp = CompiledCircuit(circ, qmap, "tableau", plans=plans)
    comp.n_batches_per_slice = [p.n_batches for p in plans]
    comp.duration_us = sum(layer_time(p, table).total_us for p in plans)

    def virt(p: int) -> int:
        return phys2virt[p]

    def virt_arr(ps) -> np.ndarray:
        return np.array([phys2virt[p] for p in ps if p in phys2virt], dtype=np.int64)

    pend_c1: list[tuple[int, int]] = []

    def flush_c1():
        if pend_c1:
            qs = np.array([q for q, _ in pend_c1], dtype=np.int64)
            gs = np.array([g for _, g in pend_c1], dtype=np.int64)
            comp.items.append(_C1Layer(qs, gs))
            pend_c1.clear()

    pend_rzz: list[_RzzLayer] = []

    def flush_rzz():
        if pend_rzz:
            comp.items.extend(pend_rzz)
            pend_rzz.clear()

    for plan in plans:
        for item in plan.items:
            if isinstance(item, (TransportOp, CoolingEvent)):
                continue
            if isinstance(item, MemoryTick):
                flush_c1()
                flush_rzz()
                comp.items.append(_Memory(item.units, virt_arr(item.qubits)))
                continue
            d: GateDispatch = item
            instr = d.instr
            if instr.op in (cir.C1, cir.U1Q, cir.RZ):
                flush_rzz()
                q = virt(d.phys[0])
                if instr.condition is not None:
                    flush_c1()
                    comp.items.append(
                        _C1Layer(
                            np.array([q]), np.array([_c1_of_instr(instr)]), instr.condition
                        )
                    )
                    continue
                if any(q == qq for qq, _ in pend_c1):
                    flush_c1()
                pend_c1.append((q, _c1_of_instr(instr)))
            elif instr.op == cir.RZZ:
                flush_c1()
                theta = instr.params[0]
                k = int(round(theta / (math.pi / 2))) % 4
                if abs(theta - k * math.pi / 2) > 1e-9 and abs(theta - (k - 4) * math.pi / 2) > 1e-9:
                    raise NonCliffordGate(f"rzz angle {theta} not a quarter turn")
                pair = (virt(d.phys[0]), virt(d.phys[1]))
                lay = _RzzLayer([pair], k, instr.twirled, noisy=k != 0, condition=instr.condition)
                if (
                    pend_rzz
                    and instr.condition is None
                    and pend_rzz[-1].condition is None
                    and pend_rzz[-1].quarter_turns == k
                    and pend_rzz[-1].twirled == instr.twirled
                    and all(
                        q not in (a, b) for a, b in pend_rzz[-1].pairs for q in pair
                    )
                ):
                    pend_rzz[-1].pairs.append(pair)
                else:
                    flush_rzz()
                    pend_rzz.append(lay)
            elif instr.op == cir.MEASURE:
                flush_c1()
                flush_rzz()
                comp.items.append(
                    _Measure(
                        virt(d.phys[0]),
                        instr.mode == cir.MEASURE_TERNARY,
                        d.protected,
                        d.mcmr,
                        instr.label,
                        virt_arr(d.local_spectators),
                        virt_arr(d.zone_spectators),
                        virt_arr(d.ring_spectators),
                        instr.condition,
                    )
                )
            elif instr.op in (cir.PREP, cir.RESET):
                flush_c1()
                flush_rzz()
                comp.items.append(_Prep(virt(d.phys[0]), instr.condition))
        flush_c1()
        flush_rzz()
    return comp


def _compile_statevector(circ: cir.Circuit) -> CompiledCircuit:
    qmap = QubitMap(tuple(range(circ.n_qubits)))
    comp = CompiledCircuit(circ, qmap, "statevector")
    slices = build_slices(circ)
    for sl in slices:
        for instr in sl.instrs:
            mcmr = instr.op == cir.MEASURE and instr.qubits[0] in sl.mcmr
            comp.items.append(("sv", instr, mcmr))
    return comp


# -------------------------------------------------------------------- runner


class _NoiseContext:
    def __init__(self, params: nz.NoiseParams):
        self.params = params
        self.zero = params.is_zero
        self.oneq = nz.oneq_gate_channel(params)
        self.twoq = nz.twoq_gate_channel(params)
        self.prep_flip = params.spam_prep_share * params.spam.p0_given_1
        self.meas10 = params.spam.p1_given_0 - self.prep_flip
        self.meas01 = params.spam.p0_given_1 - self.prep_flip
        t = params.ternary
        self.ter10 = max(0.0, t.p1_given_0 - self.prep_flip)
        self.ter01 = max(0.0, t.p0_given_1 - self.prep_flip)
        self.terL = (t.pL_given_0, t.pL_given_1)
        self.xtalk = {
            "local": params.mcmr_local,
            "zone": params.mcmr_zone,
            "ring": params.mcmr_ring,
        }
        self.xtalk_sym = {
            k: nz.crosstalk_channel(r, params.p_el) for k, r in self.xtalk.items()
        }


def _sample_channel_hits(probs_err: float, n: int, rng) -> np.ndarray:
    """Indices (into n trials) that suffer an error, for small probabilities."""
    if probs_err <= 0.0 or n == 0:
        return np.empty(0, dtype=np.int64)
    u = rng.random(n)
    return np.nonzero(u < probs_err)[0]


class _TableauShot:
    def __init__(self, comp: CompiledCircuit, ctx: _NoiseContext, rng: np.random.Generator):
        self.comp = comp
        self.ctx = ctx
        self.rng = rng
        self.tab = LeakyTableau(comp.circuit.n_qubits)
        self.pending_memory = np.zeros(comp.circuit.n_qubits)
        self.record = ShotRecord(0)

    # ------------------------------------------------------------- noise bits

    def _apply_pauli_label(self, qubits, label: str) -> None:
        for q, ch in zip(qubits, label):
            if ch == "X":
                self.tab.apply_pauli(q, 1, 0)
            elif ch == "Y":
                self.tab.apply_pauli(q, 1, 1)
            elif ch == "Z":
                self.tab.apply_pauli(q, 0, 1)

    def _gate_noise(self, ch: nz.PauliChannel, qubits) -> None:
        ev = nz.sample_error(ch, self.rng)
        if ev.kind == "pauli":
            self._apply_pauli_label(qubits, ev.label)
        elif ev.kind == "leak":
            self.tab.leak(qubits[ev.qubit_offset % len(qubits)], self.rng)

    def _flush_memory(self, qubits) -> None:
        if self.ctx.zero:
            return
        mem = self.ctx.params.memory
        qubits = np.atleast_1d(qubits)
        if mem == nz.MemoryParams():
            self.pending_memory[qubits] = 0.0
            return
        mask = self.pending_memory[qubits] > 0
        qs = qubits[mask]
        if qs.size == 0:
            return
        ns = self.pending_memory[qs]
        self.pending_memory[qs] = 0.0
        live = ~self.tab.leaked[qs]
        qs, ns = qs[live], ns[live]
        if qs.size == 0:
            return
        eps = mem.a + mem.b * ns + mem.c * ns * ns
        leak = mem.b_leak * ns
        z_prob = 1.5 * np.clip(eps - leak, 0.0, None)
        u = self.rng.random(qs.size)
        for q in qs[u < leak]:
            self.tab.leak(int(q), self.rng)
        z_hits = qs[(u >= leak) & (u < leak + z_prob)]
        if z_hits.size:
            self.tab.apply_pauli_mask(np.empty(0, dtype=np.int64), z_hits)

    # ---------------------------------------------------------------- items

    def _cond_ok(self, condition) -> bool:
        if condition is None:
            return True
        label, want = condition
        return self.record.labels.get(label) == want

    def run(self) -> ShotRecord:
        for item in self.comp.items:
            if isinstance(item, _C1Layer):
                self._do_c1_layer(item)
            elif isinstance(item, _RzzLayer):
                self._do_rzz_layer(item)
            elif isinstance(item, _Measure):
                self._do_measure(item)
            elif isinstance(item, _Prep):
                self._do_prep(item)
            elif isinstance(item, _Memory):
                self.pending_memory[item.qubits] += item.units
            else:
                raise AssertionError(f"unknown item {item}")
        self.record.leaked = tuple(int(q) for q in np.nonzero(self.tab.leaked)[0])
        self.record.duration_us = self.comp.duration_us
        return self.record

    def _do_c1_layer(self, item: _C1Layer) -> None:
        if not self._cond_ok(item.condition):
            return
        self._flush_memory(item.qubits)
        gates = np.full(self.comp.circuit.n_qubits, -1, dtype=np.int64)
        gates[item.qubits] = item.gates
        self.tab.apply_c1_layer(gates)
        if not self.ctx.zero and self.ctx.oneq.error_prob + self.ctx.oneq.leak_prob > 0:
            hits = _sample_channel_hits(
                self.ctx.oneq.error_prob + self.ctx.oneq.leak_prob, len(item.qubits), self.rng
            )
            for h in hits:
                q = int(item.qubits[h])
                cond = nz.PauliChannel(
                    self.ctx.oneq.labels,
                    np.concatenate(
                        [[0.0], np.asarray(self.ctx.oneq.probs[1:])]
                    )
                    / (self.ctx.oneq.error_prob + self.ctx.oneq.leak_prob),
                    self.ctx.oneq.leak_prob
                    / (self.ctx.oneq.error_prob + self.ctx.oneq.leak_prob),
                )
                ev = nz.sample_error(cond, self.rng)
                if ev.kind == "pauli":
                    self._apply_pauli_label((q,), ev.label)
                else:
                    self.tab.leak(q, self.rng)

    def _do_rzz_layer(self, item: _RzzLayer) -> None:
        if not self._cond_ok(item.condition):
            return
        qubits = np.array([q for p in item.pairs for q in p], dtype=np.int64)
        self._flush_memory(qubits)
        if item.quarter_turns == 0:
            return
        leaked = self.tab.leaked
        clean: list[tuple[int, int]] = []
        for a, b in item.pairs:
            if leaked[a] or leaked[b]:
                # interaction with a leaked ion scrambles the partner
                for q in (a, b):
                    if not leaked[q]:
                        px, pz = int(self.rng.integers(2)), int(self.rng.integers(2))
                        self.tab.apply_pauli(q, px, pz)
            else:
                clean.append((a, b))
        if not clean:
            return
        frames = None
        if item.twirled:
            frames = self.rng.integers(0, 4, size=(len(clean), 2))
            self._apply_frame(clean, frames)
        k = item.quarter_turns
        if k in (1, 3):
            self.tab.apply_rzz_layer(clean)
        if k in (2, 3):
            self.tab.apply_zz_pauli_layer(clean)
        if frames is not None:
            self._apply_frame_conjugated(clean, frames, k)
        if not self.ctx.zero:
            err = self.ctx.twoq.error_prob + self.ctx.twoq.leak_prob
            hits = _sample_channel_hits(err, len(clean), self.rng)
            for h in hits:
                pair = clean[h]
                cond = nz.PauliChannel(
                    self.ctx.twoq.labels,
                    np.concatenate([[0.0], np.asarray(self.ctx.twoq.probs[1:])]) / err,
                    self.ctx.twoq.leak_prob / err,
                )
                ev = nz.sample_error(cond, self.rng)
                if ev.kind == "pauli":
                    self._apply_pauli_label(pair, ev.label)
                else:
                    self.tab.leak(pair[ev.qubit_offset], self.rng)

    _CODE_XZ = ((0, 0), (1, 0), (1, 1), (0, 1))  # I X Y Z

    def _frame_bits(self, pairs, frames, k: Optional[int] = None):
        xs, zs = [], []
        for (a, b), (fa, fb) in zip(pairs, frames):
            xa, za = self._CODE_XZ[fa]
            xb, zb = self._CODE_XZ[fb]
            if k is not None and k in (1, 3):
                xa, za, xb, zb, _sign = conjugate_xz_rzz(xa, za, xb, zb)
            if xa:
                xs.append(a)
            if za:
                zs.append(a)
            if xb:
                xs.append(b)
            if zb:
                zs.append(b)
        return np.asarray(xs, dtype=np.int64), np.asarray(zs, dtype=np.int64)

    def _apply_frame(self, pairs, frames) -> None:
        xs, zs = self._frame_bits(pairs, frames)
        self.tab.apply_pauli_mask(xs, zs)

    def _apply_frame_conjugated(self, pairs, frames, k: int) -> None:
        xs, zs = self._frame_bits(pairs, frames, k)
        self.tab.apply_pauli_mask(xs, zs)

    def _do_prep(self, item: _Prep) -> None:
        if not self._cond_ok(item.condition):
            return
        q = item.qubit
        self.pending_memory[q] = 0.0
        self.tab.unleak_to_zero(q, self.rng)
        if not self.ctx.zero and self.rng.random() < self.ctx.prep_flip:
            self.tab.apply_pauli(q, 1, 0)

    def _do_measure(self, item: _Measure) -> None:
        if not self._cond_ok(item.condition):
            return
        q = item.qubit
        self._flush_memory(np.array([q]))
        ctx = self.ctx
        if self.tab.leaked[q]:
            outcome = LEAK if item.ternary else 1
        else:
            bit = self.tab.measure_z(q, self.rng)
            outcome = bit
            if not ctx.zero:
                if item.ternary:
                    if self.rng.random() < ctx.terL[bit]:
                        self.tab.leak(q, self.rng)
                        outcome = LEAK
                    else:
                        flip = ctx.ter10 if bit == 0 else ctx.ter01
                        if self.rng.random() < flip:
                            outcome = 1 - bit
                else:
                    flip = ctx.meas10 if bit == 0 else ctx.meas01
                    if self.rng.random() < flip:
                        outcome = 1 - bit
        self.record.outcomes.append((q, outcome))
        if item.label is not None:
            self.record.labels[item.label] = outcome
        if not ctx.zero:
            self._crosstalk(item)
        if item.mcmr:
            self.pending_memory[q] = 0.0
            self.tab.unleak_to_zero(q, self.rng)
            if not ctx.zero and self.rng.random() < ctx.prep_flip:
                self.tab.apply_pauli(q, 1, 0)

    def _crosstalk(self, item: _Measure) -> None:
        groups = [("ring", item.ring_spect)]
        if not item.protected:
            groups.append(("local", item.local_spect))
            groups.append(("zone", item.zone_spect))
        for cls, spect in groups:
            if len(spect) == 0:
                continue
            rates = self.ctx.xtalk[cls]
            total = (
                rates.p1_given_0
                + rates.p0_given_1
                + rates.pL_given_0
                + rates.pL_given_1
            )
            if total <= 0:
                continue
            # One uniform per spectator against an upper bound on the event
            # probability; hits get a rescaled uniform so each branch sees
            # its exact conditional rates.  Exact conditional rates apply to
            # deterministic-Z spectators, the symmetric Pauli approximation
            # to spectators in superposition.
            p_max = min(1.0, total + float(self.ctx.xtalk_sym[cls].probs[3]))
            hits = _sample_channel_hits(p_max, len(spect), self.rng)
            for h in hits:
                self._crosstalk_one(int(spect[h]), cls, p_max)

    def _crosstalk_one(self, q: int, cls: str, p_max: float) -> None:
        if self.tab.leaked[q]:
            return
        rates = self.ctx.xtalk[cls]
        rng = self.rng
        u = rng.random() * p_max
        if self.tab.is_deterministic_z(q):
            bit = self.tab.measure_z(q, rng)
            flip = rates.p1_given_0 if bit == 0 else rates.p0_given_1
            lk = rates.pL_given_0 if bit == 0 else rates.pL_given_1
            if u < lk:
                self.tab.leak(q, rng)
            elif u < lk + flip:
                self.tab.apply_pauli(q, 1, 0)
        else:
            ch = self.ctx.xtalk_sym[cls]
            p_x, p_z, lk = float(ch.probs[1]), float(ch.probs[3]), ch.leak_prob
            if u < lk:
                self.tab.leak(q, rng)
            elif u < lk + p_x:
                self.tab.apply_pauli(q, 1, 0)
            elif u < lk + p_x + p_z:
                self.tab.apply_pauli(q, 0, 1)


class _StatevectorShot:
    def __init__(self, comp: CompiledCircuit, ctx: _NoiseContext, rng, cap: int = 14):
        self.comp = comp
        self.ctx = ctx
        self.rng = rng
        self.sv = StateVector(comp.circuit.n_qubits, cap=cap)
        self.record = ShotRecord(0)

    def run(self) -> ShotRecord:
        for kind, instr, mcmr in self.comp.items:
            self._do_instr(instr, mcmr)
        self.record.leaked = tuple(int(q) for q in np.nonzero(self.sv.leaked)[0])
        return self.record

    def _cond_ok(self, condition) -> bool:
        if condition is None:
            return True
        label, want = condition
        return self.record.labels.get(label) == want

    def _do_instr(self, instr: cir.Instr, mcmr: bool) -> None:
        if not self._cond_ok(instr.condition):
            return
        ctx = self.ctx
        rng = self.rng
        sv = self.sv
        if instr.op in (cir.PREP, cir.RESET):
            q = instr.qubits[0]
            sv.unleak_to_zero(q, rng)
            if not ctx.zero and rng.random() < ctx.prep_flip:
                sv.apply_pauli(q, "X")
        elif instr.op == cir.C1:
            q = instr.qubits[0]
            from .cliffords import C1_MATS

            sv.apply_1q(q, C1_MATS[instr.gate_index])
            self._oneq_noise(q)
        elif instr.op == cir.U1Q:
            q = instr.qubits[0]
            sv.apply_u1q(q, *instr.params)
            self._oneq_noise(q)
        elif instr.op == cir.RZ:
            sv.apply_rz(instr.qubits[0], instr.params[0])
        elif instr.op == cir.RZZ:
            self._do_rzz(instr)
        elif instr.op == cir.MEASURE:
            self._do_measure(instr, mcmr)

    def _oneq_noise(self, q: int) -> None:
        ctx = self.ctx
        if ctx.zero or self.sv.leaked[q]:
            return
        ev = nz.sample_error(ctx.oneq, self.rng)
        if ev.kind == "pauli":
            self.sv.apply_pauli(q, ev.label)
        elif ev.kind == "leak":
            self.sv.leak(q, self.rng)

    def _do_rzz(self, instr: cir.Instr) -> None:
        a, b = instr.qubits
        sv = self.sv
        rng = self.rng
        theta = instr.params[0]
        if sv.leaked[a] or sv.leaked[b]:
            if abs(theta) > 1e-12:
                for q in (a, b):
                    if not sv.leaked[q]:
                        sv.apply_pauli(q, "IXYZ"[int(rng.integers(4))])
            return
        frames = None
        if instr.twirled:
            frames = rng.integers(0, 4, size=2)
            sv.apply_pauli(a, "IXYZ"[frames[0]])
            sv.apply_pauli(b, "IXYZ"[frames[1]])
        sv.apply_rzz(a, b, theta)
        if frames is not None:
            code = ((0, 0), (1, 0), (1, 1), (0, 1))
            xa, za = code[frames[0]]
            xb, zb = code[frames[1]]
            k = int(round(theta / (math.pi / 2))) % 4
            if k in (1, 3):
                xa, za, xb, zb, _ = conjugate_xz_rzz(xa, za, xb, zb)
            lbl = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
            sv.apply_pauli(a, lbl[(xa, za)])
            sv.apply_pauli(b, lbl[(xb, zb)])
        if not self.ctx.zero and abs(theta) > 1e-12:
            ev = nz.sample_error(self.ctx.twoq, rng)
            if ev.kind == "pauli":
                for q, ch in zip((a, b), ev.label):
                    if ch != "I":
                        sv.apply_pauli(q, ch)
            elif ev.kind == "leak":
                sv.leak((a, b)[ev.qubit_offset], rng)

    def _do_measure(self, instr: cir.Instr, mcmr: bool) -> None:
        q = instr.qubits[0]
        sv = self.sv
        rng = self.rng
        ctx = self.ctx
        ternary = instr.mode == cir.MEASURE_TERNARY
        if sv.leaked[q]:
            outcome = LEAK if ternary else 1
        else:
            bit = sv.measure_z(q, rng)
            outcome = bit
            if not ctx.zero:
                if ternary:
                    if rng.random() < ctx.terL[bit]:
                        sv.leak(q, rng)
                        outcome = LEAK
                    else:
                        flip = ctx.ter10 if bit == 0 else ctx.ter01
                        if rng.random() < flip:
                            outcome = 1 - bit
                else:
                    flip = ctx.meas10 if bit == 0 else ctx.meas01
                    if rng.random() < flip:
                        outcome = 1 - bit
        self.record.outcomes.append((q, outcome))
        if instr.label is not None:
            self.record.labels[instr.label] = outcome
        if mcmr:
            sv.unleak_to_zero(q, rng)
            if not ctx.zero and rng.random() < ctx.prep_flip:
                sv.apply_pauli(q, "X")


def shot_rng(master_seed: int, shot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=(shot,)))


def run_shot(
    comp: CompiledCircuit, params: nz.NoiseParams, master_seed: int, shot: int
) -> ShotRecord:
    ctx = _NoiseContext(params)
    rng = shot_rng(master_seed, shot)
    if comp.backend == "tableau":
        runner = _TableauShot(comp, ctx, rng)
    else:
        runner = _StatevectorShot(comp, ctx, rng)
    rec = runner.run()
    rec.shot = shot
    return rec


def run_many(
    comp: CompiledCircuit,
    params: nz.NoiseParams,
    master_seed: int,
    shots: int,
    workers: int = 1,
) -> list[ShotRecord]:
    ctx = _NoiseContext(params)
    if workers <= 1:
        out = []
        for s in range(shots):
            rng = shot_rng(master_seed, s)
            runner = (
                _TableauShot(comp, ctx, rng)
                if comp.backend == "tableau"
                else _StatevectorShot(comp, ctx, rng)
            )
            rec = runner.run()
            rec.shot = s
            out.append(rec)
        return out
    from concurrent.futures import ProcessPoolExecutor

    chunks = [list(range(s, shots, workers)) for s in range(workers)]
    results: dict[int, ShotRecord] = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_run_chunk, comp, params, master_seed, chunk) for chunk in chunks
        ]
        for fut in futures:
            for rec in fut.result():
                results[rec.shot] = rec
    return [results[s] for s in range(shots)]


def _run_chunk(comp, params, master_seed, shot_ids):
    ctx = _NoiseContext(params)
    out = []
    for s in shot_ids:
        rng = shot_rng(master_seed, s)
        runner = (
            _TableauShot(comp, ctx, rng)
            if comp.backend == "tableau"
            else _StatevectorShot(comp, ctx, rng)
        )
        rec = runner.run()
        rec.shot = s
        out.append(rec)
    return out
