"""Lowering of circuits onto the trap: slicing, allocation, transport plans.

A slice is one machine layer: per qubit at most [prep] [1q gates...] then
one of {two-qubit gate, measure}; a reset directly after a measure rides
along as a mid-circuit measure-and-reset.  Slices execute batch by batch:
up to 8 pairs / 16 qubits are sorted from ring storage through the junction
into the operation zones, individual-addressing operations run first, pairs
are combined and cooled, two-qubit gates fire in the gate-capable zones with
a four-ion shift between the two gating rounds, and the batch then retires
toward leg storage while the next batch loads.  Retired crystals drain back
into the ring while the following batch occupies the zones; the final batch
of a slice stays in the zones, which keeps ring occupancy within the slot
count.  Batch sizes are remainder-first so the final batch is full.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from . import circuit as cir
from .errors import CapacityExceeded, SchedulerDeadlock, UnallocatedQubit
from .trap import (
    BOTTOM,
    Kind,
    LEGS,
    OpKind,
    TOP,
    TransportOp,
    TrapState,
    rotate,
)

MAX_BATCH_QUBITS = 16
MAX_BATCH_PAIRS = 8

STAGE_NONE = 0
STAGE_PREP = 1
STAGE_ONEQ = 2
STAGE_DONE = 3

_ONEQ_OPS = (cir.C1, cir.U1Q, cir.RZ)


@dataclass
class Slice:
    index: int
    instrs: list[cir.Instr] = field(default_factory=list)
    mcmr: set[int] = field(default_factory=set)   # measured qubits with reset attached

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [tuple(i.qubits) for i in self.instrs if i.op == cir.RZZ]

    @property
    def measured(self) -> list[int]:
        return [i.qubits[0] for i in self.instrs if i.op == cir.MEASURE]

    @property
    def qubits(self) -> set[int]:
        out: set[int] = set()
        for i in self.instrs:
            out.update(i.qubits)
        return out


def build_slices(circ: cir.Circuit) -> list[Slice]:
    """Greedy as-soon-as-possible slicing preserving per-qubit order."""
    slices: list[Slice] = []
    frontier: dict[int, int] = {}          # qubit -> earliest admissible slice
    stage: dict[int, tuple[int, int]] = {}  # qubit -> (slice, stage reached there)
    last_measure: dict[int, int] = {}       # qubit -> slice of trailing measure
    label_slice: dict[str, int] = {}
    barrier_floor = 0

    def slice_at(k: int) -> Slice:
        while len(slices) <= k:
            slices.append(Slice(len(slices)))
        return slices[k]

    def stage_in(q: int, k: int) -> int:
        s, st = stage.get(q, (-1, STAGE_NONE))
        return st if s == k else STAGE_NONE

    for instr in circ.instructions:
        if instr.op == cir.BARRIER:
            barrier_floor = len(slices)
            continue
        if instr.op == cir.RESET and instr.condition is None:
            q = instr.qubits[0]
            k = last_measure.get(q)
            if k is not None and stage.get(q) == (k, STAGE_DONE) and q not in slice_at(k).mcmr:
                slice_at(k).mcmr.add(q)
                del last_measure[q]
                continue
        candidate = barrier_floor
        if instr.condition is not None:
            lbl = instr.condition[0]
            if lbl not in label_slice:
                raise UnallocatedQubit(f"condition references unknown label {lbl!r}")
            candidate = max(candidate, label_slice[lbl] + 1)
        for q in instr.qubits:
            k = frontier.get(q, 0)
            st = stage_in(q, k)
            if instr.op in (cir.PREP, cir.RESET):
                need = k if st == STAGE_NONE else k + 1
            else:
                need = k if st <= STAGE_ONEQ else k + 1
            candidate = max(candidate, need)
        target = slice_at(candidate)
        target.instrs.append(instr)
        if instr.op in (cir.PREP, cir.RESET):
            new_stage = STAGE_PREP
        elif instr.op in _ONEQ_OPS:
            new_stage = STAGE_ONEQ
        else:
            new_stage = STAGE_DONE
        for q in instr.qubits:
            stage[q] = (candidate, new_stage)
            frontier[q] = candidate if new_stage < STAGE_DONE else candidate + 1
        if instr.op == cir.MEASURE:
            last_measure[instr.qubits[0]] = candidate
            if instr.label:
                label_slice[instr.label] = candidate
    return [s for s in slices if s.instrs]


@dataclass(frozen=True)
class QubitMap:
    virt_to_phys: tuple[int, ...]

    def phys(self, v: int) -> int:
        if not 0 <= v < len(self.virt_to_phys):
            raise UnallocatedQubit(f"virtual qubit {v} not allocated")
        return self.virt_to_phys[v]

    @property
    def n(self) -> int:
        return len(self.virt_to_phys)


def allocate(n: int, state: TrapState) -> QubitMap:
    """Deterministic virtual->physical map preferring zone-resident qubits."""
    zone_qubits: list[int] = []
    for zone in state.zones:
        for c in zone:
            zone_qubits.extend(c.qubits)
    ring_qubits = [q for slot in sorted(state.ring) for q in state.ring[slot].qubits]
    other = [
        q
        for leg in LEGS
        for c in state.cache[leg] + state.leg_storage[leg]
        for q in c.qubits
    ]
    order = zone_qubits + ring_qubits + other
    if n > len(order):
        raise CapacityExceeded(f"{n} virtual qubits > {len(order)} physical")
    return QubitMap(tuple(order[:n]))


# --------------------------------------------------------------------------
# plan items
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GateDispatch:
    instr: cir.Instr
    phys: tuple[int, ...]
    zone: int
    batch: int
    protected: bool = False
    local_spectators: tuple[int, ...] = ()
    zone_spectators: tuple[int, ...] = ()
    ring_spectators: tuple[int, ...] = ()
    mcmr: bool = False


@dataclass(frozen=True)
class CoolingEvent:
    kind: str           # "gsc" | "touchup"
    batch: int


@dataclass(frozen=True)
class MemoryTick:
    units: float
    qubits: tuple[int, ...]


@dataclass
class SlicePlan:
    items: list = field(default_factory=list)
    n_batches: int = 0
    sorted_transport: bool = False

    @property
    def transport_ops(self) -> list[TransportOp]:
        return [i for i in self.items if isinstance(i, TransportOp)]

    def batch_qubit_counts(self) -> list[int]:
        counts: dict[int, set[int]] = {}
        for it in self.items:
            if isinstance(it, GateDispatch):
                counts.setdefault(it.batch, set()).update(it.phys)
        return [len(v) for _, v in sorted(counts.items())]


class SlicePlanner:
    """Plans one slice against a live trap state (mutating it)."""

    def __init__(self, state: TrapState, qmap: QubitMap):
        self.state = state
        self.qmap = qmap
        self.allocated = set(qmap.virt_to_phys)
        self.plan = SlicePlan()
        self.batch = 0

    # -------------------------------------------------------------- utilities

    def _emit(self, item) -> None:
        if isinstance(item, TransportOp):
            self.state.apply(item)
        self.plan.items.append(item)

    def _op(self, kind: OpKind, track: str, **kw) -> None:
        self._emit(TransportOp(kind, track=track, batch=self.batch, **kw))

    # ---------------------------------------------------------------- in-place

    def can_serve_in_place(self, sl: Slice) -> bool:
        st = self.state
        for q in sl.qubits:
            if st.zone_of_qubit(self.qmap.phys(q)) is None:
                return False
        for qa, qb in sl.pairs:
            pa, pb = self.qmap.phys(qa), self.qmap.phys(qb)
            ca, cb = st.crystal_of_qubit(pa), st.crystal_of_qubit(pb)
            if st.zone_of_qubit(pa) != st.zone_of_qubit(pb):
                return False
            if ca.uid != cb.uid and {ca.kind, cb.kind} != {Kind.BY, Kind.YB}:
                return False
        return True

    def plan_in_place(self, sl: Slice) -> None:
        individual = [i for i in sl.instrs if i.op != cir.RZZ]
        needs_split = set()
        for i in individual:
            for q in i.qubits:
                p = self.qmap.phys(q)
                if self.state.crystal_of_qubit(p).kind == Kind.BYYB:
                    needs_split.add(self.state.zone_of_qubit(p))
        for z in sorted(needs_split):
            self._op(OpKind.SPLIT, "zone", zone=z)
        self._dispatch_individual(sl, individual)
        if sl.pairs:
            self._plan_zone_gating([i for i in sl.instrs if i.op == cir.RZZ], sl, restore=True)
        self.plan.n_batches = 1

    # -------------------------------------------------------------- dispatches

    def _dispatch_individual(self, sl: Slice, instrs) -> None:
        measures = [i for i in instrs if i.op == cir.MEASURE]
        protected = self._protected_batch(measures)
        for i in instrs:
            if i.op == cir.MEASURE:
                self._dispatch_measure(i, sl, protected)
            else:
                phys = tuple(self.qmap.phys(q) for q in i.qubits)
                zone = self.state.zone_of_qubit(phys[0])
                self._emit(GateDispatch(i, phys, -1 if zone is None else zone, self.batch))

    def _protected_batch(self, measures) -> bool:
        if not measures:
            return False
        measured = {self.qmap.phys(i.qubits[0]) for i in measures}
        zone_resident: set[int] = set()
        for zone in self.state.zones:
            for c in zone:
                zone_resident.update(c.qubits)
        return measured == zone_resident and len(measured) == MAX_BATCH_QUBITS

    def _dispatch_measure(self, instr: cir.Instr, sl: Slice, protected: bool) -> None:
        p = self.qmap.phys(instr.qubits[0])
        zone = self.state.zone_of_qubit(p)
        local, zonec, ringc = self._spectator_classes(p)
        self._emit(
            GateDispatch(
                instr,
                (p,),
                -1 if zone is None else zone,
                self.batch,
                protected=protected,
                local_spectators=tuple(local),
                zone_spectators=tuple(zonec),
                ring_spectators=tuple(ringc),
                mcmr=instr.qubits[0] in sl.mcmr,
            )
        )

    def _spectator_classes(self, target: int):
        st = self.state
        tz = st.zone_of_qubit(target)
        neighbor = st.layout.vertical_neighbor(tz) if tz is not None else None
        zone_of: dict[int, int] = {}
        for z, zone in enumerate(st.zones):
            for c in zone:
                for q in c.qubits:
                    zone_of[q] = z
        local: list[int] = []
        zonec: list[int] = []
        ringc: list[int] = []
        for p in self.qmap.virt_to_phys:
            if p == target:
                continue
            z = zone_of.get(p)
            if z is None:
                ringc.append(p)
            elif tz is not None and (z == tz or (neighbor is not None and z == neighbor)):
                local.append(p)
            else:
                zonec.append(p)
        return local, zonec, ringc

    # ------------------------------------------------------------ zone gating

    def _plan_zone_gating(self, rzz_instrs, sl: Slice, restore: bool) -> None:
        """Combine, cool, and fire pair gates for pairs already in zones."""
        st = self.state
        layout = st.layout
        pending: dict[int, cir.Instr] = {}
        for i in rzz_instrs:
            pa = self.qmap.phys(i.qubits[0])
            z = st.zone_of_qubit(pa)
            if z is None:
                raise SchedulerDeadlock(f"pair {i.qubits} not loaded into a zone")
            pending[z] = i
        for z in sorted(pending):
            if len(st.zones[z]) == 2:
                self._op(OpKind.COMBINE, "zone", zone=z)
        if pending:
            self._emit(CoolingEvent("gsc", self.batch))
        twoq = set(layout.twoq_zones)
        self._fire_round(pending, twoq)
        shifted_legs: list[int] = []
        if pending:
            for leg in LEGS:
                if any(layout.leg_of_zone(z) == leg for z in pending):
                    self._op(OpKind.FOUR_ION_SHIFT, "zone", leg=leg)
                    shifted_legs.append(leg)
            self._emit(CoolingEvent("touchup", self.batch))
            moved: dict[int, cir.Instr] = {}
            for ins in pending.values():
                pa = self.qmap.phys(ins.qubits[0])
                z = st.zone_of_qubit(pa)
                if z is None:
                    raise SchedulerDeadlock(f"pair {ins.qubits} lost during shift")
                moved[z] = ins
            pending = moved
            self._fire_round(pending, twoq)
            if pending:
                raise SchedulerDeadlock(f"pairs never reached a gate zone: {pending}")
        if restore and shifted_legs:
            for leg in shifted_legs:
                zones = list(layout.zones_of_leg(leg))
                if not st.zones[zones[0]]:
                    self._op(OpKind.FOUR_ION_SHIFT, "zone", leg=leg, backward=True)
            self._emit(CoolingEvent("touchup", self.batch))
            for leg in shifted_legs:
                for z in layout.zones_of_leg(leg):
                    zc = st.zones[z]
                    if len(zc) == 2 and zc[0].kind == Kind.BY and zc[1].kind == Kind.YB:
                        self._op(OpKind.COMBINE, "zone", zone=z)

    def _fire_round(self, pending: dict[int, cir.Instr], twoq: set[int]) -> None:
        st = self.state
        for z in sorted(list(pending)):
            if z not in twoq:
                continue
            ins = pending.pop(z)
            phys = tuple(self.qmap.phys(q) for q in ins.qubits)
            zc = st.zones[z]
            if not (len(zc) == 1 and zc[0].kind == Kind.BYYB and set(zc[0].qubits) == set(phys)):
                raise SchedulerDeadlock(
                    f"pair {phys} not co-located as a four-ion crystal in zone {z}"
                )
            self._emit(GateDispatch(ins, phys, z, self.batch))

    # ---------------------------------------------------------------- sorting

    def plan_sorted(self, sl: Slice) -> None:
        self.plan.sorted_transport = True
        pair_instrs = [i for i in sl.instrs if i.op == cir.RZZ]
        paired = {q for i in pair_instrs for q in i.qubits}
        singles = sorted(
            (q for q in sl.qubits if q not in paired), key=lambda q: self.qmap.phys(q)
        )
        batch_sizes = _batch_sizes(len(pair_instrs), len(singles))
        remaining = list(pair_instrs)
        remaining_singles = list(singles)
        self._evict_slice_zones(sl)
        for bi, (npairs, nsingles) in enumerate(batch_sizes):
            self.batch = bi
            last = bi == len(batch_sizes) - 1
            bpairs, bsingles = self._fill_batch(npairs, nsingles, remaining, remaining_singles)
            self._run_batch(sl, bpairs, bsingles, retire=not last)
        self.batch = len(batch_sizes)
        self._drain_returns()
        self.plan.n_batches = len(batch_sizes)
        if pair_instrs:
            self._emit(MemoryTick(1.0, tuple(sorted(self.qmap.virt_to_phys))))

    def _evict_slice_zones(self, sl: Slice) -> None:
        """Clear every zone hosting a qubit this slice must sort.

        Doing this before the first batch puts those crystals at the bottom
        of the leg stacks, so they drain back into the ring while the first
        batches fetch, and are ring-servable when their own turn comes.
        """
        st = self.state
        slice_phys = {self.qmap.phys(q) for q in sl.qubits}
        for leg in LEGS:
            leg_zones = list(st.layout.zones_of_leg(leg))

            def stuck():
                return [
                    z
                    for z in leg_zones
                    if st.zones[z]
                    and any(q in slice_phys for c in st.zones[z] for q in c.qubits)
                ]

            while stuck():
                self._op(OpKind.SHIFT, "zone", leg=leg)

    def _fill_batch(self, npairs, nsingles, remaining, remaining_singles):
        """Evict stale zone residents, then fetch the batch into the caches.

        Pair selection is dynamic nearest-first over pairs whose crystals are
        currently in the ring; pairs touching zone residents become servable
        after the eviction drain.
        """
        st = self.state
        self._evict(npairs, nsingles)
        self._drain_returns()
        bpairs: list[cir.Instr] = []
        leg_loads = {TOP: 0, BOTTOM: 0}
        while len(bpairs) < npairs:
            servable = [i for i in remaining if self._pair_in_ring(i)]
            if not servable:
                self._free_stuck_qubits(remaining)
                servable = [i for i in remaining if self._pair_in_ring(i)]
            if not servable:
                raise SchedulerDeadlock(
                    "no ring-servable pair while filling a batch; "
                    f"{len(remaining)} pairs outstanding"
                )
            take = min(2, npairs - len(bpairs))
            costed = sorted(
                ((self._pair_cost(i), min(self.qmap.phys(q) for q in i.qubits), i) for i in servable),
                key=lambda t: (t[0], t[1]),
            )
            chosen = [t[2] for t in costed[:take]]
            self._fetch_pair_round(chosen, leg_loads)
            for ins in chosen:
                remaining.remove(ins)
                bpairs.append(ins)
            self._drain_returns()
        bsingles: list[int] = []
        for _ in range(nsingles):
            q = self._next_servable_single(remaining_singles)
            p = self.qmap.phys(q)
            leg = TOP if leg_loads[TOP] <= leg_loads[BOTTOM] else BOTTOM
            self._fetch_crystal(p, leg, "BY")
            leg_loads[leg] += 1
            self._flush_cache_if_full(leg)
            bsingles.append(q)
            self._drain_returns()
        for leg in LEGS:
            if st.cache[leg]:
                self._op(OpKind.GLOBAL_SHIFT, "zone", leg=leg)
        return bpairs, bsingles

    def _pair_in_ring(self, ins) -> bool:
        st = self.state
        return all(
            st.ring_slot_of(st.crystal_of_qubit(self.qmap.phys(q))) is not None
            for q in ins.qubits
        )

    def _next_servable_single(self, remaining_singles: list[int]) -> int:
        """First ring-resident single in qubit-id order, draining as needed."""
        st = self.state
        for attempt in range(3):
            for q in remaining_singles:
                p = self.qmap.phys(q)
                if st.ring_slot_of(st.crystal_of_qubit(p)) is not None:
                    remaining_singles.remove(q)
                    return q
            if attempt == 0:
                self._drain_returns()
            elif attempt == 1:
                self._free_stuck_singles(remaining_singles)
        raise SchedulerDeadlock(f"no ring-servable single among {remaining_singles}")

    def _free_stuck_singles(self, remaining_singles) -> None:
        st = self.state
        stuck_zones = set()
        for q in remaining_singles:
            z = st.zone_of_qubit(self.qmap.phys(q))
            if z is not None:
                stuck_zones.add(z)
        for leg in LEGS:
            leg_zones = list(st.layout.zones_of_leg(leg))
            while any(z in stuck_zones and st.zones[z] for z in leg_zones):
                self._op(OpKind.SHIFT, "zone", leg=leg)
        self._drain_returns()

    def _free_stuck_qubits(self, outstanding) -> None:
        """Evict zones that hold qubits still awaiting sorting, then drain."""
        st = self.state
        stuck_zones = set()
        for ins in outstanding:
            for q in ins.qubits:
                z = st.zone_of_qubit(self.qmap.phys(q))
                if z is not None:
                    stuck_zones.add(z)
        for leg in LEGS:
            leg_zones = list(st.layout.zones_of_leg(leg))
            while any(z in stuck_zones and st.zones[z] for z in leg_zones):
                self._op(OpKind.SHIFT, "zone", leg=leg)
        self._drain_returns()

    def _evict(self, npairs: int, nsingles: int) -> None:
        """Clear zone capacity for the incoming batch (stale residents out)."""
        st = self.state
        loads = {TOP: 0, BOTTOM: 0}
        need_ions = {TOP: 0, BOTTOM: 0}
        k = 0
        while k < npairs:
            if npairs - k >= 2:
                need_ions[TOP] += 4
                need_ions[BOTTOM] += 4
                loads[TOP] += 1
                loads[BOTTOM] += 1
                k += 2
            else:
                leg = TOP if loads[TOP] <= loads[BOTTOM] else BOTTOM
                need_ions[leg] += 4
                loads[leg] += 1
                k += 1
        for _ in range(nsingles):
            leg = TOP if loads[TOP] <= loads[BOTTOM] else BOTTOM
            need_ions[leg] += 2
            loads[leg] += 1
        for leg in LEGS:
            zones = list(st.layout.zones_of_leg(leg))

            def empty_capacity():
                return sum(4 for z in zones if not st.zones[z])

            # partial zones cannot host clean loads; always clear those
            while any(0 < st.zone_ion_count(z) < 4 for z in zones) or (
                empty_capacity() < need_ions[leg] and any(st.zones[z] for z in zones)
            ):
                self._op(OpKind.SHIFT, "zone", leg=leg)
            if empty_capacity() < need_ions[leg]:
                raise SchedulerDeadlock(f"cannot free zone capacity on leg {leg}")

    def _pair_cost(self, ins) -> int:
        st = self.state
        r = st.layout.ring_slots
        pa, pb = (self.qmap.phys(q) for q in ins.qubits)
        ca = st.ring_slot_of(st.crystal_of_qubit(pa))
        cb = st.ring_slot_of(st.crystal_of_qubit(pb))
        best = None
        for first, second in ((ca, cb), (cb, ca)):
            d1 = min(first, r - first)
            s2 = (second - first) % r
            d2 = min(s2, r - s2)
            if best is None or d1 + d2 < best:
                best = d1 + d2
        return best

    def _fetch_pair_round(self, chosen, leg_loads) -> None:
        """Fetch one or two pairs, enumerating exit orders for minimality."""
        pairs_phys = [tuple(self.qmap.phys(q) for q in ins.qubits) for ins in chosen]
        if len(pairs_phys) == 1:
            leg = TOP if leg_loads[TOP] <= leg_loads[BOTTOM] else BOTTOM
            assignments = [(leg,)]
        else:
            assignments = [(TOP, BOTTOM), (BOTTOM, TOP)]
        best = None
        for assign in assignments:
            crystals = []
            for (pa, pb), leg in zip(pairs_phys, assign):
                crystals.append((pa, leg, "BY"))
                crystals.append((pb, leg, "YB"))
            for perm in itertools.permutations(range(len(crystals))):
                ok = all(perm.index(k) < perm.index(k + 1) for k in range(0, len(crystals), 2))
                if not ok:
                    continue
                cost = self._serve_cost([crystals[i][0] for i in perm])
                if best is None or cost < best[0]:
                    best = (cost, [crystals[i] for i in perm])
        assert best is not None
        for p, leg, order in best[1]:
            self._fetch_crystal(p, leg, order)
            if order == "YB":
                leg_loads[leg] += 1
            self._flush_cache_if_full(leg)

    def _serve_cost(self, phys_sequence) -> int:
        st = self.state
        r = st.layout.ring_slots
        slots = {
            p: st.ring_slot_of(st.crystal_of_qubit(p)) for p in phys_sequence
        }
        total = 0
        offset = 0
        for p in phys_sequence:
            s = (slots[p] - offset) % r
            d_cw, d_ccw = s, r - s
            if d_cw <= d_ccw:
                total += d_cw
                offset = (offset + d_cw) % r
            else:
                total += d_ccw
                offset = (offset - d_ccw) % r
        return total

    def _fetch_crystal(self, p: int, leg: int, order: str) -> None:
        st = self.state
        slot = st.ring_slot_of(st.crystal_of_qubit(p))
        if slot is None:
            raise SchedulerDeadlock(f"qubit {p} expected in ring")
        r = st.layout.ring_slots
        if slot != 0:
            cw, ccw = slot, r - slot
            if cw <= ccw:
                self._emit(rotate(cw, cw=True, batch=self.batch))
            else:
                self._emit(rotate(ccw, cw=False, batch=self.batch))
        self._op(OpKind.JUNCTION_EXIT, "ring", leg=leg, order=order)

    def _flush_cache_if_full(self, leg: int) -> None:
        st = self.state
        if len(st.cache[leg]) >= st.layout.cache_slots_per_leg:
            self._op(OpKind.GLOBAL_SHIFT, "zone", leg=leg)

    def _drainable(self, leg: int) -> bool:
        """True if the top of the leg stack should return to the ring.

        Crystals carrying only unallocated qubits stay parked in leg storage;
        they were evicted first so they sit at the stack bottom.
        """
        store = self.state.leg_storage[leg]
        return bool(store) and any(q in self.allocated for q in store[-1].qubits)

    def _drain_returns(self, force: bool = False) -> None:
        """Return retired/evicted crystals to the ring (FILO per leg).

        Stops quietly when the ring has no room unless ``force`` is set (end
        of slice), where a blocked drain is a scheduler bug.
        """
        st = self.state
        while self._drainable(TOP) or self._drainable(BOTTOM):
            if len(st.ring) >= st.layout.ring_slots:
                if force:
                    raise SchedulerDeadlock("ring full during final drain")
                return
            leg = TOP if len(st.leg_storage[TOP]) >= len(st.leg_storage[BOTTOM]) else BOTTOM
            if not self._drainable(leg):
                leg = BOTTOM if leg == TOP else TOP
            if 0 in st.ring:
                near = st.nearest_free_slot_distance()
                if near is None:
                    if force:
                        raise SchedulerDeadlock("no free ring slot during final drain")
                    return
                steps, cw = near
                self._emit(rotate(steps, cw=cw, batch=self.batch))
            self._op(OpKind.JUNCTION_ENTER, "ring", leg=leg)

    def _run_batch(self, sl: Slice, bpairs, bsingles, retire: bool) -> None:
        batch_virt = {q for i in bpairs for q in i.qubits} | set(bsingles)
        individual = [
            i for i in sl.instrs if i.op != cir.RZZ and set(i.qubits) <= batch_virt
        ]
        self._dispatch_individual(sl, individual)
        if bpairs:
            self._plan_zone_gating(bpairs, sl, restore=not retire)
        if retire:
            st = self.state
            for z in range(st.layout.n_zones):
                if st.zones[z]:
                    self._op(OpKind.SHIFT, "zone", leg=st.layout.leg_of_zone(z))
            self._emit(TransportOp(OpKind.STATIC, track="zone", batch=self.batch))


def _batch_sizes(npairs: int, nsingles: int) -> list[tuple[int, int]]:
    """Remainder-first batch sizes: (pairs, singles) per batch."""
    sizes: list[tuple[int, int]] = []
    rem = npairs % MAX_BATCH_PAIRS
    if rem:
        sizes.append((rem, 0))
    sizes.extend((MAX_BATCH_PAIRS, 0) for _ in range(npairs // MAX_BATCH_PAIRS))
    srem = nsingles % MAX_BATCH_QUBITS
    ssizes: list[tuple[int, int]] = []
    if srem:
        ssizes.append((0, srem))
    ssizes.extend((0, MAX_BATCH_QUBITS) for _ in range(nsingles // MAX_BATCH_QUBITS))
    return sizes + ssizes


def plan_slice(state: TrapState, sl: Slice, qmap: QubitMap) -> SlicePlan:
    planner = SlicePlanner(state, qmap)
    if planner.can_serve_in_place(sl):
        planner.plan_in_place(sl)
    else:
        planner.plan_sorted(sl)
    return planner.plan


def execute_slice(state: TrapState, sl: Slice, qmap: QubitMap):
    """Plan and apply one slice; returns (new_state, plan).

    The input state is not mutated; the applied transport ops are available
    as ``new_state.log`` (and ``plan.transport_ops``).
    """
    working = state.copy()
    working.log = []
    plan = plan_slice(working, sl, qmap)
    return working, plan


def plan_circuit(state: TrapState, circ: cir.Circuit, qmap: Optional[QubitMap] = None):
    """Slice and plan a whole circuit.

    Returns (final_state, slices, plans, qmap); the input state is untouched.
    """
    if qmap is None:
        qmap = allocate(circ.n_qubits, state)
    slices = build_slices(circ)
    working = state.copy()
    plans = []
    for sl in slices:
        working.log = []
        plans.append(plan_slice(working, sl, qmap))
    return working, slices, plans, qmap
