"""Trap topology, occupancy state, and legal transport primitives.

Geometry (one junction, two legs):

    ring storage -- junction -- per leg: cache -> zones (4) -> leg storage

Zones are numbered 0..3 left-to-right on the top leg and 4..7 on the bottom
leg; zone z and z+4 are vertically adjacent (they share cooling/detection
beam lines).  Gating-capable zones default to the 2nd and 4th of each leg.

Crystals are either two-ion qubit+coolant chains (BY with the qubit leading,
YB with the coolant leading) or four-ion BYYB chains carrying two qubits in
qubit-coolant-coolant-qubit order.  Coolant ions are tracked only through
crystal composition; they carry no state.

Ring positions are discrete slots.  One rotation step moves every ring
crystal by one slot; RotateCW decreases slot indices, so a crystal at slot
``s`` needs ``s`` CW steps (or ``ring_slots - s`` CCW steps) to reach the
junction-adjacent slot 0.  Leg storage is a stack: first in, last out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import CapacityExceeded, IllegalTransport, InvalidLayout, NotInRing

TOP = 0
BOTTOM = 1
LEGS = (TOP, BOTTOM)


@dataclass(frozen=True)
class LayoutConfig:
    n_zones: int = 8
    twoq_zones: tuple[int, ...] = (1, 3, 5, 7)
    ring_slots: int = 82
    cache_slots_per_leg: int = 4
    leg_storage_depth: int = 24


@dataclass(frozen=True)
class TrapLayout:
    n_zones: int
    twoq_zones: tuple[int, ...]
    ring_slots: int
    cache_slots_per_leg: int
    leg_storage_depth: int

    @property
    def zones_per_leg(self) -> int:
        return self.n_zones // 2 if self.n_zones > 1 else 1

    def leg_of_zone(self, zone: int) -> int:
        return TOP if zone < self.zones_per_leg else BOTTOM

    def zones_of_leg(self, leg: int) -> range:
        z = self.zones_per_leg
        return range(0, z) if leg == TOP else range(z, self.n_zones)

    def vertical_neighbor(self, zone: int) -> Optional[int]:
        if self.n_zones < 2:
            return None
        z = self.zones_per_leg
        other = zone + z if zone < z else zone - z
        return other if other < self.n_zones else None

    @property
    def qubit_capacity(self) -> int:
        return 2 * self.n_zones + self.ring_slots


def build_layout(config: LayoutConfig = LayoutConfig()) -> TrapLayout:
    if config.n_zones <= 0:
        raise InvalidLayout(f"n_zones must be positive, got {config.n_zones}")
    if config.ring_slots < 0:
        raise InvalidLayout(f"ring_slots must be >= 0, got {config.ring_slots}")
    if config.cache_slots_per_leg <= 0 or config.leg_storage_depth <= 0:
        raise InvalidLayout("cache and leg storage sizes must be positive")
    twoq = tuple(sorted(set(config.twoq_zones)))
    if len(twoq) != len(config.twoq_zones):
        raise InvalidLayout("duplicate two-qubit zone indices")
    for z in twoq:
        if not 0 <= z < config.n_zones:
            raise InvalidLayout(f"two-qubit zone {z} outside 0..{config.n_zones - 1}")
    return TrapLayout(
        n_zones=config.n_zones,
        twoq_zones=twoq,
        ring_slots=config.ring_slots,
        cache_slots_per_leg=config.cache_slots_per_leg,
        leg_storage_depth=config.leg_storage_depth,
    )


class Kind(Enum):
    BY = "BY"
    YB = "YB"
    BYYB = "BYYB"


_CRYSTAL_SEQ = 0


@dataclass
class Crystal:
    """One co-trapped ion chain.

    ``qubits`` lists the qubit ion ids in chain order; ``qubit_first`` only
    matters for two-ion crystals (BY vs YB).  Four-ion crystals are always
    qubit-coolant-coolant-qubit.
    """

    qubits: tuple[int, ...]
    qubit_first: bool = True
    uid: int = field(default=-1)

    def __post_init__(self):
        global _CRYSTAL_SEQ
        if self.uid < 0:
            self.uid = _CRYSTAL_SEQ
            _CRYSTAL_SEQ += 1
        if len(self.qubits) not in (1, 2):
            raise ValueError("crystals carry one or two qubits")

    @property
    def kind(self) -> Kind:
        if len(self.qubits) == 2:
            return Kind.BYYB
        return Kind.BY if self.qubit_first else Kind.YB

    @property
    def n_ions(self) -> int:
        return 2 * len(self.qubits)


class OpKind(Enum):
    ROTATE_CW = "rotate_cw"
    ROTATE_CCW = "rotate_ccw"
    JUNCTION_EXIT = "junction_exit"
    JUNCTION_ENTER = "junction_enter"
    GLOBAL_SHIFT = "global_shift"
    FOUR_ION_SHIFT = "four_ion_shift"
    SHIFT = "shift"
    SPLIT = "split"
    COMBINE = "combine"
    STATIC = "static"


@dataclass(frozen=True)
class TransportOp:
    kind: OpKind
    steps: int = 0          # rotations
    leg: int = -1           # junction/shift/global-shift target leg
    zone: int = -1          # split/combine zone
    order: str = "BY"       # junction exit crystal orientation
    backward: bool = False  # four-ion shift direction
    track: str = "ring"     # "ring" | "zone": parallel track for timing
    batch: int = 0          # overlap group for timing

    def describe(self) -> dict:
        d = {"kind": self.kind.value, "track": self.track, "batch": self.batch}
        if self.kind in (OpKind.ROTATE_CW, OpKind.ROTATE_CCW):
            d["steps"] = self.steps
        if self.leg >= 0:
            d["leg"] = self.leg
        if self.zone >= 0:
            d["zone"] = self.zone
        if self.kind == OpKind.JUNCTION_EXIT:
            d["order"] = self.order
        if self.kind == OpKind.FOUR_ION_SHIFT:
            d["backward"] = self.backward
        return d


def rotate(steps: int, cw: bool = True, batch: int = 0) -> TransportOp:
    kind = OpKind.ROTATE_CW if cw else OpKind.ROTATE_CCW
    return TransportOp(kind, steps=steps, batch=batch)


@dataclass
class TrapState:
    layout: TrapLayout
    ring: dict[int, Crystal] = field(default_factory=dict)   # slot -> crystal
    zones: list[list[Crystal]] = field(default_factory=list)
    cache: list[list[Crystal]] = field(default_factory=list)      # per leg, FIFO
    leg_storage: list[list[Crystal]] = field(default_factory=list)  # per leg, stack
    log: list[TransportOp] = field(default_factory=list)

    def copy(self) -> "TrapState":
        new = TrapState(self.layout)
        new.ring = dict(self.ring)
        new.zones = [list(z) for z in self.zones]
        new.cache = [list(c) for c in self.cache]
        new.leg_storage = [list(s) for s in self.leg_storage]
        new.log = list(self.log)
        return new

    # ------------------------------------------------------------- inspection

    def all_crystals(self):
        for c in self.ring.values():
            yield c
        for zone in self.zones:
            yield from zone
        for leg in LEGS:
            yield from self.cache[leg]
            yield from self.leg_storage[leg]

    def qubit_multiset(self) -> list[int]:
        out: list[int] = []
        for c in self.all_crystals():
            out.extend(c.qubits)
        return sorted(out)

    def locate_qubit(self, q: int) -> tuple[str, int]:
        """Return (region, index): region in {ring, zone, cache, leg_storage}."""
        for slot, c in self.ring.items():
            if q in c.qubits:
                return ("ring", slot)
        for z, zone in enumerate(self.zones):
            for c in zone:
                if q in c.qubits:
                    return ("zone", z)
        for leg in LEGS:
            for c in self.cache[leg]:
                if q in c.qubits:
                    return ("cache", leg)
            for c in self.leg_storage[leg]:
                if q in c.qubits:
                    return ("leg_storage", leg)
        raise KeyError(f"qubit {q} not present")

    def crystal_of_qubit(self, q: int) -> Crystal:
        for c in self.all_crystals():
            if q in c.qubits:
                return c
        raise KeyError(f"qubit {q} not present")

    def ring_slot_of(self, crystal: Crystal) -> Optional[int]:
        for slot, c in self.ring.items():
            if c.uid == crystal.uid:
                return slot
        return None

    def zone_of_qubit(self, q: int) -> Optional[int]:
        for z, zone in enumerate(self.zones):
            for c in zone:
                if q in c.qubits:
                    return z
        return None

    def zone_ion_count(self, zone: int) -> int:
        return sum(c.n_ions for c in self.zones[zone])

    def validate(self) -> None:
        seen: set[int] = set()
        for c in self.all_crystals():
            for q in c.qubits:
                if q in seen:
                    raise AssertionError(f"qubit {q} appears in two locations")
                seen.add(q)
        for z, zone in enumerate(self.zones):
            if self.zone_ion_count(z) > 4:
                raise AssertionError(f"zone {z} over capacity")
        for leg in LEGS:
            if len(self.cache[leg]) > self.layout.cache_slots_per_leg:
                raise AssertionError(f"cache {leg} over capacity")
            if len(self.leg_storage[leg]) > self.layout.leg_storage_depth:
                raise AssertionError(f"leg storage {leg} over capacity")

    @property
    def ring_free_slots(self) -> int:
        return self.layout.ring_slots - len(self.ring)

    # ---------------------------------------------------------- ring geometry

    def ring_distance_slot(self, slot: int) -> tuple[int, int]:
        r = self.layout.ring_slots
        cw = slot % r
        ccw = (r - slot) % r
        return (cw, ccw)

    def ring_distance(self, q: int) -> tuple[int, int]:
        """Minimal CW/CCW rotation steps to bring ``q``'s crystal to slot 0."""
        region, idx = self.locate_qubit(q)
        if region != "ring":
            raise NotInRing(f"qubit {q} is in {region}, not the ring")
        return self.ring_distance_slot(idx)

    def nearest_free_slot_distance(self) -> Optional[tuple[int, bool]]:
        """(steps, cw) rotation bringing the nearest free slot to slot 0."""
        r = self.layout.ring_slots
        best = None
        for s in range(r):
            if s not in self.ring:
                cw, ccw = self.ring_distance_slot(s)
                cand = (cw, True) if cw <= ccw else (ccw, False)
                if best is None or cand[0] < best[0]:
                    best = cand
        return best

    # ------------------------------------------------------------- transport

    def apply(self, op: TransportOp) -> None:
        handler = {
            OpKind.ROTATE_CW: self._rotate,
            OpKind.ROTATE_CCW: self._rotate,
            OpKind.JUNCTION_EXIT: self._junction_exit,
            OpKind.JUNCTION_ENTER: self._junction_enter,
            OpKind.GLOBAL_SHIFT: self._global_shift,
            OpKind.FOUR_ION_SHIFT: self._four_ion_shift,
            OpKind.SHIFT: self._shift_retire,
            OpKind.SPLIT: self._split,
            OpKind.COMBINE: self._combine,
            OpKind.STATIC: lambda _op: None,
        }[op.kind]
        handler(op)
        self.log.append(op)

    def _rotate(self, op: TransportOp) -> None:
        r = self.layout.ring_slots
        if r == 0:
            if self.ring:
                raise IllegalTransport(op, "rotation on a slotless ring")
            return
        k = op.steps % r
        if op.kind == OpKind.ROTATE_CCW:
            k = (-k) % r
        # CW moves crystals toward lower slots
        self.ring = {(slot - k) % r: c for slot, c in self.ring.items()}

    def _junction_exit(self, op: TransportOp) -> None:
        if 0 not in self.ring:
            raise IllegalTransport(op, "no crystal at the junction-adjacent slot")
        if op.leg not in LEGS:
            raise IllegalTransport(op, f"bad leg {op.leg}")
        if len(self.cache[op.leg]) >= self.layout.cache_slots_per_leg:
            raise IllegalTransport(op, f"cache of leg {op.leg} full")
        crystal = self.ring.pop(0)
        if crystal.kind == Kind.BYYB:
            raise IllegalTransport(op, "four-ion crystals do not traverse the junction")
        reoriented = Crystal(crystal.qubits, qubit_first=op.order == "BY", uid=crystal.uid)
        self.cache[op.leg].append(reoriented)

    def _junction_enter(self, op: TransportOp) -> None:
        if op.leg not in LEGS:
            raise IllegalTransport(op, f"bad leg {op.leg}")
        if not self.leg_storage[op.leg]:
            raise IllegalTransport(op, f"leg storage {op.leg} empty")
        if 0 in self.ring:
            raise IllegalTransport(op, "junction-adjacent slot occupied")
        if len(self.ring) >= self.layout.ring_slots:
            raise IllegalTransport(op, "ring full")
        crystal = self.leg_storage[op.leg].pop()
        if crystal.kind == Kind.BYYB:
            raise IllegalTransport(op, "four-ion crystals do not traverse the junction")
        self.ring[0] = Crystal(crystal.qubits, qubit_first=True, uid=crystal.uid)

    def _global_shift(self, op: TransportOp) -> None:
        """Load the leg's cache into its zones, rightmost free zone first.

        Consecutive cache crystals fill one zone (two two-ion crystals per
        zone) before moving to the next zone leftward.
        """
        leg = op.leg
        if leg not in LEGS:
            raise IllegalTransport(op, f"bad leg {op.leg}")
        if not self.cache[leg]:
            raise IllegalTransport(op, f"cache of leg {leg} empty")
        zones = list(self.layout.zones_of_leg(leg))
        queue = self.cache[leg]
        # Crystals push in from the junction side, so the rightmost zone with
        # spare ion capacity fills first.
        for z in reversed(zones):
            while queue and self.zone_ion_count(z) + queue[0].n_ions <= 4:
                self.zones[z].append(queue.pop(0))
        if queue:
            raise IllegalTransport(op, f"zones of leg {leg} cannot absorb the cache")

    def _four_ion_shift(self, op: TransportOp) -> None:
        leg = op.leg
        if leg not in LEGS:
            raise IllegalTransport(op, f"bad leg {op.leg}")
        zones = list(self.layout.zones_of_leg(leg))
        if not op.backward:
            edge = zones[-1]
            evicted = self.zones[edge]
            if evicted:
                for c in self._split_crystals(evicted, op):
                    if len(self.leg_storage[leg]) >= self.layout.leg_storage_depth:
                        raise IllegalTransport(op, f"leg storage {leg} full")
                    self.leg_storage[leg].append(c)
            for z in reversed(zones[1:]):
                self.zones[z] = self.zones[z - 1] if z - 1 >= zones[0] else []
            self.zones[zones[0]] = []
        else:
            if self.zones[zones[0]]:
                raise IllegalTransport(op, "leftmost zone occupied on backward shift")
            for z in zones[:-1]:
                self.zones[z] = self.zones[z + 1]
            self.zones[zones[-1]] = []
            # pull the most recently stored pair back into the edge zone
            store = self.leg_storage[leg]
            pulled: list[Crystal] = []
            while store and sum(c.n_ions for c in pulled) + store[-1].n_ions <= 4:
                pulled.insert(0, store.pop())
                if sum(c.n_ions for c in pulled) == 4:
                    break
            self.zones[zones[-1]] = pulled

    @staticmethod
    def _split_crystals(crystals: list[Crystal], op: TransportOp) -> list[Crystal]:
        out: list[Crystal] = []
        for c in crystals:
            if c.kind == Kind.BYYB:
                a, b = c.qubits
                out.append(Crystal((a,), qubit_first=True))
                out.append(Crystal((b,), qubit_first=False))
            else:
                out.append(c)
        return out

    def _shift_retire(self, op: TransportOp) -> None:
        """Move the rightmost occupied zone's contents into leg storage."""
        leg = op.leg
        if leg not in LEGS:
            raise IllegalTransport(op, f"bad leg {op.leg}")
        zones = list(self.layout.zones_of_leg(leg))
        for z in reversed(zones):
            if self.zones[z]:
                for c in self._split_crystals(self.zones[z], op):
                    if len(self.leg_storage[leg]) >= self.layout.leg_storage_depth:
                        raise IllegalTransport(op, f"leg storage {leg} full")
                    self.leg_storage[leg].append(c)
                self.zones[z] = []
                return
        raise IllegalTransport(op, f"no occupied zone on leg {leg}")

    def _split(self, op: TransportOp) -> None:
        zone = op.zone
        if not 0 <= zone < self.layout.n_zones:
            raise IllegalTransport(op, f"bad zone {zone}")
        contents = self.zones[zone]
        if len(contents) != 1 or contents[0].kind != Kind.BYYB:
            raise IllegalTransport(op, f"zone {zone} holds no four-ion crystal")
        a, b = contents[0].qubits
        self.zones[zone] = [Crystal((a,), qubit_first=True), Crystal((b,), qubit_first=False)]

    def _combine(self, op: TransportOp) -> None:
        zone = op.zone
        if not 0 <= zone < self.layout.n_zones:
            raise IllegalTransport(op, f"bad zone {zone}")
        contents = self.zones[zone]
        if len(contents) != 2:
            raise IllegalTransport(op, f"zone {zone} does not hold two crystals")
        first, second = contents
        if first.kind != Kind.BY or second.kind != Kind.YB:
            raise IllegalTransport(op, f"zone {zone} needs adjacent BY+YB to combine")
        merged = Crystal((first.qubits[0], second.qubits[0]))
        self.zones[zone] = [merged]


def apply_transport(state: TrapState, op: TransportOp) -> TrapState:
    """Pure-functional wrapper: returns a new state with ``op`` applied."""
    new = state.copy()
    new.apply(op)
    return new


def default_initial_state(layout: TrapLayout, n_qubits: int) -> TrapState:
    """Zones filled with two-qubit crystals first, remainder evenly in the ring.

    Qubit ids: zone qubits come first (two per zone, left to right, top leg
    then bottom), ring qubits follow in slot order.
    """
    if n_qubits > layout.qubit_capacity:
        raise CapacityExceeded(
            f"{n_qubits} qubits exceed capacity {layout.qubit_capacity}"
        )
    state = TrapState(layout)
    state.zones = [[] for _ in range(layout.n_zones)]
    state.cache = [[], []]
    state.leg_storage = [[], []]
    q = 0
    for z in range(layout.n_zones):
        if q + 2 <= n_qubits:
            state.zones[z] = [Crystal((q, q + 1))]
            q += 2
    n_ring = n_qubits - q
    if n_ring > 0:
        if layout.ring_slots == 0:
            raise CapacityExceeded("no ring slots for remaining qubits")
        for i in range(n_ring):
            slot = (i * layout.ring_slots) // n_ring
            # evenly spaced; collisions impossible since n_ring <= ring_slots
            state.ring[slot] = Crystal((q,))
            q += 1
    if q < n_qubits:
        raise CapacityExceeded(f"could not place {n_qubits - q} qubits")
    state.validate()
    return state


def ring_distance(state: TrapState, q: int) -> tuple[int, int]:
    return state.ring_distance(q)
