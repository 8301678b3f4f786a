"""Wall-clock model: durations per operation and critical-path accounting.

Two parallel tracks per layer, joined at batch handoffs: the zone pipeline
(cooling, gates, splits/combines, zone shifts) and ring sorting (rotations,
junction traffic).  Ring ops tagged with batch k overlap the zone work of
batch k-1, which models sorting the next batch during cooling of the current
one.  The layer total is the critical path; category totals are attributed
from whichever track wins each overlap group, so categories sum to the
total.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from . import circuit as cir
from .scheduler import CoolingEvent, GateDispatch, SlicePlan
from .trap import OpKind, TransportOp

TRANSPORT_CATEGORIES = (
    "rotate",
    "global_shift",
    "four_ion_shift",
    "shift",
    "split_combine",
    "junction",
    "static",
)
CATEGORIES = TRANSPORT_CATEGORIES + ("cooling", "quantum_ops")

_OP_CATEGORY = {
    OpKind.ROTATE_CW: "rotate",
    OpKind.ROTATE_CCW: "rotate",
    OpKind.JUNCTION_EXIT: "junction",
    OpKind.JUNCTION_ENTER: "junction",
    OpKind.GLOBAL_SHIFT: "global_shift",
    OpKind.FOUR_ION_SHIFT: "four_ion_shift",
    OpKind.SHIFT: "shift",
    OpKind.SPLIT: "split_combine",
    OpKind.COMBINE: "split_combine",
    OpKind.STATIC: "static",
}


@dataclass(frozen=True)
class TimingTable:
    """Operation durations in microseconds.

    Published values: two-qubit gate ~70 us, touch-up cooling ~300 us,
    ground-state cooling ~3 ms, ternary measurement twice the standard
    measurement.  The transport entries are free parameters calibrated once
    so that a dense random layer on the full machine reproduces the ~55 ms
    depth-1 time with rotations the largest transport category (see the
    shipped preset).
    """

    rotate_step_us: float = 17.4
    junction_us: float = 40.0
    global_shift_us: float = 420.0
    four_ion_shift_us: float = 280.0
    shift_us: float = 90.0
    split_combine_us: float = 40.0
    static_us: float = 40.0
    ground_state_cooling_us: float = 3000.0
    touchup_cooling_us: float = 300.0
    twoq_gate_us: float = 70.0
    oneq_gate_us: float = 12.0
    prep_us: float = 50.0
    measure_us: float = 120.0
    ternary_measure_factor: float = 2.0

    def scaled(self, factor: float) -> "TimingTable":
        return TimingTable(**{k: v * factor for k, v in asdict(self).items()
                              if k != "ternary_measure_factor"},
                           ternary_measure_factor=self.ternary_measure_factor)

    def transport_duration(self, op: TransportOp) -> float:
        kind = op.kind
        if kind in (OpKind.ROTATE_CW, OpKind.ROTATE_CCW):
            return self.rotate_step_us * op.steps
        if kind in (OpKind.JUNCTION_EXIT, OpKind.JUNCTION_ENTER):
            return self.junction_us
        if kind == OpKind.GLOBAL_SHIFT:
            return self.global_shift_us
        if kind == OpKind.FOUR_ION_SHIFT:
            return self.four_ion_shift_us
        if kind == OpKind.SHIFT:
            return self.shift_us
        if kind in (OpKind.SPLIT, OpKind.COMBINE):
            return self.split_combine_us
        return self.static_us

    def gate_duration(self, d: GateDispatch) -> float:
        op = d.instr.op
        if op == cir.RZZ:
            theta = d.instr.params[0]
            return self.twoq_gate_us if abs(theta) > 1e-12 else 0.0
        if op in (cir.C1, cir.U1Q):
            return self.oneq_gate_us
        if op == cir.RZ:
            return 0.0
        if op in (cir.PREP, cir.RESET):
            return self.prep_us
        if op == cir.MEASURE:
            t = self.measure_us
            if d.instr.mode == cir.MEASURE_TERNARY:
                t *= self.ternary_measure_factor
            if d.mcmr:
                t += self.prep_us
            return t
        return 0.0

    def cooling_duration(self, ev: CoolingEvent) -> float:
        return self.ground_state_cooling_us if ev.kind == "gsc" else self.touchup_cooling_us


@dataclass
class TimeBreakdown:
    categories: dict[str, float] = field(default_factory=lambda: {c: 0.0 for c in CATEGORIES})
    total_us: float = 0.0
    busy: dict[str, float] = field(default_factory=lambda: {c: 0.0 for c in CATEGORIES})

    @property
    def transport_us(self) -> float:
        return sum(self.categories[c] for c in TRANSPORT_CATEGORIES)

    @property
    def cooling_us(self) -> float:
        return self.categories["cooling"]

    @property
    def quantum_us(self) -> float:
        return self.categories["quantum_ops"]

    def add(self, other: "TimeBreakdown") -> None:
        for c in CATEGORIES:
            self.categories[c] += other.categories[c]
            self.busy[c] += other.busy[c]
        self.total_us += other.total_us

    def scaled(self, f: float) -> "TimeBreakdown":
        out = TimeBreakdown()
        out.categories = {c: v * f for c, v in self.categories.items()}
        out.busy = {c: v * f for c, v in self.busy.items()}
        out.total_us = self.total_us * f
        return out

    def as_dict(self) -> dict:
        return {
            "total_us": self.total_us,
            "categories": dict(self.categories),
            "busy": dict(self.busy),
        }


def _item_category_duration(item, table: TimingTable):
    if isinstance(item, TransportOp):
        return _OP_CATEGORY[item.kind], table.transport_duration(item), item.track, item.batch
    if isinstance(item, GateDispatch):
        return "quantum_ops", table.gate_duration(item), "zone", item.batch
    if isinstance(item, CoolingEvent):
        return "cooling", table.cooling_duration(item), "zone", item.batch
    return None


def layer_time(plan: SlicePlan, table: TimingTable) -> TimeBreakdown:
    """Critical-path time of one slice with category attribution."""
    zone: dict[int, dict[str, float]] = {}
    ring: dict[int, dict[str, float]] = {}
    out = TimeBreakdown()
    for item in plan.items:
        got = _item_category_duration(item, table)
        if got is None:
            continue
        cat, dur, track, batch = got
        if dur == 0.0:
            continue
        bucket = zone if track == "zone" else ring
        slot = bucket.setdefault(batch, {})
        slot[cat] = slot.get(cat, 0.0) + dur
        out.busy[cat] += dur
    if not zone and not ring:
        return out
    max_tag = max(list(zone) + list(ring))
    for k in range(0, max_tag + 2):
        zcats = zone.get(k - 1, {})
        rcats = ring.get(k, {})
        zdur = sum(zcats.values())
        rdur = sum(rcats.values())
        winner = zcats if zdur >= rdur else rcats
        out.total_us += max(zdur, rdur)
        for c, v in winner.items():
            out.categories[c] += v
    return out


def profile_plans(plans, table: TimingTable) -> list[TimeBreakdown]:
    return [layer_time(p, table) for p in plans]


def profile_program(circ: cir.Circuit, state, table: TimingTable):
    """Per-layer breakdowns for a program.

    Boundary slices that only prepare or only measure are excluded from the
    reported layers (they are not representative of the steady-state layer
    time); the full list is returned alongside for completeness.
    """
    from .scheduler import plan_circuit

    final, slices, plans, qmap = plan_circuit(state, circ)
    all_bds = profile_plans(plans, table)
    keep = []
    for sl, bd in zip(slices, all_bds):
        ops = {i.op for i in sl.instrs}
        if ops <= {cir.PREP, cir.RESET}:
            continue
        if ops <= {cir.MEASURE, cir.C1, cir.U1Q, cir.RZ} and cir.MEASURE in ops:
            continue
        keep.append(bd)
    return keep, all_bds


def breakdown_rows(bds) -> list[dict]:
    rows = []
    for i, bd in enumerate(bds):
        for cat in CATEGORIES:
            rows.append({"layer": i, "category": cat, "us": bd.categories[cat]})
        rows.append({"layer": i, "category": "total", "us": bd.total_us})
    return rows
