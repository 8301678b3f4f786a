"""Gate-level circuit IR on virtual qubits.

Instructions: prep, c1 (single-qubit Clifford by index 0..23), u1q(theta, phi),
rz(theta), rzz(theta) with optional per-shot Pauli twirling, measure
(standard/ternary), reset, barrier.  Measure immediately followed by reset on
the same qubit is treated downstream as a single mid-circuit
measure-and-reset.

Two serialization forms: a line-oriented text format (one instruction per
line) and a JSON equivalent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .errors import QubitOutOfRange

PREP = "prep"
C1 = "c1"
U1Q = "u1q"
RZ = "rz"
RZZ = "rzz"
MEASURE = "measure"
RESET = "reset"
BARRIER = "barrier"

MEASURE_STANDARD = "standard"
MEASURE_TERNARY = "ternary"


@dataclass(frozen=True)
class Instr:
    op: str
    qubits: tuple[int, ...] = ()
    params: tuple[float, ...] = ()
    # c1 gate index for op == "c1"
    gate_index: int = -1
    # "standard" | "ternary" for measures
    mode: str = MEASURE_STANDARD
    # per-shot Pauli twirl flag for rzz
    twirled: bool = False
    # classical label written by a measure, or condition consumed by any op
    label: Optional[str] = None
    condition: Optional[tuple[str, int]] = None

    def with_condition(self, label: str, value: int) -> "Instr":
        return replace(self, condition=(label, int(value)))


def prep(q: int) -> Instr:
    return Instr(PREP, (q,))


def c1(q: int, index: int) -> Instr:
    if not 0 <= index < 24:
        raise ValueError(f"c1 index {index} outside 0..23")
    return Instr(C1, (q,), gate_index=index)


def u1q(q: int, theta: float, phi: float) -> Instr:
    return Instr(U1Q, (q,), params=(float(theta), float(phi)))


def rz(q: int, theta: float) -> Instr:
    return Instr(RZ, (q,), params=(float(theta),))


def rzz(q0: int, q1: int, theta: float = math.pi / 2, twirled: bool = False) -> Instr:
    if q0 == q1:
        raise ValueError("rzz needs two distinct qubits")
    return Instr(RZZ, (q0, q1), params=(float(theta),), twirled=twirled)


def measure(q: int, mode: str = MEASURE_STANDARD, label: Optional[str] = None) -> Instr:
    if mode not in (MEASURE_STANDARD, MEASURE_TERNARY):
        raise ValueError(f"unknown measure mode {mode!r}")
    return Instr(MEASURE, (q,), mode=mode, label=label)


def reset(q: int) -> Instr:
    return Instr(RESET, (q,))


def barrier() -> Instr:
    return Instr(BARRIER)


@dataclass
class Circuit:
    n_qubits: int
    instructions: list[Instr] = field(default_factory=list)

    def add(self, instr: Instr) -> "Circuit":
        self.validate_instr(instr)
        self.instructions.append(instr)
        return self

    def extend(self, instrs: Iterable[Instr]) -> "Circuit":
        for ins in instrs:
            self.add(ins)
        return self

    def validate_instr(self, instr: Instr) -> None:
        for q in instr.qubits:
            if not 0 <= q < self.n_qubits:
                raise QubitOutOfRange(f"qubit {q} outside register of {self.n_qubits}")
        for p in instr.params:
            if not math.isfinite(p):
                raise ValueError(f"non-finite parameter in {instr}")

    def validate(self) -> None:
        for ins in self.instructions:
            self.validate_instr(ins)

    @property
    def has_non_clifford(self) -> bool:
        from .cliffords import u1q_clifford_index, rz_clifford_index

        for ins in self.instructions:
            if ins.op == U1Q and u1q_clifford_index(*ins.params) is None:
                return True
            if ins.op == RZ and rz_clifford_index(ins.params[0]) is None:
                return True
        return False

    def measured_qubits(self) -> list[int]:
        return [ins.qubits[0] for ins in self.instructions if ins.op == MEASURE]

    # ---------------------------------------------------------------- text io

    def to_text(self) -> str:
        lines = [f"qubits {self.n_qubits}"]
        for ins in self.instructions:
            lines.append(_instr_to_line(ins))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        n_qubits = None
        instrs = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("qubits"):
                n_qubits = int(line.split()[1])
                continue
            instrs.append(_line_to_instr(line))
        if n_qubits is None:
            raise ValueError("missing 'qubits N' header line")
        circ = cls(n_qubits)
        circ.extend(instrs)
        return circ

    # ---------------------------------------------------------------- json io

    def to_json_dict(self) -> dict:
        out = []
        for ins in self.instructions:
            d: dict = {"op": ins.op}
            if ins.qubits:
                d["qubits"] = list(ins.qubits)
            if ins.params:
                d["params"] = list(ins.params)
            if ins.op == C1:
                d["index"] = ins.gate_index
            if ins.op == MEASURE:
                d["mode"] = ins.mode
            if ins.op == RZZ and ins.twirled:
                d["twirled"] = True
            if ins.label is not None:
                d["label"] = ins.label
            if ins.condition is not None:
                d["condition"] = [ins.condition[0], ins.condition[1]]
            out.append(d)
        return {"version": 1, "n_qubits": self.n_qubits, "instructions": out}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=None, separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, d: dict) -> "Circuit":
        circ = cls(int(d["n_qubits"]))
        for e in d["instructions"]:
            ins = Instr(
                op=e["op"],
                qubits=tuple(e.get("qubits", ())),
                params=tuple(e.get("params", ())),
                gate_index=int(e.get("index", -1)),
                mode=e.get("mode", MEASURE_STANDARD),
                twirled=bool(e.get("twirled", False)),
                label=e.get("label"),
                condition=tuple(e["condition"]) if e.get("condition") else None,
            )
            circ.add(ins)
        return circ

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_json_dict(json.loads(text))


def _instr_to_line(ins: Instr) -> str:
    prefix = ""
    if ins.condition is not None:
        prefix = f"cond {ins.condition[0]} {ins.condition[1]} "
    if ins.op == BARRIER:
        return prefix + "barrier"
    if ins.op == PREP:
        return prefix + f"prep q{ins.qubits[0]}"
    if ins.op == RESET:
        return prefix + f"reset q{ins.qubits[0]}"
    if ins.op == C1:
        return prefix + f"c1 q{ins.qubits[0]} {ins.gate_index}"
    if ins.op == U1Q:
        return prefix + f"u1q q{ins.qubits[0]} {ins.params[0]!r} {ins.params[1]!r}"
    if ins.op == RZ:
        return prefix + f"rz q{ins.qubits[0]} {ins.params[0]!r}"
    if ins.op == RZZ:
        name = "rzz_t" if ins.twirled else "rzz"
        return prefix + f"{name} q{ins.qubits[0]} q{ins.qubits[1]} {ins.params[0]!r}"
    if ins.op == MEASURE:
        name = "measure_ternary" if ins.mode == MEASURE_TERNARY else "measure"
        line = prefix + f"{name} q{ins.qubits[0]}"
        if ins.label:
            line += f" -> {ins.label}"
        return line
    raise ValueError(f"cannot serialize {ins}")


def _parse_q(tok: str) -> int:
    if not tok.startswith("q"):
        raise ValueError(f"expected qubit token, got {tok!r}")
    return int(tok[1:])


def _line_to_instr(line: str) -> Instr:
    toks = line.split()
    condition = None
    if toks[0] == "cond":
        condition = (toks[1], int(toks[2]))
        toks = toks[3:]
    op = toks[0]
    if op == "barrier":
        ins = barrier()
    elif op == "prep":
        ins = prep(_parse_q(toks[1]))
    elif op == "reset":
        ins = reset(_parse_q(toks[1]))
    elif op == "c1":
        ins = c1(_parse_q(toks[1]), int(toks[2]))
    elif op == "u1q":
        ins = u1q(_parse_q(toks[1]), float(toks[2]), float(toks[3]))
    elif op == "rz":
        ins = rz(_parse_q(toks[1]), float(toks[2]))
    elif op in ("rzz", "rzz_t"):
        ins = rzz(_parse_q(toks[1]), _parse_q(toks[2]), float(toks[3]), twirled=op == "rzz_t")
    elif op in ("measure", "measure_ternary"):
        label = None
        if "->" in toks:
            label = toks[toks.index("->") + 1]
        mode = MEASURE_TERNARY if op == "measure_ternary" else MEASURE_STANDARD
        ins = measure(_parse_q(toks[1]), mode=mode, label=label)
    else:
        raise ValueError(f"unknown instruction {line!r}")
    if condition is not None:
        ins = ins.with_condition(*condition)
    return ins
