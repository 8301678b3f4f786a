"""Exception types shared across the package."""


class QccdTwinError(Exception):
    """Base class for all package errors."""


class InvalidLayout(QccdTwinError):
    """Trap layout configuration is internally inconsistent."""


class CapacityExceeded(QccdTwinError):
    """More qubits requested than the trap (or a batch) can hold."""


class IllegalTransport(QccdTwinError):
    """A transport op was applied in a state where it is not legal.

    This always indicates a scheduler bug, never a recoverable condition.
    """

    def __init__(self, op, reason: str):
        self.op = op
        self.reason = reason
        super().__init__(f"illegal transport {op}: {reason}")


class NotInRing(QccdTwinError):
    """Ring distance queried for a crystal that is not in ring storage."""


class UnallocatedQubit(QccdTwinError):
    """A circuit references a virtual qubit with no physical assignment."""


class SchedulerDeadlock(QccdTwinError):
    """The sorting planner could not find a legal move (scheduler bug)."""


class QubitOutOfRange(QccdTwinError):
    """Gate or measurement addressed a qubit index outside the register."""


class NonCliffordGate(QccdTwinError):
    """A gate outside the Clifford set reached the tableau backend."""


class CapExceeded(QccdTwinError):
    """Statevector simulation requested above the configured qubit cap."""


class NonPhysicalChannel(QccdTwinError):
    """A Pauli-probability vector came out significantly negative."""


class DegenerateFit(QccdTwinError):
    """Not enough independent data points to perform a fit."""


class OddDepth(QccdTwinError):
    """Mirrored circuits require an even total layer depth."""


class ConfigError(QccdTwinError):
    """Run configuration file is malformed or references unknown presets."""
