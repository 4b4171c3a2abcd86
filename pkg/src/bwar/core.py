"""Domain types and configuration shared by the simulator modules."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace


class ConfigError(ValueError):
    """Raised when a :class:`SimConfig` violates an invariant."""


class Variant(enum.IntEnum):
    RB = 0
    RB_DA = 1
    BWAR_IM = 2
    BWAR_ID = 3
    BWAR_TD = 4
    SNW = 5

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, value: "Variant | str | int") -> "Variant":
        if isinstance(value, cls):
            return value
        if isinstance(value, int):
            return cls(value)
        key = str(value).strip().upper().replace("_", "-")
        if key in ("S&W", "SW", "SPRAY-AND-WAIT"):
            key = "SNW"
        for v, name in _LABELS.items():
            if name == key:
                return v
        raise ConfigError(f"unknown variant {value!r}; expected one of {', '.join(VARIANT_NAMES)}")

    @property
    def is_bwar(self) -> bool:
        return self in (Variant.BWAR_IM, Variant.BWAR_ID, Variant.BWAR_TD)

    @property
    def is_backpressure(self) -> bool:
        return self is not Variant.SNW


_LABELS = {
    Variant.RB: "RB",
    Variant.RB_DA: "RB-DA",
    Variant.BWAR_IM: "BWAR-IM",
    Variant.BWAR_ID: "BWAR-ID",
    Variant.BWAR_TD: "BWAR-TD",
    Variant.SNW: "SNW",
}
VARIANT_NAMES = tuple(_LABELS.values())
ALL_VARIANTS = tuple(Variant)


class Kind(enum.IntEnum):
    """Copy kind of a stored packet."""

    ORIGINAL = 0
    DUPLICATE = 1
    FLAGGED = 2


# Cell counts used in the delay-vs-N experiments and their throughput-optimal node counts.
REFERENCE_NODE_COUNTS = {9: 16, 12: 20, 16: 28, 20: 34, 25: 44}
NODES_PER_CELL = 1.79


@dataclass(frozen=True)
class Packet:
    id: int
    source: int
    commodity: int
    admit_time: int
    kind: Kind = Kind.ORIGINAL

    def __post_init__(self):
        if self.commodity == self.source:
            raise ValueError("a node never generates traffic for itself")

    def as_kind(self, kind: Kind) -> "Packet":
        if kind == self.kind:
            return self
        allowed = {
            (Kind.ORIGINAL, Kind.DUPLICATE),
            (Kind.ORIGINAL, Kind.FLAGGED),
            (Kind.FLAGGED, Kind.ORIGINAL),
        }
        if (self.kind, kind) not in allowed:
            raise ValueError(f"illegal kind transition {self.kind.name} -> {kind.name}")
        return replace(self, kind=kind)


@dataclass
class NodeState:
    """Snapshot of one node's storage.

    ``main_queues[c]`` and ``dup_buffers[c]`` list packets of commodity ``c`` in
    service order.
    """

    node: int
    partner: int
    main_queues: dict[int, list[Packet]] = field(default_factory=dict)
    dup_buffers: dict[int, list[Packet]] = field(default_factory=dict)

    def q(self, c: int) -> int:
        return len(self.main_queues.get(c, ()))

    def d(self, c: int) -> int:
        return len(self.dup_buffers.get(c, ()))


def partner(n: int) -> int:
    """Pairing is fixed as 2i <-> 2i+1."""
    return n ^ 1


@dataclass(frozen=True)
class SimConfig:
    cells: int
    nodes: int
    arrival_rate: float
    variant: Variant = Variant.RB
    slots: int = 100_000
    seed: int = 0
    warmup: int = 0
    q_th: int = 1
    d_max: int = 1
    timeout: int | None = None
    snw_copies: int | None = None
    random_tiebreak: bool = False
    sample_stride: int = 10
    slope_tol: float = 1e-3
    experiment: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))

    @property
    def timeout_slots(self) -> int:
        return self.cells if self.timeout is None else self.timeout

    @property
    def copies(self) -> int:
        if self.snw_copies is not None:
            return self.snw_copies
        return max(1, math.ceil(self.nodes / 10))

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)


def validate_config(cfg: SimConfig) -> SimConfig:
    def fail(msg):
        raise ConfigError(msg)

    for name in ("cells", "nodes", "slots", "d_max", "sample_stride"):
        v = getattr(cfg, name)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            fail(f"{name} must be a positive integer, got {v!r}")
    if cfg.nodes % 2:
        fail(f"odd node count {cfg.nodes}: nodes must pair up")
    lam = cfg.arrival_rate
    if not isinstance(lam, (int, float)) or math.isnan(lam) or not 0.0 <= lam <= 1.0:
        fail(f"arrival rate must lie in [0, 1], got {lam!r}")
    if cfg.q_th < 0:
        fail(f"q_th must be nonnegative, got {cfg.q_th}")
    if cfg.warmup < 0 or cfg.warmup >= cfg.slots:
        fail(f"warmup must satisfy 0 <= warmup < slots, got {cfg.warmup} (slots={cfg.slots})")
    if cfg.timeout is not None and cfg.timeout < 1:
        fail(f"timeout must be a positive number of slots, got {cfg.timeout}")
    if cfg.snw_copies is not None and cfg.snw_copies < 1:
        fail(f"snw_copies must be positive, got {cfg.snw_copies}")
    if not 0 <= cfg.seed < 2**64:
        fail(f"seed must be a 64-bit unsigned integer, got {cfg.seed}")
    if cfg.slope_tol <= 0:
        fail("slope_tol must be positive")
    if cfg.nodes >= 2**15:
        fail("node count too large")
    return cfg


def recommended_nodes(cells: int) -> int:
    """Node count that maximizes throughput for a given number of cells."""
    if cells < 1:
        raise ValueError("cells must be >= 1")
    if cells in REFERENCE_NODE_COUNTS:
        return REFERENCE_NODE_COUNTS[cells]
    return max(2, 2 * round(NODES_PER_CELL * cells / 2))
