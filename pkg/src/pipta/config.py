"""Solver configurations: parsing, formatting and enumeration."""
from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass

from .graph import Representation


class Engine(enum.Enum):
    NAIVE = "Naive"
    WORKLIST = "WL"


class Order(enum.Enum):
    FIFO = "FIFO"
    LIFO = "LIFO"
    LRF = "LRF"
    TWO_PHASE_LRF = "2LRF"
    TOPO = "TOPO"


class Cycle(enum.Enum):
    NONE = ""
    OCD = "OCD"
    HCD = "HCD"
    LCD = "LCD"
    HCD_LCD = "HCD+LCD"

    @property
    def hcd(self) -> bool:
        return self in (Cycle.HCD, Cycle.HCD_LCD)

    @property
    def lcd(self) -> bool:
        return self in (Cycle.LCD, Cycle.HCD_LCD)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    representation: Representation = Representation.IP
    ovs: bool = False
    engine: Engine = Engine.WORKLIST
    order: Order | None = Order.FIFO
    pip: bool = False
    cycle: Cycle = Cycle.NONE
    dp: bool = False

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if self.engine is Engine.NAIVE:
            if self.order is not None or self.pip or self.cycle is not Cycle.NONE or self.dp:
                out.append("the naive engine takes no worklist options")
        elif self.order is None:
            out.append("worklist engine needs an iteration order")
        if self.pip and self.representation is not Representation.IP:
            out.append("PIP requires the implicit representation")
        return out

    def __str__(self) -> str:
        parts = [self.representation.value]
        if self.ovs:
            parts.append("OVS")
        parts.append("Naive" if self.engine is Engine.NAIVE else f"WL({self.order.value})")
        if self.pip:
            parts.append("PIP")
        if self.cycle is not Cycle.NONE:
            parts.append(self.cycle.value)
        if self.dp:
            parts.append("DP")
        return "+".join(parts)

    @classmethod
    def parse(cls, text: str) -> "SolverConfig":
        return parse_config(text)


_CONFIG_RE = re.compile(
    r"^(EP|IP)(\+OVS)?\+(Naive|WL\((FIFO|LIFO|LRF|2LRF|TOPO)\))"
    r"(\+PIP)?(\+OCD|\+HCD\+LCD|\+HCD|\+LCD)?(\+DP)?$"
)


def parse_config(text: str) -> SolverConfig:
    """Parse e.g. ``IP+WL(LRF)+PIP+OCD``.

    PIP may also be written after the cycle option (``IP+WL(LRF)+OCD+PIP``).
    """
    text = text.strip()
    match = _CONFIG_RE.match(text)
    if not match and "+PIP" in text:
        # move PIP to its canonical slot right after the worklist order
        m = re.match(r"^(.*\))(.*)$", text.replace("+PIP", "", 1))
        if m:
            match = _CONFIG_RE.match(m.group(1) + "+PIP" + m.group(2))
    if not match:
        raise ConfigError(f"malformed configuration {text!r}")
    rep, ovs, engine, order, pip, cycle, dp = match.groups()
    return SolverConfig(
        representation=Representation(rep),
        ovs=bool(ovs),
        engine=Engine.NAIVE if engine == "Naive" else Engine.WORKLIST,
        order=Order(order) if order else None,
        pip=bool(pip),
        cycle=Cycle(cycle[1:]) if cycle else Cycle.NONE,
        dp=bool(dp),
    )


def enumerate_configs() -> list[SolverConfig]:
    """All valid configurations in a fixed order."""
    out = []
    for rep, ovs in itertools.product(Representation, (False, True)):
        out.append(SolverConfig(rep, ovs, Engine.NAIVE, None))
        for order, pip, cycle, dp in itertools.product(Order, (False, True), Cycle, (False, True)):
            if pip and rep is not Representation.IP:
                continue
            out.append(SolverConfig(rep, ovs, Engine.WORKLIST, order, pip, cycle, dp))
    return out


# reference configurations used by the benchmark and acceptance checks
BASELINE_IP = parse_config("IP+WL(FIFO)")
BASELINE_EP = parse_config("EP+WL(FIFO)")
PIP_FIFO = parse_config("IP+WL(FIFO)+PIP")
