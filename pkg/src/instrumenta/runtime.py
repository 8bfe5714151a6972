"""Monitoring runtime: lazy region registration, runtime filtering,
event recording and the text trace format.

A region's handle starts out unregistered, transitions exactly once to
either a valid handle or the FILTERED sentinel, and never changes
afterwards.  Enter/exit for filtered regions are cheap no-ops; for
valid handles they append events and maintain a shadow stack that
catches unbalanced instrumentation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

from .filters import FilterRuleSet, classify
from .ir import RegionDescriptor

INVALID_REGION = 0
FILTERED_REGION = 1
FIRST_VALID_HANDLE = 2


class TraceError(Exception):
    """Malformed or inconsistent trace data."""


class UnbalancedExitError(TraceError):
    """An exit did not match the innermost open enter; an instrumentation bug."""


EventKind = Literal["E", "X", "D"]


@dataclass(frozen=True)
class TraceEvent:
    """One trace record.

    Enter/Exit carry a handle and a timestamp in ticks; Definition
    records carry the full descriptor and use timestamp 0 (definitions
    are metadata, exempt from the timestamp ordering).
    """

    kind: EventKind
    timestamp: int
    handle: int
    descriptor: RegionDescriptor | None = None


@dataclass
class RegionRegistry:
    """Maps region ids to handles and descriptors; handles from 2 up."""

    handles: dict[int, int] = field(default_factory=dict)
    descriptors: dict[int, RegionDescriptor] = field(default_factory=dict)
    next_handle: int = FIRST_VALID_HANDLE


class Monitor:
    """Single-location event recorder driven by the hook pseudo-ops."""

    def __init__(self, runtime_rules: FilterRuleSet | None = None):
        self.rules = runtime_rules if runtime_rules is not None else FilterRuleSet()
        self.registry = RegionRegistry()
        self.events: list[TraceEvent] = []
        self.shadow_stack: list[int] = []

    def register_region(self, d: RegionDescriptor) -> tuple[int, bool]:
        """Idempotent registration; returns (handle, first_time).

        The first call classifies the descriptor under the runtime
        rules: excluded regions get the FILTERED sentinel and no
        Definition record; otherwise the next valid handle is assigned
        and a Definition appended.  Later calls return the stored
        handle with no side effects.
        """
        rid = d.region_id
        existing = self.registry.handles.get(rid)
        if existing is not None:
            return existing, False
        decision = classify(self.rules, d.canonical_name, d.name, d.file)
        if decision.outcome == "filtered":
            handle = FILTERED_REGION
        else:
            handle = self.registry.next_handle
            self.registry.next_handle += 1
            # In the trace domain regions are identified by handle; the
            # module-local region id is not serialized.
            self.events.append(
                TraceEvent("D", 0, handle, replace(d, region_id=handle))
            )
        self.registry.handles[rid] = handle
        self.registry.descriptors[rid] = d
        return handle, True

    def handle_for(self, region_id: int) -> int:
        return self.registry.handles.get(region_id, INVALID_REGION)

    def on_enter(self, handle: int, ts: int) -> None:
        if handle == INVALID_REGION:
            raise TraceError("enter with unregistered handle")
        if handle == FILTERED_REGION:
            return
        self.events.append(TraceEvent("E", ts, handle))
        self.shadow_stack.append(handle)

    def on_exit(self, handle: int, ts: int) -> None:
        if handle == INVALID_REGION:
            raise TraceError("exit with unregistered handle")
        if handle == FILTERED_REGION:
            return
        if not self.shadow_stack or self.shadow_stack[-1] != handle:
            top = self.shadow_stack[-1] if self.shadow_stack else None
            raise UnbalancedExitError(
                f"exit for handle {handle} while top of stack is {top}"
            )
        self.shadow_stack.pop()
        self.events.append(TraceEvent("X", ts, handle))


def register_region(
    reg: RegionRegistry, d: RegionDescriptor, runtime_rules: FilterRuleSet
) -> int:
    """Functional wrapper over Monitor registration for a bare registry."""
    m = Monitor(runtime_rules)
    m.registry = reg
    handle, _ = m.register_region(d)
    return handle


# ---------------------------------------------------------------------------
# Trace serialization.  One record per line:
#   D <handle> "<pretty>" "<canonical>" "<file>" <begin>:<end>
#   E <timestamp> <handle>
#   X <timestamp> <handle>


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_trace(events: list[TraceEvent]) -> str:
    lines: list[str] = []
    for ev in events:
        if ev.kind == "D":
            d = ev.descriptor
            assert d is not None
            lines.append(
                f"D {ev.handle} {_quote(d.name)} {_quote(d.canonical_name)}"
                f" {_quote(d.file)} {d.begin_lno}:{d.end_lno}"
            )
        else:
            lines.append(f"{ev.kind} {ev.timestamp} {ev.handle}")
    return "".join(line + "\n" for line in lines)


def _split_trace_line(line: str, lineno: int) -> list[str]:
    # Whitespace-separated fields with quoted strings as single fields.
    fields: list[str] = []
    i = 0
    n = len(line)
    while i < n:
        if line[i] == " ":
            i += 1
            continue
        if line[i] == '"':
            j = i + 1
            out: list[str] = []
            while j < n:
                if line[j] == "\\":
                    if j + 1 >= n or line[j + 1] not in ('"', "\\"):
                        raise TraceError(f"line {lineno}: bad escape")
                    out.append(line[j + 1])
                    j += 2
                    continue
                if line[j] == '"':
                    break
                out.append(line[j])
                j += 1
            else:
                raise TraceError(f"line {lineno}: unterminated string")
            fields.append("".join(out))
            i = j + 1
        else:
            j = line.find(" ", i)
            if j == -1:
                j = n
            fields.append(line[i:j])
            i = j
    return fields


def read_trace(text: str) -> list[TraceEvent]:
    """Parse and validate a trace.

    Rejects malformed lines, enter/exit for handles without a prior
    definition, decreasing timestamps, and any nesting violation (an
    exit must match the innermost open enter; everything opened must be
    closed by the end).
    """
    events: list[TraceEvent] = []
    known: set[int] = set()
    stack: list[int] = []
    last_ts = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = _split_trace_line(line, lineno)
        kind = fields[0]
        if kind == "D":
            if len(fields) != 6:
                raise TraceError(f"line {lineno}: malformed D record")
            try:
                handle = int(fields[1])
                begin_s, _, end_s = fields[5].partition(":")
                begin, end = int(begin_s), int(end_s)
            except ValueError:
                raise TraceError(f"line {lineno}: malformed D record") from None
            if handle < FIRST_VALID_HANDLE:
                raise TraceError(f"line {lineno}: handle {handle} is a sentinel")
            if handle in known:
                raise TraceError(f"line {lineno}: handle {handle} defined twice")
            known.add(handle)
            events.append(
                TraceEvent(
                    "D",
                    0,
                    handle,
                    RegionDescriptor(
                        region_id=handle,
                        name=fields[2],
                        canonical_name=fields[3],
                        file=fields[4],
                        begin_lno=begin,
                        end_lno=end,
                    ),
                )
            )
        elif kind in ("E", "X"):
            if len(fields) != 3:
                raise TraceError(f"line {lineno}: malformed {kind} record")
            try:
                ts = int(fields[1])
                handle = int(fields[2])
            except ValueError:
                raise TraceError(f"line {lineno}: malformed {kind} record") from None
            if handle not in known:
                raise TraceError(f"line {lineno}: unknown handle {handle}")
            if ts < last_ts:
                raise TraceError(f"line {lineno}: decreasing timestamp {ts}")
            last_ts = ts
            if kind == "E":
                stack.append(handle)
            else:
                if not stack or stack[-1] != handle:
                    raise UnbalancedExitError(
                        f"line {lineno}: exit {handle} does not match innermost enter"
                    )
                stack.pop()
            events.append(TraceEvent(kind, ts, handle))
        else:
            raise TraceError(f"line {lineno}: unknown record kind '{kind}'")
    if stack:
        raise UnbalancedExitError(f"trace ends with {len(stack)} open region(s)")
    return events


def read_trace_descriptor(events: list[TraceEvent], handle: int) -> RegionDescriptor:
    for ev in events:
        if ev.kind == "D" and ev.handle == handle:
            assert ev.descriptor is not None
            return ev.descriptor
    raise TraceError(f"no definition for handle {handle}")
