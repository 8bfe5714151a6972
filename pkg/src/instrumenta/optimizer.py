"""Function inlining at optimization levels O0 through O3.

Each level fixes an instruction-count threshold; call sites whose
callee stays under it are expanded in place.  Recursive callees,
``no_inline`` callees and ``call.try`` sites are never touched, and the
pass iterates to a fixpoint under a bounded round budget.  Hook
pseudo-ops are ordinary instructions here, so instrumentation already
present in a callee travels with its body into the caller.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from .ir import (
    BasicBlock,
    Instruction,
    IrFunction,
    IrModule,
    IrValidationError,
    NUM_REGISTERS,
    validate,
)

INLINE_THRESHOLDS = {"O0": 0, "O1": 4, "O2": 16, "O3": 64}
LEVELS = ("O0", "O1", "O2", "O3")

MAX_ROUNDS = 10


@dataclass(frozen=True)
class OptLevel:
    level: str
    inline_threshold: int

    def __post_init__(self):
        if self.level not in INLINE_THRESHOLDS:
            raise ValueError(f"unknown optimization level '{self.level}'")

    @classmethod
    def named(cls, level: str) -> "OptLevel":
        if level not in INLINE_THRESHOLDS:
            raise ValueError(f"unknown optimization level '{level}'")
        return cls(level, INLINE_THRESHOLDS[level])


O0 = OptLevel.named("O0")
O1 = OptLevel.named("O1")
O2 = OptLevel.named("O2")
O3 = OptLevel.named("O3")


@dataclass(frozen=True)
class InlineSite:
    caller: str
    callee: str
    block: str
    index: int


@dataclass
class InlineReport:
    inlined_sites: list[InlineSite] = field(default_factory=list)
    skipped: list[tuple[InlineSite, str]] = field(default_factory=list)


def inline_cost(f: IrFunction) -> int:
    """Total instruction count of the body; hooks count like any other."""
    if f.is_extern:
        raise ValueError(f"extern function @{f.mangled_name} has no body cost")
    return sum(len(b.instructions) for b in f.blocks)


def _call_graph(m: IrModule) -> dict[str, set[str]]:
    graph: dict[str, set[str]] = {}
    for f in m.functions:
        edges: set[str] = set()
        for b in f.blocks:
            for ins in b.instructions:
                target = ins.call_target()
                if target is not None:
                    edges.add(target)
        graph[f.mangled_name] = edges
    return graph


def _recursive_functions(graph: dict[str, set[str]]) -> set[str]:
    # A function is recursive when it can reach itself along call edges.
    out: set[str] = set()
    for start in graph:
        stack = list(graph.get(start, ()))
        seen: set[str] = set()
        while stack:
            node = stack.pop()
            if node == start:
                out.add(start)
                break
            if node in seen:
                continue
            seen.add(node)
            stack.extend(graph.get(node, ()))
    return out


def _used_registers(f: IrFunction) -> set[int]:
    used: set[int] = set()
    for b in f.blocks:
        for ins in b.instructions:
            used.update(_instr_registers(ins))
    return used


def _instr_registers(ins: Instruction) -> tuple[int, ...]:
    op = ins.op
    if op in ("li", "work"):
        return (ins.args[0],) if op == "li" else ()
    if op == "addi":
        return (ins.args[0], ins.args[1])
    if op == "add":
        return ins.args
    if op == "jnz":
        return (ins.args[0],)
    if op == "ret":
        return ins.args
    if op in ("call", "call.try"):
        return ins.call_arg_regs()
    return ()


def _remap_registers(ins: Instruction, rmap: dict[int, int]) -> Instruction:
    op = ins.op
    if op == "li":
        return Instruction(op, (rmap[ins.args[0]], ins.args[1]))
    if op == "addi":
        return Instruction(op, (rmap[ins.args[0]], rmap[ins.args[1]], ins.args[2]))
    if op == "add":
        return Instruction(op, tuple(rmap[r] for r in ins.args))
    if op == "jnz":
        return Instruction(op, (rmap[ins.args[0]], ins.args[1], ins.args[2]))
    if op == "ret":
        return Instruction(op, tuple(rmap[r] for r in ins.args))
    if op == "call":
        return Instruction(op, (ins.args[0], *(rmap[r] for r in ins.args[1:])))
    if op == "call.try":
        regs = tuple(rmap[r] for r in ins.call_arg_regs())
        return Instruction(op, (ins.args[0], *regs, ins.args[-2], ins.args[-1]))
    return ins


def _remap_labels(ins: Instruction, lmap: dict[str, str]) -> Instruction:
    op = ins.op
    if op == "jmp":
        return Instruction(op, (lmap[ins.args[0]],))
    if op == "jnz":
        return Instruction(op, (ins.args[0], lmap[ins.args[1]], lmap[ins.args[2]]))
    if op == "call.try":
        return Instruction(
            op, (*ins.args[:-2], lmap[ins.args[-2]], lmap[ins.args[-1]])
        )
    return ins


class _Inliner:
    def __init__(self, module: IrModule, threshold: int):
        self.module = module
        self.threshold = threshold
        self.report = InlineReport()
        graph = _call_graph(module)
        self.recursive = _recursive_functions(graph)
        # Eligibility is judged on the input module's costs so that the
        # site set grows monotonically with the level.
        self.frozen_cost = {
            f.mangled_name: inline_cost(f)
            for f in module.functions
            if not f.is_extern
        }
        self.fresh = 0

    def ineligible_reason(self, callee_name: str) -> str | None:
        if not self.module.has_function(callee_name):
            return "undefined"
        callee = self.module.function(callee_name)
        if callee.is_extern:
            return "extern"
        if callee_name in self.recursive:
            return "recursive"
        if "no_inline" in callee.attrs:
            return "no_inline"
        if self.frozen_cost[callee_name] > self.threshold:
            return f"cost {self.frozen_cost[callee_name]} over threshold"
        return None

    def run(self) -> None:
        for _ in range(MAX_ROUNDS):
            if not self.one_round():
                return

    def one_round(self) -> bool:
        changed = False
        for f in self.module.functions:
            if f.is_extern:
                continue
            changed |= self.scan_function(f)
        return changed

    def scan_function(self, caller: IrFunction) -> bool:
        changed = False
        bi = 0
        while bi < len(caller.blocks):
            block = caller.blocks[bi]
            ii = 0
            while ii < len(block.instructions):
                ins = block.instructions[ii]
                if ins.op != "call":
                    if ins.op == "call.try":
                        site = InlineSite(
                            caller.mangled_name, ins.args[0], block.label, ii
                        )
                        self.note_skip(site, "exception-edge")
                    ii += 1
                    continue
                site = InlineSite(caller.mangled_name, ins.args[0], block.label, ii)
                reason = self.ineligible_reason(ins.args[0])
                if reason is not None:
                    self.note_skip(site, reason)
                    ii += 1
                    continue
                callee = self.module.function(ins.args[0])
                rmap = self.register_map(caller, callee)
                if rmap is None:
                    self.note_skip(site, "register-pressure")
                    ii += 1
                    continue
                inserted = self.inline_at(caller, bi, ii, ins, callee, rmap)
                self.report.inlined_sites.append(site)
                changed = True
                if inserted >= 0:
                    # Skip the spliced body; calls copied from the callee
                    # are picked up in the next round.
                    ii += inserted
                else:
                    # Multi-block expansion: resume at the continuation
                    # block, which now holds the rest of this block.
                    break
            else:
                bi += 1
                continue
            bi = self.block_index(caller, self.last_cont_label)
        return changed

    def note_skip(self, site: InlineSite, reason: str) -> None:
        if (site, reason) not in self.report.skipped:
            self.report.skipped.append((site, reason))

    def block_index(self, f: IrFunction, label: str) -> int:
        for i, b in enumerate(f.blocks):
            if b.label == label:
                return i
        raise KeyError(label)

    def register_map(
        self, caller: IrFunction, callee: IrFunction
    ) -> dict[int, int] | None:
        callee_regs = sorted(_used_registers(callee))
        if not callee_regs:
            return {}
        free = [r for r in range(NUM_REGISTERS) if r not in _used_registers(caller)]
        if len(free) < len(callee_regs):
            return None
        return dict(zip(callee_regs, free))

    def fresh_prefix(self, caller: IrFunction, callee: IrFunction) -> str:
        taken = caller.labels()
        while True:
            self.fresh += 1
            prefix = f"inl{self.fresh}"
            wanted = {f"{prefix}_{b.label}" for b in callee.blocks}
            wanted.add(f"{prefix}_cont")
            if not (wanted & taken):
                return prefix

    def inline_at(
        self,
        caller: IrFunction,
        bi: int,
        ii: int,
        call: Instruction,
        callee: IrFunction,
        rmap: dict[int, int],
    ) -> int:
        """Expand one call site.

        Returns the inserted instruction count for the in-place splice
        of a single-block callee, or -1 when the callee was expanded as
        extra blocks with a continuation.
        """
        args = call.call_arg_regs()
        # Parameters land in callee r0..r(k-1); every other callee
        # register starts at zero, so the move/zero split is keyed on
        # the register index itself.
        init: list[Instruction] = []
        for creg in sorted(_used_registers(callee)):
            if creg < len(args):
                init.append(Instruction("addi", (rmap[creg], args[creg], 0)))
            else:
                init.append(Instruction("li", (rmap[creg], 0)))

        block = caller.blocks[bi]
        single = (
            len(callee.blocks) == 1
            and callee.blocks[0].instructions
            and callee.blocks[0].instructions[-1].op == "ret"
        )
        if single:
            body = callee.blocks[0].instructions
            spliced = [_remap_registers(i, rmap) for i in body[:-1]]
            ret = body[-1]
            tail = []
            if ret.args:
                tail.append(Instruction("addi", (0, rmap[ret.args[0]], 0)))
            block.instructions[ii : ii + 1] = init + spliced + tail
            return len(init) + len(spliced) + len(tail)

        prefix = self.fresh_prefix(caller, callee)
        lmap = {b.label: f"{prefix}_{b.label}" for b in callee.blocks}
        cont_label = f"{prefix}_cont"
        self.last_cont_label = cont_label
        new_blocks: list[BasicBlock] = []
        for cb in callee.blocks:
            nb = BasicBlock(lmap[cb.label])
            for ins in cb.instructions:
                ins = _remap_registers(ins, rmap)
                if ins.op == "ret":
                    if ins.args:
                        nb.instructions.append(
                            Instruction("addi", (0, ins.args[0], 0))
                        )
                    nb.instructions.append(Instruction("jmp", (cont_label,)))
                else:
                    nb.instructions.append(_remap_labels(ins, lmap))
            new_blocks.append(nb)
        cont = BasicBlock(cont_label, block.instructions[ii + 1 :])
        block.instructions = block.instructions[:ii] + init + [
            Instruction("jmp", (lmap[callee.blocks[0].label],))
        ]
        caller.blocks[bi + 1 : bi + 1] = new_blocks + [cont]
        return -1


def inline_pass(m: IrModule, level: OptLevel) -> tuple[IrModule, InlineReport]:
    """Inline eligible call sites; O0 returns the module unchanged.

    The input module is never mutated.  Semantics are preserved: the
    transformed module computes the same exit value, with tick totals
    differing only by removed call overhead and inserted plumbing.
    """
    violations = validate(m)
    if violations:
        raise IrValidationError(violations)
    result = copy.deepcopy(m)
    if level.inline_threshold <= 0:
        return result, InlineReport()
    worker = _Inliner(result, level.inline_threshold)
    worker.run()
    return result, worker.report
