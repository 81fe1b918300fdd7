"""Symbolic circuit notation: parsing, printing, validation, and causal analysis.

Circuits are written as whitespace-separated operations.  Each operation is a
name followed by optional input/output port blocks, with inputs as a
subscript block and outputs as a superscript block::

    A^{a1 b2} B^{a3 d4} C_{b2 a3}^{a5} D_{a1}^{b6} E_{a5 d4}^{c7} F_{b6 c7}

A wire is a label id that occurs once as an output and once as an input of
the same system type.  Ids carry no meaning beyond identifying wires, so the
order of operations in the text is irrelevant.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import (
    CircuitSyntaxError,
    ClosedLoop,
    OneWireViolation,
    TypeMismatch,
)

INPUT = "input"
OUTPUT = "output"

CIRCUIT = "circuit"
PREPARATION = "preparation"
RESULT = "result"
TRANSFORMATION_FRAGMENT = "transformation-fragment"
GENERAL_FRAGMENT = "general-fragment"


@dataclass(frozen=True)
class SystemType:
    """A named wire type with Hilbert-space dimension ``dim``."""

    name: str
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"system type {self.name!r} needs dim >= 1, got {self.dim}")

    @property
    def fiducial_count(self) -> int:
        return self.dim * self.dim


@dataclass(frozen=True, order=True)
class WireLabel:
    """A typed, integer-labelled port, e.g. ``a1``."""

    sys: str
    id: int

    def __str__(self) -> str:
        return f"{self.sys}{self.id}"


@dataclass(frozen=True)
class OperationDecl:
    """One operation instance: a name plus ordered input and output ports."""

    name: str
    inputs: tuple[WireLabel, ...]
    outputs: tuple[WireLabel, ...]

    @property
    def labels(self) -> tuple[WireLabel, ...]:
        return self.inputs + self.outputs

    def __str__(self) -> str:
        text = self.name
        if self.inputs:
            text += "_{" + " ".join(str(w) for w in self.inputs) + "}"
        if self.outputs:
            text += "^{" + " ".join(str(w) for w in self.outputs) + "}"
        return text


@dataclass(frozen=True)
class InternalWire:
    """A wire joining the output slot of one operation to the input slot of another."""

    producer: int
    out_slot: int
    consumer: int
    in_slot: int
    label: WireLabel


@dataclass(frozen=True)
class CircuitFragment:
    """A validated DAG of operations connected by typed wires.

    ``open_inputs``/``open_outputs`` list the unwired ports;
    ``internal_wires`` the producer/consumer pairs.  Use
    :func:`fragment_from_ops` or :func:`parse_circuit` to construct one.
    """

    ops: tuple[OperationDecl, ...]
    open_inputs: tuple[WireLabel, ...]
    open_outputs: tuple[WireLabel, ...]
    internal_wires: tuple[InternalWire, ...]

    @property
    def kind(self) -> str:
        if not self.open_inputs and not self.open_outputs:
            return CIRCUIT
        if not self.open_inputs:
            return PREPARATION
        if not self.open_outputs:
            return RESULT
        return TRANSFORMATION_FRAGMENT

    def op_edges(self) -> set[tuple[int, int]]:
        """Directed producer->consumer edges between operation indices."""
        return {(w.producer, w.consumer) for w in self.internal_wires}

    def __str__(self) -> str:
        return " ".join(str(op) for op in self.ops)


# ---------------------------------------------------------------------------
# Parsing

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9]*")
_LABEL_RE = re.compile(r"([A-Za-z]+)([0-9]+)")
_WS_RE = re.compile(r"\s+")


def _parse_label_block(text: str, pos: int) -> tuple[list[WireLabel], int]:
    """Parse ``{label label ...}`` starting at the opening brace."""
    if pos >= len(text) or text[pos] != "{":
        raise CircuitSyntaxError("malformed port block", pos, "'{'")
    pos += 1
    labels: list[WireLabel] = []
    while True:
        ws = _WS_RE.match(text, pos)
        if ws:
            pos = ws.end()
        if pos >= len(text):
            raise CircuitSyntaxError("unterminated port block", pos, "'}'")
        if text[pos] == "}":
            if not labels:
                raise CircuitSyntaxError("empty port block", pos, "label")
            return labels, pos + 1
        if labels and not ws:
            raise CircuitSyntaxError("labels must be separated", pos, "whitespace or '}'")
        m = _LABEL_RE.match(text, pos)
        if not m:
            raise CircuitSyntaxError("malformed label", pos, "label like 'a1'")
        sys_name, id_text = m.group(1), m.group(2)
        wire_id = int(id_text)
        if wire_id < 1:
            raise CircuitSyntaxError("wire ids are positive", pos, "integer >= 1")
        labels.append(WireLabel(sys_name, wire_id))
        pos = m.end()


def _parse_op(text: str, pos: int) -> tuple[OperationDecl, int]:
    m = _NAME_RE.match(text, pos)
    if not m:
        raise CircuitSyntaxError("malformed operation", pos, "operation name")
    name = m.group(0)
    pos = m.end()
    inputs: list[WireLabel] | None = None
    outputs: list[WireLabel] | None = None
    while pos < len(text) and text[pos] in "^_":
        marker = text[pos]
        if marker == "^":
            if outputs is not None:
                raise CircuitSyntaxError("second superscript block", pos, "at most one '^{...}'")
            outputs, pos = _parse_label_block(text, pos + 1)
        else:
            if inputs is not None:
                raise CircuitSyntaxError("second subscript block", pos, "at most one '_{...}'")
            inputs, pos = _parse_label_block(text, pos + 1)
    return OperationDecl(name, tuple(inputs or ()), tuple(outputs or ())), pos


def parse_circuit(text: str) -> CircuitFragment:
    """Parse DSL text into a validated :class:`CircuitFragment`.

    Raises :class:`CircuitSyntaxError` on grammar violations and the
    :class:`WiringError` subclasses on wiring-rule violations.
    """
    ops: list[OperationDecl] = []
    pos = 0
    while pos < len(text):
        ws = _WS_RE.match(text, pos)
        if ws:
            pos = ws.end()
            continue
        op, pos = _parse_op(text, pos)
        ops.append(op)
    return fragment_from_ops(ops)


def fragment_from_ops(ops: Iterable[OperationDecl]) -> CircuitFragment:
    """Validate wiring rules and assemble a fragment from operation declarations."""
    ops = tuple(ops)
    # occurrences[id] -> list of (op index, role, slot, label)
    occurrences: dict[int, list[tuple[int, str, int, WireLabel]]] = {}
    for i, op in enumerate(ops):
        for slot, lab in enumerate(op.inputs):
            occurrences.setdefault(lab.id, []).append((i, INPUT, slot, lab))
        for slot, lab in enumerate(op.outputs):
            occurrences.setdefault(lab.id, []).append((i, OUTPUT, slot, lab))

    open_inputs: list[WireLabel] = []
    open_outputs: list[WireLabel] = []
    wires: list[InternalWire] = []
    for wire_id, occ in sorted(occurrences.items()):
        if len(occ) > 2:
            where = ", ".join(f"{ops[i].name}.{role}" for i, role, _, _ in occ)
            raise OneWireViolation(f"id {wire_id} used {len(occ)} times ({where})")
        if len(occ) == 1:
            i, role, slot, lab = occ[0]
            (open_inputs if role == INPUT else open_outputs).append(lab)
            continue
        (i1, r1, s1, l1), (i2, r2, s2, l2) = occ
        if r1 == r2:
            raise OneWireViolation(
                f"id {wire_id} appears twice as {r1} ({ops[i1].name}, {ops[i2].name})"
            )
        if l1.sys != l2.sys:
            raise TypeMismatch(
                f"id {wire_id} typed both {l1.sys!r} and {l2.sys!r} "
                f"({ops[i1].name}, {ops[i2].name})"
            )
        if r1 == OUTPUT:
            wires.append(InternalWire(i1, s1, i2, s2, l1))
        else:
            wires.append(InternalWire(i2, s2, i1, s1, l2))

    _check_acyclic(ops, wires)
    # open ports in declaration order
    open_inputs = [lab for op in ops for lab in op.inputs if lab in set(open_inputs)]
    open_outputs = [lab for op in ops for lab in op.outputs if lab in set(open_outputs)]
    return CircuitFragment(ops, tuple(open_inputs), tuple(open_outputs), tuple(wires))


def _check_acyclic(ops: tuple[OperationDecl, ...], wires: list[InternalWire]) -> None:
    succ: dict[int, set[int]] = {i: set() for i in range(len(ops))}
    for w in wires:
        if w.producer == w.consumer:
            raise ClosedLoop(f"{ops[w.producer].name} -> {ops[w.producer].name}")
        succ[w.producer].add(w.consumer)
    state = [0] * len(ops)  # 0 unseen, 1 on stack, 2 done
    stack: list[int] = []

    def visit(node: int) -> None:
        state[node] = 1
        stack.append(node)
        for nxt in sorted(succ[node]):
            if state[nxt] == 1:
                cycle = stack[stack.index(nxt):] + [nxt]
                raise ClosedLoop(" -> ".join(ops[i].name for i in cycle))
            if state[nxt] == 0:
                visit(nxt)
        stack.pop()
        state[node] = 2

    for start in range(len(ops)):
        if state[start] == 0:
            visit(start)


# ---------------------------------------------------------------------------
# Canonical form and printing


def _renumber(ops: tuple[OperationDecl, ...]) -> tuple[OperationDecl, ...]:
    mapping: dict[int, int] = {}
    out: list[OperationDecl] = []
    for op in ops:
        def renum(labels: tuple[WireLabel, ...]) -> tuple[WireLabel, ...]:
            fresh = []
            for lab in labels:
                if lab.id not in mapping:
                    mapping[lab.id] = len(mapping) + 1
                fresh.append(WireLabel(lab.sys, mapping[lab.id]))
            return tuple(fresh)

        out.append(OperationDecl(op.name, renum(op.inputs), renum(op.outputs)))
    return tuple(out)


def _sort_key(op: OperationDecl):
    ids = sorted(lab.id for lab in op.labels)
    return (
        op.name,
        ids[0] if ids else 0,
        tuple(ids),
        tuple(lab.id for lab in op.inputs),
        tuple(lab.id for lab in op.outputs),
        tuple(lab.sys for lab in op.labels),
    )


def canonicalize(frag: CircuitFragment) -> CircuitFragment:
    """Sort operations by name/labels and renumber wire ids 1..n.

    The sort-then-renumber pass is iterated to a fixed point (renumbering can
    perturb the tie-break between same-named operations); if the iteration
    cycles, the lexicographically smallest printed form in the cycle is
    chosen, which makes the whole map idempotent.
    """
    seen: dict[str, int] = {}
    trail: list[CircuitFragment] = []
    current = frag
    while True:
        ops = _renumber(tuple(sorted(current.ops, key=_sort_key)))
        current = fragment_from_ops(ops)
        text = str(current)
        if text in seen:
            cycle = trail[seen[text]:]
            return min(cycle, key=str)
        seen[text] = len(trail)
        trail.append(current)


def print_circuit(frag: CircuitFragment) -> str:
    """Render the canonical form of a fragment as DSL text."""
    return str(canonicalize(frag))


# ---------------------------------------------------------------------------
# Causal structure


@dataclass(frozen=True)
class CausalStructure:
    """Reachability from output ports to input ports through the wiring.

    ``pairs`` holds ``(out_label, in_label)`` whenever a directed path of at
    least one wire leads from the operation producing ``out_label`` to the
    operation consuming ``in_label``.
    """

    pairs: frozenset[tuple[WireLabel, WireLabel]]
    open_output_labels: tuple[WireLabel, ...]
    open_input_labels: tuple[WireLabel, ...]

    def reaches(self, out_label: WireLabel, in_label: WireLabel) -> bool:
        return (out_label, in_label) in self.pairs

    def open_pairs(self) -> frozenset[tuple[WireLabel, WireLabel]]:
        """Restriction of the relation to the fragment's open ports."""
        outs = set(self.open_output_labels)
        ins = set(self.open_input_labels)
        return frozenset((o, i) for o, i in self.pairs if o in outs and i in ins)


def causal_structure(frag: CircuitFragment) -> CausalStructure:
    """Compute which outputs can feed (directly or indirectly) into which inputs."""
    n = len(frag.ops)
    reach = [[False] * n for _ in range(n)]
    for w in frag.internal_wires:
        reach[w.producer][w.consumer] = True
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                row_k = reach[k]
                row_i = reach[i]
                for j in range(n):
                    if row_k[j]:
                        row_i[j] = True
    producers = [(i, lab) for i, op in enumerate(frag.ops) for lab in op.outputs]
    consumers = [(j, lab) for j, op in enumerate(frag.ops) for lab in op.inputs]
    pairs = frozenset(
        (out_lab, in_lab)
        for i, out_lab in producers
        for j, in_lab in consumers
        if reach[i][j]
    )
    return CausalStructure(pairs, frag.open_outputs, frag.open_inputs)


# ---------------------------------------------------------------------------
# Foliation


@dataclass(frozen=True)
class PaddingIdentity:
    """An identity transformation inserted for a wire crossing a layer it does not act in."""

    wire: WireLabel
    layer: int


@dataclass(frozen=True)
class Foliation:
    """An ordered layering of the circuit DAG into antichains.

    ``layers`` holds operation indices; after inserting the recorded padding
    identities every wire runs from one layer to the strictly next one.
    """

    layers: tuple[tuple[int, ...], ...]
    paddings: tuple[PaddingIdentity, ...]

    def layer_of(self, op_index: int) -> int:
        for k, layer in enumerate(self.layers):
            if op_index in layer:
                return k
        raise KeyError(op_index)


def foliate(frag: CircuitFragment, policy: str = "earliest") -> Foliation:
    """Layer the fragment's operations into time steps.

    ``policy="earliest"`` places each operation at its longest-path depth
    from the sources; ``"latest"`` pushes each as late as its successors
    allow within the same layer count.  Wires spanning more than one layer
    boundary are padded with recorded identity transformations.
    """
    n = len(frag.ops)
    if n == 0:
        return Foliation((), ())
    preds: dict[int, list[int]] = {i: [] for i in range(n)}
    succs: dict[int, list[int]] = {i: [] for i in range(n)}
    for w in frag.internal_wires:
        preds[w.consumer].append(w.producer)
        succs[w.producer].append(w.consumer)

    depth = [0] * n
    for i in _topological_order(n, preds):
        if preds[i]:
            depth[i] = 1 + max(depth[p] for p in preds[i])
    n_layers = 1 + max(depth)

    if policy == "latest":
        late = [n_layers - 1] * n
        for i in reversed(_topological_order(n, preds)):
            if succs[i]:
                late[i] = min(late[s] for s in succs[i]) - 1
        depth = late
    elif policy != "earliest":
        raise ValueError(f"unknown foliation policy {policy!r}")

    layers: list[list[int]] = [[] for _ in range(n_layers)]
    for i, d in enumerate(depth):
        layers[d].append(i)
    paddings = [
        PaddingIdentity(w.label, k)
        for w in frag.internal_wires
        for k in range(depth[w.producer] + 1, depth[w.consumer])
    ]
    return Foliation(tuple(tuple(l) for l in layers), tuple(paddings))


def _topological_order(n: int, preds: dict[int, list[int]]) -> list[int]:
    remaining = {i: len(preds[i]) for i in range(n)}
    succ: dict[int, list[int]] = {i: [] for i in range(n)}
    for i, ps in preds.items():
        for p in ps:
            succ[p].append(i)
    ready = sorted(i for i, c in remaining.items() if c == 0)
    order: list[int] = []
    while ready:
        i = ready.pop(0)
        order.append(i)
        for s in succ[i]:
            remaining[s] -= 1
            if remaining[s] == 0:
                ready.append(s)
        ready.sort()
    return order


# ---------------------------------------------------------------------------
# System-type registry


def parse_registry(text: str) -> dict[str, SystemType]:
    """Parse a system-type registry: one ``name dim`` pair per line."""
    registry: dict[str, SystemType] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or not parts[1].isdigit():
            raise ValueError(f"registry line {lineno}: expected 'name dim', got {raw!r}")
        name, dim = parts[0], int(parts[1])
        if name in registry:
            raise ValueError(f"registry line {lineno}: duplicate type {name!r}")
        registry[name] = SystemType(name, dim)
    return registry


def iter_labels(frag: CircuitFragment) -> Iterator[WireLabel]:
    for op in frag.ops:
        yield from op.labels
