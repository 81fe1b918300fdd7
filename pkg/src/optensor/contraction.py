"""Circuit-trace contraction of labeled operators.

A repeated wire id joins an output leg to an input leg; contracting it
multiplies the two operators in that subsystem and partial-traces it out.
Execution follows a pairwise plan; any valid plan yields the same result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimMismatchError, LabelArityError
from .notation import WireLabel
from .operators import LabeledOperator, tensor_product


@dataclass(frozen=True)
class PlanStep:
    """One pairwise contraction: operands by index, wires contracted, produced size."""

    left: int
    right: int
    over: tuple[WireLabel, ...]
    result_dim: int
    result_index: int

    def __str__(self) -> str:
        wires = " ".join(str(w) for w in self.over)
        return f"contract {self.left} {self.right} over [{wires}] -> dim {self.result_dim}"


@dataclass(frozen=True)
class ContractionPlan:
    """An ordered pairwise plan over an operand list.

    ``peak_dim`` is the largest total dimension any produced intermediate
    reaches while executing the steps.
    """

    n_operands: int
    steps: tuple[PlanStep, ...]
    peak_dim: int

    def dump(self) -> str:
        return "\n".join(str(s) for s in self.steps)


def _check_wiring(ops: Sequence[LabeledOperator]) -> None:
    seen: dict[int, tuple[int, object]] = {}
    for i, op in enumerate(ops):
        for leg in op.legs:
            if leg.id not in seen:
                seen[leg.id] = (1, leg)
                continue
            count, first = seen[leg.id]
            if count >= 2:
                raise LabelArityError(f"wire id {leg.id} appears more than twice")
            if first.role == leg.role:
                raise LabelArityError(f"wire id {leg.id} appears twice as {leg.role}")
            if first.sys != leg.sys or first.dim != leg.dim:
                raise DimMismatchError(
                    f"wire id {leg.id} joins {first.sys}(dim {first.dim}) "
                    f"to {leg.sys}(dim {leg.dim})"
                )
            seen[leg.id] = (2, first)


def contract_pair(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Contract all wire ids shared by two operators (tensor product if none).

    Each shared wire pairs the producer's ket with the consumer's bra and
    vice versa, i.e. the operators are multiplied in the shared subsystem
    which is then traced out.
    """
    shared = [leg.id for leg in a.legs if leg.id in set(b.ids)]
    if not shared:
        return tensor_product(a, b)
    for wid in shared:
        la, lb = a.leg(wid), b.leg(wid)
        if la.role == lb.role:
            raise LabelArityError(f"wire id {wid} appears twice as {la.role}")
        if la.sys != lb.sys or la.dim != lb.dim:
            raise DimMismatchError(
                f"wire id {wid} joins {la.sys}(dim {la.dim}) to {lb.sys}(dim {lb.dim})"
            )
    ka, kb = len(a.legs), len(b.legs)
    sub_a = list(range(2 * ka))  # leg i: ket i, bra ka+i
    sub_b = [0] * (2 * kb)
    next_sym = 2 * ka
    shared_set = set(shared)
    for j, leg in enumerate(b.legs):
        if leg.id in shared_set:
            i = a.ids.index(leg.id)
            sub_b[j] = sub_a[ka + i]      # consumer/producer ket takes partner bra
            sub_b[kb + j] = sub_a[i]      # and bra takes partner ket
        else:
            sub_b[j] = next_sym
            sub_b[kb + j] = next_sym + 1
            next_sym += 2
    open_a = [i for i, leg in enumerate(a.legs) if leg.id not in shared_set]
    open_b = [j for j, leg in enumerate(b.legs) if leg.id not in shared_set]
    out = (
        [sub_a[i] for i in open_a]
        + [sub_b[j] for j in open_b]
        + [sub_a[ka + i] for i in open_a]
        + [sub_b[kb + j] for j in open_b]
    )
    raw = np.einsum(a.tensor(), sub_a, b.tensor(), sub_b, out)
    legs = tuple(a.legs[i] for i in open_a) + tuple(b.legs[j] for j in open_b)
    dim = int(np.prod([leg.dim for leg in legs])) if legs else 1
    return LabeledOperator(legs, raw.reshape(dim, dim), min(a.tol, b.tol))


def plan_contraction(ops: Sequence[LabeledOperator]) -> ContractionPlan:
    """Greedy pairwise plan: always contract the sharing pair whose product
    has the smallest total dimension; ties go to the lowest operand indices.

    Disjoint groups are never contracted against each other until the final
    tensor-product steps that assemble the single result.
    """
    _check_wiring(ops)
    legs_of: dict[int, tuple] = {i: op.legs for i, op in enumerate(ops)}
    steps: list[PlanStep] = []
    next_index = len(ops)
    peak = max((op.dim for op in ops), default=1)

    def result_of(i: int, j: int) -> tuple[tuple, int, tuple[WireLabel, ...]]:
        ids_j = {leg.id for leg in legs_of[j]}
        ids_i = {leg.id for leg in legs_of[i]}
        over = tuple(leg.wire for leg in legs_of[i] if leg.id in ids_j)
        legs = tuple(l for l in legs_of[i] if l.id not in ids_j) + tuple(
            l for l in legs_of[j] if l.id not in ids_i
        )
        dim = int(np.prod([l.dim for l in legs])) if legs else 1
        return legs, dim, over

    while True:
        active = sorted(legs_of)
        best = None
        for x, i in enumerate(active):
            ids_i = {leg.id for leg in legs_of[i]}
            for j in active[x + 1:]:
                if not any(leg.id in ids_i for leg in legs_of[j]):
                    continue
                _, dim, _ = result_of(i, j)
                key = (dim, i, j)
                if best is None or key < best:
                    best = key
        if best is None:
            break
        _, i, j = best
        legs, dim, over = result_of(i, j)
        steps.append(PlanStep(i, j, over, dim, next_index))
        legs_of[next_index] = legs
        del legs_of[i], legs_of[j]
        peak = max(peak, dim)
        next_index += 1

    remaining = sorted(legs_of)
    while len(remaining) > 1:
        i, j = remaining[0], remaining[1]
        legs = legs_of[i] + legs_of[j]
        dim = int(np.prod([l.dim for l in legs])) if legs else 1
        steps.append(PlanStep(i, j, (), dim, next_index))
        legs_of[next_index] = legs
        del legs_of[i], legs_of[j]
        peak = max(peak, dim)
        remaining = [next_index] + remaining[2:]
        next_index += 1

    return ContractionPlan(len(ops), tuple(steps), peak)


def plan_left_to_right(ops: Sequence[LabeledOperator]) -> ContractionPlan:
    """Sequential fold plan, used to cross-check plan independence."""
    _check_wiring(ops)
    if not ops:
        return ContractionPlan(0, (), 1)
    legs_of = {i: op.legs for i, op in enumerate(ops)}
    steps: list[PlanStep] = []
    peak = max(op.dim for op in ops)
    acc = 0
    next_index = len(ops)
    for j in range(1, len(ops)):
        ids_j = {leg.id for leg in legs_of[j]}
        ids_acc = {leg.id for leg in legs_of[acc]}
        over = tuple(l.wire for l in legs_of[acc] if l.id in ids_j)
        legs = tuple(l for l in legs_of[acc] if l.id not in ids_j) + tuple(
            l for l in legs_of[j] if l.id not in ids_acc
        )
        dim = int(np.prod([l.dim for l in legs])) if legs else 1
        steps.append(PlanStep(acc, j, over, dim, next_index))
        legs_of[next_index] = legs
        peak = max(peak, dim)
        acc = next_index
        next_index += 1
    return ContractionPlan(len(ops), tuple(steps), peak)


def execute_plan(ops: Sequence[LabeledOperator], plan: ContractionPlan) -> LabeledOperator:
    operands: dict[int, LabeledOperator] = dict(enumerate(ops))
    for step in plan.steps:
        left = operands.pop(step.left)
        right = operands.pop(step.right)
        operands[step.result_index] = contract_pair(left, right)
    if not operands:
        from .operators import scalar_operator

        return scalar_operator(1.0)
    if len(operands) != 1:
        raise ValueError("plan did not reduce to a single operand")
    (result,) = operands.values()
    open_order = [
        leg.id for op in ops for leg in op.legs if leg.id in set(result.ids)
    ]
    return result.permuted(open_order)


def circuit_trace(
    ops: Sequence[LabeledOperator], planner: str = "greedy"
) -> LabeledOperator:
    """Contract every repeated wire id across the operand list.

    Returns the operator on the non-repeated legs, ordered as they first
    appear in the operand scan; with no open legs the result is a 1x1 scalar
    operator.
    """
    if planner == "greedy":
        plan = plan_contraction(ops)
    elif planner == "left-to-right":
        plan = plan_left_to_right(ops)
    else:
        raise ValueError(f"unknown planner {planner!r}")
    return execute_plan(ops, plan)
