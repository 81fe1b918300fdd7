"""Shared helpers: random circuit generation with physical bindings."""

from __future__ import annotations

import numpy as np
import pytest

from optensor import (
    Leg,
    OperationDecl,
    WireLabel,
    fragment_from_ops,
    random_physical_transformation,
    random_preparation,
    random_result,
)
from optensor.notation import INPUT, OUTPUT


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)


def random_circuit(
    rng: np.random.Generator,
    max_ops: int = 8,
    type_dims: dict[str, int] | None = None,
):
    """A random closed circuit plus a physical binding for every operation.

    Built causally: preparations open wires, transformations consume live
    wires and open fresh ones, results close wires; acyclic by construction.
    Never exceeds ``max_ops`` operations.
    """
    type_dims = type_dims or {"a": 2, "b": 3}
    types = sorted(type_dims)
    next_id = 1
    decls: list[OperationDecl] = []
    binding = {}
    live: list[WireLabel] = []

    def fresh(sys: str) -> WireLabel:
        nonlocal next_id
        wire = WireLabel(sys, next_id)
        next_id += 1
        return wire

    def leg(wire: WireLabel, role: str) -> Leg:
        return Leg(wire.sys, wire.id, role, type_dims[wire.sys])

    def add_prep():
        outs = [fresh(types[rng.integers(len(types))]) for _ in range(rng.integers(1, 3))]
        name = f"Op{len(decls)}"
        decls.append(OperationDecl(name, (), tuple(outs)))
        binding[name] = random_preparation([leg(w, OUTPUT) for w in outs], rng)
        live.extend(outs)

    def take_inputs(k: int) -> list[WireLabel]:
        picks = rng.choice(len(live), size=k, replace=False)
        chosen = [live[i] for i in sorted(picks)]
        for w in chosen:
            live.remove(w)
        return chosen

    def add_transformation():
        ins = take_inputs(int(rng.integers(1, min(2, len(live)) + 1)))
        outs = [fresh(types[rng.integers(len(types))]) for _ in range(rng.integers(1, 3))]
        name = f"Op{len(decls)}"
        decls.append(OperationDecl(name, tuple(ins), tuple(outs)))
        binding[name] = random_physical_transformation(
            [leg(w, INPUT) for w in ins],
            [leg(w, OUTPUT) for w in outs],
            rng,
            trace_preserving=bool(rng.integers(2)),
        )
        live.extend(outs)

    def add_result(k: int):
        ins = take_inputs(k)
        name = f"Op{len(decls)}"
        decls.append(OperationDecl(name, tuple(ins), ()))
        binding[name] = random_result([leg(w, INPUT) for w in ins], rng)

    add_prep()
    if max_ops >= 5 and rng.integers(2):
        add_prep()
    # reserve enough result ops (two wires each) to close what is live
    while live and len(decls) + (len(live) + 1) // 2 + 2 <= max_ops:
        if len(live) >= 4 or (len(live) > 1 and rng.integers(3) == 0):
            add_result(int(rng.integers(1, 3)))
        else:
            add_transformation()
    while live:
        add_result(min(len(live), 2))
    assert len(decls) <= max_ops
    return fragment_from_ops(decls), binding


def random_open_fragment(rng: np.random.Generator, type_dims=None):
    """A preparation-kind fragment (open outputs only) with a physical binding."""
    type_dims = type_dims or {"a": 2, "b": 3}
    frag, binding = random_circuit(rng, max_ops=5, type_dims=type_dims)
    # drop the closing results to leave their wires open
    keep = [d for d in frag.ops if d.inputs == () or d.outputs != ()]
    names = {d.name for d in keep}
    return fragment_from_ops(keep), {k: v for k, v in binding.items() if k in names}
