"""Physicality of labeled operators: spectral tests, sandwich sampling,
witness construction, complete sets, layer-wise positivity, and unitary
transformations.

An operator is physical iff its input transpose is positive semidefinite and
its output partial trace is bounded above by the identity.  These are
exactly the operators whose circuits always evaluate to probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .binding import Binding, resolve_binding
from .contraction import circuit_trace
from .errors import (
    DimMismatchError,
    NotApplicableError,
    SignatureMismatchError,
)
from .notation import (
    INPUT,
    OUTPUT,
    CircuitFragment,
    WireLabel,
    foliate,
)
from .operators import (
    LabeledOperator,
    Leg,
    _require_unitary,
    identity_transformation,
    max_eigenvalue,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    projector,
    scalar_operator,
)

ANCILLA_SYS = "g"


def input_transpose(op: LabeledOperator) -> LabeledOperator:
    """Partial transpose over every input leg (the Choi form of the operator)."""
    return partial_transpose(op, [leg.id for leg in op.input_legs])


def output_transpose(op: LabeledOperator) -> LabeledOperator:
    return partial_transpose(op, [leg.id for leg in op.output_legs])


def output_trace(op: LabeledOperator) -> LabeledOperator:
    """Partial trace over every output leg; an operator on the inputs."""
    return partial_trace(op, [leg.id for leg in op.output_legs])


@dataclass(frozen=True)
class PhysicalityReport:
    physical: bool
    input_transpose_min_eig: float
    output_trace_excess: float  # max eigenvalue of Tr_out(op) - I
    eps: float

    def __bool__(self) -> bool:
        return self.physical


def is_physical(op: LabeledOperator, eps: float = 1e-9) -> PhysicalityReport:
    """Spectral physicality test with both margins reported."""
    lam = min_eigenvalue(input_transpose(op))
    traced = output_trace(op)
    excess = max_eigenvalue(
        LabeledOperator(traced.legs, traced.matrix - np.eye(traced.dim), traced.tol)
    )
    return PhysicalityReport(lam >= -eps and excess <= eps, lam, excess, eps)


# ---------------------------------------------------------------------------
# Definition-side Monte-Carlo check


@dataclass(frozen=True)
class SandwichReport:
    passed: bool
    min_sandwich: float
    max_trace_scalar: float
    samples: int
    ancilla_dims: tuple[int, ...]


def _inout_tensor(op: LabeledOperator) -> tuple[np.ndarray, int, int]:
    """Matrix permuted to inputs-then-outputs, reshaped (Nin, Nout, Nin, Nout)."""
    order = [l.id for l in op.input_legs] + [l.id for l in op.output_legs]
    arranged = op.permuted(order)
    nin = int(np.prod([l.dim for l in op.input_legs])) if op.input_legs else 1
    nout = int(np.prod([l.dim for l in op.output_legs])) if op.output_legs else 1
    return arranged.matrix.reshape(nin, nout, nin, nout), nin, nout


def _haar_batch(rng: np.random.Generator, n: int, rows: int, cols: int) -> np.ndarray:
    v = rng.standard_normal((n, rows * cols)) + 1j * rng.standard_normal((n, rows * cols))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v.reshape(n, rows, cols)


def sandwich_check(
    op: LabeledOperator,
    ancilla_dims: Sequence[int] | None = None,
    samples: int = 1000,
    seed: int = 0,
    eps: float = 1e-9,
) -> SandwichReport:
    """Sample the defining circuits of physicality.

    Random rank-one projector preparations on (inputs x ancilla) and results
    on (outputs x ancilla) sandwich the operator; the trace condition pairs
    each preparation with the identity result.  Passes iff the smallest
    sandwich value stays above ``-eps`` and the largest trace value below
    ``1 + eps``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    tensor, nin, nout = _inout_tensor(op)
    if ancilla_dims is None:
        ancilla_dims = (1, nin, nin * nin)
    dims = tuple(dict.fromkeys(max(1, int(g)) for g in ancilla_dims))
    rng = np.random.default_rng(seed)
    trace_out = np.einsum(tensor, [0, 1, 2, 1], [0, 2])
    min_sandwich = math.inf
    max_trace = -math.inf
    for g in dims:
        alpha = _haar_batch(rng, samples, nin, g)
        gamma = _haar_batch(rng, samples, nout, g)
        # value of  prep . op . result  for every sample at once
        vals = np.einsum(
            "sig,sIG,IyiY,sYG,syg->s", alpha, alpha.conj(), tensor, gamma, gamma.conj()
        )
        trace_vals = np.einsum("sig,sIg,Ii->s", alpha, alpha.conj(), trace_out)
        min_sandwich = min(min_sandwich, float(vals.real.min()))
        max_trace = max(max_trace, float(trace_vals.real.max()))
    passed = min_sandwich >= -eps and max_trace <= 1.0 + eps
    return SandwichReport(passed, min_sandwich, max_trace, samples, dims)


# ---------------------------------------------------------------------------
# Witness construction


@dataclass(frozen=True)
class Witness:
    """A preparation/result pair whose circuit with the operator leaves [0, 1]."""

    preparation: LabeledOperator
    result: LabeledOperator
    value: float
    condition: str  # "positivity" or "trace"


def _fresh_ancilla_id(op: LabeledOperator) -> int:
    return (max(op.ids) if op.ids else 0) + 1


def witness_nonphysical(op: LabeledOperator, eps: float = 1e-9) -> Witness:
    """Build and evaluate an explicit violating circuit for a non-physical operator.

    A failed input-transpose positivity yields a maximally entangled rank-one
    preparation and a result carrying the negative eigenvector; a failed
    trace condition yields the violating eigenprojector preparation paired
    with the identity result.  Raises :class:`NotApplicableError` when the
    operator is physical.
    """
    report = is_physical(op, eps)
    if report.physical:
        raise NotApplicableError("operator is physical; no witness exists")
    in_legs, out_legs = op.input_legs, op.output_legs
    nin = int(np.prod([l.dim for l in in_legs])) if in_legs else 1
    anc = _fresh_ancilla_id(op)

    if report.input_transpose_min_eig < -eps:
        order = [l.id for l in in_legs] + [l.id for l in out_legs]
        choi = partial_transpose(op.permuted(order), [l.id for l in in_legs])
        w, v = np.linalg.eigh(choi.matrix)
        vec = v[:, 0].reshape(nin, -1)  # (in, out) components
        alpha = np.eye(nin) / math.sqrt(nin)
        prep_legs = tuple(Leg(l.sys, l.id, OUTPUT, l.dim) for l in in_legs) + (
            Leg(ANCILLA_SYS, anc, OUTPUT, nin),
        )
        result_legs = tuple(Leg(l.sys, l.id, INPUT, l.dim) for l in out_legs) + (
            Leg(ANCILLA_SYS, anc, INPUT, nin),
        )
        prep = LabeledOperator(prep_legs, projector(alpha.reshape(-1)))
        result = LabeledOperator(result_legs, projector(vec.T.reshape(-1)))
        value = circuit_trace([prep, op, result]).scalar
        return Witness(prep, result, value, "positivity")

    traced = output_trace(op)
    if in_legs:
        w, v = np.linalg.eigh(traced.matrix)
        prep_legs = tuple(Leg(l.sys, l.id, OUTPUT, l.dim) for l in in_legs)
        prep = LabeledOperator(prep_legs, projector(v[:, -1]))
    else:
        prep = scalar_operator(1.0)
    nout = int(np.prod([l.dim for l in out_legs])) if out_legs else 1
    result = LabeledOperator(
        tuple(Leg(l.sys, l.id, INPUT, l.dim) for l in out_legs), np.eye(nout)
    )
    value = circuit_trace([prep, op, result]).scalar
    return Witness(prep, result, value, "trace")


# ---------------------------------------------------------------------------
# Complete sets


def is_complete_set(ops: Sequence[LabeledOperator], eps: float = 1e-9) -> bool:
    """True iff every member has positive input transpose and the summed
    output traces equal the identity on the inputs."""
    if not ops:
        raise SignatureMismatchError("empty operator set")
    signature = ops[0].legs
    for op in ops[1:]:
        if op.legs != signature:
            raise SignatureMismatchError(
                f"leg signature {op.legs} differs from {signature}"
            )
    for op in ops:
        if min_eigenvalue(input_transpose(op)) < -eps:
            return False
    total = sum(output_trace(op).matrix for op in ops)
    return bool(np.max(np.abs(total - np.eye(total.shape[0]))) <= eps)


# ---------------------------------------------------------------------------
# Alternate-transpose positivity across a foliation


@dataclass(frozen=True)
class LayerMargin:
    index: int
    members: tuple[str, ...]
    min_eig: float


@dataclass(frozen=True)
class AlternateTransposeReport:
    layers: tuple[LayerMargin, ...]
    value: float
    eps: float

    @property
    def all_positive(self) -> bool:
        return all(layer.min_eig >= -self.eps for layer in self.layers)

    @property
    def value_in_unit_interval(self) -> bool:
        return -self.eps <= self.value <= 1.0 + self.eps


def _tensor_spectrum_range(factors: list[tuple[float, float]]) -> tuple[float, float]:
    """Exact (min, max) eigenvalue of a tensor product from per-factor extremes."""
    lo, hi = 1.0, 1.0
    for fmin, fmax in factors:
        candidates = (lo * fmin, lo * fmax, hi * fmin, hi * fmax)
        lo, hi = min(candidates), max(candidates)
    return lo, hi


def alternate_transpose_positivity(
    circuit: CircuitFragment,
    binding: Binding,
    eps: float = 1e-9,
    policy: str = "earliest",
) -> AlternateTransposeReport:
    """Foliate a physically bound circuit and check each layer operator is PSD
    after partial transposes on alternating layer boundaries.

    Operators in even layers (0-based) get their outputs transposed, odd
    layers their inputs, so exactly the wires crossing alternate boundaries
    are transposed on both ends.  The circuit value is evaluated alongside.
    """
    bound = resolve_binding(circuit, binding)
    for decl, op in zip(circuit.ops, bound):
        report = is_physical(op, eps)
        if not report.physical:
            raise NotApplicableError(
                f"operator bound to {decl.name!r} is not physical "
                f"(min eig {report.input_transpose_min_eig:.3e}, "
                f"trace excess {report.output_trace_excess:.3e})"
            )
    fol = foliate(circuit, policy)
    dims = {leg.id: leg.dim for op in bound for leg in op.legs}
    layers: list[LayerMargin] = []
    for k, layer_ops in enumerate(fol.layers):
        members: list[str] = []
        extremes: list[tuple[float, float]] = []
        for op_index in layer_ops:
            op = bound[op_index]
            side = op.output_legs if k % 2 == 0 else op.input_legs
            flipped = partial_transpose(op, [l.id for l in side])
            spectrum = np.linalg.eigvalsh(flipped.matrix)
            extremes.append((float(spectrum[0]), float(spectrum[-1])))
            members.append(circuit.ops[op_index].name)
        for pad in fol.paddings:
            if pad.layer != k:
                continue
            d = dims[pad.wire.id]
            ident = identity_transformation(pad.wire, WireLabel(pad.wire.sys, 0), d)
            side = ident.output_legs if k % 2 == 0 else ident.input_legs
            flipped = partial_transpose(ident, [l.id for l in side])
            spectrum = np.linalg.eigvalsh(flipped.matrix)
            extremes.append((float(spectrum[0]), float(spectrum[-1])))
            members.append(f"pad:{pad.wire}")
        lo, _ = _tensor_spectrum_range(extremes) if extremes else (0.0, 0.0)
        layers.append(LayerMargin(k, tuple(members), lo))
    value = circuit_trace(bound).scalar
    return AlternateTransposeReport(tuple(layers), value, eps)


# ---------------------------------------------------------------------------
# Unitary transformations


def transform(
    op: LabeledOperator, unitaries: Mapping[int | WireLabel, np.ndarray]
) -> LabeledOperator:
    """Conjugate the operator by one unitary per leg.

    Applying the same unitary to both ends of every wire leaves every closed
    operator circuit invariant, and physicality is preserved.
    """
    per_id: dict[int, np.ndarray] = {}
    for key, u in unitaries.items():
        per_id[key if isinstance(key, int) else key.id] = np.asarray(u, dtype=complex)
    total = np.eye(1)
    for leg in op.legs:
        u = per_id.get(leg.id)
        if u is None:
            u = np.eye(leg.dim)
        else:
            _require_unitary(u)
            if u.shape[0] != leg.dim:
                raise DimMismatchError(
                    f"unitary for {leg.sys}{leg.id} is {u.shape[0]}x{u.shape[1]}, "
                    f"leg dim is {leg.dim}"
                )
        total = np.kron(total, u)
    return LabeledOperator(op.legs, total @ op.matrix @ total.conj().T, op.tol)
