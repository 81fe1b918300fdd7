"""Fiducial operator sets, the hopping metric, and duotensor conversions.

A fiducial set for an N-dimensional system holds K = N^2 preparation
operators and K result operators, each physical, spanning the Hermitian
operators.  The hopping metric G[i][j] is the probability of fiducial
preparation i followed by fiducial result j; together with its inverse it
converts duotensor indices between "black" (probability) and "white"
(expansion-coefficient) form.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .contraction import circuit_trace
from .errors import (
    ConditioningWarning,
    ShapeMismatchError,
    SingularBasisError,
    SingularMetricError,
)
from .notation import INPUT, OUTPUT, SystemType, WireLabel
from .operators import Leg, LabeledOperator, identity_transformation
from .operators import from_json_dict, to_json_dict

BLACK = "black"
WHITE = "white"

COND_WARN_THRESHOLD = 1e8


@dataclass(frozen=True, eq=False)
class FiducialSet:
    """Spanning physical preparations and results for one system type."""

    sys_type: SystemType
    preps: tuple[LabeledOperator, ...]
    results: tuple[LabeledOperator, ...]
    metric: np.ndarray
    metric_inv: np.ndarray

    @property
    def k(self) -> int:
        return self.sys_type.fiducial_count

    def prep_op(self, index: int, wire: WireLabel) -> LabeledOperator:
        return self.preps[index].relabeled({self.preps[index].ids[0]: wire})

    def result_op(self, index: int, wire: WireLabel) -> LabeledOperator:
        return self.results[index].relabeled({self.results[index].ids[0]: wire})


def _span_rank(ops: Sequence[LabeledOperator]) -> int:
    stack = np.stack([op.matrix.reshape(-1) for op in ops])
    return int(np.linalg.matrix_rank(np.concatenate([stack.real, stack.imag], axis=1)))


def compute_hopping_metric(
    preps: Sequence[LabeledOperator], results: Sequence[LabeledOperator]
) -> np.ndarray:
    """G[i][j] = value of the circuit (prep i) -> (result j)."""
    k = len(preps)
    metric = np.empty((k, len(results)))
    for i, prep in enumerate(preps):
        for j, result in enumerate(results):
            aligned = result.relabeled({result.ids[0]: prep.legs[0].wire})
            value = circuit_trace([prep, aligned])
            if abs(value.matrix[0, 0].imag) > 1e-12:
                raise SingularMetricError(
                    f"metric entry ({i},{j}) has imaginary part "
                    f"{value.matrix[0, 0].imag:.3e}"
                )
            metric[i, j] = value.scalar
    return metric


def hopping_metric(fset: FiducialSet) -> np.ndarray:
    """Recompute the hopping metric from the fiducial elements."""
    return compute_hopping_metric(fset.preps, fset.results)


def make_fiducials(
    sys_type: SystemType,
    preps: Sequence[LabeledOperator],
    results: Sequence[LabeledOperator],
    tol: float = 1e-10,
) -> FiducialSet:
    """Assemble and validate a fiducial set, computing the metric and its inverse."""
    k = sys_type.fiducial_count
    if len(preps) != k or len(results) != k:
        raise SingularBasisError(f"need {k} preps and results for {sys_type.name}")
    if _span_rank(preps) < k or _span_rank(results) < k:
        raise SingularBasisError(f"fiducials for {sys_type.name} do not span")
    for prep in preps:
        eigs = np.linalg.eigvalsh(prep.matrix)
        if eigs[0] < -tol or float(np.trace(prep.matrix).real) > 1 + tol:
            raise SingularBasisError("fiducial preparation is not physical")
    for result in results:
        eigs = np.linalg.eigvalsh(result.matrix)
        if eigs[0] < -tol or eigs[-1] > 1 + tol:
            raise SingularBasisError("fiducial result is not physical")
    metric = compute_hopping_metric(preps, results)
    if metric.min() < -1e-12 or metric.max() > 1 + 1e-12:
        raise SingularMetricError("metric entries must be probabilities")
    try:
        metric_inv = np.linalg.inv(metric)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError(str(exc)) from exc
    if np.max(np.abs(metric @ metric_inv - np.eye(k))) > 1e-10:
        raise SingularMetricError("metric inverse fails G G^-1 = I")
    metric.setflags(write=False)
    metric_inv.setflags(write=False)
    return FiducialSet(sys_type, tuple(preps), tuple(results), metric, metric_inv)


def default_fiducials(sys_type: SystemType) -> FiducialSet:
    """Rank-one projector fiducials: the basis states plus, for each pair
    j < k, the real and imaginary superposition projectors.

    For a qubit this is |0>, |1>, |+>, |+i>; every element is manifestly a
    realizable preparation and (read with an input leg) a valid result.
    """
    n = sys_type.dim
    vectors: list[np.ndarray] = [np.eye(n)[j] for j in range(n)]
    for j in range(n):
        for k in range(j + 1, n):
            plus = (np.eye(n)[j] + np.eye(n)[k]) / np.sqrt(2)
            plus_i = (np.eye(n)[j] + 1j * np.eye(n)[k]) / np.sqrt(2)
            vectors.extend([plus, plus_i])
    projectors = [np.outer(v, v.conj()) for v in vectors]
    prep_leg = Leg(sys_type.name, 1, OUTPUT, n)
    result_leg = Leg(sys_type.name, 1, INPUT, n)
    preps = [LabeledOperator((prep_leg,), p) for p in projectors]
    results = [LabeledOperator((result_leg,), p) for p in projectors]
    return make_fiducials(sys_type, preps, results)


# ---------------------------------------------------------------------------
# Duotensors


@dataclass(frozen=True)
class DuoIndex:
    sys: str
    id: int
    role: str
    dim: int
    color: str

    def __post_init__(self):
        if self.color not in (BLACK, WHITE):
            raise ValueError(f"color must be {BLACK!r} or {WHITE!r}")

    @property
    def k(self) -> int:
        return self.dim * self.dim


@dataclass(frozen=True, eq=False)
class Duotensor:
    """A real coefficient array with typed, colored indices."""

    indices: tuple[DuoIndex, ...]
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        expected = tuple(ix.k for ix in self.indices)
        if data.shape != expected:
            raise ShapeMismatchError(f"data shape {data.shape}, indices need {expected}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def colors(self) -> tuple[str, ...]:
        return tuple(ix.color for ix in self.indices)


def _fiducial_stack(fsets: Mapping[str, FiducialSet], leg: Leg) -> np.ndarray:
    """Matrices of the fiducials attached to one leg: results for inputs,
    preparations for outputs.  Shape (K, d, d)."""
    fset = fsets[leg.sys]
    if fset.sys_type.dim != leg.dim:
        raise ShapeMismatchError(
            f"fiducials for {leg.sys!r} have dim {fset.sys_type.dim}, leg has {leg.dim}"
        )
    family = fset.results if leg.role == INPUT else fset.preps
    return np.stack([op.matrix for op in family])


def _solve_gram(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(gram)
    if cond > COND_WARN_THRESHOLD:
        warnings.warn(
            f"fiducial Gram system condition number {cond:.2e}",
            ConditioningWarning,
            stacklevel=3,
        )
    try:
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularBasisError(str(exc)) from exc


def decompose(op: LabeledOperator, fsets: Mapping[str, FiducialSet]) -> Duotensor:
    """Expand an operator in the tensor-product fiducial basis (all-white form).

    The expansion is exact: weights solve the Gram system of Hilbert-Schmidt
    overlaps, which factorizes leg by leg.
    """
    k = len(op.legs)
    stacks = [_fiducial_stack(fsets, leg) for leg in op.legs]
    operands: list = [op.tensor(), list(range(2 * k))]
    out = []
    for m, stack in enumerate(stacks):
        # Tr(F_j . op) on leg m: F's row meets op's bra, F's column the ket
        operands.extend([stack, [2 * k + m, k + m, m]])
        out.append(2 * k + m)
    rhs = np.einsum(*operands, out).real
    weights = rhs
    for m, stack in enumerate(stacks):
        gram = np.einsum("jab,lba->jl", stack, stack).real
        moved = np.moveaxis(weights, m, 0)
        solved = _solve_gram(gram, moved.reshape(gram.shape[0], -1)).reshape(moved.shape)
        weights = np.moveaxis(solved, 0, m)
    indices = tuple(DuoIndex(l.sys, l.id, l.role, l.dim, WHITE) for l in op.legs)
    return Duotensor(indices, weights)


def reconstruct(
    dt: Duotensor,
    fsets: Mapping[str, FiducialSet],
    legs: Sequence[Leg] | None = None,
    tol: float = 1e-10,
) -> LabeledOperator:
    """Weighted sum of tensor products of fiducial operators (all-white input)."""
    if any(ix.color != WHITE for ix in dt.indices):
        raise ShapeMismatchError("reconstruct needs the all-white form")
    if legs is None:
        legs = tuple(Leg(ix.sys, ix.id, ix.role, ix.dim) for ix in dt.indices)
    legs = tuple(legs)
    if len(legs) != len(dt.indices):
        raise ShapeMismatchError("leg count does not match index count")
    k = len(legs)
    operands: list = [dt.data, list(range(k))]
    for m, leg in enumerate(legs):
        stack = _fiducial_stack(fsets, leg)
        operands.extend([stack, [m, k + m, 2 * k + m]])
    out = list(range(k, 2 * k)) + list(range(2 * k, 3 * k))
    raw = np.einsum(*operands, out)
    dim = int(np.prod([l.dim for l in legs])) if legs else 1
    return LabeledOperator(legs, raw.reshape(dim, dim), tol)


def convert_dots(
    dt: Duotensor,
    target: str | Sequence[str],
    fsets: Mapping[str, FiducialSet],
) -> Duotensor:
    """Recolor duotensor indices using the hopping metric.

    White-to-black applies G (input-role indices contract the result side,
    output-role the preparation side); black-to-white applies the inverse.
    Converting there and back is the identity.
    """
    targets = [target] * len(dt.indices) if isinstance(target, str) else list(target)
    if len(targets) != len(dt.indices):
        raise ShapeMismatchError("one target color per index required")
    data = dt.data
    new_indices = []
    for m, (ix, want) in enumerate(zip(dt.indices, targets)):
        if want not in (BLACK, WHITE):
            raise ValueError(f"unknown color {want!r}")
        new_indices.append(replace(ix, color=want))
        if want == ix.color:
            continue
        fset = fsets[ix.sys]
        if want == BLACK:
            matrix = fset.metric if ix.role == INPUT else fset.metric.T
        else:
            matrix = fset.metric_inv if ix.role == INPUT else fset.metric_inv.T
        data = np.moveaxis(np.tensordot(matrix, data, axes=([1], [m])), 0, m)
    return Duotensor(tuple(new_indices), data)


def wire_decomposition_check(
    sys_type: SystemType,
    fset: FiducialSet | None = None,
    tol: float = 1e-10,
) -> bool:
    """Check that the inverse-metric pairing of fiducials rebuilds the wire.

    The identity transformation must equal
    ``sum_jk G^-1[j][k] (result_j on the input) x (prep_k on the output)``.
    """
    fset = fset if fset is not None else default_fiducials(sys_type)
    n = sys_type.dim
    built = np.zeros((n * n, n * n), dtype=complex)
    for j in range(fset.k):
        for k in range(fset.k):
            built += fset.metric_inv[j, k] * np.kron(
                fset.results[j].matrix, fset.preps[k].matrix
            )
    expected = identity_transformation(
        WireLabel(sys_type.name, 1), WireLabel(sys_type.name, 2), n
    ).matrix
    return bool(np.max(np.abs(built - expected)) <= tol)


# ---------------------------------------------------------------------------
# Serialization


def duotensor_to_json_dict(dt: Duotensor) -> dict:
    return {
        "indices": [
            {"type": ix.sys, "id": ix.id, "role": ix.role, "dim": ix.dim, "color": ix.color}
            for ix in dt.indices
        ],
        "data": [float(x) for x in dt.data.reshape(-1)],
    }


def duotensor_from_json_dict(data: dict) -> Duotensor:
    indices = tuple(
        DuoIndex(e["type"], int(e["id"]), e["role"], int(e["dim"]), e["color"])
        for e in data["indices"]
    )
    shape = tuple(ix.k for ix in indices)
    return Duotensor(indices, np.array(data["data"], dtype=float).reshape(shape))


def dump_fiducials(fset: FiducialSet, directory) -> None:
    """Write one operator file per element plus a manifest with the metric."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "type": fset.sys_type.name,
        "dim": fset.sys_type.dim,
        "preps": [],
        "results": [],
        "metric": [[float(x) for x in row] for row in fset.metric],
    }
    for kind, family in (("prep", fset.preps), ("result", fset.results)):
        for i, op in enumerate(family):
            name = f"{kind}_{i:02d}.json"
            (directory / name).write_text(json.dumps(to_json_dict(op), indent=2) + "\n")
            manifest[kind + "s"].append(name)
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def load_fiducials(directory) -> FiducialSet:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    sys_type = SystemType(manifest["type"], int(manifest["dim"]))
    preps = [
        from_json_dict(json.loads((directory / name).read_text()))
        for name in manifest["preps"]
    ]
    results = [
        from_json_dict(json.loads((directory / name).read_text()))
        for name in manifest["results"]
    ]
    fset = make_fiducials(sys_type, preps, results)
    if np.max(np.abs(fset.metric - np.array(manifest["metric"]))) > 1e-10:
        raise SingularMetricError("stored metric disagrees with recomputed metric")
    return fset


def default_fiducials_for(
    legs_or_ops, registry: Mapping[str, SystemType] | None = None
) -> dict[str, FiducialSet]:
    """Default fiducial sets for every system type appearing on the given legs."""
    legs = getattr(legs_or_ops, "legs", legs_or_ops)
    fsets: dict[str, FiducialSet] = {}
    for leg in legs:
        if leg.sys in fsets:
            if fsets[leg.sys].sys_type.dim != leg.dim:
                raise ShapeMismatchError(
                    f"type {leg.sys!r} appears with dims "
                    f"{fsets[leg.sys].sys_type.dim} and {leg.dim}"
                )
            continue
        sys_type = registry[leg.sys] if registry else SystemType(leg.sys, leg.dim)
        fsets[leg.sys] = default_fiducials(sys_type)
    return fsets
