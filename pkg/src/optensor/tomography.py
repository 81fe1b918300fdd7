"""Process tomography: reconstruct a black-box operation from fiducial circuits.

The box is probed with every combination of fiducial preparations on its
inputs and fiducial results on its outputs; the probability array is the
all-black duotensor, which the inverse hopping metric converts to expansion
coefficients, yielding the operator by fiducial weighting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .contraction import circuit_trace
from .duotensor import (
    BLACK,
    WHITE,
    DuoIndex,
    Duotensor,
    FiducialSet,
    convert_dots,
    reconstruct,
)
from .notation import INPUT
from .operators import LabeledOperator, Leg


@dataclass(frozen=True)
class ExactBlackBox:
    """Evaluates fiducial circuits of a hidden operator exactly."""

    hidden: LabeledOperator

    @property
    def signature(self) -> tuple[Leg, ...]:
        return self.hidden.legs

    def probability(
        self, setting: tuple[int, ...], fsets: Mapping[str, FiducialSet]
    ) -> float:
        return _fiducial_circuit_value(self.hidden, setting, fsets)


@dataclass(frozen=True)
class SampledBlackBox:
    """Adds binomial shot noise to each fiducial-circuit probability.

    Each setting draws from its own RNG stream seeded by (seed, setting), so
    results do not depend on probe order.
    """

    hidden: LabeledOperator
    shots: int
    seed: int = 0

    @property
    def signature(self) -> tuple[Leg, ...]:
        return self.hidden.legs

    def probability(
        self, setting: tuple[int, ...], fsets: Mapping[str, FiducialSet]
    ) -> float:
        exact = _fiducial_circuit_value(self.hidden, setting, fsets)
        p = min(1.0, max(0.0, exact))
        rng = np.random.default_rng((self.seed,) + tuple(setting))
        return float(rng.binomial(self.shots, p)) / float(self.shots)


def _fiducial_circuit_value(
    hidden: LabeledOperator, setting: tuple[int, ...], fsets: Mapping[str, FiducialSet]
) -> float:
    ops = [hidden]
    for leg, index in zip(hidden.legs, setting):
        fset = fsets[leg.sys]
        if leg.role == INPUT:
            ops.append(fset.prep_op(index, leg.wire))
        else:
            ops.append(fset.result_op(index, leg.wire))
    return circuit_trace(ops).scalar


def probe(bb, fsets: Mapping[str, FiducialSet]) -> Duotensor:
    """All fiducial-circuit probabilities of the box: the all-black duotensor."""
    legs = bb.signature
    shape = tuple(fsets[leg.sys].k for leg in legs)
    data = np.empty(shape)
    for setting in np.ndindex(*shape):
        data[setting] = bb.probability(tuple(int(i) for i in setting), fsets)
    indices = tuple(DuoIndex(l.sys, l.id, l.role, l.dim, BLACK) for l in legs)
    return Duotensor(indices, data)


def reconstruct_operation(bb, fsets: Mapping[str, FiducialSet]) -> LabeledOperator:
    """Probe, convert black to white with the inverse metric, and rebuild."""
    black = probe(bb, fsets)
    white = convert_dots(black, WHITE, fsets)
    return reconstruct(white, fsets, legs=bb.signature)
