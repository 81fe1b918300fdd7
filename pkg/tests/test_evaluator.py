"""Both probability formulations, linear combinations, fragment operators,
and the formalism-locality proportionality test."""

import numpy as np
import pytest

import optensor as ot
from optensor import LabeledOperator, Leg, WireLabel
from optensor.notation import INPUT, OUTPUT
from conftest import random_circuit, random_open_fragment

P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)

MEDIUM = "A^{a1 b2} B^{a3 d4} C_{b2 a3}^{a5} D_{a1}^{b6} E_{a5 d4}^{c7} F_{b6 c7}"


def medium_binding(rng, dims):
    def legs(wires, role):
        return [Leg(w.sys, w.id, role, dims[w.sys]) for w in wires]

    frag = ot.parse_circuit(MEDIUM)
    binding = {}
    for decl in frag.ops:
        if not decl.inputs:
            binding[decl.name] = ot.random_preparation(legs(decl.outputs, OUTPUT), rng)
        elif not decl.outputs:
            binding[decl.name] = ot.random_result(legs(decl.inputs, INPUT), rng)
        else:
            binding[decl.name] = ot.random_physical_transformation(
                legs(decl.inputs, INPUT), legs(decl.outputs, OUTPUT), rng
            )
    return frag, binding


class TestProbability:
    def test_matched_pair(self):
        frag = ot.parse_circuit("P^{a1} R_{a1}")
        binding = {
            "P": LabeledOperator((Leg("a", 1, OUTPUT, 2),), P0),
            "R": LabeledOperator((Leg("a", 1, INPUT, 2),), P0),
        }
        assert ot.probability(frag, binding) == pytest.approx(1.0)

    def test_orthogonal_through_identity_channel(self):
        frag = ot.parse_circuit("P^{a1} W_{a1}^{a2} R_{a2}")
        binding = {
            "P": LabeledOperator((Leg("a", 1, OUTPUT, 2),), P0),
            "W": ot.identity_transformation(WireLabel("a", 1), WireLabel("a", 2), 2),
            "R": LabeledOperator((Leg("a", 2, INPUT, 2),), P1),
        }
        assert ot.probability(frag, binding) == pytest.approx(0.0, abs=1e-14)

    def test_open_fragment_rejected(self):
        frag = ot.parse_circuit("P^{a1}")
        with pytest.raises(ot.NonCircuitTermError):
            ot.probability(frag, {"P": LabeledOperator((Leg("a", 1, OUTPUT, 2),), P0)})

    def test_unbound_operation(self):
        frag = ot.parse_circuit("P^{a1} R_{a1}")
        with pytest.raises(ot.UnboundOperationError):
            ot.probability(frag, {"P": LabeledOperator((Leg("a", 1, OUTPUT, 2),), P0)})

    def test_signature_mismatch(self):
        frag = ot.parse_circuit("P^{a1} R_{a1}")
        wrong = LabeledOperator((Leg("a", 1, INPUT, 2),), P0)
        with pytest.raises(ot.SignatureMismatchError):
            ot.probability(frag, {"P": wrong, "R": wrong})

    def test_nonphysical_binding_warns_but_evaluates(self):
        frag = ot.parse_circuit("P^{a1} R_{a1}")
        binding = {
            "P": ot.identity_preparation(WireLabel("a", 1), 2),
            "R": LabeledOperator((Leg("a", 1, INPUT, 2),), P0),
        }
        with pytest.warns(ot.PhysicalityWarning):
            value = ot.probability(frag, binding)
        assert value == pytest.approx(1.0)

    def test_medium_circuit_matches_foliated(self, rng):
        frag, binding = medium_binding(rng, {"a": 2, "b": 2, "c": 2, "d": 2})
        direct = ot.probability(frag, binding, check_physical=False)
        layered = ot.probability_foliated(frag, binding, check_physical=False)
        assert abs(direct - layered) <= 1e-10


class TestProbabilityFoliated:
    def test_trace_preserving_chain_gives_one(self, rng):
        frag = ot.parse_circuit("P^{a1} W_{a1}^{a2} R_{a2}")
        binding = {
            "P": ot.random_preparation([Leg("a", 1, OUTPUT, 3)], rng, mixed=False),
            "W": ot.random_physical_transformation(
                [Leg("a", 1, INPUT, 3)], [Leg("a", 2, OUTPUT, 3)], rng,
                trace_preserving=True,
            ),
            "R": ot.identity_result(WireLabel("a", 2), 3),
        }
        assert ot.probability_foliated(frag, binding) == pytest.approx(1.0)

    def test_agreement_on_random_circuits(self, rng):
        for _ in range(30):
            frag, binding = random_circuit(rng, max_ops=6)
            direct = ot.probability(frag, binding, check_physical=False)
            layered = ot.probability_foliated(frag, binding, check_physical=False)
            assert abs(direct - layered) <= 1e-10

    def test_three_op_example(self, rng):
        frag = ot.parse_circuit("A^{a1 b2} B_{b2}^{c3 a4} C_{a1 c3 a4}")
        binding = {
            "A": ot.random_preparation(
                [Leg("a", 1, OUTPUT, 2), Leg("b", 2, OUTPUT, 3)], rng
            ),
            "B": ot.random_physical_transformation(
                [Leg("b", 2, INPUT, 3)],
                [Leg("c", 3, OUTPUT, 2), Leg("a", 4, OUTPUT, 2)],
                rng,
            ),
            "C": ot.random_result(
                [Leg("a", 1, INPUT, 2), Leg("c", 3, INPUT, 2), Leg("a", 4, INPUT, 2)],
                rng,
            ),
        }
        direct = ot.probability(frag, binding)
        layered = ot.probability_foliated(frag, binding)
        assert abs(direct - layered) <= 1e-10

    def test_foliation_policy_independent(self, rng):
        for _ in range(10):
            frag, binding = random_circuit(rng, max_ops=7)
            early = ot.probability_foliated(frag, binding, policy="earliest",
                                            check_physical=False)
            late = ot.probability_foliated(frag, binding, policy="latest",
                                           check_physical=False)
            assert abs(early - late) <= 1e-10

    def test_disjoint_circuits_factorize(self, rng):
        left, bind_left = random_circuit(rng, max_ops=4, type_dims={"a": 2})
        right_text = "Q1^{c1} Q2_{c1}"
        right = ot.parse_circuit(right_text)
        bind_right = {
            "Q1": ot.random_preparation([Leg("c", 1, OUTPUT, 3)], rng),
            "Q2": ot.random_result([Leg("c", 1, INPUT, 3)], rng),
        }
        # relabel left's wires out of the way of right's
        shift = {w.id: ot.WireLabel(w.sys, w.id + 100) for op in left.ops for w in op.labels}
        shifted_ops = [
            ot.OperationDecl(
                d.name,
                tuple(shift[w.id] for w in d.inputs),
                tuple(shift[w.id] for w in d.outputs),
            )
            for d in left.ops
        ]
        joint = ot.fragment_from_ops(list(shifted_ops) + list(right.ops))
        binding = {**bind_left, **bind_right}
        p_joint = ot.probability(joint, binding, check_physical=False)
        p_left = ot.probability(ot.fragment_from_ops(shifted_ops), bind_left,
                                check_physical=False)
        p_right = ot.probability(right, bind_right, check_physical=False)
        assert abs(p_joint - p_left * p_right) <= 1e-12
        layered = ot.probability_foliated(joint, binding, check_physical=False)
        assert abs(layered - p_left * p_right) <= 1e-10


class TestPFunction:
    def test_single_term(self, rng):
        frag, binding = random_circuit(rng, max_ops=4)
        expr = ot.CircuitExpression(((1.0, frag),))
        assert ot.p_function(expr, binding, check_physical=False) == pytest.approx(
            ot.probability(frag, binding, check_physical=False)
        )

    def test_cancellation(self, rng):
        frag, binding = random_circuit(rng, max_ops=4)
        expr = ot.CircuitExpression(((1.0, frag), (-1.0, frag)))
        assert ot.p_function(expr, binding, check_physical=False) == pytest.approx(0.0)

    def test_mixture_matches_separate_calls(self, rng):
        frag_a, bind_a = random_circuit(rng, max_ops=4)
        frag_b_text = "Z1^{q900} Z2_{q900}"
        frag_b = ot.parse_circuit(frag_b_text)
        bind_b = {
            "Z1": ot.random_preparation([Leg("q", 900, OUTPUT, 2)], rng),
            "Z2": ot.random_result([Leg("q", 900, INPUT, 2)], rng),
        }
        binding = {**bind_a, **bind_b}
        expr = ot.CircuitExpression(((0.3, frag_a), (0.7, frag_b)))
        expected = 0.3 * ot.probability(frag_a, bind_a, check_physical=False) + \
            0.7 * ot.probability(frag_b, bind_b, check_physical=False)
        assert ot.p_function(expr, binding, check_physical=False) == pytest.approx(expected)

    def test_open_term_rejected(self):
        frag = ot.parse_circuit("P^{a1}")
        with pytest.raises(ot.NonCircuitTermError):
            ot.p_function(ot.CircuitExpression(((1.0, frag),)), {})

    def test_signature_homogeneity_enforced(self):
        with pytest.raises(ot.SignatureMismatchError):
            ot.CircuitExpression(
                ((1.0, ot.parse_circuit("P^{a1}")), (1.0, ot.parse_circuit("Q_{a1}")))
            )


class TestFragmentOperator:
    def test_single_op_returns_itself(self, rng):
        frag = ot.parse_circuit("W_{a1}^{a2}")
        op = ot.random_physical_transformation(
            [Leg("a", 1, INPUT, 2)], [Leg("a", 2, OUTPUT, 2)], rng
        )
        out = ot.fragment_operator(frag, {"W": op})
        assert np.max(np.abs(out.matrix - op.matrix)) == 0.0

    def test_prep_plus_channel_equals_evolved_state(self, rng):
        frag = ot.parse_circuit("P^{a1} W_{a1}^{b2}")
        kraus = ot.random_kraus_set(2, 3, rng)
        prep = ot.random_preparation([Leg("a", 1, OUTPUT, 2)], rng)
        binding = {
            "P": prep,
            "W": ot.operator_from_kraus(
                kraus, [Leg("a", 1, INPUT, 2)], [Leg("b", 2, OUTPUT, 3)]
            ),
        }
        composed = ot.fragment_operator(frag, binding)
        evolved = sum(K @ prep.matrix @ K.conj().T for K in kraus)
        assert np.max(np.abs(composed.matrix - evolved)) < 1e-12
        assert composed.legs == (Leg("b", 2, OUTPUT, 3),)

    def test_composite_of_physical_chain_is_physical(self, rng):
        for _ in range(5):
            frag = ot.parse_circuit("W1_{a1}^{a2} W2_{a2}^{a3}")
            binding = {
                "W1": ot.random_physical_transformation(
                    [Leg("a", 1, INPUT, 2)], [Leg("a", 2, OUTPUT, 2)], rng
                ),
                "W2": ot.random_physical_transformation(
                    [Leg("a", 2, INPUT, 2)], [Leg("a", 3, OUTPUT, 2)], rng
                ),
            }
            composite = ot.fragment_operator(frag, binding)
            assert ot.is_physical(composite).physical


class TestFormalismLocality:
    def scaled_pair(self, rng):
        frag_a = ot.parse_circuit("P^{a1} W_{a1}^{a2}")
        frag_b = ot.parse_circuit("P^{a1} W2_{a1}^{a2}")
        chan = ot.random_physical_transformation(
            [Leg("a", 1, INPUT, 2)], [Leg("a", 2, OUTPUT, 2)], rng
        )
        binding = {
            "P": ot.random_preparation([Leg("a", 1, OUTPUT, 2)], rng),
            "W": chan,
            "W2": LabeledOperator(chan.legs, 0.5 * chan.matrix, chan.tol),
        }
        return frag_a, frag_b, binding

    def test_scaled_fragments_have_ratio_two(self, rng):
        frag_a, frag_b, binding = self.scaled_pair(rng)
        ratio = ot.formalism_locality_ratio(frag_a, frag_b, binding)
        assert ratio == pytest.approx(2.0, abs=1e-10)

    def test_ratio_predicts_all_completions(self, rng):
        frag_a, frag_b, binding = self.scaled_pair(rng)
        ratio = ot.formalism_locality_ratio(frag_a, frag_b, binding)
        for k in range(20):
            result = ot.random_result([Leg("a", 2, INPUT, 2)], rng)
            full = dict(binding, E=result)
            pa = ot.probability(
                ot.parse_circuit("P^{a1} W_{a1}^{a2} E_{a2}"), full,
                check_physical=False,
            )
            pb = ot.probability(
                ot.parse_circuit("P^{a1} W2_{a1}^{a2} E_{a2}"), full,
                check_physical=False,
            )
            assert abs(pa - ratio * pb) <= 1e-8 * max(1.0, abs(pa))

    def test_different_channels_not_proportional(self, rng):
        frag_a = ot.parse_circuit("P^{a1} W_{a1}^{a2}")
        frag_b = ot.parse_circuit("P^{a1} W2_{a1}^{a2}")
        binding = {
            "P": ot.random_preparation([Leg("a", 1, OUTPUT, 2)], rng),
            "W": ot.random_physical_transformation(
                [Leg("a", 1, INPUT, 2)], [Leg("a", 2, OUTPUT, 2)], rng
            ),
            "W2": ot.random_physical_transformation(
                [Leg("a", 1, INPUT, 2)], [Leg("a", 2, OUTPUT, 2)], rng
            ),
        }
        assert ot.formalism_locality_ratio(frag_a, frag_b, binding) is None

    def test_zero_reference_fragment(self, rng):
        frag_a = ot.parse_circuit("P^{a1}")
        frag_b = ot.parse_circuit("Z^{a1}")
        binding = {
            "P": ot.random_preparation([Leg("a", 1, OUTPUT, 2)], rng),
            "Z": LabeledOperator((Leg("a", 1, OUTPUT, 2),), np.zeros((2, 2))),
        }
        with pytest.raises(ot.ZeroFragmentError):
            ot.formalism_locality_ratio(frag_a, frag_b, binding)

    def test_open_fragment_pair_random(self, rng):
        frag, binding = random_open_fragment(rng)
        scaled = {name: LabeledOperator(op.legs, 0.25 * op.matrix, op.tol)
                  for name, op in binding.items()}
        # same fragment names, operators scaled: build B under a renamed map
        ratio = ot.formalism_locality_ratio(
            frag, frag, binding
        )
        assert ratio == pytest.approx(1.0)
        # mixed binding via distinct names would be needed for a non-unit
        # ratio on one call; scale check done at operator level instead
        op_a = ot.fragment_operator(frag, binding)
        op_b = ot.fragment_operator(frag, scaled)
        scale = 0.25 ** len(frag.ops)
        assert np.max(np.abs(op_b.matrix - scale * op_a.matrix)) < 1e-10


class TestCompletenessSum:
    def test_instrument_sums_to_deterministic_result(self, rng):
        kraus = ot.random_kraus_set(2, 2, rng, n_kraus=4, trace_preserving=True)
        legs_in = [Leg("a", 1, INPUT, 2)]
        legs_out = [Leg("a", 2, OUTPUT, 2)]
        elements = [
            ot.operator_from_kraus(kraus[:1], legs_in, legs_out),
            ot.operator_from_kraus(kraus[1:3], legs_in, legs_out),
            ot.operator_from_kraus(kraus[3:], legs_in, legs_out),
        ]
        assert ot.is_complete_set(elements, eps=1e-10)
        prep = ot.random_preparation([Leg("a", 1, OUTPUT, 2)], rng)
        circuit = ot.parse_circuit("P^{a1} M_{a1}^{a2} R_{a2}")
        iden = ot.identity_result(WireLabel("a", 2), 2)
        total = sum(
            ot.probability(circuit, {"P": prep, "M": element, "R": iden},
                           check_physical=False)
            for element in elements
        )
        deterministic = ot.probability(
            ot.parse_circuit("P^{a1} R_{a1}"),
            {"P": prep, "R": ot.identity_result(WireLabel("a", 1), 2)},
            check_physical=False,
        )
        assert abs(total - deterministic) <= 1e-9
