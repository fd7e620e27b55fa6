"""Field arithmetic: protocol field selection, operations, axioms."""

import pytest

from mppsi.errors import ConfigError, FieldMismatchError
from mppsi.field import FieldElement, PrimeField, inner_product, is_prime, select_field_size


def modular_dot(xs, qs, modulus):
    """Independent oracle: big-integer evaluation reduced once at the end."""
    return sum(int(x) * int(q) for x, q in zip(xs, qs)) % modulus


class TestFieldSelection:
    @pytest.mark.parametrize("parties,expected", [(3, 3), (4, 5), (2, 2), (6, 7)])
    def test_smallest_prime_not_below_party_count(self, parties, expected):
        assert select_field_size(parties).modulus == expected

    def test_rejects_single_party(self):
        with pytest.raises(ConfigError):
            select_field_size(1)

    def test_rejects_composite_modulus(self):
        with pytest.raises(ValueError):
            PrimeField(9)

    def test_trial_division(self):
        primes = [n for n in range(2, 60) if is_prime(n)]
        assert primes == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]


class TestOperations:
    def test_add_wraps(self):
        f = PrimeField(3)
        assert (f.element(2) + f.element(2)).value == 1

    def test_additive_identity(self):
        f = PrimeField(5)
        for x in f.elements():
            assert f.zero() + x == x

    def test_additive_inverse_example(self):
        f = PrimeField(3)
        assert (f.element(1) + f.element(2)).value == 0

    def test_mul_wraps(self):
        f = PrimeField(5)
        assert (f.element(2) * f.element(3)).value == 1

    def test_multiplicative_identity(self):
        f = PrimeField(5)
        for x in f.elements():
            assert f.one() * x == x

    def test_mul_mod_three(self):
        f = PrimeField(3)
        assert (f.element(2) * f.element(2)).value == 1

    def test_field_mismatch_raises(self):
        with pytest.raises(FieldMismatchError):
            PrimeField(3).element(1) + PrimeField(5).element(1)

    def test_value_range_enforced(self):
        with pytest.raises(ValueError):
            FieldElement(3, PrimeField(3))
        with pytest.raises(ValueError):
            FieldElement(-1, PrimeField(3))


class TestInnerProduct:
    def test_hand_example_mod_three(self):
        f = PrimeField(3)
        x = [f.element(v) for v in (1, 1, 0, 0)]
        q = [f.element(v) for v in (2, 1, 0, 0)]
        assert modular_dot(x, q, 3) == 0
        assert inner_product(x, q).value == 0

    def test_zero_vector(self):
        f = PrimeField(5)
        x = [f.zero()] * 4
        q = [f.element(v) for v in (1, 2, 3, 4)]
        assert inner_product(x, q).value == 0

    def test_hand_example_mod_five(self):
        f = PrimeField(5)
        x = [f.element(v) for v in (1, 0, 1, 1, 0)]
        q = [f.element(v) for v in (1, 1, 1, 1, 1)]
        assert modular_dot(x, q, 5) == 3
        assert inner_product(x, q).value == 3

    def test_matches_oracle_exhaustively(self):
        f = PrimeField(3)
        vectors = [(a, b) for a in range(3) for b in range(3)]
        for xv in vectors:
            for qv in vectors:
                x = [f.element(v) for v in xv]
                q = [f.element(v) for v in qv]
                assert inner_product(x, q).value == modular_dot(x, q, 3)

    def test_length_mismatch(self):
        f = PrimeField(3)
        with pytest.raises(ValueError):
            inner_product([f.one()], [f.one(), f.one()])

    def test_mixed_fields(self):
        with pytest.raises(FieldMismatchError):
            inner_product([PrimeField(3).one()], [PrimeField(5).one()])


@pytest.mark.parametrize("modulus", [2, 3, 5, 7])
class TestFieldAxioms:
    def test_commutativity(self, modulus):
        f = PrimeField(modulus)
        for a in f.elements():
            for b in f.elements():
                assert a + b == b + a
                assert a * b == b * a

    def test_associativity(self, modulus):
        f = PrimeField(modulus)
        elems = list(f.elements())
        for a in elems:
            for b in elems:
                for c in elems:
                    assert (a + b) + c == a + (b + c)
                    assert (a * b) * c == a * (b * c)

    def test_distributivity(self, modulus):
        f = PrimeField(modulus)
        elems = list(f.elements())
        for a in elems:
            for b in elems:
                for c in elems:
                    assert a * (b + c) == a * b + a * c

    def test_inverses(self, modulus):
        f = PrimeField(modulus)
        for a in f.elements():
            assert a + (-a) == f.zero()
        for a in f.nonzero_elements():
            inverses = [b for b in f.nonzero_elements() if (a * b) == f.one()]
            assert len(inverses) == 1

    def test_scaling_by_nonzero_permutes_nonzeros(self, modulus):
        # The masking argument for the intersection indicator rests on this.
        f = PrimeField(modulus)
        nonzero = list(f.nonzero_elements())
        for a in nonzero:
            image = {(c * a).value for c in nonzero}
            assert image == {e.value for e in nonzero}
