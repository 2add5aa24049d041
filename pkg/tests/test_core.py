import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairdiv import (
    Allocation,
    DomainError,
    ParseError,
    Predictions,
    bundle_value,
    check_predictions,
    format_rational,
    instance_from_rows,
    load_allocation,
    load_instance,
    parse_rational,
    save_allocation,
    save_instance,
)
from fairdiv.core import instance_to_json

F = Fraction


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestParseRational:
    def test_fraction_and_decimal_literals_are_exact(self):
        assert parse_rational("1/3") == F(1, 3)
        assert parse_rational("0.25") == F(1, 4)
        assert parse_rational("0.5") == F(1, 2)
        assert parse_rational("7") == F(7)

    def test_garbage_rejected(self):
        for bad in ("", "1/0", "a/b", "--3", None, 1.5):
            with pytest.raises(ParseError):
                parse_rational(bad)

    def test_format_round_trips(self):
        for v in (F(1, 2), F(3), F(0), F(41, 7)):
            assert parse_rational(format_rational(v)) == v


class TestInstanceFiles:
    def test_load_declared_content(self, tmp_path):
        path = write(
            tmp_path / "i.json",
            '{"n": 2, "m": 2, "values": [["1","1"], ["1","1/2"]]}',
        )
        inst = load_instance(path)
        assert inst.n == 2 and inst.m == 2
        assert inst.value(2, 2) == F(1, 2)

    def test_mixed_literal_forms_parse_exactly(self, tmp_path):
        path = write(tmp_path / "i.json", '{"values": [["1/3", "0.25"], [1, 0.1]]}')
        inst = load_instance(path)
        assert inst.values[0] == (F(1, 3), F(1, 4))
        assert inst.values[1] == (F(1), F(1, 10))  # JSON 0.1 converted via its text

    def test_negative_value_rejected(self, tmp_path):
        path = write(tmp_path / "i.json", '{"values": [["1"], ["-1"]]}')
        with pytest.raises(ParseError):
            load_instance(path)

    def test_ragged_matrix_rejected(self, tmp_path):
        path = write(tmp_path / "i.json", '{"values": [["1","2"], ["1"]]}')
        with pytest.raises(ParseError):
            load_instance(path)

    def test_declared_dimensions_must_match(self, tmp_path):
        path = write(tmp_path / "i.json", '{"n": 3, "values": [["1"], ["1"]]}')
        with pytest.raises(ParseError):
            load_instance(path)

    def test_malformed_json_rejected(self, tmp_path):
        path = write(tmp_path / "i.json", "{nope")
        with pytest.raises(ParseError):
            load_instance(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ParseError):
            load_instance(str(tmp_path / "absent.json"))

    def test_single_agent_rejected(self, tmp_path):
        path = write(tmp_path / "i.json", '{"values": [["1"]]}')
        with pytest.raises(DomainError):
            load_instance(path)

    def test_save_load_round_trip_is_byte_identical(self, tmp_path):
        inst = instance_from_rows([[F(1), F(1, 2), F(1, 4)], [F(1), F(1), F(0)]])
        first = tmp_path / "a.json"
        second = tmp_path / "b.json"
        save_instance(inst, str(first))
        save_instance(load_instance(str(first)), str(second))
        assert first.read_bytes() == second.read_bytes()

    def test_canonical_form_uses_lowest_terms(self):
        inst = instance_from_rows([[F(2, 4)], [F(1)]])
        payload = json.loads(instance_to_json(inst))
        assert payload["values"][0][0] == "1/2"


class TestAllocationFiles:
    def test_round_trip(self, tmp_path):
        alloc = Allocation((1, 2, 1))
        path = tmp_path / "a.json"
        save_allocation(alloc, str(path))
        assert load_allocation(str(path)) == alloc

    def test_owner_must_be_integers(self, tmp_path):
        path = write(tmp_path / "a.json", '{"owner": [1, "x"]}')
        with pytest.raises(ParseError):
            load_allocation(path)


class TestBundleValue:
    def test_additivity(self):
        inst = instance_from_rows([[F(1), F(1, 2), F(3)], [F(0), F(0), F(0)]])
        assert bundle_value(inst, 1, {1, 2}) == F(3, 2)
        assert bundle_value(inst, 1, ()) == 0
        assert bundle_value(inst, 1, (1, 2, 3)) == F(9, 2)

    def test_index_out_of_range(self):
        inst = instance_from_rows([[F(1)], [F(1)]])
        with pytest.raises(DomainError):
            bundle_value(inst, 1, (2,))
        with pytest.raises(DomainError):
            bundle_value(inst, 3, (1,))


class TestPredictions:
    def test_perfect_prediction_accepted(self):
        inst = instance_from_rows([[F(1), F(1, 2)], [F(1), F(1)]])
        assert check_predictions(inst, Predictions((F(1), F(1))))

    def test_overestimate_beyond_epsilon_rejected(self):
        inst = instance_from_rows([[F(1, 2)], [F(1)]])
        pred = Predictions((F(1), F(1)), F(1, 4))
        assert not check_predictions(inst, pred)  # 1/2 < 3/4

    def test_overestimate_within_epsilon_accepted(self):
        inst = instance_from_rows([[F(4, 5)], [F(1)]])
        pred = Predictions((F(1), F(1)), F(1, 4))
        assert check_predictions(inst, pred)  # 4/5 >= 3/4

    def test_contract_parameters_validated(self):
        with pytest.raises(DomainError):
            Predictions((F(0),))
        with pytest.raises(DomainError):
            Predictions((F(1),), F(1))
        with pytest.raises(DomainError):
            Predictions((F(1), F(1)), F(-1, 2))


rationals = st.fractions(min_value=-100, max_value=100, max_denominator=50)


class TestRationalFieldAxioms:
    """Sanity net over the exact-arithmetic layer."""

    @given(rationals, rationals, rationals)
    def test_associativity_and_distributivity(self, x, y, z):
        assert (x + y) + z == x + (y + z)
        assert (x * y) * z == x * (y * z)
        assert x * (y + z) == x * y + x * z

    @given(rationals)
    def test_inverses(self, x):
        assert x + (-x) == 0
        if x != 0:
            assert x * (1 / x) == 1

    @given(st.fractions(max_denominator=1000))
    def test_lowest_terms(self, x):
        from math import gcd

        assert gcd(x.numerator, x.denominator) == 1
        assert x.denominator > 0


def test_instance_is_immutable():
    inst = instance_from_rows([[F(1)], [F(1)]])
    with pytest.raises(Exception):
        inst.values = ()
