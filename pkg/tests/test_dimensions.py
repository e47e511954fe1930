from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from admfit import dimensions as dims
from admfit.errors import SingularSystem, UnknownSymbol, ValidationError

F = Fraction


@pytest.fixture
def table1():
    return dims.table1_system()


class TestDimensionVector:
    def test_absent_dimensions_are_zero(self):
        v = dims.DimensionVector.of(F=1)
        assert v.exponent("T") == 0
        assert v.exponent("F") == 1

    def test_zeros_dropped_from_equality(self):
        assert dims.DimensionVector.of(F=1, T=0) == dims.DimensionVector.of(F=1)

    def test_rational_exponents_exact(self):
        v = dims.DimensionVector.of(L=F(1, 3)) ** 3
        assert v == dims.DimensionVector.of(L=1)

    def test_product_adds(self):
        a = dims.DimensionVector.of(F=1, L=-2)
        b = dims.DimensionVector.of(L=2, T=-1)
        assert (a * b).as_dict() == {"F": F(1), "T": F(-1)}

    def test_str(self):
        assert str(dims.DimensionVector.of(F=1, L=-2)) == "F L^-2"
        assert str(dims.DimensionVector()) == "1"


class TestDimensionProduct:
    def test_stress_over_strength_dimensionless(self, table1):
        assert dims.dimension_product(table1, {"Q3": 1, "Q4": -1}).is_zero

    def test_empty_product_dimensionless(self, table1):
        assert dims.dimension_product(table1, {}).is_zero

    def test_damage_rate_has_inverse_time(self, table1):
        assert dims.dimension_product(table1, {"Q1": 1}).as_dict() == {"T": F(-1)}

    def test_unknown_symbol_raises(self, table1):
        with pytest.raises(UnknownSymbol):
            dims.dimension_product(table1, {"Q99": 1})


class TestValidateRepeating:
    def test_table1_choice_is_ok(self, table1):
        assert dims.validate_repeating(table1) is None

    def test_dependent_rows_diagnosed(self):
        bad = dims.QuantitySystem.build(
            dims.TABLE1_QUANTITIES, repeating=("Q4", "Q3", "Q9"), predictand="Q1"
        )
        diagnostic = dims.validate_repeating(bad)
        assert diagnostic is not None and "depend" in diagnostic

    def test_predictand_in_repeating_diagnosed(self):
        bad = dims.QuantitySystem.build(
            dims.TABLE1_QUANTITIES, repeating=("Q1", "Q5", "Q9"), predictand="Q1"
        )
        diagnostic = dims.validate_repeating(bad)
        assert diagnostic is not None and "Q1" in diagnostic

    def test_wrong_size_diagnosed(self):
        bad = dims.QuantitySystem.build(
            dims.TABLE1_QUANTITIES, repeating=("Q4", "Q5"), predictand="Q1"
        )
        diagnostic = dims.validate_repeating(bad)
        assert diagnostic is not None and "rank" in diagnostic


EXPECTED_TABLE1_GROUPS = {
    "Q1": {"Q1": 1, "Q5": 1},
    "Q2": {"Q2": 1},
    "Q3": {"Q3": 1, "Q4": -1},
    "Q6": {"Q6": 1, "Q4": -1, "Q5": 1},
    "Q7": {"Q7": 1, "Q9": -1},
    "Q8": {"Q8": 1, "Q9": -1},
}


class TestDerivePiGroup:
    def test_damage_rate_group(self, table1):
        group = dims.derive_pi_group(table1, "Q1")
        assert group.as_dict() == {"Q1": F(1), "Q5": F(1)}

    def test_dimensionless_target_stands_alone(self, table1):
        group = dims.derive_pi_group(table1, "Q2")
        assert group.as_dict() == {"Q2": F(1)}

    def test_stress_rate_group(self, table1):
        group = dims.derive_pi_group(table1, "Q6")
        assert group.as_dict() == {"Q6": F(1), "Q4": F(-1), "Q5": F(1)}

    def test_target_exponent_is_plus_one(self, table1):
        for target in ("Q1", "Q3", "Q7"):
            assert dims.derive_pi_group(table1, target).as_dict()[target] == 1

    def test_singular_spanning_failure(self):
        # repeating set {time} cannot absorb a force dimension
        quantities = (
            dims.Quantity("rate", "R", dims.DimensionVector.of(F=1)),
            dims.Quantity("clock", "C", dims.DimensionVector.of(T=1)),
        )
        system = dims.QuantitySystem.build(quantities, repeating=("C",), predictand="R")
        with pytest.raises(SingularSystem):
            dims.derive_pi_group(system, "R")

    def test_every_group_exactly_dimensionless(self, table1):
        for group in dims.derive_pi_system(table1):
            assert dims.dimension_product(table1, group.as_dict()).is_zero


class TestDerivePiSystem:
    def test_table1_reproduces_the_six_groups(self, table1):
        groups = dims.derive_pi_system(table1)
        assert len(groups) == 6
        assert [g.label for g in groups] == ["Q1", "Q2", "Q3", "Q6", "Q7", "Q8"]
        for group in groups:
            expected = {k: F(v) for k, v in EXPECTED_TABLE1_GROUPS[group.label].items()}
            assert group.as_dict() == expected

    def test_preset_group_names(self, table1):
        groups = dims.derive_pi_system(table1, dims.TABLE1_PI_LABELS)
        assert [g.pi_label for g in groups] == [
            "pi_1",
            "pi_2",
            "pi_3",
            "pi_6",
            "pi_7",
            "pi_8",
        ]

    def test_single_dimensionless_quantity(self):
        system = dims.QuantitySystem.build(
            [dims.Quantity("ratio", "R", dims.DimensionVector())], repeating=()
        )
        groups = dims.derive_pi_system(system)
        assert len(groups) == 1
        assert groups[0].as_dict() == {"R": F(1)}

    def test_fluid_force_system_mass_based(self):
        # immersed-body system over {M, L, T}: drag coefficient and the
        # viscosity group (inverse Reynolds number)
        mlt = ("M", "L", "T")
        quantities = (
            dims.Quantity("force", "F", dims.DimensionVector.of(M=1, L=1, T=-2)),
            dims.Quantity("length", "L", dims.DimensionVector.of(L=1)),
            dims.Quantity("velocity", "V", dims.DimensionVector.of(L=1, T=-1)),
            dims.Quantity("density", "rho", dims.DimensionVector.of(M=1, L=-3)),
            dims.Quantity("viscosity", "mu", dims.DimensionVector.of(M=1, L=-1, T=-1)),
        )
        system = dims.QuantitySystem.build(
            quantities, repeating=("L", "V", "rho"), base_dims=mlt, predictand="F"
        )
        assert dims.validate_repeating(system) is None
        groups = {g.label: g.as_dict() for g in dims.derive_pi_system(system)}
        assert groups["F"] == {"F": F(1), "L": F(-2), "V": F(-2), "rho": F(-1)}
        assert groups["mu"] == {"mu": F(1), "L": F(-1), "V": F(-1), "rho": F(-1)}


class TestInvariants:
    def test_repeating_order_does_not_matter(self):
        base = dims.derive_pi_system(dims.table1_system())
        shuffled = dims.QuantitySystem.build(
            dims.TABLE1_QUANTITIES, repeating=("Q9", "Q4", "Q5"), predictand="Q1"
        )
        assert dims.derive_pi_system(shuffled) == base

    @given(st.sampled_from(["Q1", "Q2", "Q3", "Q6", "Q7", "Q8"]))
    @settings(max_examples=20, deadline=None)
    def test_groups_depend_only_on_dimensions(self, target):
        # renaming quantities (a pure unit rescale leaves dims untouched)
        renamed = tuple(
            dims.Quantity(q.name.upper(), q.symbol, q.dims) for q in dims.TABLE1_QUANTITIES
        )
        system = dims.QuantitySystem.build(renamed, repeating=("Q4", "Q5", "Q9"), predictand="Q1")
        assert (
            dims.derive_pi_group(system, target).as_dict()
            == dims.derive_pi_group(dims.table1_system(), target).as_dict()
        )


class TestCsvInterfaces:
    TABLE_CSV = (
        "symbol,name,F,L,T\n"
        "Q1,damage rate,0,0,-1\n"
        "Q2,damage,0,0,0\n"
        "Q3,stress,1,-2,0\n"
        "Q4,strength,1,-2,0\n"
        "Q5,mean time,0,0,1\n"
    )

    def test_round_trip_from_csv(self, tmp_path):
        path = tmp_path / "quantities.csv"
        path.write_text(self.TABLE_CSV)
        system = dims.load_quantity_system(path, repeating=("Q4", "Q5"))
        assert dims.validate_repeating(system) is None
        groups = {g.label: g.as_dict() for g in dims.derive_pi_system(system)}
        assert groups["Q1"] == {"Q1": F(1), "Q5": F(1)}
        assert groups["Q3"] == {"Q3": F(1), "Q4": F(-1)}

    def test_rational_cells(self):
        lines = ["symbol,name,F,L,T", "Qh,half force,1/2,0,0", "Qf,force,1,0,0"]
        system = dims.read_quantity_system(lines, repeating=("Qf",), predictand="Qh")
        group = dims.derive_pi_group(system, "Qh")
        assert group.as_dict() == {"Qh": F(1), "Qf": F(-1, 2)}

    def test_bad_header_rejected(self):
        with pytest.raises(ValidationError):
            dims.read_quantity_system(["name,symbol,F,L,T", "x,y,1,0,0"])

    def test_bad_exponent_rejected(self):
        with pytest.raises(ValidationError) as err:
            dims.read_quantity_system(["symbol,name,F,L,T", "Q1,x,zebra,0,0"])
        assert "line 2" in str(err.value)

    def test_emitted_csv(self, table1):
        text = dims.pi_system_csv(dims.derive_pi_system(table1))
        lines = text.strip().splitlines()
        assert lines[0] == "group,symbol,exponent"
        assert "Q3,Q4,-1" in lines
        assert len(lines) == 1 + 12  # six groups, twelve nonzero exponents

    def test_duplicate_symbols_rejected(self):
        with pytest.raises(ValidationError):
            dims.read_quantity_system(["symbol,name,F,L,T", "Q1,x,1,0,0", "Q1,y,0,1,0"])
