"""Deriving dimensionless groups for ramp-load damage models.

The model-building story starts with a list of quantities and their
dimensions over force F, length L, and time T.  Choosing the short-term
strength, the mean failure time, and the specimen length as "repeating"
quantities, every other quantity picks up a unique dimensionless
companion group, derived here by exact rational linear algebra.
"""

from fractions import Fraction

from admfit import dimensions as dims

# The built-in registry: damage rate, damage, stress, strength, mean
# failure time, stress rate, and the three size features.
system = dims.table1_system()

print("Registered quantities:")
for q in system.quantities:
    marker = "*" if q.symbol in system.repeating else " "
    print(f"  {marker} {q.symbol:>3}  {q.name:<22} [{q.dims}]")
print("(* = repeating quantity; predictand:", system.predictand + ")")

problem = dims.validate_repeating(system)
print("\nRepeating-set check:", "ok" if problem is None else problem)

print("\nDerived dimensionless groups:")
for group in dims.derive_pi_system(system, dims.TABLE1_PI_LABELS):
    product = dims.dimension_product(system, group.as_dict())
    print(f"  {group.pi_label:>5}  {str(group):<18} dimension check: {product}")

# The same machinery works for any quantity list.  The classic immersed-
# body drag problem over mass-length-time shows the Reynolds-number pair.
mlt = ("M", "L", "T")
fluid = dims.QuantitySystem.build(
    [
        dims.Quantity("drag force", "F", dims.DimensionVector.of(M=1, L=1, T=-2)),
        dims.Quantity("body length", "L", dims.DimensionVector.of(L=1)),
        dims.Quantity("velocity", "V", dims.DimensionVector.of(L=1, T=-1)),
        dims.Quantity("density", "rho", dims.DimensionVector.of(M=1, L=-3)),
        dims.Quantity("viscosity", "mu", dims.DimensionVector.of(M=1, L=-1, T=-1)),
    ],
    repeating=("L", "V", "rho"),
    base_dims=mlt,
    predictand="F",
)
print("\nImmersed-body system over {M, L, T}:")
for group in dims.derive_pi_system(fluid):
    print(f"  {str(group):<24} exponents {dict(group.exponents)}")

# Exponents are exact rationals, so fractional dimensions work too.
half = dims.QuantitySystem.build(
    [
        dims.Quantity("half-power force", "Qh", dims.DimensionVector.of(F=Fraction(1, 2))),
        dims.Quantity("force", "Qf", dims.DimensionVector.of(F=1)),
    ],
    repeating=("Qf",),
    predictand="Qh",
)
group = dims.derive_pi_group(half, "Qh")
print("\nFractional exponents stay exact:", dict(group.exponents))

print("\nCSV form (the CLI emits the same):")
print(dims.pi_system_csv(dims.derive_pi_system(system)))
