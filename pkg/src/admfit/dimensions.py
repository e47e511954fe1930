"""Mechanized Buckingham-pi construction.

Quantities carry exact rational dimension vectors over a configurable set
of base dimensions (force F, length L, time T by default).  A chosen set
of "repeating" quantities non-dimensionalizes every other quantity: for
each remaining target the unique product

    target * prod(repeating_j ** e_j)

that is dimensionless is found by solving a small linear system over the
rationals.  All arithmetic is exact, so dimensionlessness is an equality,
not a tolerance.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .errors import SingularSystem, UnknownSymbol, ValidationError

__all__ = [
    "DimensionVector",
    "Quantity",
    "PiGroup",
    "QuantitySystem",
    "dimension_product",
    "validate_repeating",
    "derive_pi_group",
    "derive_pi_system",
    "table1_system",
    "load_quantity_system",
    "read_quantity_system",
    "pi_system_csv",
    "TABLE1_QUANTITIES",
    "TABLE1_PI_LABELS",
]

DEFAULT_BASE_DIMS = ("F", "L", "T")


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"exponents must be exact rationals, got {type(value).__name__}")


@dataclass(frozen=True)
class DimensionVector:
    """Exact rational exponents over base dimensions; zeros are dropped."""

    exponents: tuple = ()

    @classmethod
    def of(cls, mapping: Mapping[str, object] | None = None, **kwargs) -> "DimensionVector":
        combined: dict[str, Fraction] = {}
        for source in (mapping or {}), kwargs:
            for sym, exp in source.items():
                combined[sym] = combined.get(sym, Fraction(0)) + _to_fraction(exp)
        items = tuple(sorted((s, e) for s, e in combined.items() if e != 0))
        return cls(items)

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.exponents)

    def exponent(self, symbol: str) -> Fraction:
        return dict(self.exponents).get(symbol, Fraction(0))

    @property
    def is_zero(self) -> bool:
        return not self.exponents

    def __mul__(self, other: "DimensionVector") -> "DimensionVector":
        """Dimension of a product of quantities (exponents add)."""
        merged = self.as_dict()
        for sym, exp in other.exponents:
            merged[sym] = merged.get(sym, Fraction(0)) + exp
        return DimensionVector.of(merged)

    def __pow__(self, power) -> "DimensionVector":
        p = _to_fraction(power)
        return DimensionVector.of({s: e * p for s, e in self.exponents})

    def __str__(self) -> str:
        if self.is_zero:
            return "1"
        parts = []
        for sym, exp in self.exponents:
            parts.append(sym if exp == 1 else f"{sym}^{exp}")
        return " ".join(parts)


@dataclass(frozen=True)
class Quantity:
    """A named model quantity with its dimension vector."""

    name: str
    symbol: str
    dims: DimensionVector = field(default_factory=DimensionVector)


@dataclass(frozen=True)
class PiGroup:
    """A dimensionless product of quantity powers."""

    label: str
    exponents: tuple  # ((symbol, Fraction), ...) sorted, zeros dropped
    pi_label: Optional[str] = None

    @classmethod
    def of(cls, label: str, mapping: Mapping[str, object], pi_label: Optional[str] = None) -> "PiGroup":
        items = tuple(sorted((s, _to_fraction(e)) for s, e in mapping.items() if _to_fraction(e) != 0))
        return cls(label, items, pi_label)

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.exponents)

    def __str__(self) -> str:
        num = [s if e == 1 else f"{s}^{e}" for s, e in self.exponents if e > 0]
        den = [s if e == -1 else f"{s}^{-e}" for s, e in self.exponents if e < 0]
        head = " ".join(num) or "1"
        return f"{head} / {' '.join(den)}" if den else head


@dataclass(frozen=True)
class QuantitySystem:
    """Ordered quantity registry plus the repeating-set choice.

    ``predictand`` is the quantity the model solves for; it may never be a
    repeating quantity.  It defaults to the first registered quantity.
    """

    quantities: tuple
    repeating: frozenset
    base_dims: tuple = DEFAULT_BASE_DIMS
    predictand: Optional[str] = None

    def __post_init__(self):
        symbols = [q.symbol for q in self.quantities]
        if len(set(symbols)) != len(symbols):
            dupes = sorted({s for s in symbols if symbols.count(s) > 1})
            raise ValidationError(f"duplicate quantity symbols: {', '.join(dupes)}")
        for sym in self.repeating:
            if sym not in symbols:
                raise UnknownSymbol(f"repeating symbol {sym!r} is not registered")
        if self.predictand is None and self.quantities:
            object.__setattr__(self, "predictand", self.quantities[0].symbol)
        for q in self.quantities:
            for dim, _ in q.dims.exponents:
                if dim not in self.base_dims:
                    raise ValidationError(
                        f"quantity {q.symbol} uses base dimension {dim!r} outside {self.base_dims}"
                    )

    @classmethod
    def build(
        cls,
        quantities: Iterable[Quantity],
        repeating: Iterable[str],
        base_dims: Sequence[str] = DEFAULT_BASE_DIMS,
        predictand: Optional[str] = None,
    ) -> "QuantitySystem":
        return cls(tuple(quantities), frozenset(repeating), tuple(base_dims), predictand)

    def quantity(self, symbol: str) -> Quantity:
        for q in self.quantities:
            if q.symbol == symbol:
                return q
        raise UnknownSymbol(f"unknown quantity symbol {symbol!r}")

    def non_repeating(self) -> list:
        return [q for q in self.quantities if q.symbol not in self.repeating]

    def repeating_ordered(self) -> list:
        return [q for q in self.quantities if q.symbol in self.repeating]


def dimension_product(system: QuantitySystem, exponents: Mapping[str, object]) -> DimensionVector:
    """Dimension vector of prod(Q_j ** e_j) over the registered quantities."""
    result = DimensionVector()
    for sym, exp in exponents.items():
        q = system.quantity(sym)  # raises UnknownSymbol
        result = result * (q.dims ** _to_fraction(exp))
    return result


def _dimension_matrix(system: QuantitySystem, quantities: Sequence[Quantity]):
    """Rows = base dims, columns = quantities, entries Fractions."""
    return [
        [q.dims.exponent(dim) for q in quantities]
        for dim in system.base_dims
    ]


def _rank(matrix) -> int:
    """Exact rank by Gaussian elimination over the rationals."""
    m = [row[:] for row in matrix]
    rank = 0
    n_rows = len(m)
    n_cols = len(m[0]) if n_rows else 0
    row = 0
    for col in range(n_cols):
        pivot = next((r for r in range(row, n_rows) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[row], m[pivot] = m[pivot], m[row]
        inv = m[row][col]
        m[row] = [v / inv for v in m[row]]
        for r in range(n_rows):
            if r != row and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [a - factor * b for a, b in zip(m[r], m[row])]
        row += 1
        rank += 1
        if row == n_rows:
            break
    return rank


def _solve_exact(matrix, rhs):
    """Solve A x = b exactly; (solution, status) with status one of
    "ok", "inconsistent", "underdetermined"."""
    n_rows = len(matrix)
    n_cols = len(matrix[0]) if n_rows else 0
    aug = [matrix[r][:] + [rhs[r]] for r in range(n_rows)]
    row = 0
    pivot_cols = []
    for col in range(n_cols):
        pivot = next((r for r in range(row, n_rows) if aug[r][col] != 0), None)
        if pivot is None:
            continue
        aug[row], aug[pivot] = aug[pivot], aug[row]
        inv = aug[row][col]
        aug[row] = [v / inv for v in aug[row]]
        for r in range(n_rows):
            if r != row and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[row])]
        pivot_cols.append(col)
        row += 1
    for r in range(row, n_rows):
        if aug[r][n_cols] != 0:
            return None, "inconsistent"
    solution = [Fraction(0)] * n_cols
    for r, col in enumerate(pivot_cols):
        solution[col] = aug[r][n_cols]
    if len(pivot_cols) < n_cols:
        return solution, "underdetermined"
    return solution, "ok"


def validate_repeating(system: QuantitySystem) -> Optional[str]:
    """None when the repeating set is admissible, else a diagnostic string.

    Conditions: the predictand is not repeating, the set size equals the
    rank of the full dimension matrix, and the repeating dimension vectors
    are linearly independent (hence span the full column space).
    """
    if system.predictand in system.repeating:
        return f"predictand {system.predictand} may not be a repeating quantity"
    full_rank = _rank(_dimension_matrix(system, system.quantities))
    reps = system.repeating_ordered()
    if len(reps) != full_rank:
        return (
            f"repeating set has {len(reps)} quantities but the dimension "
            f"matrix has rank {full_rank}"
        )
    rep_rank = _rank(_dimension_matrix(system, reps))
    if rep_rank != len(reps):
        return (
            "repeating quantities are linearly dependent: "
            + ", ".join(q.symbol for q in reps)
        )
    return None


def derive_pi_group(system: QuantitySystem, target: str) -> PiGroup:
    """Dimensionless group with exponent +1 on ``target``.

    The exponents on the repeating quantities solve the homogeneous
    dimension equation exactly.  Callers are expected to have passed
    validate_repeating; raises SingularSystem when the repeating set
    cannot absorb the target's dimensions (or is itself degenerate, so
    the solution would not be unique).
    """
    if target in system.repeating:
        raise ValidationError(f"target {target!r} is a repeating quantity")
    target_q = system.quantity(target)
    reps = system.repeating_ordered()
    matrix = _dimension_matrix(system, reps)
    rhs = [-target_q.dims.exponent(dim) for dim in system.base_dims]
    solution, status = _solve_exact(matrix, rhs)
    if status == "inconsistent":
        raise SingularSystem(
            f"repeating set {{{', '.join(q.symbol for q in reps)}}} cannot "
            f"non-dimensionalize {target}"
        )
    if status == "underdetermined":
        raise SingularSystem(
            f"repeating set {{{', '.join(q.symbol for q in reps)}}} is linearly "
            f"dependent; the group for {target} would not be unique"
        )
    exponents = {target: Fraction(1)}
    for q, exp in zip(reps, solution):
        if exp != 0:
            exponents[q.symbol] = exp
    return PiGroup.of(label=target, mapping=exponents)


def derive_pi_system(system: QuantitySystem, pi_labels: Optional[Mapping[str, str]] = None) -> list:
    """One group per non-repeating quantity, in registration order."""
    groups = []
    for q in system.non_repeating():
        group = derive_pi_group(system, q.symbol)
        if pi_labels and q.symbol in pi_labels:
            group = PiGroup(group.label, group.exponents, pi_labels[q.symbol])
        groups.append(group)
    return groups


# --- the ramp-test quantity registry -----------------------------------

_FORCE_PER_AREA = DimensionVector.of(F=1, L=-2)

TABLE1_QUANTITIES = (
    Quantity("damage rate", "Q1", DimensionVector.of(T=-1)),
    Quantity("accumulated damage", "Q2", DimensionVector()),
    Quantity("applied stress", "Q3", _FORCE_PER_AREA),
    Quantity("short-term strength", "Q4", _FORCE_PER_AREA),
    Quantity("mean failure time", "Q5", DimensionVector.of(T=1)),
    Quantity("stress rate", "Q6", DimensionVector.of(F=1, L=-2, T=-1)),
    Quantity("width", "Q7", DimensionVector.of(L=1)),
    Quantity("thickness", "Q8", DimensionVector.of(L=1)),
    Quantity("length", "Q9", DimensionVector.of(L=1)),
)

# Group names carried by the preset, keyed by target symbol.  The indices
# skip 4 and 5 because those quantities are the repeating ones.
TABLE1_PI_LABELS = {
    "Q1": "pi_1",
    "Q2": "pi_2",
    "Q3": "pi_3",
    "Q6": "pi_6",
    "Q7": "pi_7",
    "Q8": "pi_8",
}


def table1_system() -> QuantitySystem:
    """The nine-quantity ramp-test system with repeating {Q4, Q5, Q9}."""
    return QuantitySystem.build(TABLE1_QUANTITIES, repeating=("Q4", "Q5", "Q9"), predictand="Q1")


# --- CSV interfaces -----------------------------------------------------


def read_quantity_system(
    text_lines: Iterable[str],
    repeating: Iterable[str] = (),
    predictand: Optional[str] = None,
) -> QuantitySystem:
    """Parse a quantity registry from CSV lines.

    Header: ``symbol,name,<dim1>,<dim2>,...`` where the dimension columns
    name the base dimensions (default header ``symbol,name,F,L,T``) and
    cells hold exact rationals (``2``, ``-1``, ``1/2``).
    """
    reader = csv.reader(text_lines)
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("empty quantity CSV") from None
    header = [h.strip() for h in header]
    if len(header) < 3 or header[0] != "symbol" or header[1] != "name":
        raise ValidationError("quantity CSV header must be 'symbol,name,<base dims...>'")
    base_dims = tuple(header[2:])
    quantities = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ValidationError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
        symbol, name = row[0].strip(), row[1].strip()
        try:
            dims = DimensionVector.of(
                {dim: Fraction(cell.strip() or "0") for dim, cell in zip(base_dims, row[2:])}
            )
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"line {lineno}: bad exponent ({exc})") from None
        quantities.append(Quantity(name, symbol, dims))
    return QuantitySystem.build(quantities, repeating=repeating, base_dims=base_dims, predictand=predictand)


def load_quantity_system(path, repeating=(), predictand=None) -> QuantitySystem:
    with open(path, newline="") as fh:
        return read_quantity_system(fh, repeating=repeating, predictand=predictand)


def pi_system_csv(groups: Iterable[PiGroup]) -> str:
    """Serialize groups as ``group,symbol,exponent`` rows (exact rationals)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["group", "symbol", "exponent"])
    for g in groups:
        for sym, exp in g.exponents:
            writer.writerow([g.label, sym, str(exp)])
    return out.getvalue()
