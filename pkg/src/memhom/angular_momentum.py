"""Angular-momentum algebra for the Raman write process.

Clebsch-Gordan coefficients are evaluated with the Racah sum in exact
rational arithmetic. Every coefficient has the form ``sign * sqrt(p/q)``,
so it is carried as a :class:`SqrtRational`; squares of coefficients (all
that the atomic-structure ratios need) stay exact ``Fraction`` objects.

Half-integers are handled internally as doubled integers (``2j``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Union

HalfInteger = Union[int, float, str, Fraction]

# CODATA 2018
HBAR = 1.054571817e-34  # J s
EPSILON_0 = 8.8541878128e-12  # F / m

PHYSICAL_CONSTANTS = {
    "hbar": (HBAR, "J s", "CODATA 2018, exact"),
    "epsilon_0": (EPSILON_0, "F m^-1", "CODATA 2018, rel. unc. 1.5e-10"),
}


class AngularMomentumError(ValueError):
    """Invalid quantum numbers or level scheme."""


class DegenerateSchemeError(AngularMomentumError):
    """All relevant transition weights vanish, so a ratio is undefined."""


def doubled(j: HalfInteger) -> int:
    """Return ``2*j`` as an int, rejecting values that are not half-integers."""
    if isinstance(j, str):
        j = Fraction(j)
    elif isinstance(j, float):
        j = Fraction(j).limit_denominator(4)
        if abs(float(j) * 2 - round(float(j) * 2)) > 1e-12:
            raise AngularMomentumError(f"{j} is not a half-integer")
    j2 = Fraction(j) * 2
    if j2.denominator != 1:
        raise AngularMomentumError(f"{j} is not a half-integer")
    return int(j2)


def undoubled(j2: int) -> Fraction:
    return Fraction(j2, 2)


@dataclass(frozen=True)
class SqrtRational:
    """Exact value ``sign * sqrt(square)`` with ``square`` a non-negative Fraction."""

    sign: int
    square: Fraction

    def __post_init__(self):
        if self.square < 0:
            raise ValueError("square must be non-negative")
        if self.square == 0:
            object.__setattr__(self, "sign", 0)
        elif self.sign not in (-1, 1):
            raise ValueError("sign must be +-1 for a non-zero value")

    @classmethod
    def zero(cls) -> "SqrtRational":
        return cls(0, Fraction(0))

    @classmethod
    def from_rational(cls, x: Fraction | int) -> "SqrtRational":
        x = Fraction(x)
        return cls(1 if x > 0 else -1, x * x)

    def __mul__(self, other: "SqrtRational") -> "SqrtRational":
        if not isinstance(other, SqrtRational):
            return NotImplemented
        return SqrtRational(self.sign * other.sign, self.square * other.square)

    def __neg__(self) -> "SqrtRational":
        return SqrtRational(-self.sign, self.square)

    def __float__(self) -> float:
        return self.sign * math.sqrt(self.square)

    def __bool__(self) -> bool:
        return self.sign != 0

    def __str__(self) -> str:
        if self.sign == 0:
            return "0"
        s = "+" if self.sign > 0 else "-"
        return f"{s}sqrt({self.square.numerator}/{self.square.denominator})"


def _check_jm(j2: int, m2: int, name: str) -> None:
    if j2 < 0:
        raise AngularMomentumError(f"{name}: negative angular momentum {j2}/2")
    if abs(m2) > j2:
        raise AngularMomentumError(f"{name}: |m| = {abs(m2)}/2 exceeds j = {j2}/2")
    if (j2 - m2) % 2:
        raise AngularMomentumError(f"{name}: j = {j2}/2 and m = {m2}/2 have inconsistent parity")


@lru_cache(maxsize=None)
def _cg_doubled(j1: int, m1: int, j2: int, m2: int, J: int, M: int) -> SqrtRational:
    if m1 + m2 != M:
        return SqrtRational.zero()
    if J < abs(j1 - j2) or J > j1 + j2 or (j1 + j2 + J) % 2:
        return SqrtRational.zero()
    f = math.factorial
    # all arguments below are (sums of doubled values) / 2 and are integers here
    a = (j1 + j2 - J) // 2
    b = (j1 - j2 + J) // 2
    c = (-j1 + j2 + J) // 2
    prefactor = Fraction(
        (J + 1) * f(a) * f(b) * f(c)
        * f((J + M) // 2) * f((J - M) // 2)
        * f((j1 - m1) // 2) * f((j1 + m1) // 2)
        * f((j2 - m2) // 2) * f((j2 + m2) // 2),
        f((j1 + j2 + J) // 2 + 1),
    )
    kmin = max(0, (j2 - J - m1) // 2, (j1 - J + m2) // 2)
    kmax = min(a, (j1 - m1) // 2, (j2 + m2) // 2)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            f(k) * f(a - k) * f((j1 - m1) // 2 - k) * f((j2 + m2) // 2 - k)
            * f((J - j2 + m1) // 2 + k) * f((J - j1 - m2) // 2 + k)
        )
        total += Fraction((-1) ** k, den)
    if total == 0:
        return SqrtRational.zero()
    return SqrtRational(1 if total > 0 else -1, prefactor * total * total)


def clebsch_gordan(j1: HalfInteger, m1: HalfInteger, j2: HalfInteger, m2: HalfInteger,
                   J: HalfInteger, M: HalfInteger) -> SqrtRational:
    """Exact Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M>, Condon-Shortley phase.

    Returns zero when ``M != m1 + m2`` or the triangle rule fails. Raises
    :class:`AngularMomentumError` for arguments that are not valid
    half-integer (j, m) pairs.
    """
    d = [doubled(x) for x in (j1, m1, j2, m2, J, M)]
    _check_jm(d[0], d[1], "j1,m1")
    _check_jm(d[2], d[3], "j2,m2")
    _check_jm(d[4], d[5], "J,M")
    return _cg_doubled(*d)


@dataclass(frozen=True)
class LevelScheme:
    """Hyperfine levels |a>, |b>, |c> and the ground-state populations of |a, m>.

    ``populations`` maps m (any half-integer representation) to p_m. When
    omitted, the ensemble is unpolarized: p_m = 1/(2 F_a + 1).
    """

    F_a: HalfInteger
    F_b: HalfInteger
    F_c: HalfInteger
    populations: Mapping[HalfInteger, float | Fraction] | None = None
    _pops: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        fa, fb, fc = doubled(self.F_a), doubled(self.F_b), doubled(self.F_c)
        if min(fa, fb, fc) < 0:
            raise AngularMomentumError("angular momenta must be non-negative")
        for name, f in (("F_a", fa), ("F_b", fb)):
            if not (abs(f - 2) <= fc <= f + 2) or (f + fc) % 2:
                raise AngularMomentumError(
                    f"{name} = {undoubled(f)} cannot reach F_c = {undoubled(fc)} by a dipole transition"
                )
        if self.populations is None:
            n = fa + 1
            pops = tuple((m2, Fraction(1, n)) for m2 in range(-fa, fa + 1, 2))
        else:
            acc = {}
            for m, p in self.populations.items():
                m2 = doubled(m)
                _check_jm(fa, m2, "F_a,m")
                p = Fraction(p)
                if p < 0:
                    raise AngularMomentumError(f"negative population p_{undoubled(m2)} = {p}")
                acc[m2] = acc.get(m2, Fraction(0)) + p
            if abs(float(sum(acc.values())) - 1.0) > 1e-12:
                raise AngularMomentumError(f"populations sum to {float(sum(acc.values()))}, not 1")
            pops = tuple(sorted(acc.items()))
        object.__setattr__(self, "_pops", pops)

    @property
    def doubled_momenta(self) -> tuple[int, int, int]:
        return doubled(self.F_a), doubled(self.F_b), doubled(self.F_c)

    def population_items(self) -> tuple[tuple[int, Fraction], ...]:
        """(2m, p_m) pairs."""
        return self._pops


def _x_doubled(fa: int, fb: int, fc: int, m2: int, alpha: int) -> SqrtRational:
    a2 = 2 * alpha
    if abs(m2) > fc or abs(m2 - a2) > fb:
        return SqrtRational.zero()
    return _cg_doubled(fa, m2, 2, 0, fc, m2) * _cg_doubled(fb, m2 - a2, 2, a2, fc, m2)


def x_coefficient(scheme: LevelScheme, m: HalfInteger, alpha: int) -> SqrtRational:
    """Product of the write (a -> c, pi) and emission (c -> b, alpha) coefficients for |a, m>."""
    if alpha not in (-1, 0, 1):
        raise AngularMomentumError(f"alpha must be -1, 0 or +1, got {alpha}")
    fa, fb, fc = scheme.doubled_momenta
    m2 = doubled(m)
    _check_jm(fa, m2, "F_a,m")
    return _x_doubled(fa, fb, fc, m2, alpha)


def channel_weights(scheme: LevelScheme) -> dict[int, Fraction]:
    """Population-weighted squared X for each emission channel alpha."""
    fa, fb, fc = scheme.doubled_momenta
    out = {}
    for alpha in (-1, 0, 1):
        out[alpha] = sum(
            (p * _x_doubled(fa, fb, fc, m2, alpha).square for m2, p in scheme.population_items()),
            Fraction(0),
        )
    return out


def branching_angle(scheme: LevelScheme) -> Fraction:
    """cos^2(theta): weight of the alpha = -1 channel among the two circular channels."""
    w = channel_weights(scheme)
    den = w[-1] + w[1]
    if den == 0:
        raise DegenerateSchemeError("all X_{m,+-1} vanish for this scheme")
    return w[-1] / den


def mixing_angle(scheme: LevelScheme) -> Fraction:
    """cos^2(eta): share of the H-polarized Raman channel, exact."""
    w = channel_weights(scheme)
    circular = (w[-1] + w[1]) / 2
    den = w[0] + circular
    if den == 0:
        raise DegenerateSchemeError("all X_{m,alpha} vanish for this scheme")
    return circular / den


@dataclass(frozen=True)
class CouplingInputs:
    """Physical inputs of the parametric coupling, SI units."""

    d_cb: float  # C m
    d_ca: float  # C m
    Delta: float  # rad / s
    k_s: float  # 1 / m
    k_w: float  # 1 / m
    n_w: float
    N: float
    A_bar: float  # m^2

    def __post_init__(self):
        if self.Delta == 0:
            raise AngularMomentumError("detuning Delta must be non-zero")
        for name in ("k_s", "k_w", "n_w", "N", "A_bar"):
            if not getattr(self, name) > 0:
                raise AngularMomentumError(f"{name} must be positive")


def coupling_chi(scheme: LevelScheme, inputs: CouplingInputs) -> float:
    """Dimensionless parametric coupling chi of the write Hamiltonian."""
    w = channel_weights(scheme)
    structure = float(w[0] + (w[-1] + w[1]) / 2)
    return (
        2.0 * inputs.d_cb * inputs.d_ca / inputs.Delta
        * math.sqrt(inputs.k_s * inputs.k_w * inputs.n_w * inputs.N)
        / (HBAR * EPSILON_0 * inputs.A_bar)
        * math.sqrt(structure)
    )


RB85_D1 = LevelScheme(F_a=3, F_b=2, F_c=3)
