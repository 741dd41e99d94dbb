"""Closed-form noise thresholds for full Bell locality and full separability.

Everything is computed with :class:`fractions.Fraction`; floats appear only
when a value is presented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Iterable

from ._parallel import pmap

SEP_KINDS = ("qubit-general", "ghz-qubit", "general", "ghz-range", "ghz-prime", "nonsep-ghz")
ASYMPTOTIC_KINDS = ("ghz-N", "ghz-d", "general-N", "general-d")


def to_fraction(value) -> Fraction:
    """Exact rational from an int, Fraction, "p/q" / decimal string, or float.

    Floats convert to their exact binary value; pass strings to hit
    thresholds such as 1/9 exactly.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def rationalize(x: float, tol: float = 1e-12, max_den: int = 10**6) -> Fraction:
    """Snap a float to a nearby small-denominator rational when one lies within ``tol``."""
    f = Fraction(x).limit_denominator(max_den)
    return f if abs(float(f) - x) <= tol else Fraction(x)


def _check_dn(d: int, n_sites: int, min_n: int = 2):
    if d < 2 or n_sites < min_n:
        raise ValueError(f"need d >= 2 and N >= {min_n}, got d={d}, N={n_sites}")


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, math.isqrt(n) + 1))


def beta_loc_ghz(d: int, n_sites: int) -> Fraction:
    """1 / (1 + 2 d^(N-1) (d-1)^(N-1))."""
    _check_dn(d, n_sites)
    return Fraction(1, 1 + 2 * d ** (n_sites - 1) * (d - 1) ** (n_sites - 1))


def beta_loc_pure(d: int, n_sites: int, gamma_max) -> Fraction:
    """1 / (1 + d^N ((2d-1)^(N-1) - 1) gamma) for the largest branch weight gamma."""
    _check_dn(d, n_sites)
    g = to_fraction(gamma_max)
    if not Fraction(1, d ** (n_sites - 1)) <= g <= 1:
        raise ValueError(f"gamma_max={g} outside [d^-(N-1), 1]")
    return 1 / (1 + d ** n_sites * ((2 * d - 1) ** (n_sites - 1) - 1) * g)


def beta_loc_general_range(d: int, n_sites: int) -> tuple[Fraction, Fraction]:
    _check_dn(d, n_sites)
    q = (2 * d - 1) ** (n_sites - 1)
    lo = Fraction(1, d ** n_sites * q - d ** n_sites + 1)
    hi = Fraction(1, d * q - d + 1)
    return lo, hi


def beta_sep(d: int, n_sites: int, kind: str):
    """Known full-separability / nonseparability thresholds, by ``kind``.

    ``ghz-range`` returns a ``(lo, hi)`` pair; every other kind a single
    Fraction. ``nonsep-ghz`` is the value above which the noisy GHZ state is
    fully nonseparable.
    """
    if kind not in SEP_KINDS:
        raise ValueError(f"unknown kind {kind!r}; choose from {SEP_KINDS}")
    _check_dn(d, n_sites)
    if kind in ("qubit-general", "ghz-qubit") and d != 2:
        raise ValueError(f"{kind} applies to qubits only (d=2), got d={d}")
    if kind == "ghz-prime" and not is_prime(d):
        raise ValueError(f"ghz-prime needs a prime d, got d={d}")
    n = n_sites
    if kind == "qubit-general":
        return Fraction(1, 1 + 2 ** (2 * n - 1))
    if kind == "ghz-qubit":
        return Fraction(1, 1 + 2 ** (n - 1))
    if kind == "general":
        return Fraction(1, 1 + d ** (2 * n - 1))
    if kind == "ghz-range":
        return Fraction(1, 1 + d ** (2 * n - 1)), Fraction(1, 1 + d ** (n - 1))
    return Fraction(1, 1 + d ** (n - 1))


def gap_max(d: int, n_sites: int) -> tuple[Fraction, Fraction]:
    """Largest possible gap between the general locality bound and the general separability bound.

    Returns ``(gap, gap / separability bound)``.
    """
    _check_dn(d, n_sites, min_n=3)
    _, hi = beta_loc_general_range(d, n_sites)
    sep = beta_sep(d, n_sites, "general")
    gap = hi - sep
    return gap, gap / sep


@dataclass
class DominanceResult:
    ok: bool
    table: dict
    first_failure: tuple[int, int] | None


def dominance_check(d_range: Iterable[int], n_range: Iterable[int]) -> DominanceResult:
    """Exact check that the GHZ locality bound beats the general separability bound."""
    d_range, n_range = list(d_range), list(n_range)
    if not d_range or not n_range:
        raise ValueError("empty range")
    if min(d_range) < 2 or max(d_range) > 64 or min(n_range) < 3 or max(n_range) > 32:
        raise ValueError("dominance grid must stay within d in [2, 64], N in [3, 32]")
    cells = [(d, n) for d in d_range for n in n_range]
    flags = pmap(lambda c: beta_loc_ghz(*c) > beta_sep(c[0], c[1], "general"), cells)
    table = dict(zip(cells, flags))
    failures = [c for c, ok in table.items() if not ok]
    return DominanceResult(not failures, table, failures[0] if failures else None)


def asymptotic_ratio(kind: str, fixed: int, value: int):
    """Bound times its large-parameter asymptotic denominator; tends to 1.

    For ``ghz-N`` the local dimension is ``fixed`` and N = ``value``; for
    ``ghz-d`` N is fixed and d varies. The ``general-*`` kinds return a pair,
    one ratio per endpoint of the general range, each against its own
    asymptotic form.
    """
    if kind not in ASYMPTOTIC_KINDS:
        raise ValueError(f"unknown kind {kind!r}; choose from {ASYMPTOTIC_KINDS}")
    if value < 3:
        raise ValueError("asymptotics need the varying parameter >= 3")
    if kind.endswith("-N"):
        d, n = fixed, value
    else:
        d, n = value, fixed
    if kind == "ghz-N":
        return float(beta_loc_ghz(d, n) * 2 * d ** (n - 1) * (d - 1) ** (n - 1))
    if kind == "ghz-d":
        return float(beta_loc_ghz(d, n) * 2 * d ** (2 * n - 2))
    lo, hi = beta_loc_general_range(d, n)
    if kind == "general-N":
        return float(lo * d ** n * (2 * d - 1) ** (n - 1)), float(hi * d * (2 * d - 1) ** (n - 1))
    return float(lo * 2 ** (n - 1) * d ** (2 * n - 1)), float(hi * 2 ** (n - 1) * d ** n)


def asymptotic_forms(kind: str, fixed: int, value: int):
    """The asymptotic expressions themselves (floats) for the given kind."""
    d, n = (fixed, value) if kind.endswith("-N") else (value, fixed)
    if kind == "ghz-N":
        return 1 / (2 * d ** (n - 1) * (d - 1) ** (n - 1))
    if kind == "ghz-d":
        return 1 / (2 * d ** (2 * n - 2))
    if kind == "general-N":
        return 1 / (d ** n * (2 * d - 1) ** (n - 1)), 1 / (d * (2 * d - 1) ** (n - 1))
    if kind == "general-d":
        return 1 / (2 ** (n - 1) * d ** (2 * n - 1)), 1 / (2 ** (n - 1) * d ** n)
    raise ValueError(f"unknown kind {kind!r}")


def classify_ghz(beta, d: int, n_sites: int) -> str:
    """What the known thresholds say about a noisy GHZ state at ``beta``.

    Inside the window between the general separability bound and the GHZ
    locality bound (non-prime d) separability is open; that window is reported
    as ``bell-local, separability undetermined`` rather than guessed.
    """
    b = to_fraction(beta)
    sep_lo, sep_hi = Fraction(1, 1 + d ** (2 * n_sites - 1)), Fraction(1, 1 + d ** (n_sites - 1))
    if b <= sep_lo or (is_prime(d) and b <= sep_hi):
        return "fully separable"
    if b > sep_hi:
        return "fully nonseparable"
    if b <= beta_loc_ghz(d, n_sites):
        return "bell-local, separability undetermined"
    return "undetermined"


@dataclass
class BoundReport:
    d: int
    n_sites: int
    beta_loc_ghz: Fraction
    beta_loc_general_lo: Fraction
    beta_loc_general_hi: Fraction
    beta_sep_general: Fraction
    beta_sep_ghz_lo: Fraction
    beta_sep_ghz_hi: Fraction
    beta_nonsep_ghz: Fraction
    beta_loc_pure: Fraction | None = None
    beta_sep_qubit_general: Fraction | None = None
    beta_sep_ghz_qubit: Fraction | None = None
    gap_max: Fraction | None = None
    gap_ratio: Fraction | None = None

    def values(self) -> dict[str, Fraction | None]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("d", "n_sites")}


def bound_report(d: int, n_sites: int, gamma_max=None) -> BoundReport:
    lo, hi = beta_loc_general_range(d, n_sites)
    sep_lo, sep_hi = beta_sep(d, n_sites, "ghz-range")
    rep = BoundReport(
        d=d,
        n_sites=n_sites,
        beta_loc_ghz=beta_loc_ghz(d, n_sites),
        beta_loc_general_lo=lo,
        beta_loc_general_hi=hi,
        beta_sep_general=beta_sep(d, n_sites, "general"),
        beta_sep_ghz_lo=sep_lo,
        beta_sep_ghz_hi=sep_hi,
        beta_nonsep_ghz=beta_sep(d, n_sites, "nonsep-ghz"),
    )
    if gamma_max is not None:
        rep.beta_loc_pure = beta_loc_pure(d, n_sites, gamma_max)
    if d == 2:
        rep.beta_sep_qubit_general = beta_sep(d, n_sites, "qubit-general")
        rep.beta_sep_ghz_qubit = beta_sep(d, n_sites, "ghz-qubit")
    if n_sites >= 3:
        rep.gap_max, rep.gap_ratio = gap_max(d, n_sites)
    return rep


def bound_grid(d_range: Iterable[int], n_range: Iterable[int], gamma_max=None) -> list[BoundReport]:
    cells = [(d, n) for d in d_range for n in n_range]
    return pmap(lambda c: bound_report(c[0], c[1], gamma_max), cells)
