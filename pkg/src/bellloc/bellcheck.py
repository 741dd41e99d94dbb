"""Finite-outcome Bell scenarios.

A functional assigns to every joint setting ``(s_1, ..., s_N)`` a real table
``f_s[a_1, ..., a_N]`` over outcome indices. Its LHV range is found by
enumerating deterministic strategies (one outcome per site and setting),
and its quantum value by the Born rule for given local POVMs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._parallel import pmap
from .tensor import OperatorOnProduct

MAX_STRATEGIES = 10**7
POVM_TOL = 1e-10


@dataclass(frozen=True)
class Scenario:
    """Settings per site and the real outcome values available at each site."""

    settings: tuple[int, ...]
    outcomes: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        settings = tuple(int(s) for s in self.settings)
        outcomes = tuple(tuple(float(x) for x in o) for o in self.outcomes)
        if len(settings) < 2 or len(outcomes) != len(settings):
            raise ValueError("need at least two sites and one outcome list per site")
        if any(s < 1 for s in settings):
            raise ValueError("every site needs at least one setting")
        if any(len(o) < 2 for o in outcomes):
            raise ValueError("every site needs at least two outcomes")
        object.__setattr__(self, "settings", settings)
        object.__setattr__(self, "outcomes", outcomes)

    @property
    def n_sites(self) -> int:
        return len(self.settings)

    @property
    def n_outcomes(self) -> tuple[int, ...]:
        return tuple(len(o) for o in self.outcomes)

    def joint_settings(self):
        return itertools.product(*(range(s) for s in self.settings))

    def n_strategies(self) -> int:
        return int(np.prod([len(o) ** s for o, s in zip(self.outcomes, self.settings)], dtype=object))


@dataclass(frozen=True)
class BellFunctional:
    scenario: Scenario
    coefficients: dict

    def __post_init__(self):
        shape = self.scenario.n_outcomes
        tables = {}
        for s in self.scenario.joint_settings():
            t = np.asarray(self.coefficients.get(s, np.zeros(shape)), dtype=float)
            if t.shape != shape:
                raise ValueError(f"table for setting {s} has shape {t.shape}, expected {shape}")
            tables[s] = t
        extra = set(self.coefficients) - set(tables)
        if extra:
            raise ValueError(f"coefficients for unknown settings: {sorted(extra)}")
        object.__setattr__(self, "coefficients", tables)


@dataclass(frozen=True)
class MeasurementAssemblage:
    """``povms[n][s]`` is the list of effects of setting ``s`` at site ``n``."""

    povms: tuple

    def __post_init__(self):
        povms = tuple(
            tuple(np.asarray(effects, dtype=complex) for effects in site) for site in self.povms
        )
        for n, site in enumerate(povms):
            for s, effects in enumerate(site):
                dim = effects.shape[-1]
                for k, e in enumerate(effects):
                    if np.max(np.abs(e - e.conj().T)) > POVM_TOL or np.linalg.eigvalsh(e)[0] < -POVM_TOL:
                        raise ValueError(f"site {n} setting {s} effect {k} is not positive")
                if np.max(np.abs(effects.sum(axis=0) - np.eye(dim))) > POVM_TOL:
                    raise ValueError(f"site {n} setting {s}: effects do not sum to the identity")
        object.__setattr__(self, "povms", povms)

    def local_dims(self) -> tuple[int, ...]:
        return tuple(site[0].shape[-1] for site in self.povms)


@dataclass(frozen=True)
class DeterministicStrategy:
    """``labels[n][s]`` is the outcome index site ``n`` outputs for setting ``s``."""

    labels: tuple


@dataclass(frozen=True)
class LhvResult:
    b_sup: float
    b_inf: float
    argmax: DeterministicStrategy
    argmin: DeterministicStrategy


def full_correlator(settings: Sequence[int], coeffs) -> BellFunctional:
    """Functional sum_s c_s <lambda_1 ... lambda_N> with +-1 outcomes."""
    c = np.asarray(coeffs, dtype=float)
    settings = tuple(settings)
    if c.shape != settings:
        raise ValueError(f"coefficient array shape {c.shape} must equal settings {settings}")
    n = len(settings)
    scen = Scenario(settings, ((1.0, -1.0),) * n)
    sign = np.ones((2,) * n)
    for idx in itertools.product((0, 1), repeat=n):
        sign[idx] = (-1) ** sum(idx)
    return BellFunctional(scen, {s: c[s] * sign for s in scen.joint_settings()})


def chsh() -> BellFunctional:
    return full_correlator((2, 2), [[1, 1], [1, -1]])


def mermin3() -> BellFunctional:
    """<A0 B0 C0> - <A0 B1 C1> - <A1 B0 C1> - <A1 B1 C0>."""
    c = np.zeros((2, 2, 2))
    c[0, 0, 0] = 1
    c[0, 1, 1] = c[1, 0, 1] = c[1, 1, 0] = -1
    return full_correlator((2, 2, 2), c)


BUILTIN = {"chsh": chsh, "mermin": mermin3}


def _site_strategies(n_out: int, n_set: int) -> np.ndarray:
    return np.array(list(itertools.product(range(n_out), repeat=n_set)), dtype=np.intp).reshape(-1, n_set)


def strategy_value(phi: BellFunctional, strategy: DeterministicStrategy) -> float:
    total = 0.0
    for s, table in phi.coefficients.items():
        total += table[tuple(strategy.labels[n][sn] for n, sn in enumerate(s))]
    return float(total)


def lhv_extremes(phi: BellFunctional) -> LhvResult:
    """Max and min of the functional over all deterministic strategies, with attaining strategies.

    The first site's strategies are split into chunks that are evaluated in
    parallel; each chunk is a fully vectorized sum over joint settings.
    """
    scen = phi.scenario
    total = scen.n_strategies()
    if total > MAX_STRATEGIES:
        raise ValueError(f"{total} deterministic strategies exceed the limit of {MAX_STRATEGIES}")
    per_site = [_site_strategies(len(o), s) for o, s in zip(scen.outcomes, scen.settings)]
    first = per_site[0]
    rest_size = total // len(first)
    chunk = max(1, min(len(first), 2_000_000 // max(rest_size, 1)))
    bounds = [(i, min(i + chunk, len(first))) for i in range(0, len(first), chunk)]

    def evaluate(rng_):
        lo, hi = rng_
        sites = [first[lo:hi]] + per_site[1:]
        val = np.zeros(tuple(len(x) for x in sites))
        for s, table in phi.coefficients.items():
            if not table.any():
                continue
            val += table[np.ix_(*(x[:, sn] for x, sn in zip(sites, s)))]
        imax, imin = int(np.argmax(val)), int(np.argmin(val))
        return val.flat[imax], imax, val.flat[imin], imin, val.shape, lo

    parts = pmap(evaluate, bounds)

    def strategy(flat, shape, lo):
        idx = np.unravel_index(flat, shape)
        rows = [per_site[0][lo + idx[0]]] + [per_site[n][idx[n]] for n in range(1, scen.n_sites)]
        return DeterministicStrategy(tuple(tuple(int(v) for v in r) for r in rows))

    best = max(parts, key=lambda p: p[0])
    worst = min(parts, key=lambda p: p[2])
    return LhvResult(
        float(best[0]),
        float(worst[2]),
        strategy(best[1], best[4], best[5]),
        strategy(worst[3], worst[4], worst[5]),
    )


def lhv_constants(phi: BellFunctional) -> tuple[float, float]:
    """(B_sup, B_inf) by exhaustive enumeration of deterministic strategies."""
    res = lhv_extremes(phi)
    return res.b_sup, res.b_inf


def lhv_abs_bound(phi: BellFunctional) -> float:
    sup, inf = lhv_constants(phi)
    return max(abs(sup), abs(inf))


def joint_probabilities(state: OperatorOnProduct, povms: MeasurementAssemblage, setting) -> np.ndarray:
    """p[a_1, ..., a_N] = tr[rho (M_{1,s_1}(a_1) (x) ... (x) M_{N,s_N}(a_N))]."""
    dims = povms.local_dims()
    n = len(dims)
    if state.dims != dims:
        raise ValueError(f"state dims {state.dims} do not match POVM dims {dims}")
    rho = state.matrix.reshape(dims + dims)
    args = [rho, list(range(2 * n))]
    out = []
    for k, sk in enumerate(setting):
        effects = povms.povms[k][sk]
        # tr[rho M] = sum_ab rho[b, a] M[a, b]
        args += [effects, [2 * n + k, n + k, k]]
        out.append(2 * n + k)
    return np.einsum(*args, out, optimize=True).real


def quantum_average(phi: BellFunctional, state: OperatorOnProduct, povms: MeasurementAssemblage) -> float:
    scen = phi.scenario
    if len(povms.povms) != scen.n_sites:
        raise ValueError("one POVM list per site is required")
    for n in range(scen.n_sites):
        if len(povms.povms[n]) != scen.settings[n]:
            raise ValueError(f"site {n}: expected {scen.settings[n]} settings")
        for eff in povms.povms[n]:
            if len(eff) != scen.n_outcomes[n]:
                raise ValueError(f"site {n}: effect count does not match outcome count")
    total = 0.0
    for s, table in phi.coefficients.items():
        if table.any():
            total += float(np.sum(table * joint_probabilities(state, povms, s)))
    return total


def violation_ratio(phi: BellFunctional, state: OperatorOnProduct, povms: MeasurementAssemblage) -> float:
    """|quantum value| / LHV bound; above 1 witnesses nonlocality, at most 1 is inconclusive."""
    bound = lhv_abs_bound(phi)
    if bound == 0:
        raise ZeroDivisionError("functional has zero LHV bound")
    return abs(quantum_average(phi, state, povms)) / bound


PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dichotomic_povm(observable) -> np.ndarray:
    """Projectors (I + A)/2, (I - A)/2 for an observable with eigenvalues +-1."""
    a = np.asarray(observable, dtype=complex)
    eye = np.eye(a.shape[0])
    return np.array([(eye + a) / 2, (eye - a) / 2])


def pauli_assemblage(names: Sequence[Sequence[str]]) -> MeasurementAssemblage:
    """E.g. ``[["X", "Y"]] * 3`` for the usual Mermin measurements."""
    return MeasurementAssemblage(
        tuple(tuple(dichotomic_povm(PAULI[x]) for x in site) for site in names)
    )


def mermin_assemblage(n_sites: int = 3) -> MeasurementAssemblage:
    return pauli_assemblage([["X", "Y"]] * n_sites)


def chsh_assemblage() -> MeasurementAssemblage:
    """Measurements reaching 2 sqrt(2) on the Bell state."""
    b0 = (PAULI["Z"] + PAULI["X"]) / np.sqrt(2)
    b1 = (PAULI["Z"] - PAULI["X"]) / np.sqrt(2)
    return MeasurementAssemblage(
        (
            (dichotomic_povm(PAULI["Z"]), dichotomic_povm(PAULI["X"])),
            (dichotomic_povm(b0), dichotomic_povm(b1)),
        )
    )
