"""Source operators: multi-copy dilations of N-qudit states.

A source operator for a state rho on ``(C^d)^N`` lives on
``(C^d)^{S_1} (x) ... (x) (C^d)^{S_N}`` and reproduces ``tr[rho X_1 (x) ... (x) X_N]``
whenever each ``X_n`` is placed on any single copy of site ``n`` (identity on
the remaining copies). The constructions here all use one setting at the
first site, ``S_1 = 1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Sequence

import numpy as np

from . import states
from ._parallel import pmap
from .tensor import (
    MAX_TOTAL_DIM,
    OperatorOnProduct,
    basis_vector,
    group_factors,
    partial_trace,
    random_hermitian,
    random_positive_operator,
    site_offsets,
)

EXHAUSTIVE_PLACEMENTS = 256


@dataclass(frozen=True)
class SettingProfile:
    settings: tuple[int, ...]

    def __post_init__(self):
        s = tuple(int(x) for x in self.settings)
        if len(s) < 1 or any(x < 1 for x in s):
            raise ValueError(f"settings must be positive integers, got {self.settings}")
        object.__setattr__(self, "settings", s)

    @classmethod
    def parse(cls, text: str) -> "SettingProfile":
        return cls(tuple(int(t) for t in text.replace(" ", "").split(",") if t))

    @property
    def n_sites(self) -> int:
        return len(self.settings)

    @property
    def n_factors(self) -> int:
        return sum(self.settings)

    def total_dim(self, d: int) -> int:
        return d ** self.n_factors

    def dims(self, d: int) -> tuple[int, ...]:
        return (d,) * self.n_factors

    def placements(self):
        return itertools.product(*(range(s) for s in self.settings))

    def n_placements(self) -> int:
        return int(np.prod(self.settings))

    def __str__(self):
        return ",".join(map(str, self.settings))


def _as_profile(profile) -> SettingProfile:
    return profile if isinstance(profile, SettingProfile) else SettingProfile(tuple(profile))


def _check_first_site(profile: SettingProfile, d: int, n_sites: int | None = None):
    if profile.settings[0] != 1:
        raise ValueError(f"these source operators need S_1 = 1, got profile {profile}")
    if n_sites is not None and profile.n_sites != n_sites:
        raise ValueError(f"profile has {profile.n_sites} sites, expected {n_sites}")
    if profile.n_sites < 2:
        raise ValueError("need at least two sites")
    if profile.total_dim(d) > MAX_TOTAL_DIM:
        raise ValueError(
            f"dilation space dimension {profile.total_dim(d)} exceeds cap {MAX_TOTAL_DIM}"
        )


@dataclass(frozen=True)
class SourceOperator:
    op: OperatorOnProduct
    profile: SettingProfile
    d: int
    target: OperatorOnProduct

    @property
    def n_sites(self) -> int:
        return self.profile.n_sites


def _power(mat: np.ndarray, s: int) -> np.ndarray:
    return reduce(np.kron, [mat] * s)


def _check_pair(d: int, s: int, j: int, j1: int):
    if d < 2 or s < 1:
        raise ValueError("need d >= 2 and s >= 1")
    if not (0 <= j < d and 0 <= j1 < d):
        raise IndexError(f"basis indices ({j}, {j1}) out of range for d={d}")


@lru_cache(maxsize=None)
def _w_matrices(d: int, s: int, j: int, j1: int) -> tuple[np.ndarray, np.ndarray]:
    """(W_{jj1}, W~_{jj1}) on s copies of C^d."""
    ej, ek = basis_vector(d, j), basis_vector(d, j1)
    if j == j1:
        p = _power(np.outer(ej, ej), s)
        return p, p
    scale = 2.0 ** s
    plus, minus = ej + ek, ej - ek
    iplus, iminus = ej + 1j * ek, ej - 1j * ek
    p_plus, p_minus, p_iplus, p_iminus = (
        _power(np.outer(v, v.conj()), s) / scale for v in (plus, minus, iplus, iminus)
    )
    w = 0.5 * (p_plus - p_minus + 1j * p_iplus - 1j * p_iminus)
    wt = 0.5 * (p_plus + p_minus + p_iplus + p_iminus)
    w.setflags(write=False)
    wt.setflags(write=False)
    return w, wt


def w_op(d: int, s: int, j: int, j1: int) -> OperatorOnProduct:
    """Permutation-invariant lift of the matrix unit |e_j><e_j1| to s copies.

    Tracing out any s - 1 copies gives back |e_j><e_j1|; for s = 1 it is the
    matrix unit itself.
    """
    _check_pair(d, s, j, j1)
    return OperatorOnProduct((d,) * s, _w_matrices(d, s, j, j1)[0])


def w_tilde_op(d: int, s: int, j: int, j1: int) -> OperatorOnProduct:
    """Positive companion of :func:`w_op` that dominates it on positive operators."""
    _check_pair(d, s, j, j1)
    return OperatorOnProduct((d,) * s, _w_matrices(d, s, j, j1)[1])


def constant_c(d: int, n_sites: int):
    """Normalization 1 / (2 d^N (d-1)^(N-1)) of the GHZ-family noise operator."""
    if d < 2:
        raise ValueError("need d >= 2")
    return Fraction(1, 2 * d ** n_sites * (d - 1) ** (n_sites - 1))


def constant_c_tilde(d: int, n_sites: int):
    """Normalization 1 / (d^N ((2d-1)^(N-1) - 1)) of the general noise operator."""
    den = d ** n_sites * ((2 * d - 1) ** (n_sites - 1) - 1)
    if den == 0:
        raise ValueError("degenerate normalization: need n_sites >= 2 and d >= 2")
    return Fraction(1, den)


def ghz_source(d: int, profile) -> SourceOperator:
    profile = _as_profile(profile)
    _check_first_site(profile, d)
    n = profile.n_sites
    t = np.zeros((profile.total_dim(d),) * 2, dtype=complex)
    for j in range(d):
        for j1 in range(d):
            unit = np.outer(basis_vector(d, j), basis_vector(d, j1))
            blocks = [unit] + [_w_matrices(d, s, j, j1)[0] for s in profile.settings[1:]]
            t += reduce(np.kron, blocks)
    t /= d
    return SourceOperator(OperatorOnProduct(profile.dims(d), t), profile, d, states.ghz_state(d, n))


def noise_source_ghz(d: int, n_sites: int, profile) -> SourceOperator:
    """Positive source operator of the maximally mixed state paired with the GHZ family."""
    profile = _as_profile(profile)
    if d < 2:
        raise ValueError("need d >= 2")
    _check_first_site(profile, d, n_sites)
    settings = profile.settings
    off = [(j, j1) for j in range(d) for j1 in range(d) if j != j1]
    lower = [(j, j1) for j, j1 in off if j > j1]
    blocks = [np.eye(d)]
    blocks.append(sum(_w_matrices(d, settings[1], j, j1)[1] for j, j1 in off))
    for s in settings[2:]:
        blocks.append(sum(_w_matrices(d, s, j, j1)[1] for j, j1 in lower))
    t = float(constant_c(d, n_sites)) * reduce(np.kron, blocks)
    return SourceOperator(
        OperatorOnProduct(profile.dims(d), t), profile, d, states.maximally_mixed(d, n_sites)
    )


def noise_source_general(d: int, n_sites: int, profile) -> SourceOperator:
    """Positive source operator of the maximally mixed state paired with arbitrary pure states.

    Sums I (x) W~_{jj1} (x) ... (x) W~_{kk1} over all index pairs with
    (j..k) != (j1..k1); the full pair sum factorizes per site, and the
    excluded diagonal is the product of the per-site diagonal sums.
    """
    profile = _as_profile(profile)
    _check_first_site(profile, d, n_sites)
    c_t = float(constant_c_tilde(d, n_sites))
    full, diag = [np.eye(d)], [np.eye(d)]
    for s in profile.settings[1:]:
        full.append(sum(_w_matrices(d, s, j, j1)[1] for j in range(d) for j1 in range(d)))
        diag.append(sum(_w_matrices(d, s, j, j)[1] for j in range(d)))
    t = c_t * (reduce(np.kron, full) - reduce(np.kron, diag))
    return SourceOperator(
        OperatorOnProduct(profile.dims(d), t), profile, d, states.maximally_mixed(d, n_sites)
    )


def pure_source(dec: states.PureDecomposition, profile) -> SourceOperator:
    profile = _as_profile(profile)
    d = dec.d
    _check_first_site(profile, d, dec.n_sites)
    settings = profile.settings[1:]
    support = dec.support()
    t = np.zeros((profile.total_dim(d),) * 2, dtype=complex)
    for a in support:
        for b in support:
            coef = dec.alphas[a] * dec.alphas[b]
            blocks = [coef * np.outer(dec.phis[a], dec.phis[b].conj())]
            blocks += [_w_matrices(d, s, ja, jb)[0] for s, ja, jb in zip(settings, a, b)]
            t += reduce(np.kron, blocks)
    psi = dec.reconstruct()
    target = OperatorOnProduct((d,) * dec.n_sites, np.outer(psi, psi.conj()))
    return SourceOperator(OperatorOnProduct(profile.dims(d), t), profile, d, target)


def _check_compatible(sources: Sequence[SourceOperator]):
    first = sources[0]
    for s in sources[1:]:
        if s.profile != first.profile or s.d != first.d:
            raise ValueError("source operators must share profile and local dimension")


def mixture_source(beta, signal: SourceOperator, noise: SourceOperator) -> SourceOperator:
    """beta * signal + (1 - beta) * noise, dilating the white-noise mixture of the signal's state."""
    _check_compatible([signal, noise])
    b = float(beta)
    if not 0 <= b <= 1:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    mixed = states.maximally_mixed(signal.d, signal.n_sites)
    if np.max(np.abs(noise.target.matrix - mixed.matrix)) > 1e-12:
        raise ValueError("noise source must dilate the maximally mixed state")
    op = OperatorOnProduct(signal.op.dims, b * signal.op.matrix + (1 - b) * noise.op.matrix)
    target = states.noisy_mixture(states.NoisyMixtureSpec(b, signal.target))
    return SourceOperator(op, signal.profile, signal.d, target)


def convex_source(weights: Sequence[float], sources: Sequence[SourceOperator]) -> SourceOperator:
    """sum_i xi_i T_i for an explicit ensemble; dilates sum_i xi_i rho_i."""
    if len(weights) != len(sources) or not sources:
        raise ValueError("need one weight per source operator")
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("weights must be positive and sum to one")
    _check_compatible(sources)
    op = sum(x * s.op.matrix for x, s in zip(w, sources))
    target = sum(x * s.target.matrix for x, s in zip(w, sources))
    first = sources[0]
    return SourceOperator(
        OperatorOnProduct(first.op.dims, op),
        first.profile,
        first.d,
        OperatorOnProduct(first.target.dims, target),
    )


@dataclass(frozen=True)
class DilationReport:
    max_residual: float
    trials: int
    placements: int
    exhaustive: bool
    seed: int

    def passed(self, tol: float = 1e-9) -> bool:
        return self.max_residual <= tol


def _reduced_at(src: SourceOperator, placement: tuple[int, ...]) -> np.ndarray:
    offs = site_offsets(src.profile.settings)
    keep = [o + k for o, k in zip(offs, placement)]
    return partial_trace(src.op, keep).matrix


def verify_dilation(src: SourceOperator, trials: int = 100, seed: int = 0) -> DilationReport:
    """Check the defining dilation relation on random hermitian local operators.

    Every trial draws X_1..X_N and compares ``tr[T (placed X's)]`` against
    ``tr[rho X_1 (x) ... (x) X_N]`` for every copy placement (or a random
    sample of 256 placements when there are more).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    prof = src.profile
    d, n = src.d, src.n_sites
    master = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    exhaustive = prof.n_placements() <= EXHAUSTIVE_PLACEMENTS
    if exhaustive:
        placements = list(prof.placements())
    else:
        placements = sorted(
            {tuple(int(master.integers(s)) for s in prof.settings) for _ in range(EXHAUSTIVE_PLACEMENTS)}
        )
    reduced = pmap(lambda p: _reduced_at(src, p), placements)
    rho = src.target.matrix
    seqs = np.random.SeedSequence(seed).spawn(trials)

    def one_trial(ss):
        rng = np.random.default_rng(ss)
        xs = [random_hermitian(d, rng) for _ in range(n)]
        big = reduce(np.kron, xs)
        expected = np.sum(rho * big.T)
        return max(abs(np.sum(r * big.T) - expected) for r in reduced)

    worst = max(pmap(one_trial, seqs))
    return DilationReport(float(worst), trials, len(placements), exhaustive, seed)


def identity_residuals(d: int, s: int) -> dict[str, float]:
    """Max entrywise deviation of the partial-trace identities of W and W~.

    Keys: ``adjoint`` (W_{jj1}^* = W_{j1j}), ``ptrace_w`` (W reduces to the
    matrix unit), ``ptrace_w_tilde`` (W~ reduces to the diagonal projectors),
    ``sum_lower``/``sum_offdiag``/``sum_all`` for the summed reductions
    ((d-1) I, 2(d-1) I, (2d-1) I), ``symmetric`` (W~_{jj1} = W~_{j1j}),
    ``permutation`` (invariance under swapping any two copies).
    """
    eye = np.eye(d)
    res = dict.fromkeys(
        ["adjoint", "ptrace_w", "ptrace_w_tilde", "symmetric", "permutation",
         "sum_lower", "sum_offdiag", "sum_all"],
        0.0,
    )

    def upd(key, val):
        res[key] = max(res[key], float(val))

    reduced_t = {}
    for j in range(d):
        for j1 in range(d):
            w, wt = _w_matrices(d, s, j, j1)
            w_swap, _ = _w_matrices(d, s, j1, j)
            _, wt_swap = _w_matrices(d, s, j1, j)
            upd("adjoint", np.max(np.abs(w.conj().T - w_swap)))
            upd("symmetric", np.max(np.abs(wt - wt_swap)))
            unit = np.outer(basis_vector(d, j), basis_vector(d, j1))
            proj = np.outer(basis_vector(d, j), basis_vector(d, j)) + (
                0 if j == j1 else np.outer(basis_vector(d, j1), basis_vector(d, j1))
            )
            for k in range(s):
                r = partial_trace(OperatorOnProduct((d,) * s, w), [k]).matrix
                rt = partial_trace(OperatorOnProduct((d,) * s, wt), [k]).matrix
                upd("ptrace_w", np.max(np.abs(r - unit)))
                upd("ptrace_w_tilde", np.max(np.abs(rt - proj)))
            reduced_t[j, j1] = partial_trace(OperatorOnProduct((d,) * s, wt), [0]).matrix
            for a, b in itertools.combinations(range(s), 2):
                upd("permutation", np.max(np.abs(_swap_copies(w, d, s, a, b) - w)))
                upd("permutation", np.max(np.abs(_swap_copies(wt, d, s, a, b) - wt)))
    lower = sum(reduced_t[j, j1] for j in range(d) for j1 in range(d) if j > j1)
    off = sum(reduced_t[j, j1] for j in range(d) for j1 in range(d) if j != j1)
    allp = sum(reduced_t.values())
    upd("sum_lower", np.max(np.abs(lower - (d - 1) * eye)))
    upd("sum_offdiag", np.max(np.abs(off - 2 * (d - 1) * eye)))
    upd("sum_all", np.max(np.abs(allp - (2 * d - 1) * eye)))
    return res


def _swap_copies(m: np.ndarray, d: int, s: int, a: int, b: int) -> np.ndarray:
    t = m.reshape((d,) * (2 * s))
    perm = list(range(2 * s))
    perm[a], perm[b] = perm[b], perm[a]
    perm[s + a], perm[s + b] = perm[s + b], perm[s + a]
    return t.transpose(perm).reshape(d ** s, d ** s)


def domination_violation(d: int, s: int, trials: int, seed: int) -> float:
    """Largest |tr[X W_{jj1}]| - tr[X W~_{jj1}] over random positive X and all j, j1.

    Nonpositive (up to rounding) when W~ dominates W as claimed.
    """
    seqs = np.random.SeedSequence([seed, d, s]).spawn(trials)
    pairs = [_w_matrices(d, s, j, j1) for j in range(d) for j1 in range(d)]

    def one(ss):
        x = random_positive_operator(d ** s, ss).matrix
        return max(abs(np.sum(w * x.T)) - np.sum(wt * x.T).real for w, wt in pairs)

    return float(max(pmap(one, seqs)))


def group_sites(op: OperatorOnProduct, profile) -> OperatorOnProduct:
    """View a dilation-space operator with one factor per site block."""
    return group_factors(op, _as_profile(profile).settings)
