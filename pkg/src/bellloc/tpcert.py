"""Tensor positivity: numerical search for negative product expectations.

An operator W on G_1 (x) ... (x) G_m is tensor positive when
tr[W (X_1 (x) ... (x) X_m)] >= 0 for all positive X_j. By linearity it is
enough to test rank-one X_j, i.e. product pure states, so the search runs
over a product of unit spheres. A see-saw over the factors can refute
tensor positivity (a negative witness is a proof) but never establish it;
the exact statement for the noisy source operators is the closed-form
coefficient in :func:`threshold_coefficient`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import bounds, dilation, states
from ._parallel import pmap
from .tensor import (
    OperatorOnProduct,
    product_trace,
    random_positive_operator,
    random_unit_vector,
    trace_norm,
)

VIOLATION = "violation"
NO_VIOLATION = "no-violation-found"
HEURISTIC_NOTE = (
    "no-violation-found is a numerical search outcome, not a proof of tensor positivity"
)


@dataclass(frozen=True)
class ProductState:
    vectors: tuple

    def __post_init__(self):
        vecs = tuple(np.asarray(v, dtype=complex).ravel() for v in self.vectors)
        for k, v in enumerate(vecs):
            if abs(np.linalg.norm(v) - 1) > 1e-12:
                raise ValueError(f"factor {k} vector is not unit norm")
        object.__setattr__(self, "vectors", vecs)

    @classmethod
    def random(cls, dims, rng: np.random.Generator) -> "ProductState":
        return cls(tuple(random_unit_vector(k, rng) for k in dims))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(v.size for v in self.vectors)

    def vector(self) -> np.ndarray:
        out = np.ones(1, dtype=complex)
        for v in self.vectors:
            out = np.kron(out, v)
        return out


@dataclass
class TpCertificate:
    verdict: str
    min_value: float
    witness: ProductState
    restarts: int
    iterations: list[int]
    seed: int
    tolerance: float
    note: str = field(default=HEURISTIC_NOTE)

    @property
    def violated(self) -> bool:
        return self.verdict == VIOLATION


@dataclass
class SeesawResult:
    value: float
    state: ProductState
    iterations: int
    history: list[float]


def _require_hermitian(w: OperatorOnProduct):
    if not w.is_hermitian():
        raise ValueError("operator is not hermitian within tolerance")


def product_expectation(w: OperatorOnProduct, p: ProductState) -> float:
    """<psi_1 ... psi_m| W |psi_1 ... psi_m> for a hermitian W (real part)."""
    _require_hermitian(w)
    if p.dims != w.dims:
        raise ValueError(f"product state dims {p.dims} do not match operator dims {w.dims}")
    v = p.vector()
    val = np.vdot(v, w.matrix @ v)
    scale = max(1.0, float(np.max(np.abs(w.matrix))))
    assert abs(val.imag) <= 1e-10 * scale, f"imaginary part {val.imag} too large"
    return float(val.real)


def _factor_views(w: OperatorOnProduct):
    """Per-factor reshapes of W to (d_i, rest, d_i, rest), built lazily."""
    dims = w.dims
    m = len(dims)
    tensor = w.matrix.reshape(dims + dims)
    cache = {}

    def view(i):
        if i not in cache:
            others = [k for k in range(m) if k != i]
            perm = [i] + others + [m + i] + [m + k for k in others]
            rest = w.total_dim // dims[i]
            v = tensor.transpose(perm).reshape(dims[i], rest, dims[i], rest)
            if w.total_dim > 1024:
                return v
            cache[i] = v
        return cache[i]

    return view


def _effective(view, vectors, i: int) -> np.ndarray:
    u = np.ones(1, dtype=complex)
    for k, v in enumerate(vectors):
        if k != i:
            u = np.kron(u, v)
    half = np.tensordot(view(i), u, axes=([3], [0]))
    return np.tensordot(u.conj(), half, axes=([0], [1]))


def seesaw_minimize(
    w: OperatorOnProduct, start: ProductState, max_iter: int = 200, tol: float = 1e-12
) -> SeesawResult:
    """Alternating minimization of the product expectation.

    Each sweep visits the factors in order and swaps the current vector for the
    lowest eigenvector of W contracted with all the other vectors. Sweeps stop
    once the value drops by less than ``tol`` or after ``max_iter`` sweeps.
    """
    _require_hermitian(w)
    dims = w.dims
    if start.dims != dims:
        raise ValueError("start state does not match operator dims")
    view = _factor_views(w)
    vecs = list(start.vectors)
    value = product_expectation(w, start)
    history = [value]
    slack = 1e-12 * max(1.0, float(np.max(np.abs(w.matrix))))
    it = 0
    for it in range(1, max_iter + 1):
        for i in range(len(dims)):
            eff = _effective(view, vecs, i)
            vals, evecs = np.linalg.eigh(0.5 * (eff + eff.conj().T))
            vecs[i] = evecs[:, 0] / np.linalg.norm(evecs[:, 0])
            new = float(vals[0])
            assert new <= value + slack, f"see-saw increased: {value} -> {new}"
            value = min(value, new)
        history.append(value)
        if history[-2] - value < tol:
            break
    state = ProductState(tuple(vecs))
    # report the value the witness actually attains
    return SeesawResult(product_expectation(w, state), state, it, history)


def certify_tensor_positivity(
    w: OperatorOnProduct,
    restarts: int = 64,
    max_iter: int = 200,
    tol: float = 1e-12,
    seed: int = 0,
    violation_tol: float = 1e-9,
) -> TpCertificate:
    """Multi-restart see-saw hunt for a negative product expectation.

    Restart ``r`` starts from a random product state drawn from the seed
    ``(seed, r)``; the best value wins, ties going to the lowest restart, so
    the certificate is reproducible regardless of worker scheduling.
    """
    _require_hermitian(w)
    if restarts < 1:
        raise ValueError("restarts must be >= 1")

    def run(r):
        rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
        return seesaw_minimize(w, ProductState.random(w.dims, rng), max_iter, tol)

    results = pmap(run, range(restarts))
    best = min(range(restarts), key=lambda r: (results[r].value, r))
    value = results[best].value
    return TpCertificate(
        verdict=VIOLATION if value < -violation_tol else NO_VIOLATION,
        min_value=value,
        witness=results[best].state,
        restarts=restarts,
        iterations=[res.iterations for res in results],
        seed=seed,
        tolerance=violation_tol,
    )


def covering_norm_bounds(w: OperatorOnProduct) -> tuple[float, float]:
    """(|tr W|, ||W||_1): the covering norm lies between these two."""
    _require_hermitian(w)
    return abs(w.trace().real), trace_norm(w)


def flip_operator(d: int) -> OperatorOnProduct:
    """Swap operator V(a (x) b) = b (x) a on C^d (x) C^d."""
    if d < 2:
        raise ValueError("need d >= 2")
    v = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            v[b * d + a, a * d + b] = 1.0
    return OperatorOnProduct((d, d), v)


def threshold_coefficient(kind: str, d: int, n_sites: int, beta, gamma_max=None) -> Fraction:
    """Coefficient whose nonnegativity makes the noisy source operator tensor positive.

    ``ghz``:  (1 - beta) C_{d,N} - beta / d
    ``pure``: (1 - beta) C~_{d,N} - gamma_max * beta

    Exact when ``beta`` (and ``gamma_max``) are rational; zero exactly at
    the corresponding locality threshold.
    """
    b = bounds.to_fraction(beta)
    if d < 2 or n_sites < 2:
        raise ValueError("need d >= 2 and n_sites >= 2")
    if kind == "ghz":
        return (1 - b) * dilation.constant_c(d, n_sites) - b / d
    if kind == "pure":
        if gamma_max is None:
            raise ValueError("kind='pure' needs gamma_max")
        return (1 - b) * dilation.constant_c_tilde(d, n_sites) - bounds.to_fraction(gamma_max) * b
    raise ValueError(f"unknown kind {kind!r}")


@dataclass
class DeltaReport:
    kind: str
    beta: Fraction
    coefficient: Fraction
    trials: int
    seed: int
    min_slack: float
    min_delta: float
    max_expansion_residual: float

    def passed(self, tol: float = 1e-9) -> bool:
        return self.min_slack >= -tol and self.max_expansion_residual <= tol


def _site_traces(d: int, s: int, x: np.ndarray):
    """Arrays t[j, j1] = tr[W_{jj1} X] and tt[j, j1] = tr[W~_{jj1} X]."""
    t = np.empty((d, d), dtype=complex)
    tt = np.empty((d, d))
    for j, j1 in itertools.product(range(d), repeat=2):
        w, wt = dilation._w_matrices(d, s, j, j1)
        t[j, j1] = np.sum(w * x.T)
        tt[j, j1] = np.sum(wt * x.T).real
    return t, tt


def appendix_delta_check(
    kind: str,
    d: int,
    n_sites: int,
    profile,
    beta,
    trials: int = 200,
    seed: int = 0,
    decomposition: states.PureDecomposition | None = None,
) -> DeltaReport:
    """Check the lower-bound chain behind the tensor-positivity thresholds.

    For random positive X_1 on C^d and X_n on (C^d)^{(x) S_n}, evaluates the
    off-diagonal part Delta of tr[T_mix (X_1 (x) ... (x) X_N)] term by term and
    records ``Delta - coefficient * S`` where S is the nonnegative sum of
    W~-products that the chain ends in. Also records how far Delta plus the
    dropped diagonal term is from the dense trace of the mixture source
    operator, so the term-by-term expansion is itself checked.
    """
    profile = dilation._as_profile(profile)
    b = bounds.to_fraction(beta)
    bf = float(b)
    settings = profile.settings
    if len(settings) != n_sites or settings[0] != 1:
        raise ValueError("profile must have n_sites entries with S_1 = 1")
    if kind == "ghz":
        coef = threshold_coefficient("ghz", d, n_sites, b)
        src = dilation.mixture_source(
            bf, dilation.ghz_source(d, profile), dilation.noise_source_ghz(d, n_sites, profile)
        )
        c_noise = float(dilation.constant_c(d, n_sites))
    elif kind == "pure":
        if decomposition is None:
            raise ValueError("kind='pure' needs a PureDecomposition")
        dec = decomposition
        gamma = bounds.rationalize(states.gamma_max(dec))
        coef = threshold_coefficient("pure", d, n_sites, b, gamma)
        src = dilation.mixture_source(
            bf, dilation.pure_source(dec, profile), dilation.noise_source_general(d, n_sites, profile)
        )
        c_noise = float(dilation.constant_c_tilde(d, n_sites))
        phi = np.zeros((d ** (n_sites - 1), d), dtype=complex)
        for idx, v in dec.phis.items():
            phi[np.ravel_multi_index(idx, (d,) * (n_sites - 1))] = dec.alphas[idx] * v
    else:
        raise ValueError(f"unknown kind {kind!r}")
    blocks = dilation.group_sites(src.op, profile)
    coef_f = float(coef)
    seqs = np.random.SeedSequence([seed, 0xA99]).spawn(trials)

    def one(ss):
        rng = np.random.default_rng(ss)
        x1 = random_positive_operator(d, rng).matrix
        xs = [random_positive_operator(d ** s, rng).matrix for s in settings[1:]]
        per_site = [_site_traces(d, s, x) for s, x in zip(settings[1:], xs)]
        tr1 = np.trace(x1).real
        if kind == "ghz":
            off = [(j, j1) for j in range(d) for j1 in range(d) if j != j1]
            rest = np.prod([sum(tt[l, l1] for l in range(d) for l1 in range(l)) for _, tt in per_site[1:]])
            noise = (1 - bf) * c_noise * tr1 * sum(per_site[0][1][j, j1] for j, j1 in off) * rest
            signal = bf / d * sum(
                x1[j1, j] * np.prod([t[j, j1] for t, _ in per_site]) for j, j1 in off
            )
            diag = bf / d * sum(x1[j, j] * np.prod([t[j, j] for t, _ in per_site]) for j in range(d))
            chain = tr1 * sum(np.prod([tt[j, j1] for _, tt in per_site]) for j, j1 in off)
        else:
            big_t = _kron_all([t for t, _ in per_site])
            big_tt = _kron_all([tt for _, tt in per_site])
            chain = tr1 * (big_tt.sum() - np.trace(big_tt))
            noise = (1 - bf) * c_noise * chain
            g = phi.conj() @ x1 @ phi.T  # g[J1, J] = a_J a_J1 <phi_J1|X1|phi_J>
            full = bf * np.sum(g.T * big_t)
            diag = bf * np.sum(np.diag(g) * np.diag(big_t))
            signal = full - diag
        delta = noise + signal
        dense = product_trace(blocks, [x1] + xs)
        return (
            float(delta.real - coef_f * chain),
            float(delta.real),
            float(abs(delta + diag - dense)),
        )

    out = pmap(one, seqs)
    return DeltaReport(
        kind=kind,
        beta=b,
        coefficient=coef,
        trials=trials,
        seed=seed,
        min_slack=min(o[0] for o in out),
        min_delta=min(o[1] for o in out),
        max_expansion_residual=max(o[2] for o in out),
    )


def _kron_all(mats):
    out = np.ones((1, 1))
    for m in mats:
        out = np.kron(out, m)
    return out
