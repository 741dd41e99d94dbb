"""N-qudit states: GHZ, white noise, pure states and their conditional decomposition."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .tensor import OperatorOnProduct, min_eigenvalue

NORM_TOL = 1e-10
# alphas at or below this are treated as structural zeros (no phi stored)
ALPHA_ZERO = 1e-14


@dataclass(frozen=True)
class PureStateCoeffs:
    """Amplitudes of a pure state on ``(C^d)^N``.

    ``coeffs`` is flat, of length ``d**n_sites``, with the first site's index
    varying slowest (the same order as ``np.kron`` of site vectors).
    """

    d: int
    n_sites: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.d < 2 or self.n_sites < 2:
            raise ValueError("need d >= 2 and n_sites >= 2")
        c = np.asarray(self.coeffs, dtype=complex).ravel().copy()
        if c.size != self.d ** self.n_sites:
            raise ValueError(f"expected {self.d ** self.n_sites} coefficients, got {c.size}")
        norm2 = float(np.vdot(c, c).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: sum |c|^2 = {norm2!r}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def random(cls, d: int, n_sites: int, seed) -> "PureStateCoeffs":
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(d ** n_sites) + 1j * rng.standard_normal(d ** n_sites)
        return cls(d, n_sites, v / np.linalg.norm(v))

    @classmethod
    def ghz(cls, d: int, n_sites: int) -> "PureStateCoeffs":
        c = np.zeros(d ** n_sites, dtype=complex)
        for j in range(d):
            c[_flat_index((j,) * n_sites, d)] = 1 / np.sqrt(d)
        return cls(d, n_sites, c)

    @classmethod
    def product_basis(cls, d: int, n_sites: int, index: tuple[int, ...] | None = None) -> "PureStateCoeffs":
        index = index or (0,) * n_sites
        c = np.zeros(d ** n_sites, dtype=complex)
        c[_flat_index(index, d)] = 1.0
        return cls(d, n_sites, c)


@dataclass(frozen=True)
class PureDecomposition:
    """psi = sum_J alpha_J phi_J (x) e_J over multi-indices J of sites 2..N.

    ``alphas`` has shape ``(d,) * (N - 1)``; ``phis`` maps a multi-index to its
    unit vector on the first site and omits every J with alpha_J = 0.
    """

    d: int
    n_sites: int
    alphas: np.ndarray
    phis: dict = field(default_factory=dict)

    def support(self) -> list[tuple[int, ...]]:
        return sorted(self.phis)

    def reconstruct(self) -> np.ndarray:
        d, n = self.d, self.n_sites
        psi = np.zeros((d,) + (d,) * (n - 1), dtype=complex)
        for idx, phi in self.phis.items():
            psi[(slice(None),) + idx] += self.alphas[idx] * phi
        return psi.ravel()


@dataclass(frozen=True)
class NoisyMixtureSpec:
    beta: float
    base_state: OperatorOnProduct

    def __post_init__(self):
        if not 0 <= float(self.beta) <= 1:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        lam, _ = min_eigenvalue(self.base_state)
        if lam < -NORM_TOL:
            raise ValueError(f"base state is not positive (min eigenvalue {lam:.3e})")
        if abs(self.base_state.trace() - 1) > NORM_TOL:
            raise ValueError("base state must have unit trace")


def _flat_index(index, d: int) -> int:
    return int(np.ravel_multi_index(tuple(index), (d,) * len(index)))


def ghz_state(d: int, n_sites: int) -> OperatorOnProduct:
    """(1/d) sum_{j, j1} (|e_j><e_j1|)^{(x) N}."""
    if d < 2 or n_sites < 2:
        raise ValueError("need d >= 2 and n_sites >= 2")
    rho = np.zeros((d ** n_sites, d ** n_sites), dtype=complex)
    diag = [_flat_index((j,) * n_sites, d) for j in range(d)]
    rho[np.ix_(diag, diag)] = 1 / d
    return OperatorOnProduct((d,) * n_sites, rho)


def maximally_mixed(d: int, n_sites: int) -> OperatorOnProduct:
    if d < 2 or n_sites < 1:
        raise ValueError("need d >= 2 and n_sites >= 1")
    return OperatorOnProduct((d,) * n_sites, np.eye(d ** n_sites) / d ** n_sites)


def noisy_mixture(spec: NoisyMixtureSpec) -> OperatorOnProduct:
    """beta * base + (1 - beta) * identity / d^N."""
    base = spec.base_state
    beta = float(spec.beta)
    noise = np.eye(base.total_dim) / base.total_dim
    return OperatorOnProduct(base.dims, beta * base.matrix + (1 - beta) * noise)


def density_from_pure(psi: PureStateCoeffs) -> OperatorOnProduct:
    return OperatorOnProduct((psi.d,) * psi.n_sites, np.outer(psi.coeffs, psi.coeffs.conj()))


def decompose_pure(psi: PureStateCoeffs) -> PureDecomposition:
    """Split off the first site: alpha_J = ||c[:, J]||, phi_J = c[:, J] / alpha_J.

    phi_J carries the exact phase of the amplitudes, so the decomposition
    reconstructs psi including relative phases between branches.
    """
    d, n = psi.d, psi.n_sites
    c = psi.coeffs.reshape((d,) + (d,) * (n - 1))
    alphas = np.sqrt(np.sum(np.abs(c) ** 2, axis=0))
    phis = {}
    for idx in itertools.product(range(d), repeat=n - 1):
        a = alphas[idx]
        if a > ALPHA_ZERO:
            phis[idx] = c[(slice(None),) + idx] / a
        else:
            alphas[idx] = 0.0
    alphas.setflags(write=False)
    return PureDecomposition(d, n, alphas, phis)


def gamma_max(dec: PureDecomposition) -> float:
    """Largest branch weight max_J alpha_J^2; never below d^-(N-1)."""
    return float(np.max(dec.alphas) ** 2)
