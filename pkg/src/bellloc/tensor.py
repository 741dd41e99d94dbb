"""Dense operator algebra on tensor-product spaces.

All operators use one index convention: the leftmost tensor factor is the
slowest-varying index, which is exactly what :func:`numpy.kron` produces.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_RTOL = 1e-12
EIGEN_RTOL = 1e-9
MAX_TOTAL_DIM = 4096


@dataclass(frozen=True)
class FactorSpace:
    """Ordered list of tensor-factor dimensions."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(x) for x in self.dims)
        if not dims:
            raise ValueError("a factor space needs at least one factor")
        if any(x < 1 for x in dims):
            raise ValueError(f"factor dimensions must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self):
        return len(self.dims)


class OperatorOnProduct:
    """A square complex matrix tagged with its tensor-factor dimensions.

    The matrix is copied on construction and made read-only, so instances can
    be shared freely between workers.
    """

    __slots__ = ("space", "matrix")

    def __init__(self, dims: Sequence[int] | FactorSpace, matrix):
        space = dims if isinstance(dims, FactorSpace) else FactorSpace(tuple(dims))
        m = np.array(matrix, dtype=complex)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        n = space.total_dim
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match dims {space.dims}")
        m.setflags(write=False)
        self.space = space
        self.matrix = m

    @property
    def dims(self) -> tuple[int, ...]:
        return self.space.dims

    @property
    def total_dim(self) -> int:
        return self.space.total_dim

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        m = self.matrix
        scale = max(float(np.max(np.abs(m))), 1e-300)
        return float(np.max(np.abs(m - m.conj().T))) <= rtol * scale

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def __add__(self, other: "OperatorOnProduct") -> "OperatorOnProduct":
        _check_same_space(self, other)
        return OperatorOnProduct(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "OperatorOnProduct") -> "OperatorOnProduct":
        _check_same_space(self, other)
        return OperatorOnProduct(self.space, self.matrix - other.matrix)

    def __mul__(self, scalar) -> "OperatorOnProduct":
        return OperatorOnProduct(self.space, complex(scalar) * self.matrix)

    __rmul__ = __mul__

    def __repr__(self):
        return f"OperatorOnProduct(dims={self.dims})"


def _check_same_space(a: OperatorOnProduct, b: OperatorOnProduct):
    if a.dims != b.dims:
        raise ValueError(f"factor mismatch: {a.dims} vs {b.dims}")


def identity(dims: int | Sequence[int]) -> OperatorOnProduct:
    dims = (dims,) if isinstance(dims, (int, np.integer)) else tuple(dims)
    return OperatorOnProduct(dims, np.eye(int(np.prod(dims))))


def projector(vec, dims: Sequence[int] | None = None) -> OperatorOnProduct:
    """|v><v| for a (not necessarily normalized) vector."""
    v = np.asarray(vec, dtype=complex).ravel()
    return OperatorOnProduct(dims or (v.size,), np.outer(v, v.conj()))


def kron(a: OperatorOnProduct, b: OperatorOnProduct) -> OperatorOnProduct:
    return OperatorOnProduct(a.dims + b.dims, np.kron(a.matrix, b.matrix))


def kron_all(ops: Iterable[OperatorOnProduct]) -> OperatorOnProduct:
    return reduce(kron, ops)


def partial_trace(op: OperatorOnProduct, keep: Iterable[int]) -> OperatorOnProduct:
    """Trace out every factor not listed in ``keep``.

    The kept factors stay in their original relative order. Keeping nothing
    returns the full trace as a 1x1 operator.
    """
    dims = op.dims
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise IndexError(f"keep={keep} out of range for {n} factors")
    if len(keep) == n:
        return op
    t = op.matrix.reshape(dims + dims)
    # row index k pairs with column index n + k
    row = list(range(n))
    col = [k + n if k in keep else k for k in range(n)]
    out = keep + [k + n for k in keep]
    res = np.einsum(t, row + col, out)
    kdims = tuple(dims[k] for k in keep)
    if not kdims:
        return OperatorOnProduct((1,), np.asarray(res).reshape(1, 1))
    side = int(np.prod(kdims))
    return OperatorOnProduct(kdims, res.reshape(side, side))


def min_eigenvalue(op: OperatorOnProduct) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue and a unit eigenvector of a hermitian operator."""
    if not op.is_hermitian():
        raise ValueError("min_eigenvalue needs a hermitian operator")
    m = op.matrix
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    return float(vals[0]), vecs[:, 0]


def trace_norm(op: OperatorOnProduct) -> float:
    """Sum of singular values (sum of |eigenvalues| in the hermitian case)."""
    m = op.matrix
    if op.is_hermitian():
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def site_offsets(profile: Sequence[int]) -> list[int]:
    """Index of the first copy factor of every site in a dilation space."""
    offs, pos = [], 0
    for s in profile:
        offs.append(pos)
        pos += int(s)
    return offs


def embed_at_copy(x, site: int, copy: int, profile: Sequence[int], d: int) -> OperatorOnProduct:
    """Place a single-factor operator at one copy slot of the dilation space.

    The dilation space is ``(C^d)^{S_1} (x) ... (x) (C^d)^{S_N}`` with
    ``profile = (S_1, ..., S_N)``; the result acts as ``x`` on copy ``copy``
    of site ``site`` and as the identity on every other factor.
    """
    xm = x.matrix if isinstance(x, OperatorOnProduct) else np.asarray(x, dtype=complex)
    if xm.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} operator, got {xm.shape}")
    profile = [int(s) for s in profile]
    if not 0 <= site < len(profile):
        raise IndexError(f"site {site} out of range")
    if not 0 <= copy < profile[site]:
        raise IndexError(f"copy {copy} out of range for S={profile[site]}")
    nfac = sum(profile)
    pos = site_offsets(profile)[site] + copy
    eye = np.eye(d, dtype=complex)
    factors = [xm if k == pos else eye for k in range(nfac)]
    return OperatorOnProduct((d,) * nfac, reduce(np.kron, factors))


def random_positive_operator(dim: int, seed, dims: Sequence[int] | None = None) -> OperatorOnProduct:
    """G G^dagger with G a standard complex Gaussian ``dim x dim`` matrix."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    return OperatorOnProduct(dims or (dim,), g @ g.conj().T)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    return 0.5 * (g + g.conj().T)


def random_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def basis_vector(d: int, j: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[j] = 1.0
    return e


def group_factors(op: OperatorOnProduct, sizes: Sequence[int]) -> OperatorOnProduct:
    """Merge consecutive factors into blocks; ``sizes`` counts factors per block."""
    if sum(sizes) != len(op.dims) or any(s < 1 for s in sizes):
        raise ValueError(f"block sizes {tuple(sizes)} do not cover dims {op.dims}")
    blocks, pos = [], 0
    for s in sizes:
        blocks.append(int(np.prod(op.dims[pos:pos + s])))
        pos += s
    return OperatorOnProduct(blocks, op.matrix)


def product_trace(op: OperatorOnProduct, mats: Sequence[np.ndarray]) -> complex:
    """tr[op (M_1 (x) ... (x) M_m)] without materializing the Kronecker product."""
    dims = op.dims
    m = len(dims)
    if len(mats) != m:
        raise ValueError(f"need {m} local operators, got {len(mats)}")
    args = [op.matrix.reshape(dims + dims), list(range(2 * m))]
    for k, mk in enumerate(mats):
        mk = np.asarray(mk)
        if mk.shape != (dims[k], dims[k]):
            raise ValueError(f"factor {k}: expected {dims[k]}x{dims[k]}, got {mk.shape}")
        args += [mk, [m + k, k]]
    return complex(np.einsum(*args, [], optimize=True))
