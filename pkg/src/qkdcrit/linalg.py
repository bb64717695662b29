"""
Dense complex linear algebra for small operators.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Every function
here is pure: inputs are never modified and results are fresh arrays.

Two Hermitian eigensolvers are provided. :func:`hermitian_eig` is the
production path (LAPACK ``heevd`` through ``numpy.linalg.eigh``) and
:func:`jacobi_eig` is a self-contained cyclic complex Jacobi solver, kept as
an independent cross-check of the first.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionCap, DimensionMismatch, NotHermitian, NotState

MAX_DIM = 4096
HERMITIAN_ATOL = 1e-12
PSD_ATOL = 1e-10
TRACE_ATOL = 1e-10


class Spectrum(NamedTuple):
    """Eigenvalues sorted descending and the matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a 2-D complex array, raising on anything else."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def check_dim(dim: int) -> None:
    if dim > MAX_DIM:
        raise DimensionCap(f"dimension {dim} exceeds cap {MAX_DIM}")


def hermiticity_error(a) -> float:
    """Largest entrywise deviation ``|A[i, j] - conj(A[j, i])|``."""
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        return math.inf
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)))


def is_hermitian(a, atol: float = HERMITIAN_ATOL) -> bool:
    m = as_matrix(a)
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return hermiticity_error(m) <= atol * scale


def require_hermitian(a, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Validate and return the exactly-Hermitian part of ``a``."""
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise NotHermitian(f"non-square matrix of shape {m.shape}")
    check_dim(m.shape[0])
    if not is_hermitian(m, atol):
        raise NotHermitian(f"hermiticity error {hermiticity_error(m):.3e} exceeds tolerance")
    return 0.5 * (m + m.conj().T)


def hermitian_eig(a) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises
    ------
    NotHermitian
        If ``a`` is not Hermitian within :data:`HERMITIAN_ATOL` (relative to
        its largest entry).
    DimensionCap
        If the dimension exceeds :data:`MAX_DIM`.
    """
    h = require_hermitian(a)
    w, v = np.linalg.eigh(h)
    return Spectrum(w[::-1].copy(), v[:, ::-1].copy())


def eigvalsh(a) -> np.ndarray:
    """Eigenvalues only, descending."""
    return np.linalg.eigvalsh(require_hermitian(a))[::-1]


def jacobi_eig(a, tol: float = 1e-14, max_sweeps: int = 100) -> Spectrum:
    """Cyclic complex Jacobi eigensolver.

    Each rotation first removes the phase of the pivot ``A[p, q]`` with a
    diagonal unitary and then applies a real Givens rotation that zeroes it.
    Sweeps continue until the off-diagonal Frobenius norm falls below
    ``tol`` times the matrix Frobenius norm.
    """
    work = require_hermitian(a).copy()
    n = work.shape[0]
    vecs = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(work), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(work - np.diag(np.diag(work)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                app = work[p, p].real
                aqq = work[q, q].real
                theta = (aqq - app) / (2.0 * r)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                work[:, idx] = work[:, idx] @ rot
                work[idx, :] = rot.conj().T @ work[idx, :]
                work[p, q] = work[q, p] = 0.0
                vecs[:, idx] = vecs[:, idx] @ rot
    w = np.real(np.diag(work))
    order = np.argsort(w)[::-1]
    return Spectrum(w[order], vecs[:, order])


def apply_eigenfunction(a, fn) -> np.ndarray:
    """``V fn(Λ) V†`` for Hermitian ``a``."""
    h = require_hermitian(a)
    w, v = np.linalg.eigh(h)
    return (v * fn(w)) @ v.conj().T


def positive_part(a) -> np.ndarray:
    return apply_eigenfunction(a, lambda w: np.clip(w, 0.0, None))


def sqrtm_psd(a) -> np.ndarray:
    """Square root of a PSD matrix; eigenvalues down to ``-PSD_ATOL`` are clamped to 0."""
    h = require_hermitian(a)
    w, v = np.linalg.eigh(h)
    if w.size and w.min() < -PSD_ATOL * max(1.0, abs(w).max()):
        raise NotState(f"matrix has eigenvalue {w.min():.3e} below PSD tolerance")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def trace_norm(a) -> float:
    """Schatten-1 norm ``Σ |λ_i|`` of a Hermitian matrix."""
    h = require_hermitian(a)
    if h.size == 0:
        return 0.0
    return float(np.sum(np.abs(np.linalg.eigvalsh(h))))


def trace_norm_general(a) -> float:
    """Sum of singular values; debug helper for non-Hermitian input."""
    return float(np.sum(np.linalg.svd(as_matrix(a), compute_uv=False)))


def check_state(rho, name: str = "rho") -> np.ndarray:
    """Validate a density operator (Hermitian, trace one, PSD) and return it as an array."""
    m = require_hermitian(rho)
    tr = np.trace(m).real
    if abs(tr - 1.0) > TRACE_ATOL:
        raise NotState(f"{name} has trace {tr!r}")
    lmin = np.linalg.eigvalsh(m)[0]
    if lmin < -PSD_ATOL:
        raise NotState(f"{name} has eigenvalue {lmin:.3e}")
    return m


def fidelity(rho, sigma) -> float:
    """Squared Uhlmann fidelity ``(Tr √(√ρ σ √ρ))²``.

    Computed as the squared nuclear norm of ``√ρ √σ``, which avoids nesting
    two matrix square roots.
    """
    r = check_state(rho, "rho")
    s = check_state(sigma, "sigma")
    if r.shape != s.shape:
        raise DimensionMismatch(f"{r.shape} vs {s.shape}")
    sv = np.linalg.svd(sqrtm_psd(r) @ sqrtm_psd(s), compute_uv=False)
    return float(min(1.0, np.sum(sv) ** 2))


def tensor(*mats) -> np.ndarray:
    """Kronecker product of one or more matrices."""
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        m = as_matrix(m)
        check_dim(out.shape[0] * m.shape[0])
        check_dim(out.shape[1] * m.shape[1])
        out = np.kron(out, m)
    return out


def partial_trace(a, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Parameters
    ----------
    a : array_like
        Square operator on the tensor product of subsystems ``dims``.
    dims : sequence of int
        Subsystem dimensions, first factor most significant (``np.kron``
        ordering).
    keep : iterable of int
        Indices of subsystems to retain, in any order; the result keeps them
        in increasing index order.
    """
    m = as_matrix(a)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims)) if dims else 1
    if m.shape != (total, total):
        raise DimensionMismatch(f"dims {dims} imply {total}x{total}, matrix is {m.shape}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionMismatch(f"keep indices {keep} out of range for {len(dims)} subsystems")
    k = len(dims)
    t = m.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * k > 2 * len(letters):
        raise DimensionMismatch("too many subsystems")
    row = list(letters[:k])
    col = [c.upper() for c in row]
    for i in range(k):
        if i not in keep:
            col[i] = row[i]
    out_sub = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    res = np.einsum("".join(row) + "".join(col) + "->" + out_sub, t)
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(d_keep, d_keep)


def ket(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return v / np.linalg.norm(v)


def projector(vec) -> np.ndarray:
    v = ket(vec)
    return np.outer(v, v.conj())


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed density operator ``G G† / Tr(G G†)``."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: np.random.Generator, bound: float = 1.0) -> np.ndarray:
    """Hermitian matrix with entries bounded in modulus by ``bound``."""
    re = rng.uniform(-1, 1, size=(dim, dim))
    im = rng.uniform(-1, 1, size=(dim, dim))
    a = (re + 1j * im) / math.sqrt(2)
    return bound * 0.5 * (a + a.conj().T)


def random_pure(dim: int, rng: np.random.Generator) -> np.ndarray:
    return projector(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def matrix_to_json(a) -> dict:
    """``{"dims": [rows, cols], "re": [...], "im": [...]}`` with row-major entries."""
    m = as_matrix(a)
    return {
        "dims": [int(m.shape[0]), int(m.shape[1])],
        "re": [float(x) for x in m.real.ravel()],
        "im": [float(x) for x in m.imag.ravel()],
    }


def matrix_from_json(blob: dict) -> np.ndarray:
    rows, cols = blob["dims"]
    re = np.asarray(blob["re"], dtype=float)
    im = np.asarray(blob.get("im", [0.0] * len(re)), dtype=float)
    if re.size != rows * cols or im.size != rows * cols:
        raise DimensionMismatch(f"entry count {re.size} does not match dims {rows}x{cols}")
    return (re + 1j * im).reshape(rows, cols)
