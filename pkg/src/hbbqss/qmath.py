"""Dense complex linear algebra for systems of up to six qubits (dimension <= 64).

Plain numpy arrays are the working currency: kets are 1-D complex arrays,
operators are 2-D complex arrays. The eigensolver is a cyclic Jacobi
iteration specialised to Hermitian matrices; at these dimensions robustness
beats asymptotics and it keeps the numerical contract fully in-house.
All functions are pure and safe for concurrent use.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

#: Hard cap on any axis produced by a tensor product (six qubits).
MAX_DIM = 64

#: Structural tolerance for Hermiticity / unitarity / normalisation checks.
STRUCT_TOL = 1e-10

_JACOBI_OFF_TOL = 1e-14
_JACOBI_MAX_SWEEPS = 100

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


class DimensionLimitError(ValueError):
    """A tensor product would exceed the supported dimension."""


class NonHermitianError(ValueError):
    """An operation requiring a Hermitian matrix received one that is not."""


class ConvergenceError(RuntimeError):
    """The Jacobi sweep cap was reached before the off-diagonal target."""


def as_vector(v) -> np.ndarray:
    """Coerce to a finite, nonempty 1-D complex array."""
    arr = np.asarray(v, dtype=complex)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"expected a nonempty 1-D vector, got shape {arr.shape}")
    _check_finite(arr)
    return arr


def as_matrix(m) -> np.ndarray:
    """Coerce to a finite, nonempty 2-D complex array."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {arr.shape}")
    _check_finite(arr)
    return arr


def _check_finite(arr: np.ndarray) -> None:
    if not np.isfinite(arr).all():
        raise ValueError("non-finite entries (NaN or Inf)")


def tensor(a, b) -> np.ndarray:
    """Kronecker product, left operand as the most-significant factor.

    Both operands must be of the same kind (two vectors or two matrices).
    Results with any axis larger than MAX_DIM are rejected.
    """
    aa = np.asarray(a, dtype=complex)
    bb = np.asarray(b, dtype=complex)
    if aa.ndim != bb.ndim or aa.ndim not in (1, 2):
        raise ValueError(
            f"tensor operands must both be vectors or both matrices, "
            f"got ndim {aa.ndim} and {bb.ndim}"
        )
    _check_finite(aa)
    _check_finite(bb)
    for da, db in zip(aa.shape, bb.shape):
        if da * db > MAX_DIM:
            raise DimensionLimitError(
                f"tensor result axis {da * db} exceeds the configured maximum {MAX_DIM}"
            )
    return np.kron(aa, bb)


def adjoint(m) -> np.ndarray:
    """Conjugate transpose."""
    return as_matrix(m).conj().T


def matmul(a, b) -> np.ndarray:
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape[1] != mb.shape[0]:
        raise ValueError(f"shape mismatch {ma.shape} x {mb.shape}")
    return ma @ mb


def apply(m, v) -> np.ndarray:
    """Matrix action on a ket."""
    mm, vv = as_matrix(m), as_vector(v)
    if mm.shape[1] != vv.shape[0]:
        raise ValueError(f"shape mismatch {mm.shape} on vector of dim {vv.shape[0]}")
    return mm @ vv


def inner(u, v) -> complex:
    """<u|v>, conjugate-linear in the first argument."""
    uu, vv = as_vector(u), as_vector(v)
    if uu.shape != vv.shape:
        raise ValueError(f"dimension mismatch {uu.shape[0]} vs {vv.shape[0]}")
    return complex(np.vdot(uu, vv))


def norm(v) -> float:
    vv = as_vector(v)
    return float(np.sqrt((np.abs(vv) ** 2).sum()))


def hermitian_eigen(h, hermitian_tol: float = STRUCT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns (eigenvalues sorted descending, unitary matrix of column
    eigenvectors in matching order). Input deviating from Hermiticity by
    more than ``hermitian_tol`` (max absolute entry of h - h^dagger) is
    rejected with the measured deviation.
    """
    m = as_matrix(h)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got {m.shape}")
    deviation = float(np.abs(m - m.conj().T).max())
    if deviation > hermitian_tol:
        raise NonHermitianError(
            f"Hermitian deviation {deviation:.3e} exceeds tolerance {hermitian_tol:.1e}"
        )
    n = m.shape[0]
    a = 0.5 * (m + m.conj().T)
    v = np.eye(n, dtype=complex)
    if n == 1:
        return np.array([a[0, 0].real]), v

    scale = max(1.0, float(np.sqrt((np.abs(a) ** 2).sum())))
    skip = 1e-18 * scale
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = float(np.sqrt((np.abs(a[off_mask]) ** 2).sum()))
        if off <= _JACOBI_OFF_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= skip:
                    continue
                phase = apq / r
                tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # a <- U^dagger a U with the rotation embedded at (p, q)
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * np.conj(phase) * col_q
                a[:, q] = s * phase * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * phase * row_q
                a[q, :] = s * np.conj(phase) * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vc_p, vc_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vc_p - s * np.conj(phase) * vc_q
                v[:, q] = s * phase * vc_p + c * vc_q
    else:
        raise ConvergenceError(
            f"Jacobi iteration did not converge in {_JACOBI_MAX_SWEEPS} sweeps "
            f"(off-diagonal mass {off:.3e})"
        )

    w = np.real(np.diag(a)).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def trace_norm(m) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix, Tr sqrt(M^dagger M)."""
    w, _ = hermitian_eigen(m)
    return float(np.abs(w).sum())


def partial_trace(rho, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduced density operator over the kept tensor factors.

    ``dims`` lists the factor dimensions (most significant first) and must
    multiply to the matrix dimension; ``keep`` selects factor indices.
    """
    r = as_matrix(rho)
    dims = tuple(int(d) for d in dims)
    if any(d <= 0 for d in dims):
        raise ValueError(f"factor dimensions must be positive, got {dims}")
    total = int(np.prod(dims))
    if r.shape != (total, total):
        raise ValueError(f"dims {dims} inconsistent with matrix shape {r.shape}")
    deviation = float(np.abs(r - r.conj().T).max())
    if deviation > STRUCT_TOL:
        raise NonHermitianError(
            f"Hermitian deviation {deviation:.3e} exceeds tolerance {STRUCT_TOL:.1e}"
        )
    keep_idx = tuple(sorted(set(int(k) for k in keep)))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep_idx):
        raise ValueError(f"keep indices {keep_idx} out of range for {n} factors")
    if len(keep_idx) == n:
        return r.copy()

    ket = list(_LETTERS[:n])
    bra = []
    j = n
    for i in range(n):
        if i in keep_idx:
            bra.append(_LETTERS[j])
            j += 1
        else:
            bra.append(ket[i])
    out = "".join(ket[i] for i in keep_idx) + "".join(bra[i] for i in keep_idx)
    sub = "".join(ket) + "".join(bra) + "->" + out
    reduced = np.einsum(sub, r.reshape(dims + dims))
    d_keep = int(np.prod([dims[i] for i in keep_idx])) if keep_idx else 1
    return reduced.reshape(d_keep, d_keep)


def cross_gram_is_zero(set1, set2, tol: float) -> tuple[bool, float]:
    """Whether every cross inner product between two vector sets vanishes.

    Returns (all magnitudes <= tol, maximum magnitude found).
    """
    v1 = [as_vector(u) for u in set1]
    v2 = [as_vector(u) for u in set2]
    if not v1 or not v2:
        raise ValueError("cross_gram_is_zero requires two nonempty sets")
    dim = v1[0].shape[0]
    for u in v1 + v2:
        if u.shape[0] != dim:
            raise ValueError("all vectors must share one dimension")
    worst = 0.0
    for u in v1:
        for w in v2:
            worst = max(worst, abs(np.vdot(u, w)))
    return worst <= tol, float(worst)


def orthonormal_completion(vectors: Sequence[np.ndarray], dim: int) -> np.ndarray:
    """Extend orthonormal columns to a full orthonormal basis of C^dim.

    Uses two-pass Gram-Schmidt against the standard basis; the given
    vectors occupy the leading columns of the returned dim x dim matrix.
    """
    basis = [as_vector(v) for v in vectors]
    for v in basis:
        if v.shape[0] != dim:
            raise ValueError("seed vectors must have the requested dimension")
    for i, u in enumerate(basis):
        if abs(norm(u) - 1.0) > STRUCT_TOL:
            raise ValueError(f"seed vector {i} is not normalised")
        for w in basis[:i]:
            if abs(np.vdot(w, u)) > STRUCT_TOL:
                raise ValueError("seed vectors must be mutually orthogonal")
    for k in range(dim):
        if len(basis) == dim:
            break
        cand = np.zeros(dim, dtype=complex)
        cand[k] = 1.0
        for _ in range(2):  # two passes for numerical stability
            for w in basis:
                cand = cand - np.vdot(w, cand) * w
        length = norm(cand)
        if length > 1e-6:
            basis.append(cand / length)
    if len(basis) != dim:
        raise RuntimeError("failed to complete orthonormal basis")
    return np.column_stack(basis)
