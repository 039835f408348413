"""Dense complex linear algebra with one shared tolerance policy.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``. Every
routine that diagonalizes a matrix Hermitizes it first, so floating-point
drift in the anti-Hermitian part can never flip a positivity verdict.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, DomainError, NotPSDError

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "as_matrix",
    "max_abs",
    "hermitize",
    "is_psd",
    "min_eigenvalue",
    "psd_factor",
    "psd_sqrt",
    "pinv",
    "kron",
    "partial_trace",
    "matrix_to_json",
    "matrix_from_json",
]


@dataclass(frozen=True)
class Tolerance:
    """Numerical tolerances threaded through all modules.

    Parameters
    ----------
    abs : float
        Absolute tolerance, also the relative eigenvalue cutoff for PSD tests.
    rel : float
        Relative tolerance for comparisons that scale with magnitude.
    pinv_cutoff_ratio : float
        Singular values at or below ``pinv_cutoff_ratio * sigma_max`` are
        treated as zero by :func:`pinv`.
    """

    abs: float = 1e-9
    rel: float = 1e-9
    pinv_cutoff_ratio: float = 1e-10

    def __post_init__(self):
        for name in ("abs", "rel", "pinv_cutoff_ratio"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise DomainError(f"tolerance field {name!r} must be finite and >= 0, got {value!r}")

    def close(self, residual: float, scale: float = 1.0) -> bool:
        """True when ``residual <= abs + rel * scale``."""
        return residual <= self.abs + self.rel * abs(scale)

    def scaled(self, factor: float) -> "Tolerance":
        return replace(self, abs=self.abs * factor, rel=self.rel * factor)

    @classmethod
    def from_env(cls, var: str = "NCPOLY_TOL") -> "Tolerance":
        """Default tolerance, with ``abs`` and ``rel`` overridden by ``$NCPOLY_TOL``."""
        raw = os.environ.get(var)
        if not raw:
            return cls()
        value = float(raw)
        return cls(abs=value, rel=value)


DEFAULT_TOL = Tolerance()


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce ``M`` to a finite 2-D complex array."""
    A = np.asarray(M, dtype=np.complex128)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} has non-finite entries")
    return A


def _square(M, name="matrix") -> np.ndarray:
    A = as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def max_abs(M) -> float:
    """Entry-wise max norm; 0 for empty arrays."""
    A = np.asarray(M)
    return float(np.max(np.abs(A))) if A.size else 0.0


def hermitize(M) -> tuple[np.ndarray, float]:
    """Return ``((M + M*) / 2, max|M - M*|)``."""
    A = _square(M)
    return (A + A.conj().T) / 2, max_abs(A - A.conj().T)


def _spectrum(M):
    H, asym = hermitize(M)
    if H.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=np.complex128), asym, H
    w, U = np.linalg.eigh(H)
    return w, U, asym, H


def min_eigenvalue(M) -> float:
    """Smallest eigenvalue of the Hermitized matrix."""
    w, _, _, _ = _spectrum(M)
    return float(w[0]) if w.size else 0.0


def is_psd(M, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Positive semidefinite test.

    ``M`` passes when its anti-Hermitian part is below
    ``tol.abs * max(1, max|M|)`` and the smallest eigenvalue of the
    Hermitized matrix is at least ``-tol.abs * max(1, lambda_max)``.
    """
    w, _, asym, _ = _spectrum(M)
    if asym > tol.abs * max(1.0, max_abs(M)):
        return False
    if w.size == 0:
        return True
    return bool(w[0] >= -tol.abs * max(1.0, w[-1]))


def psd_factor(G, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Factor a PSD matrix as ``G = W* W``.

    Parameters
    ----------
    G : array_like, shape (n, n)
        Positive semidefinite matrix (within ``tol``).
    tol : Tolerance

    Returns
    -------
    W : ndarray, shape (r, n)
        Rows are ``sqrt(lambda_k) * u_k*`` for the ``r`` eigenvalues above
        ``tol.abs * lambda_max``, largest first. ``r`` may be 0.

    Raises
    ------
    NotPSDError
        If ``G`` has an eigenvalue below ``-tol.abs * max(1, lambda_max)``.
    """
    w, U, asym, _ = _spectrum(G)
    n = w.size
    if asym > tol.abs * max(1.0, max_abs(G)):
        raise NotPSDError(f"matrix is not Hermitian (asymmetry {asym:.3e})", w[0] if n else 0.0)
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    lam_max = max(float(w[-1]), 0.0)
    if w[0] < -tol.abs * max(1.0, lam_max):
        raise NotPSDError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})", w[0])
    keep = w > tol.abs * lam_max
    if lam_max == 0.0:
        keep[:] = False
    w = np.clip(w[keep], 0.0, None)[::-1]
    U = U[:, keep][:, ::-1]
    return np.sqrt(w)[:, None] * U.conj().T


def psd_sqrt(M, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Principal square root of a PSD matrix, clamping noise-level negative eigenvalues."""
    w, U, asym, _ = _spectrum(M)
    if w.size == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    lam_max = max(float(w[-1]), 0.0)
    if asym > tol.abs * max(1.0, max_abs(M)) or w[0] < -tol.abs * max(1.0, lam_max):
        raise NotPSDError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})", w[0])
    s = np.sqrt(np.clip(w, 0.0, None))
    return (U * s) @ U.conj().T


def pinv(M, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse by SVD with a relative singular-value cutoff."""
    A = as_matrix(M)
    m, n = A.shape
    if A.size == 0:
        return np.zeros((n, m), dtype=np.complex128)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((n, m), dtype=np.complex128)
    keep = s > tol.pinv_cutoff_ratio * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vh.conj().T * inv) @ U.conj().T


def kron(A, B) -> np.ndarray:
    """Kronecker product; the first factor indexes the coarse blocks."""
    return np.kron(as_matrix(A, "A"), as_matrix(B, "B"))


def partial_trace(M, d1: int, d2: int, side: str = "second") -> np.ndarray:
    """Trace out one factor of a matrix on ``C^d1 (x) C^d2``.

    ``side="second"`` traces out the second factor and returns a ``d1 x d1``
    matrix; ``side="first"`` traces out the first and returns ``d2 x d2``.
    """
    A = _square(M)
    if d1 < 1 or d2 < 1 or A.shape[0] != d1 * d2:
        raise DimensionError(f"matrix of size {A.shape[0]} is not {d1}x{d2}")
    T = A.reshape(d1, d2, d1, d2)
    if side == "second":
        return np.einsum("ikjk->ij", T)
    if side == "first":
        return np.einsum("kikj->ij", T)
    raise DomainError(f"side must be 'first' or 'second', got {side!r}")


def matrix_to_json(M) -> dict:
    """Encode as ``{"rows", "cols", "data": [[re, im], ...]}`` in row-major order."""
    A = as_matrix(M)
    rows, cols = A.shape
    flat = A.reshape(-1)
    return {
        "rows": rows,
        "cols": cols,
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed matrix object: {exc}") from exc
    if rows < 0 or cols < 0 or len(data) != rows * cols:
        raise DimensionError(f"matrix declares {rows}x{cols} but carries {len(data)} entries")
    values = np.empty(rows * cols, dtype=np.complex128)
    for k, pair in enumerate(data):
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise DomainError(f"entry {k} is not a [re, im] pair")
        values[k] = complex(float(pair[0]), float(pair[1]))
    if not np.all(np.isfinite(values)):
        raise DomainError("matrix has non-finite entries")
    return values.reshape(rows, cols)
