"""Dense symmetric/Hermitian matrix kernel.

Value types for symmetric and Hermitian matrices plus the handful of
operations the rest of the package is built on: eigendecompositions,
inertia counts, Loewner-order comparisons, Schur complements, and
lower-bound checks against matrix families.

All types are immutable after construction and every function is pure,
so everything here is safe to call from concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SYM_TOL",
    "EIG_TOL",
    "COND_MAX",
    "LOEWNER_TOL_ABS",
    "LOEWNER_TOL_REL",
    "SymmetryError",
    "DimensionError",
    "SingularPivotError",
    "SymmetricMatrix",
    "HermitianMatrix",
    "EigenDecomposition",
    "Inertia",
    "hermitian_part",
    "eig_sym",
    "inertia",
    "loewner_leq",
    "schur_complement",
    "is_lower_bound",
]

# Relative symmetry tolerance.  Inputs violating it are rejected rather than
# silently symmetrized so that asymmetry bugs upstream surface immediately.
SYM_TOL = 1e-10

# Tolerance for the EigenDecomposition invariants (orthonormality and
# reconstruction).  LAPACK on the dimensions used here (<= ~100) is far
# better than this.
EIG_TOL = 1e-9

# Condition-number ceiling for pivot blocks and matrix inverses; beyond this
# the operation raises instead of returning garbage.
COND_MAX = 1e12

# Loewner comparisons use an absolute-plus-relative tolerance:
# lambda_min(B - A) >= -(tol_abs + tol_rel * ||B - A||_F).
LOEWNER_TOL_ABS = 1e-9
LOEWNER_TOL_REL = 1e-9


class SymmetryError(ValueError):
    """Raised when an input violates its (conjugate-)symmetry invariant."""


class DimensionError(ValueError):
    """Raised on shape mismatches."""


class SingularPivotError(np.linalg.LinAlgError):
    """Raised when a pivot block is too ill-conditioned to invert."""


def _as_array(mat, dtype=None):
    """Unwrap SymmetricMatrix/HermitianMatrix or coerce to ndarray."""
    if isinstance(mat, (SymmetricMatrix, HermitianMatrix)):
        arr = mat.entries
    else:
        arr = np.asarray(mat)
    if dtype is not None:
        arr = arr.astype(dtype, copy=False)
    return arr


def _check_square(arr, what="matrix"):
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise DimensionError(f"{what} must have dimension >= 1")


class SymmetricMatrix:
    """Immutable dense real symmetric matrix.

    Construction validates symmetry to within ``tol * max(1, ||A||_inf)``
    and raises :class:`SymmetryError` otherwise; it never symmetrizes
    silently.  Use :func:`hermitian_part` to symmetrize on purpose.
    """

    __slots__ = ("entries", "dim")

    def __init__(self, entries, tol=SYM_TOL):
        arr = np.array(entries, dtype=float)
        _check_square(arr, "symmetric matrix")
        scale = max(1.0, np.abs(arr).max())
        if np.abs(arr - arr.T).max() > tol * scale:
            raise SymmetryError(
                "matrix is not symmetric within tolerance "
                f"{tol:g} (relative asymmetry "
                f"{np.abs(arr - arr.T).max() / scale:.3e})"
            )
        arr = (arr + arr.T) / 2.0  # remove roundoff-level asymmetry only
        arr.setflags(write=False)
        self.entries = arr
        self.dim = arr.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)

    def __repr__(self):
        return f"SymmetricMatrix(dim={self.dim})"


class HermitianMatrix:
    """Immutable dense complex Hermitian matrix (same contract as
    :class:`SymmetricMatrix`, with conjugate symmetry)."""

    __slots__ = ("entries", "dim")

    def __init__(self, entries, tol=SYM_TOL):
        arr = np.array(entries, dtype=complex)
        _check_square(arr, "Hermitian matrix")
        scale = max(1.0, np.abs(arr).max())
        if np.abs(arr - arr.conj().T).max() > tol * scale:
            raise SymmetryError(
                "matrix is not Hermitian within tolerance "
                f"{tol:g} (relative asymmetry "
                f"{np.abs(arr - arr.conj().T).max() / scale:.3e})"
            )
        arr = (arr + arr.conj().T) / 2.0
        arr.setflags(write=False)
        self.entries = arr
        self.dim = arr.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)

    def __repr__(self):
        return f"HermitianMatrix(dim={self.dim})"


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigendecomposition of a symmetric/Hermitian matrix.

    values are ascending; vectors holds the corresponding eigenvectors as
    columns and is orthogonal (unitary in the Hermitian case).
    """

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        v = self.vectors
        d = v.shape[0]
        ortho = np.abs(v.conj().T @ v - np.eye(d)).max()
        if ortho > EIG_TOL:
            raise ValueError(f"eigenvectors not orthonormal ({ortho:.2e})")


@dataclass(frozen=True)
class Inertia:
    """Counts of positive / negative / zero eigenvalues."""

    positive: int
    negative: int
    zero: int

    @property
    def dim(self):
        return self.positive + self.negative + self.zero


def hermitian_part(mat):
    """Hermitian symmetric part ``(M + M^H) / 2``.

    Returns a :class:`SymmetricMatrix` for real input and a
    :class:`HermitianMatrix` for complex input.
    """
    arr = _as_array(mat)
    _check_square(arr, "input")
    if np.iscomplexobj(arr):
        return HermitianMatrix((arr + arr.conj().T) / 2.0, tol=np.inf)
    return SymmetricMatrix((arr + arr.T) / 2.0, tol=np.inf)


def eig_sym(mat):
    """Eigendecomposition of a symmetric or Hermitian matrix.

    Validates the symmetry invariant of the input, then returns ascending
    eigenvalues with orthonormal eigenvectors.
    """
    if not isinstance(mat, (SymmetricMatrix, HermitianMatrix)):
        arr = np.asarray(mat)
        mat = HermitianMatrix(arr) if np.iscomplexobj(arr) else SymmetricMatrix(arr)
    values, vectors = np.linalg.eigh(mat.entries)
    dec = EigenDecomposition(values=values, vectors=vectors)
    resid = np.linalg.norm(
        mat.entries - vectors @ np.diag(values) @ vectors.conj().T
    )
    if resid > EIG_TOL * max(1.0, np.linalg.norm(mat.entries)):
        raise np.linalg.LinAlgError("eigendecomposition failed to reconstruct")
    return dec


def inertia(mat, tol=1e-9):
    """Inertia (positive, negative, zero eigenvalue counts) at tolerance tol."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    values = np.linalg.eigvalsh(_as_array(mat))
    pos = int(np.sum(values > tol))
    neg = int(np.sum(values < -tol))
    return Inertia(positive=pos, negative=neg, zero=values.size - pos - neg)


def loewner_leq(a, b, tol_abs=LOEWNER_TOL_ABS, tol_rel=LOEWNER_TOL_REL):
    """Loewner-order comparison ``A <= B`` (i.e. B - A positive semidefinite).

    True iff ``lambda_min(B - A) >= -(tol_abs + tol_rel * ||B - A||_F)``.
    Note this is a partial order: ``not loewner_leq(a, b)`` does not imply
    ``loewner_leq(b, a)``.
    """
    da = _as_array(a)
    db = _as_array(b)
    if da.shape != db.shape:
        raise DimensionError(f"shape mismatch {da.shape} vs {db.shape}")
    diff = db - da
    lam_min = np.linalg.eigvalsh(hermitian_part(diff).entries)[0]
    return bool(lam_min >= -(tol_abs + tol_rel * np.linalg.norm(diff)))


def schur_complement(mat, split, pivot="upper"):
    """Schur complement of a partitioned symmetric matrix.

    The matrix is partitioned as ``[[A, B], [B^T, C]]`` with A of size
    ``split``.  ``pivot="upper"`` eliminates A and returns ``C - B^T A^-1 B``;
    ``pivot="lower"`` eliminates C and returns ``A - B C^-1 B^T``.

    Raises :class:`SingularPivotError` if the pivot block's condition number
    exceeds ``COND_MAX``.
    """
    arr = _as_array(_ensure_symmetric(mat), dtype=float)
    d = arr.shape[0]
    if not 0 < split < d:
        raise DimensionError(f"split {split} must lie strictly inside 0..{d}")
    a = arr[:split, :split]
    b = arr[:split, split:]
    c = arr[split:, split:]
    if pivot == "upper":
        piv, off, keep = a, b, c
    elif pivot == "lower":
        piv, off, keep = c, b.T, a
    else:
        raise ValueError("pivot must be 'upper' or 'lower'")
    cond = np.linalg.cond(piv)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise SingularPivotError(
            f"pivot block condition number {cond:.3e} exceeds {COND_MAX:g}"
        )
    comp = keep - off.T @ np.linalg.solve(piv, off)
    return SymmetricMatrix((comp + comp.T) / 2.0, tol=np.inf)


def is_lower_bound(cand, samples, tol=1e-9):
    """Check whether ``cand`` is a Loewner lower bound of a matrix family.

    Returns ``(ok, margin)`` with ``margin = min_S lambda_min(S - cand)``
    over the samples and ``ok = (margin >= -tol)``.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("sample set must be nonempty")
    c = _as_array(cand)
    margin = np.inf
    for s in samples:
        diff = _as_array(s) - c
        lam = np.linalg.eigvalsh((diff + diff.conj().T) / 2.0)[0]
        margin = min(margin, float(lam))
    return bool(margin >= -tol), margin


def _ensure_symmetric(mat):
    if isinstance(mat, SymmetricMatrix):
        return mat
    return SymmetricMatrix(np.asarray(mat, dtype=float))
