"""Two-stain optical density decomposition: concentrations and matrix hygiene."""
from __future__ import annotations

import numpy as np

from .._validation import check_od, check_stain_matrix
from ..errors import DataError, DegenerateStainPlane

SOLVERS = ("nnls", "lstsq")


def canonical_stain_matrix(m) -> np.ndarray:
    """Sign-fix, clamp, normalise and order the two stain columns.

    A column with a negative mean is flipped; residual negative entries are
    clamped to zero before normalising. The column with the larger red OD
    component comes first, so per-image estimates line up when averaged.
    """
    m = np.array(m, dtype=np.float64).reshape(3, 2)
    flip = m.mean(axis=0) < 0
    m[:, flip] *= -1
    np.maximum(m, 0.0, out=m)
    norms = np.linalg.norm(m, axis=0)
    if np.any(norms <= 1e-12):
        raise DegenerateStainPlane("a stain direction vanished after sign fixing")
    m /= norms
    if m[0, 1] > m[0, 0]:
        m = m[:, ::-1].copy()
    return m


def nnls_two_columns(od, m) -> np.ndarray:
    """Exact per-row non-negative least squares for a 3x2 design matrix.

    With two unknowns the active set can be enumerated: if the unconstrained
    solution is non-negative it is optimal; otherwise the optimum lies on a
    face, where each single-column fit has a closed form and the better of
    the two (or zero) wins.
    """
    od = check_od(od)
    m = check_stain_matrix(m)
    return nonneg_quadratic_two(od @ m, m.T @ m)


def nonneg_quadratic_two(b, gram) -> np.ndarray:
    """Row-wise minimiser of ``c^T G c - 2 b^T c`` over ``c >= 0`` for a 2x2 ``G``."""
    out = np.zeros_like(b)
    det = gram[0, 0] * gram[1, 1] - gram[0, 1] ** 2
    if det > 1e-12 * gram[0, 0] * gram[1, 1]:
        inv = np.array([[gram[1, 1], -gram[0, 1]], [-gram[0, 1], gram[0, 0]]]) / det
        full = b @ inv
        interior = (full >= 0).all(axis=1)
        out[interior] = full[interior]
    else:
        interior = np.zeros(len(b), dtype=bool)

    face = ~interior
    if face.any():
        bf = np.maximum(b[face], 0.0)
        diag = np.diag(gram)
        if np.any(diag <= 0):
            raise DataError("stain matrix has a zero column")
        # Objective reduction of each single-column fit is b_j^2 / G_jj.
        gain = bf * bf / diag
        pick = np.argmax(gain, axis=1)
        rows = np.nonzero(face)[0]
        out[rows, pick] = bf[np.arange(len(rows)), pick] / diag[pick]
    return out


def compute_concentrations(od, m, solver: str = "nnls") -> np.ndarray:
    """Per-pixel stain concentrations ``C`` with ``od ~= C @ m.T``."""
    if solver == "nnls":
        return nnls_two_columns(od, m)
    if solver == "lstsq":
        od = check_od(od)
        m = check_stain_matrix(m)
        return od @ np.linalg.pinv(m).T
    raise DataError(f"unknown solver {solver!r}; expected one of {SOLVERS}")


def pseudo_max_concentration(c, percentile: float = 99.0) -> np.ndarray:
    """Per-column percentile with linear interpolation between order statistics."""
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] < 1:
        raise DataError("concentration matrix must be (N, k) with N >= 1")
    return np.percentile(c, percentile, axis=0)


def reconstruct_od(c, m) -> np.ndarray:
    return np.asarray(c, dtype=np.float64) @ check_stain_matrix(m).T
