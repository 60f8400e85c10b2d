"""Sparse non-negative stain separation (Vahadane et al.).

Minimises ``||OD - C W^T||_F^2 + lambda * ||C||_1`` over ``C >= 0`` and
``W >= 0`` with unit-norm columns, by block coordinate descent. Every block
update is an exact minimiser, so the objective never increases.
"""
from __future__ import annotations

import numpy as np

from ..errors import StainEstimationError
from .deconvolution import canonical_stain_matrix, nonneg_quadratic_two
from .macenko import MIN_TISSUE_PIXELS, estimate_stain_matrix_macenko, tissue_rows

# Used when the Macenko initialisation is unavailable.
REFERENCE_HE = canonical_stain_matrix(
    np.array([[0.650, 0.072], [0.704, 0.990], [0.286, 0.105]])
)


def objective(od, c, w, sparsity_lambda) -> float:
    r = od - c @ w.T
    return float(np.einsum("ij,ij->", r, r) + sparsity_lambda * c.sum())


def _update_concentrations(c, p, gram, sparsity_lambda):
    """Exact concentration step, in place.

    Per row, ``||od - W c||^2 + lambda * sum(c)`` equals
    ``c^T G c - 2 (p - lambda/2)^T c`` up to a constant, a two-variable
    non-negative quadratic solved by active-set enumeration.
    """
    c[:] = nonneg_quadratic_two(p - 0.5 * sparsity_lambda, gram)


def _update_dictionary(w, od, c):
    """Exact column-wise minimisers over the non-negative unit sphere, in place."""
    for j, k in ((0, 1), (1, 0)):
        cj = c[:, j]
        if not np.any(cj > 0):
            continue
        g = od.T @ cj - w[:, k] * (c[:, k] @ cj)
        pos = np.maximum(g, 0.0)
        norm = np.linalg.norm(pos)
        if norm > 0:
            w[:, j] = pos / norm
        else:
            w[:, j] = 0.0
            w[np.argmax(g), j] = 1.0


def fit_vahadane_dictionary(
    od,
    sparsity_lambda: float = 0.1,
    max_iters: int = 200,
    tol: float = 1e-6,
    beta_od_threshold: float = 0.15,
    min_pixels: int = MIN_TISSUE_PIXELS,
    init=None,
    return_trace: bool = False,
):
    """Learn a two-column non-negative stain dictionary from tissue OD rows.

    Pixels with OD at or below ``beta_od_threshold`` in any channel are
    ignored. Initialisation is the Macenko estimate unless ``init`` is given.
    Stops after ``max_iters`` or once the relative objective change drops
    below ``tol``.

    Returns the canonical 3x2 stain matrix, or ``(matrix, C, trace)`` with
    ``return_trace=True`` where ``trace`` holds the objective at the start and
    after every iteration.
    """
    tissue = tissue_rows(od, beta_od_threshold, min_pixels)
    if init is None:
        try:
            w = estimate_stain_matrix_macenko(
                tissue, beta_od_threshold=beta_od_threshold, min_pixels=min_pixels
            )
        except StainEstimationError:
            w = REFERENCE_HE.copy()
    else:
        w = canonical_stain_matrix(init)

    c = np.zeros((len(tissue), 2))
    _update_concentrations(c, tissue @ w, w.T @ w, sparsity_lambda)
    trace = [objective(tissue, c, w, sparsity_lambda)]
    for _ in range(max_iters):
        _update_dictionary(w, tissue, c)
        _update_concentrations(c, tissue @ w, w.T @ w, sparsity_lambda)
        trace.append(objective(tissue, c, w, sparsity_lambda))
        prev, cur = trace[-2], trace[-1]
        if abs(prev - cur) <= tol * max(abs(prev), np.finfo(float).tiny):
            break

    order_swapped = w[0, 1] > w[0, 0]
    matrix = canonical_stain_matrix(w)
    if not return_trace:
        return matrix
    if order_swapped:
        c = c[:, ::-1].copy()
    return matrix, c, np.asarray(trace)
