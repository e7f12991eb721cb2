"""Pure-numpy implementations of the hot loops.

These mirror ``_kernels.pyx`` one for one and are used whenever the compiled
extension is unavailable (or ``GRADFREE_PURE_PYTHON=1`` is set).
"""
import numpy as np

DIVERGENCE_LIMIT = 1e12


def half_quad_rows(Y, A, is_diag):
    """``0.5 * y^T A y`` for every row ``y`` of ``Y``."""
    Y = np.asarray(Y, dtype=float)
    if is_diag:
        return 0.5 * ((Y * Y) @ A)
    return 0.5 * np.einsum("ij,ij->i", Y @ A, Y)


def zogd_quadratic_chunk(X, x_star, A, is_diag, E, XI, gammas, taus,
                         dist_out, gnorm_out, path_out=None):
    """Run ``len(gammas)`` zoGD steps for ``R`` replicas, in place on ``X``.

    Randomness is supplied pre-drawn: ``E`` holds unit directions with shape
    ``(R, c, d)`` and ``XI`` the per-call noise ``(R, c, 2)`` already scaled by
    sigma. Returns the number of completed steps; a value short of ``c`` means
    some replica diverged (non-finite or ``|x| > 1e12``) on the next step.
    """
    R, d = X.shape
    steps = len(gammas)
    for k in range(steps):
        tau = taus[k]
        e = E[:, k, :]
        r = X - x_star
        y_plus = r + tau * e
        y_minus = r - tau * e
        f_plus = half_quad_rows(y_plus, A, is_diag) + XI[:, k, 0] * np.sqrt(
            np.einsum("ij,ij->i", y_plus, y_plus))
        f_minus = half_quad_rows(y_minus, A, is_diag) + XI[:, k, 1] * np.sqrt(
            np.einsum("ij,ij->i", y_minus, y_minus))
        coef = d / (2.0 * tau) * (f_plus - f_minus)
        X -= gammas[k] * coef[:, None] * e
        gnorm_out[:, k] = np.abs(coef) * np.sqrt(np.einsum("ij,ij->i", e, e))
        diff = X - x_star
        dist_out[:, k] = np.einsum("ij,ij->i", diff, diff)
        if path_out is not None:
            path_out[:, k, :] = X
        norms = np.sqrt(np.einsum("ij,ij->i", X, X))
        if not np.all(np.isfinite(norms)) or np.any(norms > DIVERGENCE_LIMIT):
            return k
    return steps
