"""Dense float64 tensor primitives and the finite-difference gradient oracle.

Everything in this package runs on plain numpy arrays in row-major float64
form; these helpers add the shape checking, the masked column softmax, and
the activation pair used by the layers. ``finite_difference_grad`` is the
independent oracle every analytic backward pass is verified against.
"""

import numpy as np

from .exceptions import DimensionError, MaskError, OracleError

# Largest double strictly below 1.0. float64 tanh rounds to exactly 1.0 for
# inputs beyond ~19, which would break the open upper bound of tanh(relu(x)).
_ONE_BELOW = np.nextafter(1.0, 0.0)


def as_tensor(x) -> np.ndarray:
    """Coerce to a float64 ndarray (no copy when already float64)."""
    return np.asarray(x, dtype=np.float64)


def matmul(a, b) -> np.ndarray:
    """Matrix product of two 2-D tensors with explicit shape validation."""
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(
            f"matmul expects 2-D operands, got shapes {a.shape} and {b.shape}"
        )
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul inner dimensions disagree: {a.shape} x {b.shape}"
        )
    return a @ b


def softmax_columns(x, mask=None) -> np.ndarray:
    """Softmax each column of ``x`` independently over its rows.

    ``x`` has shape (N, M) or any batched form (..., N, M); ``mask`` if given
    is boolean with shape (..., N). Masked-out rows receive exactly 0 and are
    excluded from the normalizer, so each column sums to 1 over the unmasked
    rows. Stabilized by per-column max subtraction.
    """
    x = as_tensor(x)
    if x.ndim < 2:
        raise DimensionError(
            f"softmax_columns expects at least a 2-D input, got shape {x.shape}"
        )
    if mask is None:
        keep = np.ones(x.shape[:-1], dtype=bool)
    else:
        keep = np.asarray(mask, dtype=bool)
        if keep.shape != x.shape[:-1]:
            raise DimensionError(
                f"mask shape {keep.shape} does not match rows of input {x.shape}"
            )
        if not keep.any(axis=-1).all():
            raise MaskError("softmax mask excludes every row")
    keep3 = keep[..., None]
    col_max = np.max(np.where(keep3, x, -np.inf), axis=-2, keepdims=True)
    e = np.exp(np.where(keep3, x - col_max, -np.inf))
    return e / np.sum(e, axis=-2, keepdims=True)


def act_relu(x) -> np.ndarray:
    """Elementwise max(x, 0)."""
    return np.maximum(as_tensor(x), 0.0)


def act_relu_grad(x) -> np.ndarray:
    """Derivative of relu; the subgradient at 0 is taken as 0."""
    return (as_tensor(x) > 0.0).astype(np.float64)


def act_tanh_relu(x) -> np.ndarray:
    """Elementwise tanh(max(x, 0)); output lies in [0, 1).

    Saturated values are clamped to the largest double below 1 so the open
    upper bound holds exactly in floating point.
    """
    return np.minimum(np.tanh(np.maximum(as_tensor(x), 0.0)), _ONE_BELOW)


def act_tanh_relu_grad(x) -> np.ndarray:
    """Derivative of tanh(relu(x)): 1 - tanh(x)^2 for x > 0, else 0."""
    x = as_tensor(x)
    t = np.tanh(x)
    return np.where(x > 0.0, 1.0 - t * t, 0.0)


def finite_difference_grad(f, x, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function at ``x``.

    Perturbs one element at a time: (f(x + eps*e_i) - f(x - eps*e_i)) / (2 eps).
    ``f`` must be deterministic and finite near ``x``.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.array(x, dtype=np.float64)
    grad = np.empty_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = float(f(x))
        flat[i] = orig - eps
        lo = float(f(x))
        flat[i] = orig
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise OracleError(
                f"non-finite evaluation while perturbing element {i}: "
                f"f(+eps)={hi}, f(-eps)={lo}"
            )
        gflat[i] = (hi - lo) / (2.0 * eps)
    return grad
