"""Central-difference verification of analytic gradients.

The caller runs one forward/backward pass to populate ``Param.grad``,
then hands the same loss function here; a sample of coordinates in each
tensor is perturbed by +-eps and the numeric slope is compared against
the stored analytic gradient. Meaningful only in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class CoordinateCheck:
    param_name: str
    index: tuple
    analytic: float
    numeric: float
    rel_err: float


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


def finite_difference_check(
    loss_fn,
    params,
    eps: float = 1e-5,
    coords_per_param: int = 20,
    rng: np.random.Generator | None = None,
) -> list[CoordinateCheck]:
    """Compare ``param.grad`` against central differences of ``loss_fn``.

    ``loss_fn`` must be a deterministic, side-effect-free function of
    the current parameter values (repeatable dropout masks, fixed
    batch). Checks up to ``coords_per_param`` randomly chosen
    coordinates of every tensor.
    """
    rng = rng or np.random.default_rng(0)
    results = []
    for p in params:
        flat_value = p.value.reshape(-1)
        flat_grad = p.grad.reshape(-1)
        n = flat_value.size
        count = min(coords_per_param, n)
        coords = rng.choice(n, size=count, replace=False) if n > count else np.arange(n)
        for c in coords:
            original = flat_value[c]
            flat_value[c] = original + eps
            loss_plus = float(loss_fn())
            flat_value[c] = original - eps
            loss_minus = float(loss_fn())
            flat_value[c] = original
            numeric = (loss_plus - loss_minus) / (2.0 * eps)
            analytic = float(flat_grad[c])
            results.append(
                CoordinateCheck(
                    param_name=p.name,
                    index=np.unravel_index(int(c), p.value.shape),
                    analytic=analytic,
                    numeric=numeric,
                    rel_err=relative_error(analytic, numeric),
                )
            )
    return results


def max_rel_error(results: list[CoordinateCheck]) -> float:
    return max((r.rel_err for r in results), default=0.0)
