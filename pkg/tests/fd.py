"""Central finite differences for gradient checks."""

import numpy as np


def numeric_grad(f, x: np.ndarray, h: float = 1e-6, index=None) -> np.ndarray:
    """d f / d x by central differences; ``index`` restricts to selected flat positions."""
    flat = x.reshape(-1)
    positions = range(flat.size) if index is None else index
    out = np.zeros(flat.size)
    for i in positions:
        old = flat[i]
        flat[i] = old + h
        up = f()
        flat[i] = old - h
        down = f()
        flat[i] = old
        out[i] = (up - down) / (2 * h)
    return out.reshape(x.shape)


def rel_err(a, b, floor: float = 1e-30) -> float:
    """||a - b|| / max(||a||, ||b||, floor)."""
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / scale)


def randomize_params(model, seed: int = 0, scale: float = 1.0) -> None:
    """Move a freshly initialised model away from the near-symmetric init point.

    At init the attention is almost uniform and query/key gradients are ~1e-9,
    below what central differences can resolve, so audits run at a random
    point instead: matrices ~ N(0, scale^2 / fan_in) (embedding rows N(0, 0.25)),
    biases N(0, 0.01), gains 1 + N(0, 0.01). Fan-in scaling keeps outputs and
    loss O(1), which keeps finite-difference round-off small.
    """
    rng = np.random.default_rng(seed)
    for name, p in model.params.items():
        if name.endswith("_gain"):
            p.data[...] = 1.0 + rng.normal(0, 0.1, size=p.shape)
        elif name == "embed":
            p.data[...] = rng.normal(0, 0.5, size=p.shape)
        elif p.ndim > 1:
            p.data[...] = rng.normal(0, scale / np.sqrt(p.shape[0]), size=p.shape)
        else:
            p.data[...] = rng.normal(0, 0.1, size=p.shape)


def audit_model_grads(model, ids, targets, per_group: int = 3, h: float = 1e-3, seed: int = 0,
                      floor: float = 1e-6) -> dict[str, float]:
    """Norm-wise relative error between autodiff and finite differences for each parameter tensor.

    A few entries are sampled per tensor; embedding rows are sampled only among
    ids present in the batch (the others have exactly zero gradient). ``floor``
    bounds the denominator so a gradient that is identically zero (key biases:
    softmax ignores a per-row shift) is judged against finite-difference noise.
    """
    from snpformer import tensor as T

    rng = np.random.default_rng(seed)
    for p in model.parameters():
        p.grad = None
    T.backward(model.loss(ids, targets))

    def f():
        with T.no_grad():
            return model.loss(ids, targets).item()

    errors = {}
    for name, p in model.params.items():
        if name == "embed":
            rows = rng.choice(np.unique(ids), size=min(per_group, np.unique(ids).size), replace=False)
            cols = rng.integers(0, p.shape[1], size=rows.size)
            index = np.ravel_multi_index((rows, cols), p.shape)
        else:
            index = rng.choice(p.size, size=min(per_group, p.size), replace=False)
        num = numeric_grad(f, p.data, h=h, index=index).reshape(-1)[index]
        errors[name] = rel_err(p.grad.reshape(-1)[index], num, floor)
    return errors
