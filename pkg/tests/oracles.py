"""Independent reference implementations used by the tests."""
import math

import numpy as np

from alime.neural import Layer, MlpModel, init_model, loss_and_grad


def ridge_normal_equations(X, y, w, alpha):
    """Dense weighted normal equations on the intercept-augmented design.

    Solves (Z^T W Z + P) theta = Z^T W y with Z = [1 | X], W = diag(w) and
    P = diag(0, alpha, ..., alpha), so the intercept is unpenalized.
    """
    X = np.asarray(X, dtype=float)
    Z = np.hstack([np.ones((X.shape[0], 1)), X])
    W = np.diag(np.asarray(w, dtype=float))
    P = alpha * np.eye(Z.shape[1])
    P[0, 0] = 0.0
    theta = np.linalg.solve(Z.T @ W @ Z + P, Z.T @ W @ np.asarray(y, dtype=float))
    return theta[1:], theta[0]


def n_closest_by_full_sort(embeddings, target, n):
    """Pure-python full sort on (distance, index)."""
    target = [float(t) for t in target]
    scored = sorted(
        ((math.dist([float(v) for v in row], target), i) for i, row in enumerate(embeddings)),
    )
    return [i for _, i in scored[:n]], [d for d, _ in scored[:n]]


def numeric_grad(model, X, T, loss, h=1e-5):
    """Central finite differences over every weight and bias."""
    out = []
    for i, layer in enumerate(model.layers):
        grads = []
        for name in ("weight", "bias"):
            base = getattr(layer, name)
            g = np.zeros_like(base)
            for idx in np.ndindex(base.shape):
                vals = []
                for step in (h, -h):
                    arr = base.copy()
                    arr[idx] += step
                    layers = list(model.layers)
                    kw = {"weight": layer.weight, "bias": layer.bias, name: arr}
                    layers[i] = Layer(kw["weight"], kw["bias"], layer.activation)
                    vals.append(loss_and_grad(MlpModel(tuple(layers), model.input_dim), X, T, loss)[0])
                g[idx] = (vals[0] - vals[1]) / (2 * h)
            grads.append(g)
        out.append(tuple(grads))
    return out


def random_case(rng):
    depth = int(rng.integers(1, 5))
    dims = [int(w) for w in rng.integers(1, 9, size=depth + 1)]
    hidden = list(rng.choice(["relu", "sigmoid", "identity"], size=depth - 1))
    loss = str(rng.choice(["mse", "bce"]))
    if loss == "bce":
        dims[-1] = max(dims[-1], 2)
        last = str(rng.choice(["softmax", "sigmoid"]))
    else:
        last = str(rng.choice(["identity", "sigmoid", "softmax", "relu"]))
    model = init_model(dims, hidden + [last], seed=int(rng.integers(1 << 30)))
    # random biases so relu kinks are not all at zero
    model = MlpModel(
        tuple(Layer(l.weight, rng.normal(scale=0.3, size=l.bias.shape), l.activation) for l in model.layers),
        model.input_dim,
    )
    n = int(rng.integers(1, 6))
    X = rng.normal(size=(n, dims[0]))
    if loss == "bce" and last == "softmax":
        T = np.eye(dims[-1])[rng.integers(dims[-1], size=n)]
    elif loss == "bce":
        T = rng.integers(0, 2, size=(n, dims[-1])).astype(float)
    else:
        T = rng.normal(size=(n, dims[-1]))
    return model, X, T, loss


def max_relative_error(analytic, numeric):
    worst = 0.0
    for (aw, ab), (nw, nb) in zip(analytic, numeric):
        for a, b in ((aw, nw), (ab, nb)):
            err = np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-6)
            worst = max(worst, float(err.max()))
    return worst
