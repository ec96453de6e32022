"""Independent reference implementations used to check the fast code paths."""
import math


def gini_from_counts(counts):
    n = sum(counts)
    return 1.0 - sum((c / n) ** 2 for c in counts)


def brute_force_split(X, y, w=None, n_classes=None, tol=1e-9):
    """Enumerate every (feature, midpoint) pair; ties go to lowest feature, then lowest threshold."""
    n, p = len(X), len(X[0])
    w = [1.0] * n if w is None else list(w)
    K = n_classes or (max(y) + 1)
    keep = [i for i in range(n) if w[i] > 0]

    def weighted_gini(rows):
        counts = [0.0] * K
        for i in rows:
            counts[y[i]] += w[i]
        return gini_from_counts(counts), sum(counts)

    parent, total = weighted_gini(keep)
    scored = []
    for f in range(p):
        values = sorted({X[i][f] for i in keep})
        for a, b in zip(values, values[1:]):
            t = (a + b) / 2
            left = [i for i in keep if X[i][f] <= t]
            right = [i for i in keep if X[i][f] > t]
            gl, wl = weighted_gini(left)
            gr, wr = weighted_gini(right)
            scored.append(((wl * gl + wr * gr) / total, f, t))
    if not scored:
        return None
    best = min(s[0] for s in scored)
    if best >= parent - tol:
        return None
    for imp, f, t in scored:  # already in (feature, threshold) order
        if imp <= best + tol:
            return f, t


def random_split_instances(rng, count, max_n=12, p=2, K=3, levels=6):
    """Small integer-valued instances, so exact impurity ties are common."""
    for _ in range(count):
        n = int(rng.integers(2, max_n + 1))
        X = rng.integers(0, levels, size=(n, p)).astype(float)
        y = rng.integers(0, K, size=n)
        yield X, y


def samme_weighted_loss(model, X, y):
    """Total unnormalized sample weight after each round: the multiclass exponential loss.

    SAMME reweights misclassified rows by exp(alpha); written symmetrically a
    row gains alpha / K when missed and loses alpha (K - 1) / K when hit.
    """
    K = model.n_classes
    exponent = [0.0] * len(y)
    losses = []
    for tree, alpha in zip(model.trees, model.alphas):
        pred = tree.predict(X)
        for i in range(len(y)):
            exponent[i] += alpha / K if pred[i] != y[i] else -alpha * (K - 1) / K
        losses.append(sum(math.exp(e) for e in exponent))
    return losses


def central_difference(f, theta, h=1e-5):
    grad = []
    for j in range(len(theta)):
        up, down = list(theta), list(theta)
        up[j] += h
        down[j] -= h
        grad.append((f(up) - f(down)) / (2 * h))
    return grad


def relative_error(a, b):
    """||a - b|| / max(||a||, ||b||), zero when both vanish."""
    diff = math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
    scale = max(math.sqrt(sum(x * x for x in a)), math.sqrt(sum(y * y for y in b)))
    return 0.0 if scale == 0 else diff / scale


def gradcheck_instance(rng):
    """Random (theta, X, y01, l2) for a gradient check."""
    n, p = int(rng.integers(5, 40)), int(rng.integers(1, 16))
    X = rng.normal(size=(n, p)) * rng.uniform(0.5, 3)
    y01 = (rng.random(n) < 0.5).astype(float)
    theta = rng.normal(size=p + 1)
    l2 = float(rng.choice([0.0, 1e-3, 0.5]))
    return theta, X, y01, l2
