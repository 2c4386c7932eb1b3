"""Regenerate the bundled LIBSVM mini datasets in data/."""

import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "data")


def write(path, X, y, label_fmt):
    with open(path, "w") as f:
        for row, label in zip(X, y):
            parts = [label_fmt(label)]
            for j, v in enumerate(row):
                if v != 0.0:
                    parts.append(f"{j + 1}:{v:.6g}")
            f.write(" ".join(parts) + "\n")


def sparse_features(rng, n, d, density, scales):
    X = rng.normal(size=(n, d)) * scales
    X[rng.random((n, d)) > density] = 0.0
    return X


def main():
    rng = np.random.default_rng(7)

    d = 12
    scales = np.array([1, 5, 0.1, 40, 2, 1, 300, 0.5, 8, 1, 3, 20], dtype=float)
    X = sparse_features(rng, 300, d, 0.6, scales)
    w = rng.normal(size=d) / scales
    margin = X @ w + 0.3 * rng.normal(size=300)
    y = np.where(margin > 0, 1, 0)  # {0,1} labels exercise normalization
    write(os.path.join(OUT, "mini_classification.svm"), X, y, lambda v: str(int(v)))

    d = 8
    scales = np.array([2, 0.2, 50, 1, 10, 4, 1, 0.05], dtype=float)
    X = sparse_features(rng, 200, d, 0.7, scales)
    w = rng.normal(size=d) / scales
    y = X @ w + 1.5 + 0.2 * rng.standard_t(3, size=200)
    write(os.path.join(OUT, "mini_regression.svm"), X, y, lambda v: f"{v:.6g}")


if __name__ == "__main__":
    main()
