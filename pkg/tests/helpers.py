import re

import numpy as np


def masked_history(path):
    """History text with the start-time token and runtime column blanked out."""
    lines = path.read_text().split("\n")
    lines[0] = re.sub(r"time: \d{8}-\d{6}", "time: <T>", lines[0])
    out = lines[:2]
    for line in lines[2:]:
        if line:
            cols = line.split("\t")
            cols[-1] = "<R>"
            line = "\t".join(cols)
        out.append(line)
    return "\n".join(out)


def sin_pool(n=60, seed=0):
    """1-D pool on [-3, 3] with labels sin(3x) + 0.1 x^2."""
    x = np.random.default_rng(seed).uniform(-3, 3, size=n)
    return x[:, None], np.sin(3 * x) + 0.1 * x**2


def plane_pool(n=40, d=3, seed=0):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, d))
    y = X @ r.normal(size=d) + np.sin(X[:, 0])
    return X, y
