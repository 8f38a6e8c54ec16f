"""Brute-force Monte Carlo check of the squared-derivative importance
targets for the five-input benchmark polynomial

    f(x) = x1 + (3 x2^2 - 1)/2 + (4 x3^3 - 3 x3)/2 + 0.8 x2 x4

with independent Unif(-1, 1) inputs. The partial derivatives below are
written out by hand, independently of the library, so this script is a
standalone oracle for the mean-squared-derivative values: it draws n
samples, averages each squared partial, and prints the estimates with
Monte Carlo standard errors next to the exact moments

    E[1^2]                 = 1
    E[(3 x2 + 0.8 x4)^2]   = 3 + 0.64/3   = 3.213333...
    E[(6 x3^2 - 1.5)^2]    = 36/5 - 6 + 2.25 = 3.45
    E[(0.8 x2)^2]          = 0.64/3       = 0.213333...
    E[0^2]                 = 0

Run directly:  python dgsm_bruteforce.py [n] [seed]
Output is one JSON object on stdout.
"""

import json
import sys

import numpy as np

EXACT = (1.0, 3.0 + 0.64 / 3.0, 36.0 / 5.0 - 6.0 + 2.25, 0.64 / 3.0, 0.0)


def squared_partials(x: np.ndarray) -> np.ndarray:
    """Hand-differentiated partials of f, squared, one column per input."""
    n = len(x)
    g = np.empty((n, 5))
    g[:, 0] = 1.0
    g[:, 1] = 3.0 * x[:, 1] + 0.8 * x[:, 3]
    g[:, 2] = 6.0 * x[:, 2] ** 2 - 1.5
    g[:, 3] = 0.8 * x[:, 1]
    g[:, 4] = 0.0
    return g * g


def run(n: int = 1_000_000, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    sq = squared_partials(rng.uniform(-1.0, 1.0, size=(n, 5)))
    est = sq.mean(axis=0)
    se = sq.std(axis=0) / np.sqrt(n)
    return {
        "n": n,
        "seed": seed,
        "estimates": est.tolist(),
        "se": se.tolist(),
        "exact": list(EXACT),
    }


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 1_000_000
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    print(json.dumps(run(n, seed)))
