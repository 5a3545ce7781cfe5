#!/usr/bin/env python3
"""Regenerates fixtures/constants.json.

Every value here is computed by brute force with numpy, independently of the
C++ library, and then frozen. The C++ tests compare their own runtime
computation against these numbers.
"""
import json
import math
import sys

import numpy as np


def l1_shell_count(n, l):
    """Number of integer vectors in Z^n with |k|_1 = l (exact)."""
    if l == 0:
        return 1
    return sum(2 ** j * math.comb(n, j) * math.comb(l - 1, j - 1) for j in range(1, n + 1))


def lemma1_constant(n, tau):
    # sup over sigma of sigma^(tau+n) * sum_{k != 0} |k|^tau exp(-|k| sigma)
    best = 0.0
    for sigma in np.geomspace(1e-3, 30.0, 4000):
        lmax = int(60.0 / sigma) + 10
        l = np.arange(1, lmax + 1, dtype=float)
        counts = np.array([l1_shell_count(n, int(x)) for x in l]) if lmax < 2000 else None
        if counts is None:
            # closed forms for the shell counts used here
            if n == 2:
                counts = 4 * l
            elif n == 3:
                counts = 4 * l * l + 2
            else:
                counts = np.array([l1_shell_count(n, int(x)) for x in l], dtype=float)
        s = np.sum(counts * l ** tau * np.exp(-l * sigma))
        best = max(best, sigma ** (tau + n) * s)
    # sigma -> 0 limit: 2^n/(n-1)! * Gamma(tau+n)
    limit = 2 ** n / math.factorial(n - 1) * math.gamma(tau + n)
    return max(best, limit)


def truncation_constant(n):
    # sup over K >= 1, K sigma >= 1 of sum_{l>K} 4^n l^(n-1) e^{-l sigma} / (K^n e^{-K sigma})
    best = 0.0
    for K in list(range(1, 60)) + list(range(60, 2000, 37)):
        for x in np.linspace(1.0, 40.0, 391):
            sigma = x / K
            lmax = K + int(80.0 / sigma) + 10
            l = np.arange(K + 1, lmax + 1, dtype=float)
            tail = np.sum(4.0 ** n * l ** (n - 1) * np.exp(-(l - K) * sigma))
            best = max(best, tail / K ** n)
    return best


def alpha_max(omega, tau, kmax):
    """min over 0 < |k|_1 <= kmax of |<k,omega>| |k|^tau, brute force."""
    n = len(omega)
    omega = np.asarray(omega, dtype=float)
    best = math.inf
    arg = None
    if n == 2:
        k1, k2 = np.meshgrid(np.arange(-kmax, kmax + 1), np.arange(-kmax, kmax + 1), indexing="ij")
        k1 = k1.ravel(); k2 = k2.ravel()
        norm = np.abs(k1) + np.abs(k2)
        mask = (norm > 0) & (norm <= kmax)
        val = np.abs(k1 * omega[0] + k2 * omega[1]) * norm.astype(float) ** tau
        val = np.where(mask, val, np.inf)
        i = int(np.argmin(val))
        return float(val[i]), [int(k1[i]), int(k2[i])]
    for a in range(-kmax, kmax + 1):
        rest = kmax - abs(a)
        k2, k3 = np.meshgrid(np.arange(-rest, rest + 1), np.arange(-rest, rest + 1), indexing="ij")
        k2 = k2.ravel(); k3 = k3.ravel()
        norm = abs(a) + np.abs(k2) + np.abs(k3)
        mask = (norm > 0) & (norm <= kmax)
        val = np.abs(a * omega[0] + k2 * omega[1] + k3 * omega[2]) * norm.astype(float) ** tau
        val = np.where(mask, val, np.inf)
        i = int(np.argmin(val))
        if val[i] < best:
            best = float(val[i]); arg = [a, int(k2[i]), int(k3[i])]
    return best, arg


def main():
    out = {"generator": "tools/gen_fixtures.py"}
    out["lemma1"] = [
        {"n": n, "tau": tau, "c": lemma1_constant(n, tau)}
        for (n, tau) in [(2, 1.2), (2, 1.5), (2, 2.0), (3, 2.2), (3, 2.5)]
    ]
    out["truncation"] = [{"n": n, "C": truncation_constant(n)} for n in (1, 2, 3)]
    golden = [1.0, (math.sqrt(5.0) - 1.0) / 2.0]
    cubic = [1.0, 2.0 ** (1.0 / 3.0), 2.0 ** (2.0 / 3.0)]
    cat = []
    for omega, tau in ((golden, 1.2), (cubic, 2.2)):
        a, k = alpha_max(omega, tau, 500)
        cat.append({"omega": omega, "tau": tau, "k_max": 500, "alpha_max": a, "argmin_k": k})
    out["catalog"] = cat
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
