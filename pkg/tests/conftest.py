"""Shared helpers for the test suite."""

import itertools

import numpy as np

from ris_obsmat.channel import ChannelKernel, herm


def crandn(shape, rng):
    """i.i.d. CN(0,1) array."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_psd(k, rng):
    a = crandn((k, k), rng)
    return herm(a @ a.conj().T / k)


def random_kernel(m, n, rng):
    return ChannelKernel(random_psd(m * n, rng), m, n)


def exhaustive_pilot_grid(kernel, sigma2, n_phases):
    """Best MI increment over a per-coordinate phase grid of (w, theta).

    The first combiner phase is pinned to zero: the quadratic form is
    invariant to a global phase of x.
    """
    m, n = kernel.m, kernel.n
    angles = 2 * np.pi * np.arange(n_phases) / n_phases
    best = 0.0
    for pw in itertools.product(angles, repeat=m - 1):
        w = np.exp(1j * np.array((0.0,) + pw)) / np.sqrt(m)
        for pt in itertools.product(angles, repeat=n):
            theta = np.exp(1j * np.array(pt))
            x = np.kron(w, np.conj(theta))
            quad = max(float(np.real(np.vdot(x, kernel.sigma_h @ x))), 0.0)
            best = max(best, np.log2(1.0 + quad / sigma2))
    return best
