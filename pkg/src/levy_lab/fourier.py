"""Trapezoid inverse Fourier transforms mapped onto fast transforms.

The spectral pipeline needs ``(1/2pi) * integral of exp(-i*u*x) g(u) du``
for a band-limited g known on an equispaced u-grid, evaluated on an
equispaced x-grid whose spacing is unrelated to the u-grid. The trapezoid
sum is a DFT-like kernel ``exp(-i*j*du*dx*k)`` with an arbitrary real
step, which the chirp z-transform evaluates exactly in O((N+M) log(N+M))
without snapping either grid.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import czt


def trapezoid_weights(n: int) -> np.ndarray:
    """Composite trapezoid weights (without the grid spacing factor)."""
    w = np.ones(n)
    if n > 1:
        w[0] = w[-1] = 0.5
    return w


def band_limited_inverse_ft(
    u0: float,
    du: float,
    g: np.ndarray,
    x0: float,
    dx: float,
    n_out: int,
) -> np.ndarray:
    """Evaluate the trapezoid rule for the inverse transform on an x-grid.

    Parameters
    ----------
    u0, du : float
        First node and spacing of the (equispaced) frequency grid.
    g : ndarray
        Complex samples of the integrand on that grid.
    x0, dx : float
        First node and spacing of the output grid ``x_k = x0 + k*dx``.
    n_out : int
        Number of output points.

    Returns
    -------
    ndarray
        Complex values of ``(du/2pi) * sum_j w_j g_j exp(-i u_j x_k)``
        with trapezoid weights ``w``.
    """
    g = np.asarray(g, dtype=complex)
    n = g.size
    j = np.arange(n)
    # e^{-i u_j x_k} = e^{-i u0 x_k} * e^{-i j du x0} * e^{-i j du dx k}
    a = trapezoid_weights(n) * g * np.exp(-1j * j * du * x0)
    out = czt(a, m=n_out, w=np.exp(-1j * du * dx), a=1.0 + 0.0j)
    x = x0 + dx * np.arange(n_out)
    return du / (2.0 * np.pi) * np.exp(-1j * u0 * x) * out


def band_limited_inverse_ft_ref(
    u0: float, du: float, g: np.ndarray, x0: float, dx: float, n_out: int
) -> np.ndarray:
    """Direct-summation reference for :func:`band_limited_inverse_ft`."""
    g = np.asarray(g, dtype=complex)
    u = u0 + du * np.arange(g.size)
    x = x0 + dx * np.arange(n_out)
    kernel = np.exp(-1j * np.outer(x, u))
    return du / (2.0 * np.pi) * kernel @ (trapezoid_weights(g.size) * g)
