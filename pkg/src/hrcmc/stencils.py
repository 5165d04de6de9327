"""Finite-difference and Fourier derivatives on tensor grids."""
import numpy as np


def d_fd(u, h, order=1, axis=0):
    """4th-order differences along a non-periodic axis.

    Centered 5-point stencils in the interior; the two nodes at each end use
    one-sided 4th-order stencils so the accuracy is uniform up to the edge.
    """
    u = np.moveaxis(np.asarray(u), axis, 0)
    n = u.shape[0]
    if n < 6:
        raise ValueError("need at least 6 nodes for the 4th-order stencils")
    out = np.empty_like(u)
    if order == 1:
        out[2:-2] = (u[:-4] - 8 * u[1:-3] + 8 * u[3:-1] - u[4:]) / (12 * h)
        out[0] = (-25 * u[0] + 48 * u[1] - 36 * u[2] + 16 * u[3] - 3 * u[4]) / (12 * h)
        out[1] = (-3 * u[0] - 10 * u[1] + 18 * u[2] - 6 * u[3] + u[4]) / (12 * h)
        out[-1] = (25 * u[-1] - 48 * u[-2] + 36 * u[-3] - 16 * u[-4] + 3 * u[-5]) / (12 * h)
        out[-2] = (3 * u[-1] + 10 * u[-2] - 18 * u[-3] + 6 * u[-4] - u[-5]) / (12 * h)
    elif order == 2:
        out[2:-2] = (-u[:-4] + 16 * u[1:-3] - 30 * u[2:-2] + 16 * u[3:-1] - u[4:]) / (12 * h**2)
        for i, sgn in ((0, 1), (-1, -1)):
            v = [u[i + sgn * k] for k in range(6)]
            out[i] = (45 * v[0] - 154 * v[1] + 214 * v[2] - 156 * v[3] + 61 * v[4] - 10 * v[5]) / (12 * h**2)
            out[i + sgn] = (10 * v[0] - 15 * v[1] - 4 * v[2] + 14 * v[3] - 6 * v[4] + v[5]) / (12 * h**2)
    else:
        raise ValueError("order must be 1 or 2")
    return np.moveaxis(out, 0, axis)


def d_fd_periodic(u, h, order=1, axis=0):
    """4th-order centered differences on a periodic axis."""
    r = lambda k: np.roll(u, -k, axis=axis)
    if order == 1:
        return (r(-2) - 8 * r(-1) + 8 * r(1) - r(2)) / (12 * h)
    if order == 2:
        return (-r(-2) + 16 * r(-1) - 30 * u + 16 * r(1) - r(2)) / (12 * h**2)
    raise ValueError("order must be 1 or 2")


def d_spectral(u, order=1, axis=-1, period=2 * np.pi):
    """Fourier derivative along a periodic axis sampled at N equispaced nodes."""
    u = np.asarray(u)
    n = u.shape[axis]
    k = np.fft.fftfreq(n, d=period / (2 * np.pi * n))
    if order % 2 == 1 and n % 2 == 0:
        k[n // 2] = 0.0  # Nyquist mode has no odd derivative
    shape = [1] * u.ndim
    shape[axis] = n
    mult = ((1j * k) ** order).reshape(shape)
    out = np.fft.ifft(np.fft.fft(u, axis=axis) * mult, axis=axis)
    return out.real if np.isrealobj(u) else out


def derivatives_2d(u, hs, periodic_theta=True, ht=None):
    """(u_s, u_t, u_ss, u_st, u_tt) on an (s, theta) grid, s along axis 0."""
    if periodic_theta:
        dt = lambda f, k: d_spectral(f, k, axis=1)
    else:
        dt = lambda f, k: d_fd(f, ht, k, axis=1)
    us = d_fd(u, hs, 1, axis=0)
    return us, dt(u, 1), d_fd(u, hs, 2, axis=0), dt(us, 1), dt(u, 2)
