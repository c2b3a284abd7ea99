"""Vectorized rasterization of sums of Gaussian bumps on a sample grid.

Both pattern families (single peaks for the spectrogram transform,
harmonic combs for instruments) reduce to scattered Gaussians; the
helpers here evaluate them and their adjoints over truncated local
windows so that per-frame costs stay proportional to the number of
bumps, not the grid length.
"""

import numpy as np

# Gaussians are cut where they fall below exp(-32) ~ 1e-14.
CUTOFF_SIGMAS = 8.0


def _windows(centers, stds, length):
    halfwidth = int(np.ceil(CUTOFF_SIGMAS * np.max(stds))) + 1
    offsets = np.arange(-halfwidth, halfwidth + 1)
    idx = np.round(centers).astype(np.int64)[:, None] + offsets[None, :]
    valid = (idx >= 0) & (idx < length)
    d = idx - centers[:, None]
    g = np.exp(-(d * d) / (2.0 * stds[:, None] ** 2))
    return idx, valid, d, g


def gaussian_accumulate(out, centers, amps, stds):
    """Add ``sum_k amps[k] * exp(-(s - centers[k])^2 / (2 stds[k]^2))``
    to ``out`` in place; contributions outside the grid are dropped."""
    if len(centers) == 0:
        return out
    centers = np.asarray(centers, dtype=np.float64)
    amps = np.asarray(amps, dtype=np.float64)
    stds = np.asarray(stds, dtype=np.float64)
    idx, valid, _, g = _windows(centers, stds, len(out))
    vals = amps[:, None] * g
    flat_idx = np.where(valid, idx, len(out)).ravel()
    acc = np.bincount(flat_idx, weights=vals.ravel(), minlength=len(out) + 1)
    out += acc[:len(out)]
    return out


def gaussian_backprop(weights, centers, stds):
    """Inner products of a weight vector with each bump and its partials.

    Returns ``(ip_g, ip_dc, ip_ds)`` where for bump k (unit amplitude)
    ``ip_g[k] = <w, g_k>``, ``ip_dc[k] = <w, dg_k/dcenter>`` and
    ``ip_ds[k] = <w, dg_k/dstd>``.
    """
    centers = np.asarray(centers, dtype=np.float64)
    stds = np.asarray(stds, dtype=np.float64)
    if len(centers) == 0:
        z = np.zeros(0)
        return z, z.copy(), z.copy()
    idx, valid, d, g = _windows(centers, stds, len(weights))
    w = np.where(valid, weights[np.clip(idx, 0, len(weights) - 1)], 0.0)
    wg = w * g
    inv_var = 1.0 / stds**2
    ip_g = wg.sum(axis=1)
    ip_dc = (wg * d).sum(axis=1) * inv_var
    ip_ds = (wg * d * d).sum(axis=1) * inv_var / stds
    return ip_g, ip_dc, ip_ds


def gaussian_forward(length, centers, amps, stds):
    """Like :func:`gaussian_accumulate` on a fresh grid, but also
    returns the evaluated windows for reuse by the adjoint pass."""
    out = np.zeros(length)
    centers = np.asarray(centers, dtype=np.float64)
    if len(centers) == 0:
        return out, None
    amps = np.asarray(amps, dtype=np.float64)
    stds = np.asarray(stds, dtype=np.float64)
    idx, valid, d, g = _windows(centers, stds, length)
    vals = amps[:, None] * g
    flat_idx = np.where(valid, idx, length).ravel()
    out += np.bincount(flat_idx, weights=vals.ravel(),
                       minlength=length + 1)[:length]
    return out, (idx, valid, d, g, stds)


def gaussian_adjoint(weights, cache):
    """Same inner products as :func:`gaussian_backprop`, reusing the
    windows evaluated by :func:`gaussian_forward`."""
    if cache is None:
        z = np.zeros(0)
        return z, z.copy(), z.copy()
    idx, valid, d, g, stds = cache
    w = np.where(valid, weights[np.clip(idx, 0, len(weights) - 1)], 0.0)
    wg = w * g
    inv_var = 1.0 / stds**2
    ip_g = wg.sum(axis=1)
    ip_dc = (wg * d).sum(axis=1) * inv_var
    ip_ds = (wg * d * d).sum(axis=1) * inv_var / stds
    return ip_g, ip_dc, ip_ds


def sample_gaussian(centers, amps, stds, length):
    """Convenience wrapper returning a fresh grid of the summed bumps."""
    return gaussian_accumulate(np.zeros(length), centers, amps, stds)
