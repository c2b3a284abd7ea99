"""Sparsity-based log-frequency spectrogram.

Each frame of the linear-frequency STFT magnitude spectrogram is
decomposed into Gaussian peaks by the pursuit algorithm, and the peaks
are re-rendered on a logarithmic frequency axis alpha(f) = alpha0 *
log2(f / f0).  With the default constants (f0 = 5.12 bins, alpha0 =
102.4, 1024 bins) the axis spans 10 octaves; at 48 kHz that is
20 Hz .. 20.48 kHz.  Because a pitch change moves every partial by the
same alpha offset, instrument sounds become shift-invariant patterns.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FormatError
from .kernels import (gaussian_accumulate, gaussian_adjoint,
                      gaussian_backprop, gaussian_forward)
from .optim import BoxSpec
from .pursuit import PursuitConfig, pursue
from .stft import LogAxis, SpectrogramGrid, StftConfig

#: Conversion from the width parameter sigma (in cycles/sample, the
#: Fourier std of the analysis window) to frequency bins: one bin is
#: 1/window_length cycles/sample.
def _bin_scale(stft_cfg):
    return stft_cfg.window_length


@dataclass
class LogAxisConfig:
    f0: float = 5.12        # reference frequency in linear-bin units
    alpha0: float = 102.4   # bins per octave
    n_bins: int = 1024

    def alpha(self, f_bins):
        return self.alpha0 * np.log2(f_bins / self.f0)

    def frequency(self, alpha):
        return self.f0 * 2.0 ** (alpha / self.alpha0)


class GaussianPeakFamily:
    """Single-pattern family of Gaussian peaks with free width.

    theta = (sigma,) in cycles/sample; the peak's standard deviation on
    the bin axis is sigma * window_length.  theta_nil matches the
    analysis window's own Fourier width, and the box allows widths
    between a quarter of and four times that value.
    """

    n_patterns = 1
    n_params = 1

    def __init__(self, sigma_nil, bin_scale, width_range=(0.25, 4.0)):
        self.sigma_nil = float(sigma_nil)
        self.bin_scale = float(bin_scale)
        self.theta_nil = np.array([self.sigma_nil])
        self.theta_box = BoxSpec(
            np.array([width_range[0] * self.sigma_nil]),
            np.array([width_range[1] * self.sigma_nil]),
        )

    def _stds(self, thetas):
        return thetas[:, 0] * self.bin_scale

    def evaluate(self, eta, theta, s):
        theta = np.asarray(theta, dtype=np.float64)
        std = theta[0] * self.bin_scale
        return np.exp(-np.asarray(s, dtype=np.float64) ** 2
                      / (2.0 * std**2))

    def accumulate(self, out, amps, shifts, etas, thetas):
        gaussian_accumulate(out, shifts, amps, self._stds(thetas))
        return out

    def backprop(self, weights, amps, shifts, etas, thetas):
        ip_g, ip_dc, ip_ds = gaussian_backprop(weights, shifts,
                                               self._stds(thetas))
        g_a = ip_g
        g_mu = amps * ip_dc
        g_theta = (amps * ip_ds * self.bin_scale)[:, None]
        return g_a, g_mu, g_theta

    def forward(self, length, amps, shifts, etas, thetas):
        return gaussian_forward(length, shifts, amps, self._stds(thetas))

    def adjoint(self, weights, cache, amps, shifts, etas, thetas):
        ip_g, ip_dc, ip_ds = gaussian_adjoint(weights, cache)
        return ip_g, amps * ip_dc, (amps * ip_ds * self.bin_scale)[:, None]

    def sampled_pattern(self, eta):
        std = self.sigma_nil * self.bin_scale
        hw = int(np.ceil(8.0 * std)) + 1
        offsets = np.arange(-hw, hw + 1)
        return offsets, np.exp(-offsets.astype(np.float64) ** 2
                               / (2.0 * std**2))

    def support_halfwidth(self):
        return 8.0 * self.theta_box.upper[0] * self.bin_scale


def gaussian_family(stft_cfg=None):
    """Pattern family matching the STFT's own peak shape."""
    if stft_cfg is None:
        stft_cfg = StftConfig()
    return GaussianPeakFamily(stft_cfg.sigma_nil, _bin_scale(stft_cfg))


def transform_config(**overrides):
    """Pursuit hyperparameters for the spectrogram transform.

    High sparsity budget, un-lifted loss (q = 1) and peak preselection;
    lam = 1 keeps iterating as long as the loss strictly decreases.
    """
    defaults = dict(q=1.0, delta=1e-10, lam=1.0, n_pre=1000, n_spr=1000,
                    n_itr=20, selector="peaks", n_dom=3, max_evals=300,
                    floor_rel=1e-6)
    defaults.update(overrides)
    return PursuitConfig(**defaults)


def to_log_spectrogram(Z, axis=None, stft_cfg=None, pursuit_cfg=None):
    """Convert a linear-axis magnitude spectrogram to the log axis.

    Runs the Gaussian-peak pursuit independently per frame and renders
    each identified peak as a Gaussian of unchanged amplitude and bin
    width at alpha(mu).  Peaks at non-positive frequencies or outside
    the representable octave range are dropped.  Returns ``(U,
    atoms_per_frame)``.
    """
    if axis is None:
        axis = LogAxisConfig()
    if stft_cfg is None:
        stft_cfg = StftConfig()
    if pursuit_cfg is None:
        pursuit_cfg = transform_config()
    family = gaussian_family(stft_cfg)
    bin_scale = _bin_scale(stft_cfg)
    m = axis.n_bins
    n_frames = Z.values.shape[1]
    U = np.zeros((m, n_frames))
    atoms_per_frame = []
    for t in range(n_frames):
        result = pursue(Z.values[:, t], family, pursuit_cfg)
        atoms_per_frame.append(result.atoms)
        centers, amps, stds = [], [], []
        for atom in result.atoms:
            if atom.shift <= 0.0:
                continue
            alpha = axis.alpha(atom.shift)
            if alpha < 0.0 or alpha >= m:
                continue
            centers.append(alpha)
            amps.append(atom.amplitude)
            stds.append(atom.params[0] * bin_scale)
        if centers:
            gaussian_accumulate(U[:, t], np.array(centers), np.array(amps),
                                np.array(stds))
    grid = SpectrogramGrid(U, LogAxis(axis.f0, axis.alpha0),
                           Z.frame_period_s)
    return grid, atoms_per_frame


_CACHE_MAGIC = b"HSLS"
_CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct("<4sIII3d")


def save_log_cache(path, grid):
    """Write a log-spectrogram to the binary cache format.

    Layout: magic "HSLS", version, n_bins, n_frames (uint32 LE), then
    f0, alpha0, frame_period as float64, then the values as row-major
    float32.
    """
    axis = grid.axis
    if not isinstance(axis, LogAxis):
        raise DomainError("cache files hold log-axis spectrograms only")
    header = _CACHE_HEADER.pack(_CACHE_MAGIC, _CACHE_VERSION,
                                grid.values.shape[0], grid.values.shape[1],
                                axis.f0, axis.alpha0, grid.frame_period_s)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(grid.values,
                                      dtype=np.float32).tobytes())


def load_log_cache(path):
    with open(path, "rb") as fh:
        raw = fh.read(_CACHE_HEADER.size)
        if len(raw) < _CACHE_HEADER.size:
            raise FormatError(f"truncated cache file {path}")
        magic, version, m, n_frames, f0, alpha0, period = \
            _CACHE_HEADER.unpack(raw)
        if magic != _CACHE_MAGIC:
            raise FormatError(f"{path} is not a log-spectrogram cache")
        if version != _CACHE_VERSION:
            raise FormatError(f"unsupported cache version {version}")
        payload = fh.read()
    if len(payload) != 4 * m * n_frames:
        raise FormatError(f"cache payload size mismatch in {path}")
    data = np.frombuffer(payload, dtype=np.float32)
    values = data.reshape(m, n_frames).astype(np.float64)
    return SpectrogramGrid(values, LogAxis(f0, alpha0), period)
