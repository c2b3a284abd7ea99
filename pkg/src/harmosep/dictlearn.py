"""Harmonic instrument model and stochastic dictionary learning.

An instrument is a column of relative harmonic amplitudes D[:, eta] in
[0, 1].  On the log-frequency axis a tone played by instrument eta is
the pattern

    y(alpha) = sum_h D[h, eta] * G(alpha - mu - off_h(b); sigma)

where off_h(b) = alpha0 * log2((1 + b h^2)^(1/2) h) is the pitch-
invariant offset of partial h (b is the string inharmonicity), mu the
log position of the fundamental, and G a Gaussian of the peak width
inherited from the spectrogram transform.

Training alternates sparse pursuit on random time frames with a
modified-Adam update of the dictionary, reinitializing rarely-used
columns at regular intervals.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, FormatError
from .kernels import (gaussian_accumulate, gaussian_adjoint,
                      gaussian_backprop, gaussian_forward)
from .logspect import LogAxisConfig
from .optim import AdamState, BoxSpec, adam_step
from .pursuit import PursuitConfig, atoms_to_arrays, loss, pursue
from .stft import StftConfig

DEFAULT_N_HAR = 25
DEFAULT_PRUNE_INTERVAL = 500
DEFAULT_B_MAX = 5e-3

_LN2 = np.log(2.0)


@dataclass
class Dictionary:
    D: np.ndarray

    def __post_init__(self):
        self.D = np.asarray(self.D, dtype=np.float64)
        if self.D.ndim != 2:
            raise DomainError("dictionary must be a 2-D matrix")
        if self.D.min() < 0.0 or self.D.max() > 1.0:
            raise DomainError("dictionary entries must lie in [0, 1]")

    n_har = property(lambda self: self.D.shape[0])
    n_pat = property(lambda self: self.D.shape[1])


class HarmonicPatternFamily:
    """Pattern family of harmonic combs parameterized by a dictionary.

    theta = (sigma, b): peak width (cycles/sample, as in the Gaussian
    family) and inharmonicity.
    """

    n_params = 2

    def __init__(self, D, axis, sigma_nil, bin_scale,
                 width_range=(0.25, 4.0), b_max=DEFAULT_B_MAX):
        self.D = np.asarray(D, dtype=np.float64)
        self.axis = axis
        self.sigma_nil = float(sigma_nil)
        self.bin_scale = float(bin_scale)
        self.n_patterns = self.D.shape[1]
        self.n_har = self.D.shape[0]
        self.theta_nil = np.array([self.sigma_nil, 0.0])
        self.theta_box = BoxSpec(
            np.array([width_range[0] * self.sigma_nil, 0.0]),
            np.array([width_range[1] * self.sigma_nil, b_max]),
        )
        self._h = np.arange(1, self.n_har + 1, dtype=np.float64)
        self._pattern_cache = {}

    def partial_offsets(self, b):
        """Log-axis offsets of the partials relative to the fundamental;
        ``b`` may be a scalar or a column vector for batched atoms."""
        h = self._h
        return self.axis.alpha0 * (np.log2(h)
                                   + 0.5 * np.log2(1.0 + b * h**2))

    def _doffsets_db(self, b):
        h = self._h
        return self.axis.alpha0 * 0.5 * h**2 / ((1.0 + b * h**2) * _LN2)

    def _flatten(self, amps, shifts, etas, thetas):
        # One Gaussian per (atom, partial) pair.
        b = thetas[:, 1][:, None]
        centers = shifts[:, None] + self.partial_offsets(b)
        weights = self.D[:, etas].T          # [n_atoms, n_har]
        amp_grid = amps[:, None] * weights
        stds = np.repeat(thetas[:, 0] * self.bin_scale, self.n_har)
        return centers.ravel(), amp_grid.ravel(), stds, weights

    def accumulate(self, out, amps, shifts, etas, thetas):
        centers, amp_flat, stds, _ = self._flatten(amps, shifts, etas,
                                                   thetas)
        gaussian_accumulate(out, centers, amp_flat, stds)
        return out

    def _adjoints(self, weights_vec, amps, shifts, etas, thetas):
        centers, _, stds, dweights = self._flatten(amps, shifts, etas,
                                                   thetas)
        ip_g, ip_dc, ip_ds = gaussian_backprop(weights_vec, centers, stds)
        n = len(amps)
        shape = (n, self.n_har)
        return (ip_g.reshape(shape), ip_dc.reshape(shape),
                ip_ds.reshape(shape), dweights)

    def _compose(self, ip_g, ip_dc, ip_ds, dweights, amps, thetas):
        g_a = (dweights * ip_g).sum(axis=1)
        g_mu = amps * (dweights * ip_dc).sum(axis=1)
        g_sigma = amps * (dweights * ip_ds).sum(axis=1) * self.bin_scale
        doff = self._doffsets_db(thetas[:, 1][:, None])
        g_b = amps * (dweights * ip_dc * doff).sum(axis=1)
        return g_a, g_mu, np.stack([g_sigma, g_b], axis=1)

    def backprop(self, weights_vec, amps, shifts, etas, thetas):
        ip_g, ip_dc, ip_ds, dweights = self._adjoints(
            weights_vec, amps, shifts, etas, thetas)
        return self._compose(ip_g, ip_dc, ip_ds, dweights, amps, thetas)

    def forward(self, length, amps, shifts, etas, thetas):
        centers, amp_flat, stds, dweights = self._flatten(amps, shifts,
                                                          etas, thetas)
        out, cache = gaussian_forward(length, centers, amp_flat, stds)
        return out, (cache, dweights)

    def adjoint(self, weights_vec, ctx, amps, shifts, etas, thetas):
        cache, dweights = ctx
        ip_g, ip_dc, ip_ds = gaussian_adjoint(weights_vec, cache)
        shape = (len(amps), self.n_har)
        return self._compose(ip_g.reshape(shape), ip_dc.reshape(shape),
                             ip_ds.reshape(shape), dweights, amps,
                             thetas)

    def dict_backprop(self, weights_vec, amps, shifts, etas, thetas):
        """Gradient of the loss with respect to the dictionary entries,
        with the atoms' own parameters held fixed."""
        g = np.zeros_like(self.D)
        if len(amps) == 0:
            return g
        ip_g, _, _, _ = self._adjoints(weights_vec, amps, shifts, etas,
                                       thetas)
        contrib = amps[:, None] * ip_g
        for j, eta in enumerate(etas):
            g[:, eta] += contrib[j]
        return g

    def sampled_pattern(self, eta):
        if eta in self._pattern_cache:
            return self._pattern_cache[eta]
        std = self.sigma_nil * self.bin_scale
        offs = self.partial_offsets(0.0)
        hw = int(np.ceil(8.0 * std)) + 1
        lo = -hw
        hi = int(np.ceil(offs[-1])) + hw
        grid = np.arange(lo, hi + 1, dtype=np.float64)
        values = (self.D[:, eta][None, :]
                  * np.exp(-(grid[:, None] - offs[None, :]) ** 2
                           / (2.0 * std**2))).sum(axis=1)
        self._pattern_cache[eta] = (np.arange(lo, hi + 1), values)
        return self._pattern_cache[eta]

    def support_halfwidth(self):
        b_max = self.theta_box.upper[1]
        top = self.axis.alpha0 * np.log2(
            self.n_har * np.sqrt(1.0 + b_max * self.n_har**2))
        return top + 8.0 * self.theta_box.upper[0] * self.bin_scale


def harmonic_family(dictionary, axis=None, stft_cfg=None,
                    b_max=DEFAULT_B_MAX):
    """Build the harmonic pattern family for a dictionary."""
    if axis is None:
        axis = LogAxisConfig()
    if stft_cfg is None:
        stft_cfg = StftConfig()
    D = dictionary.D if isinstance(dictionary, Dictionary) else dictionary
    return HarmonicPatternFamily(D, axis, stft_cfg.sigma_nil,
                                 stft_cfg.window_length, b_max=b_max)


def init_column(rng, n_har=DEFAULT_N_HAR):
    """Random dictionary column: uniform entries damped by a random
    power-law decay d[h] / h^e with Pareto-distributed e >= 1."""
    e = 1.0 + rng.pareto(0.5)
    d = rng.random(n_har)
    h = np.arange(1, n_har + 1, dtype=np.float64)
    # exp form underflows to 0 gracefully for extreme tail draws of e
    return d * np.exp(-e * np.log(h))


@dataclass
class TrainState:
    adam: AdamState
    amp_acc: np.ndarray          # cumulative identified amplitude per column
    prune_interval: int
    head_start: int
    n_ins: int


def training_config(n_spr, n_pat, **overrides):
    """Pursuit hyperparameters for training and separation: lifted loss
    with q = 1/2, cross-correlation preselection of a single candidate
    per iteration."""
    defaults = dict(q=0.5, delta=1e-10, lam=0.9, n_pre=1, n_spr=n_spr,
                    n_itr=2 * n_spr * n_pat, selector="xcorr",
                    max_evals=200, floor_rel=1e-6)
    defaults.update(overrides)
    return PursuitConfig(**defaults)


def _prune(dictionary, state, rng):
    ratio = state.amp_acc / np.maximum(
        state.adam.tau - state.head_start, 0.5)
    order = np.argsort(-ratio, kind="stable")
    kept = np.sort(order[:state.n_ins])
    for eta in order[state.n_ins:]:
        dictionary.D[:, eta] = init_column(rng, dictionary.n_har)
        state.adam.reset_column(eta)
        state.amp_acc[eta] = 0.0
    return kept


def train(U, n_ins, n_spr, n_trn, seed, *, n_har=DEFAULT_N_HAR,
          prune_interval=DEFAULT_PRUNE_INTERVAL, axis=None, stft_cfg=None,
          b_max=DEFAULT_B_MAX, pursuit_overrides=None):
    """Learn a dictionary from a log-frequency spectrogram.

    Runs ``n_trn`` stochastic steps: draw a random frame, identify
    tones by pursuit, accumulate the found amplitudes, and take one
    modified-Adam step on the dictionary.  Every ``prune_interval``
    steps the columns with the lowest amplitude-per-iteration ratio are
    reinitialized, keeping ``n_ins`` columns intact.  Returns the final
    ``(Dictionary, kept_column_indices)``.
    """
    if n_trn % prune_interval != 0:
        raise ConfigError("n_trn must be a multiple of the prune interval")
    if U.values.shape[1] == 0:
        raise DomainError("empty spectrogram")
    n_pat = 2 * n_ins
    rng = np.random.default_rng(seed)
    dictionary = Dictionary(
        np.stack([init_column(rng, n_har) for _ in range(n_pat)], axis=1))
    state = TrainState(adam=AdamState.zeros(n_har, n_pat),
                       amp_acc=np.zeros(n_pat),
                       prune_interval=prune_interval,
                       head_start=prune_interval // 2,
                       n_ins=n_ins)
    cfg = training_config(n_spr, n_pat, **(pursuit_overrides or {}))
    n_frames = U.values.shape[1]
    kept = np.arange(n_ins)
    for step in range(n_trn):
        t = int(rng.integers(n_frames))
        family = harmonic_family(dictionary, axis=axis, stft_cfg=stft_cfg,
                                 b_max=b_max)
        result = pursue(U.values[:, t], family, cfg)
        if result.atoms:
            state.amp_acc += result.amplitude_sums
            arrays = atoms_to_arrays(result.atoms, family.n_params)
            _, _, _, _, g = loss(U.values[:, t], arrays, family, cfg,
                                 with_dict_grad=True)
            adam_step(dictionary.D, state.adam, g)
        if (step + 1) % prune_interval == 0:
            kept = _prune(dictionary, state, rng)
    return dictionary, kept


_DICT_MAGIC = "harmosep-dict"
_DICT_VERSION = 1


def save_dictionary(path, dictionary, kept):
    """Versioned text format: header lines, then one line of n_har
    decimal floats per column.  Deterministic byte-for-byte for equal
    inputs."""
    lines = [f"{_DICT_MAGIC} {_DICT_VERSION}",
             f"n_har {dictionary.n_har}",
             f"n_pat {dictionary.n_pat}",
             "kept " + " ".join(str(int(k)) for k in kept)]
    for eta in range(dictionary.n_pat):
        lines.append(" ".join(repr(float(v))
                              for v in dictionary.D[:, eta]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dictionary(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith(_DICT_MAGIC):
        raise FormatError(f"{path} is not a dictionary file")
    version = int(lines[0].split()[1])
    if version != _DICT_VERSION:
        raise FormatError(f"unsupported dictionary version {version}")
    n_har = int(lines[1].split()[1])
    n_pat = int(lines[2].split()[1])
    kept = np.array([int(v) for v in lines[3].split()[1:]], dtype=np.int64)
    rows = lines[4:4 + n_pat]
    if len(rows) != n_pat:
        raise FormatError(f"expected {n_pat} columns in {path}")
    D = np.stack([np.array([float(v) for v in row.split()])
                  for row in rows], axis=1)
    if D.shape[0] != n_har:
        raise FormatError(f"column length mismatch in {path}")
    return Dictionary(D), kept
