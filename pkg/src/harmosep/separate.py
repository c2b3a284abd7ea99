"""Source separation of a mixture with a learned dictionary.

Every frame of the mixture's log-frequency spectrogram is decomposed by
sparse pursuit over the kept dictionary columns.  The identified tones
are re-rendered per instrument on the linear frequency axis, sharpened
by spectral masking against the mixture magnitude, and turned back into
audio by Griffin-Lim with the mixture phase as the starting point.
"""

from dataclasses import dataclass

import numpy as np

from .dictlearn import HarmonicPatternFamily, harmonic_family, \
    training_config
from .errors import DomainError
from .kernels import gaussian_accumulate
from .logspect import LogAxisConfig
from .pursuit import pursue
from .stft import LinearAxis, SpectrogramGrid, StftConfig, griffin_lim

MASK_EPSILON = 1e-12


@dataclass
class SeparationResult:
    atoms_per_frame: list        # pursuit atoms; pattern indexes the kept set
    inst_spectrograms: list      # linear-axis SpectrogramGrid per instrument
    masked_spectrograms: list    # same shape, after spectral masking
    signals: list                # one AudioClip per instrument


def reconstruct_instrument(atoms_per_frame, eta, family, axis, shape):
    """Render one instrument's identified tones on the linear axis.

    Each atom of pattern ``eta`` contributes one Gaussian per partial,
    centered at ``sqrt(1 + b h^2) h f1`` bins (f1 recovered from the
    log-axis shift) with the atom's bin-domain width; partials beyond
    the grid end fall off the rasterizer.
    """
    h = np.arange(1, family.n_har + 1, dtype=np.float64)
    out = np.zeros(shape)
    for t, atoms in enumerate(atoms_per_frame):
        for atom in atoms:
            if atom.pattern != eta:
                continue
            sigma, b = atom.params
            f1 = axis.frequency(atom.shift)
            centers = np.sqrt(1.0 + b * h**2) * h * f1
            amps = atom.amplitude * family.D[:, eta]
            stds = np.full(family.n_har, sigma * family.bin_scale)
            gaussian_accumulate(out[:, t], centers, amps, stds)
    return out


def apply_mask(inst, total, mixture, epsilon=MASK_EPSILON):
    """Rescale one instrument's model grid by its share of the mixture:
    ``inst / (total + epsilon) * mixture`` elementwise."""
    return inst / (total + epsilon) * mixture


def separate(U, Z, phase, dictionary, kept, n_spr, *, axis=None,
             stft_cfg=None, use_mask=True, gl_iters=1, length=None,
             pursuit_overrides=None):
    """Separate a mixture into per-instrument audio clips.

    ``U`` is the mixture's log-frequency spectrogram, ``Z`` and
    ``phase`` its linear magnitude and phase grids, ``kept`` the
    dictionary columns to use and ``n_spr`` the per-instrument tone
    budget per frame.  Outputs follow the order of ``kept``.
    """
    if axis is None:
        axis = LogAxisConfig()
    if stft_cfg is None:
        stft_cfg = StftConfig()
    kept = np.asarray(kept, dtype=np.int64)
    if len(kept) == 0:
        raise DomainError("no dictionary columns to separate with")
    if U.values.shape[1] != Z.values.shape[1]:
        raise DomainError("log and linear spectrograms disagree in frames")
    if Z.values.shape != phase.shape:
        raise DomainError("magnitude and phase grids differ in shape")
    base = harmonic_family(dictionary, axis=axis, stft_cfg=stft_cfg)
    family = HarmonicPatternFamily(base.D[:, kept], axis, base.sigma_nil,
                                   base.bin_scale)
    cfg = training_config(n_spr, family.n_patterns,
                          **(pursuit_overrides or {}))
    atoms_per_frame = [pursue(U.values[:, t], family, cfg).atoms
                       for t in range(U.values.shape[1])]
    parts = [reconstruct_instrument(atoms_per_frame, k, family, axis,
                                    Z.values.shape)
             for k in range(len(kept))]
    total = np.zeros_like(Z.values)
    for part in parts:
        total += part
    masked = [apply_mask(part, total, Z.values) for part in parts]

    def grid(values):
        return SpectrogramGrid(values, LinearAxis(stft_cfg.bin_hz),
                               Z.frame_period_s)

    chosen = masked if use_mask else parts
    signals = [griffin_lim(grid(v), phase, gl_iters, stft_cfg,
                           length=length) for v in chosen]
    return SeparationResult(atoms_per_frame,
                            [grid(p) for p in parts],
                            [grid(m) for m in masked],
                            signals)
