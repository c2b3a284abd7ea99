import numpy as np
import pytest

from harmosep.errors import DomainError, FormatError
from harmosep.kernels import sample_gaussian
from harmosep.logspect import (GaussianPeakFamily, LogAxisConfig,
                               gaussian_family, load_log_cache,
                               save_log_cache, to_log_spectrogram,
                               transform_config)
from harmosep.stft import (LinearAxis, LogAxis, SpectrogramGrid,
                           StftConfig)


def test_axis_mapping_constants():
    axis = LogAxisConfig()
    assert axis.alpha(5.12) == 0.0
    assert axis.alpha(10.24) == pytest.approx(102.4)
    assert axis.frequency(1024.0) == pytest.approx(5.12 * 2 ** 10)
    # ten octaves span the axis
    assert axis.alpha(5.12 * 2 ** 10) == pytest.approx(1024.0)


def test_gaussian_family_shape():
    cfg = StftConfig()
    fam = gaussian_family(cfg)
    assert fam.evaluate(0, fam.theta_nil, 0.0) == 1.0
    s = np.array([0.7, -0.7, 3.1, -3.1])
    v = fam.evaluate(0, fam.theta_nil, s)
    assert np.allclose(v[::2], v[1::2])
    # half height at the closed-form half-width
    halfwidth = fam.sigma_nil * cfg.window_length * np.sqrt(2 * np.log(2))
    assert fam.evaluate(0, fam.theta_nil, halfwidth) == pytest.approx(0.5)


def test_gaussian_family_box():
    fam = gaussian_family()
    assert fam.theta_box.lower[0] == pytest.approx(0.25 * fam.sigma_nil)
    assert fam.theta_box.upper[0] == pytest.approx(4 * fam.sigma_nil)


def _line_grid(center_bins, amps, n_frames=3):
    cfg = StftConfig()
    std = cfg.sigma_nil * cfg.window_length
    col = sample_gaussian(np.asarray(center_bins, dtype=np.float64),
                          np.asarray(amps, dtype=np.float64),
                          np.full(len(center_bins), std), cfg.n_bins)
    Z = np.tile(col[:, None], (1, n_frames))
    return SpectrogramGrid(Z, LinearAxis(cfg.bin_hz), cfg.frame_period_s)


def test_single_line_maps_to_expected_log_bin():
    Z = _line_grid([10.24], [1.0])
    U, atoms = to_log_spectrogram(Z, pursuit_cfg=transform_config(n_itr=3))
    assert U.values.shape == (1024, 3)
    for frame_atoms in atoms:
        tops = [a for a in frame_atoms if a.amplitude > 0.5]
        assert len(tops) == 1
        alpha = LogAxisConfig().alpha(tops[0].shift)
        assert alpha == pytest.approx(102.4, abs=0.1)
    assert abs(np.argmax(U.values[:, 1]) - 102) <= 1


def test_two_lines_log_distance():
    f1, f2 = 112.4, 253.7
    Z = _line_grid([f1, f2], [1.0, 0.8])
    U, atoms = to_log_spectrogram(Z, pursuit_cfg=transform_config(n_itr=3))
    axis = LogAxisConfig()
    strong = sorted((a for a in atoms[0] if a.amplitude > 0.4),
                    key=lambda a: a.shift)
    assert len(strong) == 2
    d = axis.alpha(strong[1].shift) - axis.alpha(strong[0].shift)
    assert d == pytest.approx(102.4 * np.log2(f2 / f1), abs=0.2)


def test_zero_spectrogram_stays_zero():
    cfg = StftConfig()
    Z = SpectrogramGrid(np.zeros((cfg.n_bins, 2)), LinearAxis(cfg.bin_hz),
                        cfg.frame_period_s)
    U, atoms = to_log_spectrogram(Z, pursuit_cfg=transform_config(n_itr=2))
    assert np.all(U.values == 0.0)
    assert all(len(a) == 0 for a in atoms)


def test_out_of_range_peaks_dropped():
    # line below f0's bin: alpha negative, must not appear
    Z = _line_grid([2.0], [1.0], n_frames=1)
    U, _ = to_log_spectrogram(Z, pursuit_cfg=transform_config(n_itr=2))
    assert np.all(U.values == 0.0)


def test_cache_round_trip(tmp_path, rng):
    values = rng.random((64, 7))
    grid = SpectrogramGrid(values.astype(np.float32).astype(np.float64),
                           LogAxis(5.12, 102.4), 256 / 48000)
    path = tmp_path / "u.hsls"
    save_log_cache(path, grid)
    back = load_log_cache(path)
    assert np.array_equal(back.values, grid.values)
    assert back.axis.f0 == 5.12 and back.axis.alpha0 == 102.4
    assert back.frame_period_s == pytest.approx(256 / 48000)


def test_cache_rejects_linear_axis(tmp_path):
    grid = SpectrogramGrid(np.zeros((4, 4)), LinearAxis(3.90625), 0.01)
    with pytest.raises(DomainError):
        save_log_cache(tmp_path / "z.hsls", grid)


def test_cache_rejects_garbage(tmp_path):
    path = tmp_path / "bad.hsls"
    path.write_bytes(b"not a cache")
    with pytest.raises(FormatError):
        load_log_cache(path)


def test_cache_rejects_truncated_payload(tmp_path):
    grid = SpectrogramGrid(np.ones((8, 8)), LogAxis(5.12, 102.4), 0.01)
    path = tmp_path / "trunc.hsls"
    save_log_cache(path, grid)
    raw = path.read_bytes()
    path.write_bytes(raw[:-10])
    with pytest.raises(FormatError):
        load_log_cache(path)
