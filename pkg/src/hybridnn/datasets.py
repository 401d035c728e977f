"""Dataset builders and the signal-processing front ends.

Two data sources: a synthetic complex-sinusoid regression set (frequency,
amplitude and phase estimation from 18 spectrum bins) and a 48 kHz spoken
digit pipeline (RMS normalization, 1 s zero padding with random or fixed
placement, white noise at a target SNR, a 960-point / 50 %-overlap Hann STFT,
and 0.5-exponent magnitude compression).  A synthetic spoken-digit proxy
generator stands in when the real recordings are not on disk.

Every randomized operation is a pure function of its inputs and a seed;
per-example streams derive from (seed, example index) so parallel or
out-of-order processing cannot change results.
"""

from __future__ import annotations

import json
import math
import wave
from pathlib import Path

import numpy as np

from .errors import DataError

SAMPLE_RATE = 48000
CLIP_SAMPLES = SAMPLE_RATE  # 1 second window

SINUSOID_BINS = 18
SINUSOID_N = 512
SINUSOID_RANGES = {
    "amplitude": (0.1, 1.0),
    "frequency": (5.0, 12.0),
    "phase": (-math.pi, math.pi),
    "noise_magnitude": (0.0, 0.01),
}


def _rng_for(seed, index):
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


def hann_periodic(n):
    """Periodic Hann window; offset copies at 50% overlap sum to exactly 1."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


# -- sinusoid regression set ------------------------------------------------------


def sinusoid_predictors(amplitude, frequency, phase, rng=None, noise_magnitude=0.0):
    """36 interleaved re/im values of the first 18 windowed-DFT bins."""
    n = np.arange(SINUSOID_N)
    y = amplitude * np.exp(1j * (2.0 * np.pi * n * frequency / SINUSOID_N + phase))
    if noise_magnitude > 0.0:
        mag = rng.uniform(0.0, noise_magnitude, SINUSOID_N)
        ang = rng.uniform(-math.pi, math.pi, SINUSOID_N)
        y = y + mag * np.exp(1j * ang)
    spectrum = np.fft.fft(y * hann_periodic(SINUSOID_N))[:SINUSOID_BINS]
    out = np.empty(2 * SINUSOID_BINS)
    out[0::2] = spectrum.real
    out[1::2] = spectrum.imag
    return out


def generate_sinusoid_dataset(count, seed):
    """Noisy complex-sinusoid samples with targets [freq, a*sin(p), a*cos(p)]."""
    if count < 1:
        raise ValueError("count must be >= 1")
    predictors = np.empty((count, 2 * SINUSOID_BINS))
    targets = np.empty((count, 3))
    latent = np.empty((count, 3))
    for i in range(count):
        rng = _rng_for(seed, i)
        a = rng.uniform(*SINUSOID_RANGES["amplitude"])
        m = rng.uniform(*SINUSOID_RANGES["frequency"])
        p = rng.uniform(*SINUSOID_RANGES["phase"])
        predictors[i] = sinusoid_predictors(
            a, m, p, rng=rng, noise_magnitude=SINUSOID_RANGES["noise_magnitude"][1]
        )
        targets[i] = (m, a * math.sin(p), a * math.cos(p))
        latent[i] = (a, m, p)
    return {"predictors": predictors, "targets": targets, "latent": latent, "seed": seed}


# -- STFT front end ----------------------------------------------------------------


def stft(waveform, n_fft=960, overlap=0.5, window=None):
    """One-sided STFT laid out [freq_bins, frames]; frames stay fully inside
    the signal (no edge padding)."""
    waveform = np.asarray(waveform, dtype=np.float64)
    if waveform.ndim != 1:
        raise ValueError("stft expects a 1-D waveform")
    if len(waveform) < n_fft:
        raise ValueError(f"waveform of {len(waveform)} samples shorter than n_fft={n_fft}")
    hop = int(round(n_fft * (1.0 - overlap)))
    win = hann_periodic(n_fft) if window is None else np.asarray(window)
    n_frames = (len(waveform) - n_fft) // hop + 1
    idx = np.arange(n_fft)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = waveform[idx] * win
    return np.fft.rfft(frames, axis=1).T.copy()


def magnitude_compress(spectrum, exponent=0.5):
    """|z|^exponent * e^{i arg z}: compresses dynamic range, phase untouched."""
    spectrum = np.asarray(spectrum)
    mag = np.abs(spectrum)
    safe = np.where(mag > 0, mag, 1.0)
    return np.where(mag > 0, spectrum * (safe ** (exponent - 1.0)), 0.0)


def interleave_for_rvnn(spectrum):
    """Complex [freq, time] -> real [2*freq, time], channels (re0, im0, re1, ...)."""
    spectrum = np.asarray(spectrum)
    out = np.empty((2 * spectrum.shape[0],) + spectrum.shape[1:], dtype=np.float64)
    out[0::2] = spectrum.real
    out[1::2] = spectrum.imag
    return out


# -- waveform-level augmentation ------------------------------------------------------


def rms_normalize(waveform):
    rms = math.sqrt(float(np.mean(np.square(waveform))))
    if rms == 0.0:
        return np.zeros_like(waveform, dtype=np.float64)
    return np.asarray(waveform, dtype=np.float64) / rms


def add_noise_snr(waveform, snr_db, rng=None, content=None):
    """Add white Gaussian noise scaled to a target SNR in dB.

    ``content`` is an optional (start, stop) sample range marking the real
    signal inside a padded buffer; signal power is measured there so the SNR
    does not depend on how much zero padding surrounds the content.  Pass
    ``snr_db=None`` (or +inf) for a no-op.
    """
    waveform = np.asarray(waveform, dtype=np.float64)
    if snr_db is None or snr_db == math.inf:
        return waveform.copy()
    lo, hi = content if content is not None else (0, len(waveform))
    if hi <= lo:
        raise DataError("cannot set an SNR on an empty content region")
    p_signal = float(np.mean(np.square(waveform[lo:hi])))
    if p_signal == 0.0:
        raise DataError("cannot set an SNR on an all-zero signal")
    p_noise = p_signal / (10.0 ** (snr_db / 10.0))
    noise = rng.normal(scale=math.sqrt(p_noise), size=len(waveform))
    return waveform + noise


def pad_and_shift(waveform, length=CLIP_SAMPLES, mode="random_offset", rng=None, ratio=0.0):
    """Place a waveform inside a fixed window.

    ``random_offset``: content starts at a uniformly random offset within the
    window (truncated first if longer).  Returns (padded, (start, stop)).

    ``crop``: content is placed at the window start and a signed fraction of
    the window is shifted out of range: negative ratios drop the beginning of
    the signal, positive ratios drop the end.  ``ratio=0`` is the identity
    placement.
    """
    waveform = np.asarray(waveform, dtype=np.float64)[:length]
    out = np.zeros(length)
    if mode == "random_offset":
        start = int(rng.integers(0, length - len(waveform) + 1))
        out[start:start + len(waveform)] = waveform
        return out, (start, start + len(waveform))
    if mode == "crop":
        if not -1.0 <= ratio <= 1.0:
            raise ValueError("crop ratio must be in [-1, 1]")
        out[: len(waveform)] = waveform
        n = int(round(abs(ratio) * length))
        if n == 0:
            return out, (0, len(waveform))
        if ratio < 0:
            shifted = np.zeros(length)
            shifted[: length - n] = out[n:]
            return shifted, (0, max(0, len(waveform) - n))
        out[length - n:] = 0.0
        return out, (0, min(len(waveform), length - n))
    raise ValueError(f"unknown pad mode {mode!r}")


# -- spoken-digit data -----------------------------------------------------------------


def read_wav(path):
    """Load a mono 16-bit PCM WAV as float64 in [-1, 1]."""
    try:
        with wave.open(str(path), "rb") as handle:
            if handle.getnchannels() != 1:
                raise DataError(f"{path}: expected mono audio")
            if handle.getsampwidth() != 2:
                raise DataError(f"{path}: expected 16-bit PCM")
            rate = handle.getframerate()
            raw = handle.readframes(handle.getnframes())
    except (wave.Error, EOFError, OSError) as exc:
        raise DataError(f"{path}: unreadable WAV file ({exc})") from exc
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return rate, samples


def write_wav(path, waveform, rate=SAMPLE_RATE):
    """Write float samples in [-1, 1] as mono 16-bit PCM (test fixtures, caches)."""
    pcm = np.clip(np.round(np.asarray(waveform) * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(2)
        handle.setframerate(rate)
        handle.writeframes(pcm.tobytes())


def load_audiomnist(root_path):
    """Discover spoken-digit WAVs under ``root_path``.

    Files follow the ``<digit>_<speaker>_<index>.wav`` naming convention in
    per-speaker directories.  Returns a manifest: list of dicts with path,
    label, and speaker.  Sample rates other than 48 kHz are an error (no
    silent resampling).
    """
    root = Path(root_path)
    if not root.is_dir():
        raise DataError(f"dataset root {root} does not exist")
    records = []
    for path in sorted(root.rglob("*.wav")):
        name = path.stem.split("_")
        if not name[0].isdigit():
            raise DataError(f"{path}: cannot parse digit label from filename")
        rate, samples = read_wav(path)
        if rate != SAMPLE_RATE:
            raise DataError(f"{path}: sample rate {rate} != {SAMPLE_RATE} (resampling not supported)")
        records.append({
            "path": str(path),
            "label": int(name[0]),
            "speaker": name[1] if len(name) > 1 else "unknown",
            "samples": len(samples),
        })
    if not records:
        raise DataError(f"no WAV files found under {root}")
    return records


def stratified_split(labels, seed, fractions=(0.8, 0.1, 0.1)):
    """Per-class 80/10/10 split; returns index arrays keyed train/val/test."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5917)))
    splits = {"train": [], "val": [], "test": []}
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        n_val = int(round(len(idx) * fractions[1]))
        n_test = int(round(len(idx) * fractions[2]))
        splits["val"].append(idx[:n_val])
        splits["test"].append(idx[n_val:n_val + n_test])
        splits["train"].append(idx[n_val + n_test:])
    return {k: np.sort(np.concatenate(v)) for k, v in splits.items()}


def save_split(path, splits):
    with open(path, "w") as handle:
        json.dump({k: np.asarray(v).tolist() for k, v in splits.items()}, handle)


def load_split(path):
    with open(path) as handle:
        return {k: np.asarray(v, dtype=np.int64) for k, v in json.load(handle).items()}


# -- synthetic spoken-digit proxy -------------------------------------------------------

# per-class formant-like band centers (Hz) and a frequency glide direction;
# band pairs are shared between class pairs (like formants shared between
# digits), so the glide trajectory is required to separate them
_PROXY_CLASSES = [
    # (band1, band2, glide)
    (350, 1000, 0.12),
    (350, 1000, -0.12),
    (500, 1400, 0.12),
    (500, 1400, -0.12),
    (650, 1900, 0.12),
    (650, 1900, -0.12),
    (800, 1200, 0.12),
    (800, 1200, -0.12),
    (1000, 1600, 0.12),
    (1000, 1600, -0.12),
]


def proxy_digit_waveform(label, rng, duration=None):
    """One synthetic utterance for a digit class at 48 kHz.

    Voiced harmonic stack with two class-specific resonant bands, a gentle
    class-specific frequency glide, and per-utterance pitch/band jitter.
    """
    band1, band2, glide = _PROXY_CLASSES[label]
    duration = duration if duration is not None else rng.uniform(0.35, 0.6)
    n = int(duration * SAMPLE_RATE)
    t = np.arange(n) / SAMPLE_RATE
    f0 = rng.uniform(100.0, 190.0)
    rate = 1.0 + glide * t / duration
    b1 = band1 * rng.uniform(0.92, 1.08)
    b2 = band2 * rng.uniform(0.92, 1.08)
    signal = np.zeros(n)
    for h in range(1, 16):
        freq = h * f0
        weight = math.exp(-0.5 * ((freq - b1) / 220.0) ** 2) + 0.8 * math.exp(
            -0.5 * ((freq - b2) / 300.0) ** 2
        )
        if weight < 1e-4:
            continue
        phase = rng.uniform(-math.pi, math.pi)
        signal += weight * np.sin(2.0 * np.pi * freq * rate * t + phase)
    envelope = np.sin(np.pi * np.clip(t / duration, 0.0, 1.0)) ** 0.75
    return rms_normalize(signal * envelope)


def generate_digit_proxy(count, seed):
    """Balanced synthetic spoken-digit set: (waveforms, labels)."""
    waveforms, labels = [], np.empty(count, dtype=np.int64)
    for i in range(count):
        rng = _rng_for(seed, i)
        label = i % 10
        waveforms.append(proxy_digit_waveform(label, rng))
        labels[i] = label
    return waveforms, labels


# -- end-to-end feature pipeline ---------------------------------------------------------


def prepare_clip(waveform, index, seed, snr_db=None, crop=None, n_fft=960, overlap=0.5):
    """Waveform -> compressed complex STFT [freq, time] via the standard chain.

    RMS normalization, placement in the 1 s window (random offset, or fixed
    start placement with a signed crop ratio when ``crop`` is given), noise at
    ``snr_db`` measured on the content region, STFT, magnitude compression.
    """
    rng = _rng_for(seed, index)
    norm = rms_normalize(waveform)
    if crop is None:
        padded, content = pad_and_shift(norm, mode="random_offset", rng=rng)
    else:
        padded, content = pad_and_shift(norm, mode="crop", ratio=crop)
    noisy = add_noise_snr(padded, snr_db, rng=rng, content=content)
    return magnitude_compress(stft(noisy, n_fft=n_fft, overlap=overlap))


def clips_to_features(waveforms, seed, snr_db=None, crop=None, representation="complex",
                      max_bins=None, time_pool=1):
    """Stack per-clip STFTs into a model-ready array [N, channels, length].

    Convolutions slide along the frequency axis, so time frames become the
    channel dimension.  ``max_bins`` truncates the frequency range and
    ``time_pool`` keeps every k-th frame (desk-scale knobs; decimation rather
    than averaging, which would cancel phases).  The ``interleaved``
    representation doubles the frequency axis with re/im interleaving for
    real-valued networks.
    """
    feats = []
    for i, w in enumerate(waveforms):
        grid = prepare_clip(w, i, seed, snr_db=snr_db, crop=crop)
        if max_bins is not None:
            grid = grid[:max_bins]
        if time_pool > 1:
            grid = grid[:, ::time_pool]
        if representation == "interleaved":
            grid = interleave_for_rvnn(grid)
        elif representation != "complex":
            raise ValueError(f"unknown representation {representation!r}")
        feats.append(grid.T)  # [time(channels), freq(length)]
    return np.stack(feats)
