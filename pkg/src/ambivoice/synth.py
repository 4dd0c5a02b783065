"""Deterministic synthetic speaker embeddings and d-vectors.

Randomness comes from :class:`SplitMix64`, a counter-based 64-bit
generator with a published, language-independent definition, turned into
normals with the Box-Muller transform. Output depends only on the SynthSpec,
never on numpy's global or default generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidSpec
from .io import DVectorRecord, EmbeddingSet, Gender, SpeakerRecord

__all__ = ["SplitMix64", "SynthSpec", "synth_embeddings", "synth_dvectors", "synth_dvector_corpus"]

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Counter-based SplitMix64: the k-th output (k = 1, 2, ...) is
    ``mix(seed + k * 0x9E3779B97F4A7C15 mod 2**64)``."""

    def __init__(self, seed: int):
        self.seed = np.uint64(int(seed) & _MASK64)
        self.counter = 0

    def next_u64(self, n: int) -> np.ndarray:
        k = np.arange(self.counter + 1, self.counter + 1 + n, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            z = self.seed + k * _GAMMA
            z = (z ^ (z >> np.uint64(30))) * _M1
            z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))

    def uniform(self, n: int) -> np.ndarray:
        """Doubles in [0, 1) from the top 53 bits."""
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)

    def normal(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log(1.0 - u[:, 0]))
        theta = 2.0 * math.pi * u[:, 1]
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)]).ravel()[:n]


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic corpus.

    ``gender_shift`` defaults to ``6 * cluster_std`` along dimension 0.
    """

    seed: int = 0
    n_per_gender: int = 200
    dim: int = 32
    gender_shift: tuple | None = None
    cluster_std: float = 0.02
    n_voices: int = 6
    n_utts_per_voice: int = 3
    n_languages: int = 3
    dvector_dim: int = 256
    voice_spread: float = 1.0
    utt_noise: float = 0.05

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise InvalidSpec("seed must be a 64-bit unsigned integer")
        if self.n_per_gender < 2:
            raise InvalidSpec("n_per_gender must be at least 2")
        if self.dim < 2:
            raise InvalidSpec("dim must be at least 2")
        if not self.cluster_std > 0:
            raise InvalidSpec("cluster_std must be positive")
        if self.gender_shift is not None and len(self.gender_shift) != self.dim:
            raise InvalidSpec(f"gender_shift needs {self.dim} entries")
        if self.n_voices < 1 or self.n_utts_per_voice < 1 or self.n_languages < 1:
            raise InvalidSpec("voice, utterance and language counts must be positive")
        if self.dvector_dim < 1:
            raise InvalidSpec("dvector_dim must be positive")
        if self.voice_spread < 0 or self.utt_noise < 0:
            raise InvalidSpec("spreads must be nonnegative")

    @property
    def shift(self) -> np.ndarray:
        if self.gender_shift is None:
            s = np.zeros(self.dim)
            s[0] = 6.0 * self.cluster_std
            return s
        return np.asarray(self.gender_shift, dtype=np.float64)


def synth_embeddings(spec: SynthSpec) -> EmbeddingSet:
    """Male ``N(0, std^2 I)`` and female ``N(shift, std^2 I)`` clusters, males first."""
    rng = SplitMix64(spec.seed)
    n, d = spec.n_per_gender, spec.dim
    male = spec.cluster_std * rng.normal(n * d).reshape(n, d)
    female = spec.shift + spec.cluster_std * rng.normal(n * d).reshape(n, d)
    records = [SpeakerRecord(f"m{i + 1:04d}", Gender.MALE, "xx", row) for i, row in enumerate(male)]
    records += [SpeakerRecord(f"f{i + 1:04d}", Gender.FEMALE, "xx", row) for i, row in enumerate(female)]
    return EmbeddingSet(records)


def _utterances(rng, spec, voice_ids, centers):
    langs = [f"l{k + 1}" for k in range(spec.n_languages)]
    out = []
    for vid, center in zip(voice_ids, centers):
        noise = rng.normal(spec.n_utts_per_voice * spec.dvector_dim).reshape(spec.n_utts_per_voice, spec.dvector_dim)
        for u in range(spec.n_utts_per_voice):
            lang = langs[u % len(langs)]
            out.append(DVectorRecord(f"{vid}-{lang}-{u + 1:02d}", str(vid), lang, center + spec.utt_noise * noise[u]))
    return out


def synth_dvectors(spec: SynthSpec, voice_ids=None) -> list[DVectorRecord]:
    """Utterance d-vectors scattered around one random mean per voice.

    Utterances cycle through ``n_languages`` pseudo-language tags.
    """
    if voice_ids is None:
        voice_ids = [f"v{k + 1}" for k in range(spec.n_voices)]
    voice_ids = [str(v) for v in voice_ids]
    rng = SplitMix64(spec.seed ^ 0xD5EC7095)
    centers = spec.voice_spread * rng.normal(len(voice_ids) * spec.dvector_dim).reshape(len(voice_ids), spec.dvector_dim)
    return _utterances(rng, spec, voice_ids, centers)


def synth_dvector_corpus(spec: SynthSpec, male_ids, female_ids, generated_ids, gender_gap=4.0, spread=1.0):
    """d-vectors for male, female and generated voices.

    Voice means share a common offset; males sit at ``-gap/2`` and females
    at ``+gap/2`` along a random unit axis, generated voices at the
    midpoint. Each mean is perturbed by isotropic noise of expected norm
    about ``spread``.
    """
    rng = SplitMix64(spec.seed ^ 0x6A09E667)
    dv = spec.dvector_dim
    common = 2.0 * rng.normal(dv)
    axis = rng.normal(dv)
    axis /= np.linalg.norm(axis)
    ids, centers = [], []
    for group, offset in ((male_ids, -gender_gap / 2), (female_ids, gender_gap / 2), (generated_ids, 0.0)):
        for vid in group:
            ids.append(str(vid))
            centers.append(common + offset * axis + spread / math.sqrt(dv) * rng.normal(dv))
    return _utterances(rng, spec, ids, centers)
