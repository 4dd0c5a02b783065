import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ambivoice.exceptions import DegenerateInput, InsufficientData
from ambivoice.io import EmbeddingSet
from ambivoice.pca import fit_pca
from ambivoice.stats import Basis, correlation_ratio, correlation_ratio_profile, export_profile
from ambivoice.synth import SynthSpec, synth_embeddings

MMFF = ["M", "M", "F", "F"]


def naive_eta(values, labels):
    """Textbook arithmetic, one loop per quantity."""
    n = len(values)
    mean = sum(values) / n
    total = sum((v - mean) ** 2 for v in values) / n
    between = 0.0
    for g in set(labels):
        grp = [v for v, lab in zip(values, labels) if lab == g]
        between += len(grp) / n * (sum(grp) / len(grp) - mean) ** 2
    return between / total


@pytest.mark.parametrize(
    "values,expected",
    [([1, 1, 2, 2], 1.0), ([1, 2, 1, 2], 0.0), ([0, 1, 1, 2], 0.5)],
)
def test_worked_examples(values, expected):
    assert correlation_ratio(values, MMFF) == pytest.approx(expected, abs=1e-15)


def test_half_case_matches_arithmetic_oracle():
    # between = 0.5*(0.5-1)^2 + 0.5*(1.5-1)^2 = 0.25; total = (1+0+0+1)/4 = 0.5
    assert naive_eta([0, 1, 1, 2], MMFF) == 0.5


def test_constant_feature_raises():
    with pytest.raises(DegenerateInput):
        correlation_ratio([3.0, 3.0, 3.0, 3.0], MMFF)


def test_one_gender_raises():
    with pytest.raises(InsufficientData):
        correlation_ratio([1, 2, 3], ["M", "M", "M"])


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(finite, min_size=4, max_size=40),
    st.floats(0.01, 100) | st.floats(-100, -0.01),
    finite,
    st.randoms(use_true_random=False),
)
def test_affine_and_permutation_invariance(values, a, b, rnd):
    n = len(values)
    labels = ["M" if i % 2 else "F" for i in range(n)]
    x = np.asarray(values)
    if np.ptp(x) < 1e-3:
        return
    eta = correlation_ratio(x, labels)
    assert 0.0 <= eta <= 1.0
    assert correlation_ratio(a * x + b, labels) == pytest.approx(eta, abs=1e-12)
    perm = list(range(n))
    rnd.shuffle(perm)
    assert correlation_ratio(x[perm], [labels[i] for i in perm]) == pytest.approx(eta, abs=1e-12)
    assert eta == pytest.approx(naive_eta(list(x), labels), abs=1e-12)


def test_profile_argmax_raw_and_pca():
    eset = synth_embeddings(SynthSpec(seed=2, n_per_gender=100, dim=8, cluster_std=1.0,
                                      gender_shift=(3.0,) + (0.0,) * 7))
    raw = correlation_ratio_profile(eset, Basis.RAW)
    assert raw.argmax == 0
    pcs = correlation_ratio_profile(eset, Basis.PCA, fit_pca(eset))
    assert pcs.argmax == 0
    assert np.all(pcs.values[0] > pcs.values[1:])


def test_constant_dimension_flagged(tmp_path):
    eset = synth_embeddings(SynthSpec(seed=4, n_per_gender=10, dim=3, cluster_std=1.0))
    X = eset.X
    X[:, 1] = 0.1
    eset = EmbeddingSet.from_arrays(X, eset.genders)
    with pytest.warns(RuntimeWarning):
        prof = correlation_ratio_profile(eset)
    assert prof.values[1] == 0.0 and prof.flags[1]
    assert not prof.flags[0] and not prof.flags[2]
    export_profile(prof, tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "dim,eta,flag" and lines[2] == "1,0.0,1"


def test_profile_requires_both_genders():
    eset = EmbeddingSet.from_arrays(np.eye(3), ["M", "M", "M"])
    with pytest.raises(InsufficientData):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            correlation_ratio_profile(eset)


def test_no_signal_and_strong_signal():
    null = synth_embeddings(SynthSpec(seed=9, n_per_gender=200, dim=32, gender_shift=(0.0,) * 32))
    assert correlation_ratio_profile(null).values.max() <= 0.1
    strong = synth_embeddings(SynthSpec(seed=9, n_per_gender=200, dim=32, cluster_std=0.02,
                                        gender_shift=(0.2,) + (0.0,) * 31))
    assert correlation_ratio_profile(strong).values[0] >= 0.9
