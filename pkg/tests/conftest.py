import re

import numpy as np
import pytest

from ambivoice.io import EmbeddingSet
from ambivoice.synth import SplitMix64, SynthSpec, synth_embeddings

ACCEPTANCE_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = re.match(r"test_c(\d+)_(\w+)", item.name)
    if not m or report.when != "call" or not report.failed:
        return
    n = m.group(1)
    if not any(k.split()[0] == f"C{n}" for k in ACCEPTANCE_RESULTS):
        ACCEPTANCE_RESULTS[f"C{n} {m.group(2).replace('_', ' ')}"] = (False, f"error: {call.excinfo.typename}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0][1:])):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")


@pytest.fixture(scope="session")
def small_set():
    return synth_embeddings(SynthSpec(seed=11, n_per_gender=30, dim=6))


@pytest.fixture(scope="session")
def mirror_set():
    """Male cloud around (-1, 0) and its exact reflection across x = 0 as females."""
    rng = SplitMix64(3)
    n = 40
    male = np.column_stack([-1 + 0.3 * rng.normal(n), rng.normal(n)])
    female = male * np.array([-1.0, 1.0])
    return EmbeddingSet.from_arrays(
        np.vstack([male, female]),
        ["M"] * n + ["F"] * n,
        speaker_ids=[f"m{i:03d}" for i in range(n)] + [f"f{i:03d}" for i in range(n)],
    )
