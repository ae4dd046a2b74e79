import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from semxai import corpus, nn  # noqa: E402

# Desk-scale acceptance setup
DESK_PER_CLASS = 700
DESK_TEST_FRACTION = 0.3
DESK_EPOCHS = 8


@dataclass
class Desk:
    model: object
    train: object
    test: object
    accuracy: float
    seconds: float


@pytest.fixture(scope="session")
def desk():
    """Desk CNN trained once per session on the synthetic cat/dog corpus."""
    t0 = time.perf_counter()
    data = corpus.generate_synthetic_corpus(corpus.CorpusSpec(counts=DESK_PER_CLASS, seed=0))
    train, test = corpus.split(data, DESK_TEST_FRACTION, seed=0)
    model, _ = nn.train(train.images, train.labels, nn.TrainConfig(epochs=DESK_EPOCHS, seed=0), classes=data.classes)
    seconds = time.perf_counter() - t0
    return Desk(model, train, test, nn.accuracy(model, test.images, test.labels), seconds)


def small_model(widths=(4, 6), size=8, n_classes=2, seed=1, bias=True):
    m = nn.build_model(nn.desk_architecture(3, widths, n_classes), (3, size, size),
                       mean=[0.4, 0.5, 0.6], std=[0.2, 0.25, 0.3], seed=seed)
    if bias:
        rng = np.random.default_rng(seed + 100)
        for layer in m.layers:
            if "bias" in layer.params:
                layer.params["bias"] = rng.normal(0, 0.1, layer.params["bias"].shape).astype(np.float32)
    return m


@pytest.fixture
def tiny_model():
    return small_model()


@pytest.fixture(scope="session")
def small_corpus():
    return corpus.generate_synthetic_corpus(corpus.CorpusSpec(counts=40, size=32, seed=3))


# ---------------------------------------------------------------- acceptance summary

_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        detail = dict(report.user_properties).get("detail", "")
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome, detail))
    elif report.when == "setup" and report.failed and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], "failed", "setup error"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in sorted(_acceptance):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {detail}")
