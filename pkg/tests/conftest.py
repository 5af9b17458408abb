import numpy as np
import pytest

from pushlsvrg import data as ds
from pushlsvrg.netgraph import generate_graph
from pushlsvrg.objective import make_logistic, make_svm_smoothed_hinge, make_synthetic_quadratic


def small_dataset(n_samples=40, n_features=5, m=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n_samples, n_features))
    y = np.where(rng.random(n_samples) < 0.5, 1.0, -1.0)
    return ds.partition(ds.Dataset(X, y), m, seed=seed)


@pytest.fixture
def logistic_obj():
    return make_logistic(small_dataset(), beta=0.5)


@pytest.fixture
def svm_obj():
    return make_svm_smoothed_hinge(small_dataset(n_features=4, seed=1), lam=2.0)


@pytest.fixture
def quad_obj():
    return make_synthetic_quadratic(4, 3, q=[3, 5, 2, 4], seed=2, mu_target=0.5, L_target=3.0)


@pytest.fixture(params=["logistic", "svm", "quadratic"])
def any_obj(request, logistic_obj, svm_obj, quad_obj):
    return {"logistic": logistic_obj, "svm": svm_obj, "quadratic": quad_obj}[request.param]


@pytest.fixture
def exp8():
    return generate_graph("directed_exponential", 8)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
