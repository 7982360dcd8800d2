import numpy as np
import pytest

from rbindex import ClassicBandit, RestlessBandit

# Three bundled 3-state instances exercising the distinct verdict shapes:
# one indexable and greedy-verifiable, one nonindexable, one indexable
# whose greedy certificate fails on negative marginal work.

PCL_PASS = dict(
    reward1=[0.9016, 0.10949, 0.01055],
    trans0=[[0.1810, 0.4801, 0.3389],
            [0.2676, 0.2646, 0.4678],
            [0.5304, 0.2843, 0.1853]],
    trans1=[[0.2841, 0.4827, 0.2332],
            [0.5131, 0.0212, 0.4657],
            [0.4612, 0.0081, 0.5307]],
    beta=0.9)

NONINDEXABLE = dict(
    reward0=[0.458, 0.5308, 0.6873],
    reward1=[0.9631, 0.7963, 0.1057],
    trans0=[[0.1902, 0.4156, 0.3942],
            [0.5676, 0.4191, 0.0133],
            [0.0191, 0.1097, 0.8712]],
    trans1=[[0.7796, 0.0903, 0.1301],
            [0.1903, 0.1863, 0.6234],
            [0.2901, 0.3901, 0.3198]],
    beta=0.9)

PCL_FAIL = dict(
    reward1=[0.44138, 0.8033, 0.14257],
    trans0=[[0.3629, 0.5028, 0.1343],
            [0.0823, 0.7534, 0.1643],
            [0.2460, 0.0294, 0.7246]],
    trans1=[[0.1719, 0.1749, 0.6532],
            [0.0547, 0.9317, 0.0136],
            [0.1547, 0.6271, 0.2182]],
    beta=0.9)

CLASSIC3 = dict(
    reward=[0.0250, 0.4242, 0.0338],
    trans=[[0.6635, 0.0285, 0.3080],
           [0.6345, 0.3583, 0.0072],
           [0.4868, 0.0530, 0.4602]],
    beta=0.95)


def make_restless(spec) -> RestlessBandit:
    n = len(spec["reward1"])
    return RestlessBandit(
        spec.get("reward0", np.zeros(n)), spec["reward1"],
        np.zeros(n), np.ones(n),
        spec["trans0"], spec["trans1"], spec["beta"])


def random_restless(rng, n: int, beta: float) -> RestlessBandit:
    r1 = rng.random(n)
    p1 = rng.random((n, n))
    p1 /= p1.sum(axis=1, keepdims=True)
    p0 = rng.random((n, n))
    p0 /= p0.sum(axis=1, keepdims=True)
    return RestlessBandit(np.zeros(n), r1, np.zeros(n), np.ones(n),
                          p0, p1, beta)


@pytest.fixture
def inst_pcl_pass():
    return make_restless(PCL_PASS)


@pytest.fixture
def inst_nonindexable():
    return make_restless(NONINDEXABLE)


@pytest.fixture
def inst_pcl_fail():
    return make_restless(PCL_FAIL)


@pytest.fixture
def classic3():
    return ClassicBandit(CLASSIC3["reward"], CLASSIC3["trans"],
                         CLASSIC3["beta"])
