import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ransomflow._kernels import _fallback
from ransomflow.classifiers.mlp import initial_weights
from ransomflow.classifiers.tree import nlogn_table
from ransomflow.synth import generate_capture, goodware_profile

ck = pytest.importorskip("ransomflow._kernels._ckernels")


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=600), st.booleans(), st.booleans(), st.booleans())
def test_scan_records_equivalent(buf, big, nano, final):
    assert ck.scan_records(buf, 0, big, nano, final) == _fallback.scan_records(buf, 0, big, nano, final)


def test_scan_records_on_generated_capture():
    data, _, _ = generate_capture(goodware_profile(2, vlan_probability=0.3, noise_frames=(3, 6)))
    assert ck.scan_records(data, 24, False, False, True) == _fallback.scan_records(data, 24, False, False, True)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 8), st.integers(0, 1)), min_size=1, max_size=40),
       st.integers(1, 3))
def test_best_threshold_bit_identical(pairs, min_leaf):
    pairs.sort(key=lambda p: p[0])
    values = np.array([p[0] for p in pairs], dtype=float)
    labels = np.array([p[1] for p in pairs], dtype=np.int64)
    table = nlogn_table(len(values))
    assert ck.best_threshold(values, labels, 2, min_leaf, table) == \
        _fallback.best_threshold(values, labels, 2, min_leaf, table)


def test_mlp_train_bit_identical():
    rng = np.random.default_rng(3)
    X = rng.random((25, 4))
    T = np.eye(2)[rng.integers(0, 2, 25)]
    order = np.concatenate([rng.permutation(25) for _ in range(20)]).astype(np.int64)
    W1, W2 = initial_weights(rng, 4, 3, 2)
    a1, a2, b1, b2 = W1.copy(), W2.copy(), W1.copy(), W2.copy()
    ck.mlp_train(X, T, a1, a2, order, 0.3, 0.2)
    _fallback.mlp_train(X, T, b1, b2, order, 0.3, 0.2)
    assert np.array_equal(a1, b1) and np.array_equal(a2, b2)


def test_forced_fallback_selected():
    env = dict(os.environ, RANSOMFLOW_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from ransomflow import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
