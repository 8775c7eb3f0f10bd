import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sahm.states import (
    PRESETS,
    STATE_LABELS,
    CutoffSet,
    StateClassifier,
    classify,
    classify_metrics,
    derive_percentile_cutoffs,
    label,
    load_cutoffs,
)
from sahm.trace import Trace

record = st.tuples(st.floats(0, 1), st.floats(0, 1000), st.floats(0, 1), st.floats(0, 1))


def _interp(sorted_vals, q):
    # inclusive linear interpolation between order statistics, written out by hand
    pos = q * (len(sorted_vals) - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(sorted_vals) - 1)
    return sorted_vals[lo] + (pos - lo) * (sorted_vals[hi] - sorted_vals[lo])


class TestClassify:
    def test_all_low(self, intuitive):
        assert classify((0.005, 0.5, 0.01, 0.05), intuitive) == 0

    def test_branch_only(self, intuitive):
        assert classify((0.02, 0.5, 0.01, 0.05), intuitive) == 1

    def test_equality_is_low(self, intuitive):
        assert classify((0.01, 1.0, 0.02, 0.10), intuitive) == 0

    def test_each_bit(self, intuitive):
        base = [0.0, 0.0, 0.0, 0.0]
        for b, hi in enumerate((0.5, 5.0, 0.5, 0.5)):
            r = list(base)
            r[b] = hi
            assert classify(r, intuitive) == 1 << b

    @given(rows=st.lists(record, min_size=1, max_size=40), cut=st.sampled_from(sorted(PRESETS)))
    def test_vectorised_matches_scalar(self, rows, cut):
        c = PRESETS[cut]
        assert classify_metrics(np.array(rows), c).tolist() == [classify(r, c) for r in rows]

    @given(r=record, bump=st.floats(0, 10), which=st.integers(0, 3), cut=st.sampled_from(sorted(PRESETS)))
    def test_monotone(self, r, bump, which, cut):
        c = PRESETS[cut]
        raised = list(r)
        raised[which] += bump
        before, after = classify(r, c), classify(raised, c)
        assert before & after == before


class TestLabels:
    def test_examples(self):
        assert label(0) == "Low"
        assert label(9) == "L2+Branch"
        assert label(15) == "L2+L1D+L1I+Branch"
        assert label(12) == "L2+L1D"

    def test_injective(self):
        assert len(set(STATE_LABELS)) == 16

    @pytest.mark.parametrize("bad", [-1, 16, 3.0, True])
    def test_range(self, bad):
        with pytest.raises(ValueError):
            label(bad)


class TestCutoffs:
    def test_presets(self):
        assert PRESETS["intuitive"] == CutoffSet(0.01, 1, 0.02, 0.10)
        assert PRESETS["p25"] == CutoffSet(0.0003, 0.004, 0.005, 0.0364)
        assert PRESETS["p50"] == CutoffSet(0.0034, 0.009, 0.0099, 0.1847)
        assert load_cutoffs() == PRESETS["intuitive"]

    @pytest.mark.parametrize("bad", [0, -0.1, float("nan"), float("inf")])
    def test_strictly_positive(self, bad):
        with pytest.raises(ValueError):
            CutoffSet(bad, 1, 1, 1)

    def test_json_file(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"branch_mispredict": 0.02, "l1i_mpki": 2, "l1d_miss": 0.03, "l2_miss": 0.2}))
        assert load_cutoffs(p) == CutoffSet(0.02, 2, 0.03, 0.2)
        p.write_text(json.dumps({"branch_mispredict": 0.02}))
        with pytest.raises(ValueError, match="missing"):
            load_cutoffs(p)

    def test_unknown(self):
        with pytest.raises(ValueError, match="unknown cutoff preset"):
            load_cutoffs("p99")


class TestDerive:
    def test_median_of_three(self):
        pool = np.array([[1, 1, 1, 1], [2, 2, 2, 2], [3, 3, 3, 3]], dtype=float) / 10
        assert derive_percentile_cutoffs([pool], 0.5) == CutoffSet(0.2, 0.2, 0.2, 0.2)

    @given(c=st.floats(1e-6, 1), q=st.floats(0.01, 0.99), n=st.integers(1, 20))
    def test_constant_pool(self, c, q, n):
        cut = derive_percentile_cutoffs([Trace("c", np.full((n, 4), c))], q)
        assert cut.as_array().tolist() == [c] * 4

    @given(
        rows=st.lists(st.tuples(*[st.floats(1e-3, 1)] * 4), min_size=2, max_size=40),
        q=st.floats(0.01, 0.99),
        seed=st.integers(0, 1000),
    )
    def test_matches_hand_interpolation_and_is_permutation_invariant(self, rows, q, seed):
        pool = np.array(rows)
        got = derive_percentile_cutoffs([pool], q).as_array()
        want = [_interp(sorted(pool[:, j]), q) for j in range(4)]
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=0)
        perm = np.random.default_rng(seed).permutation(len(rows))
        split = len(rows) // 2
        shuffled = [pool[perm[:split]], pool[perm[split:]]]
        assert derive_percentile_cutoffs(shuffled, q) == derive_percentile_cutoffs([pool], q)

    def test_empty_pool(self):
        with pytest.raises(ValueError, match="empty pool"):
            derive_percentile_cutoffs([], 0.5)

    @pytest.mark.parametrize("q", [0.0, 1.0, -0.2, 1.5])
    def test_open_interval(self, q):
        with pytest.raises(ValueError):
            derive_percentile_cutoffs([np.ones((3, 4))], q)

    def test_zero_percentile_value(self):
        with pytest.raises(ValueError, match="non-positive"):
            derive_percentile_cutoffs([np.zeros((3, 4))], 0.5)


class TestStateClassifier:
    def test_predict_and_transform(self):
        X = np.array([[0.005, 0.5, 0.01, 0.05], [0.02, 0.5, 0.01, 0.5]])
        clf = StateClassifier().fit(X)
        assert clf.predict(X).tolist() == [0, 9]
        assert clf.transform(X).tolist() == [[0, 0, 0, 0], [1, 0, 0, 1]]
        assert clf.predict_labels(X) == ["Low", "L2+Branch"]

    def test_params_and_clone(self):
        clf = StateClassifier(cutoffs="p50", percentile=None)
        assert clf.get_params() == {"cutoffs": "p50", "percentile": None}
        c2 = clone(clf).set_params(percentile=0.5)
        assert c2.percentile == 0.5 and clf.percentile is None

    def test_percentile_fit(self):
        X = np.array([[1, 1, 1, 1], [2, 2, 2, 2], [3, 3, 3, 3]], dtype=float) / 10
        clf = StateClassifier(percentile=0.5).fit(X)
        assert clf.cutoffs_ == CutoffSet(0.2, 0.2, 0.2, 0.2)
        assert clf.predict(X).tolist() == [0, 0, 15]

    def test_accepts_traces(self, fixture12):
        clf = StateClassifier().fit(fixture12)
        assert clf.predict(fixture12).tolist() == [0, 0, 8, 8, 8, 1, 1, 0, 9, 9, 9, 9]
        assert clf.predict([fixture12, fixture12]).shape == (24,)

    def test_not_fitted_and_bad_input(self):
        with pytest.raises(NotFittedError):
            StateClassifier().predict(np.zeros((1, 4)))
        clf = StateClassifier().fit(np.zeros((1, 4)))
        with pytest.raises(ValueError, match="row 0"):
            clf.predict(np.array([[0, 0, 2.0, 0]]))
        with pytest.raises(ValueError):
            clf.predict(np.zeros((2, 3)))
