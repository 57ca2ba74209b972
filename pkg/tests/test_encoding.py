import numpy as np
import pytest
from hypothesis import given, strategies as st

from foe_predict.encoding import (Composite, EmptyTrainingSet, LastNNumeric, LastNOneHot, TimeDeltas,
                                  config_from_dict, encoder_from_dict, fit)
from foe_predict.event_log import Timestamp, make_trace

from oracles import random_trace


@pytest.fixture
def trace():
    return make_trace("t", [
        {"act": "a", "res": "x", "cost": 1.0, "time:timestamp": Timestamp(0)},
        {"act": "b", "cost": 2.5, "time:timestamp": Timestamp(100)},
        {"act": "a", "res": "y", "time:timestamp": Timestamp(350)},
    ])


def test_onehot_layout(trace):
    enc = fit(LastNOneHot(("act", "res"), n=2), [trace.events])
    assert enc.feature_names == ["act@-2=a", "act@-2=b", "res@-2=x", "res@-2=y",
                                 "act@-1=a", "act@-1=b", "res@-1=x", "res@-1=y"]
    assert enc.encode(trace.events[:3]).tolist() == [0, 1, 0, 0, 1, 0, 0, 1]
    # shorter prefixes are left padded with zeros
    assert enc.encode(trace.events[:1]).tolist() == [0, 0, 0, 0, 1, 0, 1, 0]


def test_onehot_unseen_value_is_zero(trace):
    enc = fit(LastNOneHot(("act",), n=1), [trace.events[:1]])
    other = make_trace("u", [{"act": "zzz"}])
    assert enc.encode(other.events).tolist() == [0.0]


def test_default_n_is_longest_prefix(trace):
    enc = fit(LastNOneHot(("act",)), [trace.events[:2], trace.events[:3]])
    assert enc.n == 3
    assert fit(LastNOneHot(("act",)), [trace.events[:2]], default_n=7).n == 7


def test_numeric_and_deltas(trace):
    num = fit(LastNNumeric(("cost",), n=3), [trace.events])
    assert num.feature_names == ["cost@-3", "cost@-2", "cost@-1"]
    assert num.encode(trace.events).tolist() == [1.0, 2.5, 0.0]
    dt = fit(TimeDeltas(n=3), [trace.events])
    assert dt.encode(trace.events).tolist() == [0.0, 100.0, 250.0]
    assert dt.encode(trace.events[:2]).tolist() == [0.0, 0.0, 100.0]


def test_composite_concatenates(trace):
    cfg = Composite((LastNOneHot(("act",), n=1), LastNNumeric(("cost",), n=1)))
    enc = fit(cfg, [trace.events])
    assert enc.width == 3
    assert enc.encode(trace.events[:2]).tolist() == [0.0, 1.0, 2.5]


def test_empty_training_set():
    with pytest.raises(EmptyTrainingSet):
        fit(LastNOneHot(("act",)), [])


def test_bad_n():
    with pytest.raises(ValueError):
        fit(LastNOneHot(("act",), n=0), [[]])


def test_config_from_dict():
    cfg = config_from_dict({"type": "composite", "parts": [
        {"type": "onehot", "attributes": ["a"], "n": 2}, {"type": "deltas"}]})
    assert cfg == Composite((LastNOneHot(("a",), 2), TimeDeltas(None)))
    with pytest.raises(ValueError):
        config_from_dict({"type": "embedding"})


@given(st.integers(0, 2**32 - 1))
def test_serialisation_round_trip(seed):
    rng = np.random.default_rng(seed)
    traces = [random_trace(rng, max_len=5, tid=str(i)) for i in range(4)]
    prefixes = [t.events for t in traces]
    cfg = Composite((LastNOneHot(("act", "res", "cost")), LastNNumeric(("cost",), 2), TimeDeltas(2)))
    enc = fit(cfg, prefixes)
    again = encoder_from_dict(enc.to_dict())
    assert again.feature_names == enc.feature_names
    assert np.array_equal(again.encode_many(prefixes), enc.encode_many(prefixes))


@given(st.integers(0, 2**32 - 1))
def test_width_fixed_and_only_last_n_matter(seed):
    rng = np.random.default_rng(seed)
    t = random_trace(rng, max_len=8)
    enc = fit(LastNOneHot(("act", "res"), n=2), [t.events])
    for k in range(1, len(t) + 1):
        vec = enc.encode(t.events[:k])
        assert vec.shape == (enc.width,)
        assert np.array_equal(vec, enc.encode(t.events[max(0, k - 2):k]))


def test_vocabulary_is_sorted():
    t = make_trace("v", [{"act": "B"}, {"act": "A"}])
    enc = fit(LastNOneHot(("act",), n=1), [t.events])
    assert enc.feature_names == ["act@-1=A", "act@-1=B"]


def test_deltas_between_consecutive_events():
    t = make_trace("d", [{"time:timestamp": Timestamp(ms)} for ms in (0, 1000, 4000)])
    enc = fit(TimeDeltas(n=2), [t.events])
    assert enc.encode(t.events).tolist() == [1000.0, 3000.0]
