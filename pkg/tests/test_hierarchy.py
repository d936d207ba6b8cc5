import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphbandit.hierarchy import (
    HierarchyScheduler,
    SchedulerError,
    Status,
    build,
    check_cover,
    choose_D,
    count_bad,
    feedback,
    route,
    serve,
)


def enumerate_bad(n_padded, labels):
    """Oracle: walk every (level, index) range and look for an adjacent label change."""
    L = int(math.log2(n_padded))
    y = list(labels) + [labels[-1]] * (n_padded - len(labels))
    bad = []
    for p in range(1, L + 1):
        size = 2 ** (L - p)
        for j in range(1, 2 ** p + 1):
            slots = range((j - 1) * size + 1, j * size + 1)
            if any(y[c - 1] != y[c] for c in slots if c + 1 in slots):
                bad.append((p, j))
    return bad


def play(s, c, rng, loss=0.5):
    arm, node = serve(s, c, rng)
    feedback(s, node, arm, loss)
    return arm, node


# --- build -------------------------------------------------------------------

def test_build_eight():
    s = build(8, K=2, D=5)
    assert s.L == 3 and s.n_padded == 8
    assert len(s.nodes) == 14
    assert [len(row) for row in s.levels] == [2, 4, 8]
    assert [v.status for v in s.nodes if v.status is Status.ACTIVE] == [Status.ACTIVE] * 2
    assert s.node(1, 1).status is Status.ACTIVE and s.node(1, 2).status is Status.ACTIVE


def test_build_two():
    s = build(2, K=3, D=1)
    assert s.L == 1 and len(s.nodes) == 2
    assert all(v.status is Status.ACTIVE for v in s.nodes)


def test_build_pads():
    s = build(5, K=2, D=3)
    assert s.n_padded == 8
    assert s.n == 5


def test_build_rejects_small():
    with pytest.raises(ValueError):
        build(1, K=2, D=3)


@pytest.mark.parametrize("n", [2, 3, 8, 100, 256])
def test_ranges(n):
    s = build(n, K=1, D=1)
    for v in s.nodes:
        assert v.size == 2 ** (s.L - v.level)
        assert v.lo == (v.index - 1) * v.size + 1


# --- route / serve / feedback ---------------------------------------------------

def test_route_fresh():
    s = build(8, K=2, D=10)
    assert route(s, 3) is s.node(1, 1)
    assert route(s, 5) is s.node(1, 2)
    assert (s.node(1, 1).lo, s.node(1, 1).hi) == (1, 4)


def test_route_after_retirement(rng):
    s = build(8, K=2, D=2)
    play(s, 1, rng)
    play(s, 2, rng)
    assert s.node(1, 1).status is Status.RETIRED
    assert route(s, 3) is s.node(2, 2)
    assert (s.node(2, 2).lo, s.node(2, 2).hi) == (3, 4)


def test_serve_first_call(rng):
    s = build(8, K=4, D=3)
    arm, node = serve(s, 6, rng)
    assert 1 <= arm <= 4
    feedback(s, node, arm, 1.0)
    assert node.handled == 1


def test_split_with_d_one(rng):
    s = build(4, K=2, D=1)
    play(s, 1, rng)
    assert route(s, 1) is s.node(2, 1)


def test_leaf_never_retires(rng):
    s = build(2, K=2, D=3)
    for _ in range(30):
        play(s, 1, rng)
    assert s.node(1, 1).handled == 30
    assert s.node(1, 1).status is Status.ACTIVE


def test_retire_at_threshold(rng):
    s = build(8, K=2, D=4)
    for _ in range(3):
        play(s, 1, rng)
    assert s.node(1, 1).status is Status.ACTIVE
    play(s, 1, rng)
    assert s.node(1, 1).status is Status.RETIRED
    assert s.node(2, 1).status is Status.ACTIVE and s.node(2, 2).status is Status.ACTIVE
    assert s.node(2, 1).learner.local_t == 0


def test_protocol_errors(rng):
    s = build(4, K=2, D=2)
    arm, node = serve(s, 1, rng)
    with pytest.raises(SchedulerError):
        serve(s, 2, rng)
    with pytest.raises(ValueError):
        feedback(s, node, arm, 1.5)
    feedback(s, node, arm, 0.0)
    with pytest.raises(SchedulerError):
        feedback(s, node, arm, 0.0)
    with pytest.raises(ValueError):
        route(s, 5)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 70), st.integers(1, 12), st.integers(1, 400), st.integers(0, 2**31 - 1))
def test_scheduler_invariants(n, D, T, seed):
    rng = np.random.default_rng(seed)
    s = build(n, K=3, D=D)
    for _ in range(T):
        c = int(rng.integers(1, n + 1))
        before = s.activations
        play(s, c, rng, loss=float(rng.random()))
        if s.activations != before:
            check_cover(s)
    check_cover(s)
    assert s.activations <= 2 + 2 * math.ceil(T / D)
    assert sum(v.handled for v in s.nodes) == T
    for v in s.nodes:
        if v.status is Status.RETIRED:
            assert v.handled == D and v.level < s.L
        if v.level == s.L:
            assert v.status is not Status.RETIRED
        elif v.status is not Status.INACTIVE:
            assert v.handled <= D


def test_replay_is_bit_exact():
    def arms(seed):
        rng = np.random.default_rng(seed)
        ctx = np.random.default_rng(99).integers(1, 17, size=500)
        s = build(16, K=4, D=7)
        return [play(s, int(c), rng, loss=(int(c) % 3) / 2)[0] for c in ctx]

    assert arms(5) == arms(5)


def test_checkpoint_roundtrip(rng):
    s = build(16, K=3, D=4)
    for c in rng.integers(1, 17, size=60):
        play(s, int(c), rng)
    rec = json.loads(json.dumps(s.to_record()))
    r = HierarchyScheduler.from_record(rec)
    assert r.to_record() == s.to_record()
    check_cover(r)


# --- choose_D ------------------------------------------------------------------

def test_choose_d_zero_cut():
    assert choose_D(1000, 4, 0, 64) == 1000


def test_choose_d_general_example():
    expected = math.ceil((4096 * math.sqrt(4) / (2 * 2 * 6)) ** (2 / 3))
    assert expected == 49
    assert choose_D(4096, 4, 2, 64, "general") == 49


def test_choose_d_easy_example():
    assert math.ceil(math.sqrt(4096 * 4 / 2)) == 91
    assert choose_D(4096, 4, 2, 64, "easy") == 91


def test_choose_d_clamped():
    assert choose_D(1, 4, 5, 64) == 1
    assert choose_D(10, 100, 1, 2, "easy") == 10


# --- count_bad -----------------------------------------------------------------

def test_count_bad_uniform():
    s = build(16, K=2, D=1)
    assert count_bad(s, [0] * 16) == 0


def test_count_bad_worked_example():
    labels = [1, 1, 1, 2, 2, 2, 3, 3]
    s = build(8, K=2, D=1)
    assert enumerate_bad(8, labels) == [(1, 1), (1, 2), (2, 2)]
    assert count_bad(s, labels) == 3 <= 2 * 3


def test_count_bad_single_cut(rng):
    for _ in range(200):
        n = int(rng.integers(2, 257))
        cut = int(rng.integers(1, n)) if n > 1 else 1
        labels = [0] * cut + [1] * (n - cut)
        s = build(n, K=1, D=1)
        assert count_bad(s, labels) == len(enumerate_bad(s.n_padded, labels)) <= s.L


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 256), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_count_bad_matches_enumeration(n, n_labels, seed):
    labels = np.random.default_rng(seed).integers(n_labels, size=n).tolist()
    s = build(n, K=1, D=1)
    bad = count_bad(s, labels)
    f = sum(a != b for a, b in zip(labels, labels[1:]))
    assert bad == len(enumerate_bad(s.n_padded, labels))
    assert bad <= f * math.ceil(math.log2(s.n_padded))
