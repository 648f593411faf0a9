import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clustsum.partition import (
    LossKind,
    Partition,
    binder_disagreements,
    canonicalize,
    contingency,
    loss,
)

from conftest import (
    disagreeing_pairs,
    entropy_oracle,
    joint_entropy_oracle,
    label_lists,
    label_pairs,
    vi_oracle,
)


@pytest.mark.parametrize(
    "raw, expected",
    [([2, 2, 1, 3], [1, 1, 2, 3]), ([1, 1, 1], [1, 1, 1]), ([3, 1, 3, 2], [1, 2, 1, 3])],
)
def test_canonicalize_examples(raw, expected):
    assert canonicalize(raw).tolist() == expected


def test_canonicalize_empty():
    with pytest.raises(ValueError, match="empty partition"):
        canonicalize([])


def test_partition_fields():
    p = Partition([7, 7, 3, 9, 3])
    assert p.k == 3
    assert p.n == 5
    assert p.cluster_sizes.tolist() == [2, 2, 1]
    assert p == Partition([0, 0, 1, 2, 1])
    assert hash(p) == hash(Partition([0, 0, 1, 2, 1]))
    with pytest.raises(ValueError):
        p.zero_based[0] = 5


@given(label_lists())
def test_canonical_form_properties(labels):
    p = canonicalize(labels)
    out = p.tolist()
    assert set(out) == set(range(1, p.k + 1))
    firsts = [out.index(k) for k in range(1, p.k + 1)]
    assert firsts == sorted(firsts)
    assert canonicalize(out).tolist() == out
    assert 1 <= p.k <= p.n
    assert p.cluster_sizes.sum() == p.n


@pytest.mark.parametrize(
    "a, z, table",
    [
        ([1, 1, 2, 2], [1, 2, 1, 2], [[1, 1], [1, 1]]),
        ([1, 1, 2], [1, 1, 2], [[2, 0], [0, 1]]),
        ([1, 1, 1, 1], [1, 1, 2, 2], [[2, 2]]),
    ],
)
def test_contingency_examples(a, z, table):
    t = contingency(a, z)
    assert t.counts.tolist() == table
    assert t.total == len(a)


def test_contingency_length_mismatch():
    with pytest.raises(ValueError, match="partition length mismatch"):
        contingency([1, 2], [1, 2, 3])
    with pytest.raises(ValueError, match="partition length mismatch"):
        loss([1, 2], [1, 2, 3], "vi")


@given(label_pairs())
def test_contingency_invariants(pair):
    a, z = pair
    t = contingency(a, z)
    assert t.total == len(a)
    assert (t.row_sums > 0).all() and (t.col_sums > 0).all()
    assert t.row_sums.tolist() == Partition(a).cluster_sizes.tolist()
    assert t.col_sums.tolist() == Partition(z).cluster_sizes.tolist()


def test_loss_examples():
    a, z = [1, 1, 2, 2], [1, 2, 1, 2]
    assert loss(a, z, LossKind.VI) == pytest.approx(2 * math.log(2), abs=1e-12)
    assert loss(a, z, LossKind.BINDER) == 0.25
    assert loss([1, 1, 1, 1], [1, 1, 2, 2], "vi") == pytest.approx(math.log(2), abs=1e-12)
    assert loss(a, z, "nvi") == pytest.approx(1.0, abs=1e-12)


@given(label_lists(), st.sampled_from(list(LossKind)))
def test_self_loss_is_exactly_zero(labels, kind):
    assert loss(labels, labels, kind) == 0.0


@given(label_pairs(max_n=25))
def test_losses_match_entropy_oracles(pair):
    a, z = pair
    ha, hz, haz = entropy_oracle(a), entropy_oracle(z), joint_entropy_oracle(a, z)
    vi = vi_oracle(a, z)
    assert loss(a, z, "vi") == pytest.approx(vi, abs=1e-12)
    assert loss(a, z, "vi") == pytest.approx(2 * haz - ha - hz, abs=1e-12)
    nvi = vi / haz if haz > 1e-15 else 0.0
    assert loss(a, z, "nvi") == pytest.approx(nvi, abs=1e-12)
    hi = max(ha, hz)
    nid = 1 - (ha + hz - haz) / hi if hi > 1e-15 else 0.0
    assert loss(a, z, "nid") == pytest.approx(nid, abs=1e-12)


@given(label_pairs(max_n=50))
def test_binder_pair_counting_exact(pair):
    a, z = pair
    n = len(a)
    count = disagreeing_pairs(a, z)
    assert binder_disagreements(a, z) == count
    scaled = loss(a, z, "binder") * n * n
    assert round(scaled) == count
    assert abs(scaled - count) < 1e-9


@given(label_pairs(), st.sampled_from(list(LossKind)), st.randoms(use_true_random=False))
def test_symmetry_and_permutation_invariance(pair, kind, rnd):
    a, z = pair
    perm_a = list(range(max(a) + 1))
    perm_z = list(range(max(z) + 1))
    rnd.shuffle(perm_a)
    rnd.shuffle(perm_z)
    a2 = [perm_a[x] + 10 for x in a]
    z2 = [perm_z[x] * 3 for x in z]
    base = loss(a, z, kind)
    assert loss(z, a, kind) == base
    assert loss(a2, z2, kind) == base
    assert loss(canonicalize(a2), canonicalize(z2), kind) == base


@given(label_pairs(max_n=40))
def test_ranges(pair):
    a, z = pair
    n = len(a)
    assert 0.0 <= loss(a, z, "vi") <= math.log(n) + 1e-12
    assert 0.0 <= loss(a, z, "binder") < 0.5
    for kind in ("nvi", "nid"):
        assert 0.0 <= loss(a, z, kind) <= 1.0


@settings(max_examples=200)
@given(st.data())
def test_vi_triangle_inequality(data):
    n = data.draw(st.integers(1, 30))
    lab = st.lists(st.integers(0, 5), min_size=n, max_size=n)
    a, b, c = data.draw(lab), data.draw(lab), data.draw(lab)
    assert loss(a, c, "vi") <= loss(a, b, "vi") + loss(b, c, "vi") + 1e-12


def test_loss_kind_parse():
    assert LossKind.parse("VI") is LossKind.VI
    assert LossKind.parse(LossKind.NID) is LossKind.NID
    with pytest.raises(ValueError, match="unknown loss"):
        LossKind.parse("zero-one")


def test_single_cluster_edge_cases():
    one = [1] * 5
    singles = [1, 2, 3, 4, 5]
    assert loss(one, one, "nvi") == 0.0
    assert loss(one, one, "nid") == 0.0
    assert loss(one, singles, "nid") == 1.0
    assert loss(one, singles, "vi") == pytest.approx(math.log(5))
    assert loss([1], [1], "binder") == 0.0
