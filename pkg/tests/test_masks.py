import numpy as np
import pytest

from snlkit.flow import build_masks, natural_ordering, reversed_ordering


def enumerate_paths(mask_set):
    """Independent oracle: explicit path enumeration from inputs to outputs."""
    d = mask_set.data_dim
    reach = {("in", j): {j} for j in range(d)}
    layers = mask_set.hidden_masks
    prev = [reach[("in", j)] for j in range(d)]
    for mask in layers:
        nxt = []
        for unit in range(mask.shape[1]):
            sources = set()
            for src in range(mask.shape[0]):
                if mask[src, unit]:
                    sources |= prev[src]
            nxt.append(sources)
        prev = nxt
    out = []
    for head in range(mask_set.out_mask.shape[1]):
        sources = set()
        for src in range(mask_set.out_mask.shape[0]):
            if mask_set.out_mask[src, head]:
                sources |= prev[src]
        out.append(sources)
    return out


def test_first_coordinate_head_sees_no_data_inputs():
    ms = build_masks(2, [4], 3)
    conn = ms.data_to_output_connectivity()
    assert not conn[:, 0].any()


def test_one_dimensional_data_masks_out_every_data_connection():
    ms = build_masks(1, [8, 8], 2)
    assert not ms.hidden_masks[0].any()
    # outputs still reachable from the hidden stack (conditioner path)
    assert ms.out_mask.all()


def test_path_enumeration_oracle_three_dims():
    ms = build_masks(3, [4, 4], 2)
    reachable = enumerate_paths(ms)
    for i in range(3):
        for j in range(3):
            if j >= i:
                assert j not in reachable[i], f"input {j} reaches head {i}"


@pytest.mark.parametrize("dim,hidden", [(2, [5]), (4, [7, 6]), (6, [50, 50])])
def test_degree_rule_on_every_mask(dim, hidden):
    ms = build_masks(dim, hidden, 3)
    degs = [ms.input_degrees] + ms.hidden_degrees
    for mask, (prev, cur) in zip(ms.hidden_masks, zip(degs[:-1], degs[1:])):
        expected = prev[:, None] <= cur[None, :]
        assert np.array_equal(mask.astype(bool), expected)
    assert np.array_equal(ms.out_mask.astype(bool),
                          ms.hidden_degrees[-1][:, None] < ms.input_degrees[None, :])


def test_hidden_degrees_cycle_and_conditioner_unmasked():
    ms = build_masks(4, [7], 2)
    assert list(ms.hidden_degrees[0]) == [1, 2, 3, 1, 2, 3, 1]
    assert ms.cond_mask().all() and ms.cond_mask().shape == (2, 7)


def test_orderings():
    assert list(natural_ordering(3)) == [1, 2, 3]
    assert list(reversed_ordering(3)) == [3, 2, 1]
    ms = build_masks(3, [4], 1, ordering=[3, 1, 2])
    assert list(ms.input_degrees) == [3, 1, 2]


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_masks(0, [4], 1)
    with pytest.raises(ValueError):
        build_masks(2, [0], 1)
    with pytest.raises(ValueError):
        build_masks(3, [4], 1, ordering=[1, 1, 2])
