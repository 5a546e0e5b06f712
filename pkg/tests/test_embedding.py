import numpy as np
import pytest

from gsdkit import (GsdConfig, HybridEmbedding, LabelMap, PyramidSpec, assemble,
                    compute_batch, downsample, one_hot, split)

from conftest import random_instances


def make_embedding(rng, k=3, h=8, w=8, channels=12):
    labels = rng.integers(0, k, size=(h, w)).astype(np.int32)
    oh = one_hot(LabelMap(labels=labels, num_classes=k))[None]
    desc = rng.standard_normal((1, channels, h, w)).astype(np.float32)
    return oh, desc


def test_channel_arithmetic(rng):
    labels = rng.integers(0, 3, size=(32, 32)).astype(np.int32)
    oh = one_hot(LabelMap(labels=labels, num_classes=3))[None]
    dt = compute_batch(random_instances(rng, 32, 32)[None], GsdConfig())
    emb = assemble(oh, dt)
    assert emb.values.shape == (1, 3 + 72, 32, 32)
    assert emb.split == 3


def test_split_roundtrip(rng):
    oh, desc = make_embedding(rng)
    emb = assemble(oh, desc)
    back_oh, back_desc = split(emb)
    assert np.array_equal(back_oh, oh)
    assert np.array_equal(back_desc, desc)


def test_elementwise_layout(rng):
    oh, desc = make_embedding(rng)
    emb = assemble(oh, desc)
    assert np.array_equal(emb.values[:, :3], oh)
    assert np.array_equal(emb.values[:, 3:], desc)


def test_shape_mismatch_rejected(rng):
    oh, desc = make_embedding(rng)
    with pytest.raises(ValueError, match="mismatch"):
        assemble(oh, desc[:, :, :4, :4])


def test_embedding_invariant_enforced(rng):
    bad = rng.random((1, 5, 4, 4)).astype(np.float32)
    with pytest.raises(ValueError):
        HybridEmbedding(values=bad, split=2)


def test_downsample_constant_class(rng):
    labels = np.full((4, 4), 2, dtype=np.int32)
    oh = one_hot(LabelMap(labels=labels, num_classes=3))[None]
    desc = np.ones((1, 2, 4, 4), dtype=np.float32)
    emb = assemble(oh, desc)
    (lvl,) = downsample(emb, PyramidSpec.from_square_sizes([2]))
    assert lvl.values.shape == (1, 5, 2, 2)
    assert (lvl.layout[0, 2] == 1).all()
    assert (lvl.descriptor == 1.0).all()  # block mean of ones stays ones


def test_downsample_majority_and_ties():
    labels = np.array([[0, 0], [1, 2]], dtype=np.int32)
    oh = one_hot(LabelMap(labels=labels, num_classes=3))[None]
    desc = np.zeros((1, 1, 2, 2), dtype=np.float32)
    (lvl,) = downsample(assemble(oh, desc), PyramidSpec.from_square_sizes([1]))
    assert lvl.layout[0, 0, 0, 0] == 1.0  # class 0 wins 2-1-1

    tie = np.array([[1, 1], [2, 2]], dtype=np.int32)
    oh = one_hot(LabelMap(labels=tie, num_classes=3))[None]
    (lvl,) = downsample(assemble(oh, desc), PyramidSpec.from_square_sizes([1]))
    assert lvl.layout[0, 1, 0, 0] == 1.0  # tie goes to the lowest id


def test_downsample_block_mean(rng):
    oh, desc = make_embedding(rng, h=4, w=4, channels=2)
    emb = assemble(oh, desc)
    (lvl,) = downsample(emb, PyramidSpec.from_square_sizes([2]))
    blocks = desc.astype(np.float64).reshape(1, 2, 2, 2, 2, 2).mean(axis=(3, 5))
    assert np.allclose(lvl.descriptor, blocks.astype(np.float32), atol=0)


def test_one_hot_property_at_every_scale(rng):
    oh, desc = make_embedding(rng, k=4, h=16, w=16)
    emb = assemble(oh, desc)
    for lvl in downsample(emb, PyramidSpec.from_square_sizes([16, 8, 4, 2, 1])):
        assert (lvl.layout.sum(axis=1) == 1.0).all()


def test_constant_block_upsample_identity(rng):
    # downsample then nearest-neighbor upsample restores block-constant input
    labels = np.repeat(np.repeat(rng.integers(0, 3, (4, 4)), 2, 0), 2, 1).astype(np.int32)
    oh = one_hot(LabelMap(labels=labels, num_classes=3))[None]
    desc = np.repeat(np.repeat(rng.random((1, 2, 4, 4)), 2, 2), 2, 3).astype(np.float32)
    emb = assemble(oh, desc)
    (lvl,) = downsample(emb, PyramidSpec.from_square_sizes([4]))
    up = np.repeat(np.repeat(lvl.values, 2, 2), 2, 3)
    assert np.allclose(up, emb.values, atol=1e-7)


def test_non_dividing_scale_rejected(rng):
    oh, desc = make_embedding(rng, h=8, w=8)
    emb = assemble(oh, desc)
    with pytest.raises(ValueError, match="divide"):
        downsample(emb, PyramidSpec.from_square_sizes([3]))
    with pytest.raises(ValueError, match="divide"):
        PyramidSpec.from_square_sizes([8, 3])


def test_rectangular_scales(rng):
    oh, desc = make_embedding(rng, h=8, w=4)
    emb = assemble(oh, desc)
    levels = downsample(emb, PyramidSpec(scales=((4, 2), (2, 1))))
    assert levels[0].values.shape[2:] == (4, 2)
    assert levels[1].values.shape[2:] == (2, 1)
