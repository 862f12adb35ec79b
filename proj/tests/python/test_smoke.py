import math

import numpy as np
import pytest

import pcgc


@pytest.fixture(scope="module")
def corpus():
    return [pcgc.generate_cloud(k, points=600, depth=4, seed=s) for s in range(1, 4) for k in ("plane", "sphere")]


@pytest.fixture(scope="module")
def checkpoints(corpus):
    acnp = pcgc.train_acnp(corpus, epochs=2, ancestors=2)
    base = pcgc.train_model(corpus, epochs=2, ancestors=2)
    enhanced = pcgc.train_model(corpus, epochs=2, ancestors=2, acnp=acnp)
    return base, enhanced, acnp


def test_quantize_unit_cube():
    rng = np.random.default_rng(0)
    cloud = pcgc.quantize(rng.random((1000, 3)), 6)
    pts = cloud.points
    assert pts.shape[1] == 3 and pts.max() <= 63
    assert len(np.unique(pts, axis=0)) == len(pts)
    assert [tuple(p) for p in pts] == sorted(tuple(p) for p in pts)
    back = pcgc.dequantize(cloud)
    assert back.shape == pts.shape


def test_bad_input_raises_value_error():
    with pytest.raises(ValueError):
        pcgc.quantize(np.zeros((4, 2)), 6)
    with pytest.raises(pcgc.DataError):
        pcgc.generate_cloud("torus")


def test_round_trip_both_kinds(corpus, checkpoints):
    base, enhanced, acnp = checkpoints
    for models in (pcgc.CodecModels.from_bytes(base), pcgc.CodecModels.from_bytes(enhanced, acnp)):
        for cloud in corpus:
            data, stats = pcgc.encode_with_stats(cloud, models)
            assert pcgc.decode(data, models) == cloud
            assert stats["payload_bits"] <= stats["quantized_bits"] + 32
            assert data == pcgc.encode(cloud, models)


def test_wrong_model_is_rejected(corpus, checkpoints):
    base, enhanced, acnp = checkpoints
    data = pcgc.encode(corpus[0], pcgc.CodecModels.from_bytes(enhanced, acnp))
    with pytest.raises(pcgc.VerificationError):
        pcgc.decode(data, pcgc.CodecModels.from_bytes(base))


def test_training_is_deterministic(corpus):
    assert pcgc.train_acnp(corpus, epochs=1, ancestors=2) == pcgc.train_acnp(corpus, epochs=1, ancestors=2)


def test_number_vector():
    o = pcgc.gaussian_map(3.0)
    assert abs(o[2] - 0.398942) < 1e-6
    v = pcgc.number_vector(o)
    assert abs(sum(v) - 1.0) < 1e-12
    assert int(np.argmax(v)) == 2
    assert pcgc.gaussian_center(-0.4) == 1


def test_ce_paradox():
    r = pcgc.demo_ce_paradox()
    assert r["loss_a"] == r["loss_b"]
    assert abs(r["loss_a"] + math.log2(0.4)) < 1e-12
    assert r["count_error_a"] == 0.0
    assert abs(r["count_error_b"] - 3.9) < 1e-12
