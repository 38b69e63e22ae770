import numpy as np
import pytest
from conftest import geometric_noise_dataset

from wssda import (
    ConfigError,
    FeatureExtractor,
    LabeledDataset,
    ModelFormatError,
    ModelMeta,
    SynthSpec,
    TrainConfig,
    TrainingError,
    TreeParams,
    extract,
    generate_synthetic,
    load_model,
    nn_classify,
    partition_dataset,
    save_model,
    train,
    train_detailed,
    within_subclass_scatter,
)


def trained(seed=0, d=6, c=8, h=2, g=6, dim=16, mode="regularized", strategy="kd", **kw):
    ds = generate_synthetic(SynthSpec(c, h, g, dim, seed=seed))
    part = partition_dataset(ds, TreeParams(h=h, seed=seed), strategy)
    fx, details = train_detailed(ds, part, TrainConfig(d=d, mode=mode, **kw))
    return ds, part, fx, details


# ------------------------------------------------------------------ training


def test_train_separable_sanity_zero_error():
    # two far-apart classes in 2-D, h=1, d=1: every probe lands on its class
    rng = np.random.default_rng(0)
    a = rng.normal(size=(6, 2)) * 0.1 + np.array([10.0, 0.0])
    b = rng.normal(size=(6, 2)) * 0.1 + np.array([0.0, 10.0])
    ds = LabeledDataset(np.vstack([a, b]), np.repeat([0, 1], 6))
    part = partition_dataset(ds, TreeParams(h=1), "kd")
    fx = train(ds, part, TrainConfig(d=1))
    gallery = extract(fx, ds.samples[[0, 6]])
    errs = 0
    for i in range(ds.n):
        z = extract(fx, ds.samples[i])
        errs += nn_classify(gallery, np.array([0, 1]), z) != ds.class_labels[i]
    assert errs == 0


def test_train_deterministic_bitwise():
    _, _, fx_a, _ = trained(seed=9)
    _, _, fx_b, _ = trained(seed=9)
    assert np.array_equal(fx_a.projection, fx_b.projection)


def test_train_nested_d_slices_exactly():
    ds, part, fx, _ = trained(seed=4, d=10)
    fx3 = train(ds, part, TrainConfig(d=3))
    assert np.array_equal(fx3.projection, fx.projection[:, :3])


def test_whitening_identity_below_pivot():
    ds = geometric_noise_dataset(seed=2)
    part = partition_dataset(ds, TreeParams(h=2, seed=0), "provided")
    fx, details = train_detailed(ds, part, TrainConfig(d=5))
    sws = within_subclass_scatter(ds, part).matrix
    es, model = details.spectrum, details.model
    whitener = es.eigenvectors * model.weights
    diag = np.diag(whitener.T @ sws @ whitener)
    m = model.pivot
    r = es.rank
    assert np.allclose(diag[: m - 1], 1.0, atol=1e-6)
    assert np.all(diag[m - 1 : r] > 0)
    assert np.all(diag[m - 1 : r] <= 1.0 + 1e-9)
    assert np.all(diag[r:] <= 1e-10)


def test_train_modes_differ():
    ds, part, fx_reg, _ = trained(seed=6)
    fx_tr = train(ds, part, TrainConfig(d=6, mode="truncated"))
    assert not np.allclose(fx_reg.projection, fx_tr.projection)


def test_train_second_stage_bs_runs():
    ds, part, _, _ = trained(seed=3)
    fx = train(ds, part, TrainConfig(d=4, second_stage="bs"))
    assert fx.projection.shape == (16, 4)


def test_train_rejects_bad_config():
    ds, part, _, _ = trained(seed=1)
    with pytest.raises(ConfigError):
        train(ds, part, TrainConfig(d=0))
    with pytest.raises(ConfigError):
        train(ds, part, TrainConfig(d=17))  # above the data dimension
    with pytest.raises(ConfigError):
        train(ds, part, TrainConfig(d=2, mode="banana"))


def test_train_zero_scatter_raises():
    # every subclass a singleton: within-subclass scatter is exactly zero
    ds = LabeledDataset(np.random.default_rng(0).normal(size=(4, 3)), np.array([0, 0, 1, 1]))
    part = partition_dataset(ds, TreeParams(h=2, seed=0), "kd")
    with pytest.raises(TrainingError, match="zero"):
        train(ds, part, TrainConfig(d=2))
    with pytest.raises(TrainingError):
        train(ds, part, TrainConfig(d=2, mode="truncated"))


def test_train_flat_spectrum_gate():
    # one class, subclass mean zero, samples +-e_k: the scatter is exactly
    # isotropic, so the spectrum is flat at rank 3 and hits the pivot path
    wide = np.vstack([np.eye(3), -np.eye(3)])
    ds3 = LabeledDataset(wide, np.zeros(6, dtype=int), np.zeros(6, dtype=int))
    part3 = partition_dataset(ds3, TreeParams(h=1), "provided")
    with pytest.raises(TrainingError, match="flat"):
        train(ds3, part3, TrainConfig(d=2))
    fx = train(ds3, part3, TrainConfig(d=2, allow_flat_spectrum=True))
    assert fx.projection.shape == (3, 2)


def test_train_short_rank_fallback():
    # 2-D data can never reach rank 3; training must still work
    rng = np.random.default_rng(5)
    samples = np.vstack([rng.normal(size=(5, 2)), rng.normal(size=(5, 2)) + 8.0])
    ds = LabeledDataset(samples, np.repeat([0, 1], 5))
    part = partition_dataset(ds, TreeParams(h=1), "kd")
    fx, details = train_detailed(ds, part, TrainConfig(d=2))
    assert details.model.pivot is None
    assert np.isfinite(fx.projection).all()


# ------------------------------------------------------------------ extraction


def test_extract_zero_maps_to_zero():
    _, _, fx, _ = trained(seed=0)
    assert np.array_equal(extract(fx, np.zeros(fx.dim)), np.zeros(fx.d))


def test_extract_identity_prefix():
    meta = ModelMeta("regularized", "kd", 1, 1.0, "ts", 4, 2, 8)
    fx = FeatureExtractor(np.eye(4)[:, :2], meta)
    z = extract(fx, np.array([1.0, 0.0, 0.0, 0.0]))
    assert z.tolist() == [1.0, 0.0]


def test_extract_matches_dot_product_oracle():
    _, _, fx, _ = trained(seed=7)
    rng = np.random.default_rng(0)
    x = rng.normal(size=fx.dim)
    naive = np.array([float(fx.projection[:, k] @ x) for k in range(fx.d)])
    assert np.max(np.abs(extract(fx, x) - naive)) <= 1e-12


def test_extract_batch_matches_single():
    _, _, fx, _ = trained(seed=8)
    xs = np.random.default_rng(1).normal(size=(5, fx.dim))
    batch = extract(fx, xs)
    for i in range(5):
        assert np.allclose(batch[i], extract(fx, xs[i]), atol=1e-12)


def test_extract_dimension_mismatch():
    _, _, fx, _ = trained(seed=0)
    with pytest.raises(ValueError):
        extract(fx, np.zeros(fx.dim + 1))


# ------------------------------------------------------------------ model files


def test_model_round_trip_bitwise(tmp_path):
    _, _, fx, _ = trained(seed=11, strategy="kmeans")
    path = str(tmp_path / "m.bin")
    save_model(fx, path)
    back = load_model(path)
    assert np.array_equal(back.projection, fx.projection)
    assert back.meta == fx.meta


def test_model_truncated_file_rejected(tmp_path):
    _, _, fx, _ = trained(seed=11)
    path = str(tmp_path / "m.bin")
    save_model(fx, path)
    blob = open(path, "rb").read()
    cut = path + ".cut"
    open(cut, "wb").write(blob[: len(blob) // 2])
    with pytest.raises(ModelFormatError, match="truncated"):
        load_model(cut)


def test_model_version_bump_rejected(tmp_path):
    _, _, fx, _ = trained(seed=11)
    path = str(tmp_path / "m.bin")
    save_model(fx, path)
    blob = bytearray(open(path, "rb").read())
    blob[6] = 99  # version field follows the 6-byte magic
    open(path, "wb").write(bytes(blob))
    with pytest.raises(ModelFormatError, match="version"):
        load_model(path)


def test_model_bad_magic_rejected(tmp_path):
    path = str(tmp_path / "m.bin")
    open(path, "wb").write(b"NOTAMODEL" + bytes(64))
    with pytest.raises(ModelFormatError, match="magic"):
        load_model(path)


def test_model_trailing_bytes_rejected(tmp_path):
    _, _, fx, _ = trained(seed=11)
    path = str(tmp_path / "m.bin")
    save_model(fx, path)
    with open(path, "ab") as fh:
        fh.write(b"\x00")
    with pytest.raises(ModelFormatError, match="trailing"):
        load_model(path)
