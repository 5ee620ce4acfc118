"""Training protocols on miniature synthetic datasets: determinism, frozen
backbones, split properties, and the limited-label sampling rules."""
import numpy as np
import pytest

from sleepssl.checkpoint import load_checkpoint, save_checkpoint
from sleepssl.epochs import EpochDataset
from sleepssl.errors import EmptyDataset, InsufficientClassSamples
from sleepssl.model import Model, preset_config
from sleepssl.synth import make_synthetic_dataset
from sleepssl.training import (SplitSpec, TrainConfig, _draw_limited,
                               clone_model, embed_dataset, export_embeddings,
                               finetune, limited_sample_experiment,
                               linear_eval, pretrain, split_dataset)
from sleepssl.transforms import TransformSpec


@pytest.fixture(scope="module")
def small_cfg():
    return TrainConfig(ssl_batch=8, cls_batch=8, ssl_epochs=2, cls_epochs=2,
                       ssl_lr=0.1, cls_lr=0.05, warmup_epochs=1, seed=5)


@pytest.fixture(scope="module")
def small_synth():
    return make_synthetic_dataset(classes=3, per_class=8, seed=20)


@pytest.fixture(scope="module")
def model_cfg():
    return preset_config("tiny", embedding_dim=16)


class TestSplitDataset:
    def test_disjoint_and_complete(self, small_synth):
        split = SplitSpec(test_fraction=0.25)
        train, test = split_dataset(small_synth, split, seed=1)
        merged = np.concatenate([train, test])
        assert set(merged.tolist()) == set(range(len(small_synth)))
        assert merged.size == len(small_synth)
        assert test.size == round(len(small_synth) * 0.25)

    def test_deterministic_in_seed(self, small_synth):
        split = SplitSpec()
        a = split_dataset(small_synth, split, seed=3)
        b = split_dataset(small_synth, split, seed=3)
        c = split_dataset(small_synth, split, seed=4)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])
        assert not np.array_equal(a[1], c[1])

    def test_subject_split_never_shares_sources(self, small_synth):
        # synthetic source_ids look like "synth:c0:3"; the prefix before the
        # first colon is the subject, so a subject split keys on it
        train, test = split_dataset(small_synth, SplitSpec(by="subject"), seed=0)
        train_subj = {small_synth.epochs[i].source_id.split(":")[0] for i in train}
        test_subj = {small_synth.epochs[i].source_id.split(":")[0] for i in test}
        assert not (train_subj & test_subj)

    def test_too_small_rejected(self, small_synth):
        with pytest.raises(EmptyDataset):
            split_dataset(EpochDataset(small_synth.epochs[:1]), SplitSpec(), 0)


class TestPretrain:
    def test_deterministic_and_checkpoint_identical(self, small_cfg, small_synth,
                                                    model_cfg, tmp_path):
        runs = []
        for i in range(2):
            model, losses = pretrain(small_cfg, small_synth, model_cfg)
            path = tmp_path / f"run{i}.ckpt"
            save_checkpoint(model, path)
            runs.append((model, losses, path.read_bytes()))
        assert runs[0][1] == runs[1][1]
        for name in runs[0][0].params:
            np.testing.assert_array_equal(runs[0][0].params[name].data,
                                          runs[1][0].params[name].data)
        assert runs[0][2] == runs[1][2]

    def test_checkpoint_round_trip_preserves_embeddings(self, small_cfg, small_synth,
                                                        model_cfg, tmp_path):
        model, _ = pretrain(small_cfg, small_synth, model_cfg)
        path = tmp_path / "model.ckpt"
        save_checkpoint(model, path)
        reloaded = load_checkpoint(path)
        np.testing.assert_array_equal(embed_dataset(model, small_synth),
                                      embed_dataset(reloaded, small_synth))

    def test_loss_history_length(self, small_cfg, small_synth, model_cfg):
        _, losses = pretrain(small_cfg, small_synth, model_cfg)
        assert len(losses) == small_cfg.ssl_epochs
        assert all(np.isfinite(v) for v in losses)

    def test_empty_dataset_rejected(self, small_cfg, model_cfg):
        with pytest.raises(EmptyDataset):
            pretrain(small_cfg, EpochDataset([]), model_cfg)

    def test_seed_changes_output(self, small_cfg, small_synth, model_cfg):
        from dataclasses import replace
        a, _ = pretrain(small_cfg, small_synth, model_cfg)
        b, _ = pretrain(replace(small_cfg, seed=small_cfg.seed + 1),
                        small_synth, model_cfg)
        assert any(
            not np.array_equal(a.params[n].data, b.params[n].data)
            for n in a.params
        )


class TestLinearEval:
    def test_backbone_untouched(self, small_cfg, small_synth, model_cfg):
        model = Model(model_cfg, seed=9)
        head_names = {n for n in model.params if n.startswith("clf.")}
        before = {n: p.data.copy() for n, p in model.params.items()}
        report = linear_eval(model, small_synth, SplitSpec(), small_cfg)
        for name, p in model.params.items():
            if name in head_names:
                continue
            np.testing.assert_array_equal(p.data, before[name], err_msg=name)
        assert any(
            not np.array_equal(model.params[n].data, before[n]) for n in head_names
        )
        assert 0.0 <= report.accuracy <= 1.0

    def test_deterministic(self, small_cfg, small_synth, model_cfg):
        reports = [
            linear_eval(Model(model_cfg, seed=9), small_synth, SplitSpec(), small_cfg)
            for _ in range(2)
        ]
        assert reports[0].accuracy == reports[1].accuracy
        np.testing.assert_array_equal(reports[0].confusion, reports[1].confusion)


class TestFinetune:
    def test_updates_backbone_and_reports(self, small_cfg, small_synth, model_cfg):
        model = Model(model_cfg, seed=9)
        before = {n: p.data.copy() for n, p in model.params.items()}
        report = finetune(model, small_synth, SplitSpec(), small_cfg)
        changed = [n for n, p in model.params.items()
                   if not np.array_equal(p.data, before[n])]
        assert any(not n.startswith("clf.") for n in changed)
        assert report.n_test == report.confusion.sum()


class TestCloneModel:
    def test_independent_copy(self, model_cfg):
        model = Model(model_cfg, seed=2)
        clone = clone_model(model)
        for name, p in model.params.items():
            np.testing.assert_array_equal(p.data, clone.params[name].data)
        clone.params["stem.w"].data += 1.0
        assert not np.array_equal(model.params["stem.w"].data,
                                  clone.params["stem.w"].data)


class TestDrawLimited:
    def test_k_per_class_from_pool_only(self):
        labels = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2, 0, 1, 2])
        pool = np.arange(9)  # exclude the last three
        rng = np.random.default_rng(0)
        subset = _draw_limited(labels, pool, k=2, rng=rng)
        assert subset.size == 6
        assert set(subset.tolist()) <= set(pool.tolist())
        values, counts = np.unique(labels[subset], return_counts=True)
        assert values.tolist() == [0, 1, 2]
        assert counts.tolist() == [2, 2, 2]
        assert np.unique(subset).size == subset.size  # no replacement

    def test_insufficient_samples_raise(self):
        labels = np.array([0, 0, 1])
        with pytest.raises(InsufficientClassSamples):
            _draw_limited(labels, np.arange(3), k=2, rng=np.random.default_rng(0))


class TestLimitedSampleExperiment:
    def test_arms_and_repetitions(self, small_cfg, small_synth, model_cfg):
        pretrained = Model(model_cfg, seed=1)
        arms = limited_sample_experiment(pretrained, small_synth, k_per_class=2,
                                         repetitions=2, cfg=small_cfg)
        assert set(arms) == {"random_init", "ssl_finetune"}
        for stats in arms.values():
            assert len(stats.accuracies) == 2
            assert len(stats.macro_f1s) == 2
            assert stats.mean_accuracy == pytest.approx(np.mean(stats.accuracies))
            assert stats.std_accuracy >= 0.0

    def test_pretrained_model_not_mutated(self, small_cfg, small_synth, model_cfg):
        pretrained = Model(model_cfg, seed=1)
        before = {n: p.data.copy() for n, p in pretrained.params.items()}
        limited_sample_experiment(pretrained, small_synth, k_per_class=1,
                                  repetitions=1, cfg=small_cfg)
        for name, p in pretrained.params.items():
            np.testing.assert_array_equal(p.data, before[name], err_msg=name)


class TestExportEmbeddings:
    def test_tsv_matches_recomputation(self, small_synth, model_cfg, tmp_path):
        model = Model(model_cfg, seed=4)
        out = tmp_path / "emb.tsv"
        export_embeddings(model, small_synth, out)
        lines = out.read_text().splitlines()
        assert len(lines) == len(small_synth) + 1
        header = lines[0].split("\t")
        assert header[:2] == ["source_id", "label"]
        assert len(header) == 2 + model_cfg.embedding_dim

        expected = embed_dataset(model, small_synth)
        for row, ep, vec in zip(lines[1:], small_synth.epochs, expected):
            fields = row.split("\t")
            assert fields[0] == ep.source_id
            assert int(fields[1]) == int(ep.label)
            np.testing.assert_allclose(
                np.array(fields[2:], dtype=np.float64), vec, rtol=1e-6, atol=1e-9)

    def test_unlabeled_rows_use_minus_one(self, model_cfg, tmp_path):
        data = make_synthetic_dataset(classes=2, per_class=2, seed=3, labeled=False)
        model = Model(model_cfg, seed=4)
        out = tmp_path / "emb.tsv"
        export_embeddings(model, data, out)
        labels = [line.split("\t")[1] for line in out.read_text().splitlines()[1:]]
        assert set(labels) == {"-1"}
