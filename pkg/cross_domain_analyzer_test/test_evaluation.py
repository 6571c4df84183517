import numpy as np
import pytest
import torch

from cross_domain_analyzer.errors import MissingFrameLabels
from cross_domain_analyzer.evaluation.evaluation_processor import evaluate_head, score_frames
from cross_domain_analyzer.evaluation.metrics import roc_auc
from cross_domain_analyzer.models.head_network import PredictionHead


@pytest.fixture
def head(tiny_spec):
    return PredictionHead(tiny_spec.dim_main, seed=0)


def test_frame_scores_cover_every_frame(head, test_target, tiny_config, feature_store):
    frame_scores = score_frames(head, test_target, feature_store, tiny_config)

    assert [item.video_id for item in frame_scores] == [r.video_id for r in test_target.records]
    for item, record in zip(frame_scores, test_target.records):
        assert len(item.scores) == record.n_frames
        assert np.all((item.scores >= 0) & (item.scores <= 1))
    assert feature_store.accessed == {tiny_config.main_stream}


def test_per_class_auc_pools_class_videos_with_normals(head, test_target, tiny_config, feature_store):
    metrics = evaluate_head(head, test_target, feature_store, tiny_config)
    frame_scores = score_frames(head, test_target, feature_store, tiny_config)

    records = test_target.records
    normal = [i for i, r in enumerate(records) if r.anomaly_class is None]
    for name, auc in metrics["per_class_auc"].items():
        chosen = normal + [i for i, r in enumerate(records) if r.anomaly_class == name]
        expected = roc_auc(
            np.concatenate([frame_scores[i].scores for i in chosen]),
            np.concatenate([records[i].frame_labels for i in chosen]),
        )
        assert auc == pytest.approx(expected)
    assert set(metrics["per_class_auc"]) <= {r.anomaly_class for r in records if r.anomaly_class}
    assert metrics["n_videos"] == len(records)
    assert metrics["n_frames"] == sum(r.n_frames for r in records)


def test_constant_head_scores_chance(head, test_target, tiny_config, feature_store):
    with torch.no_grad():
        head.classifier[3].weight.zero_()
        head.classifier[3].bias.zero_()

    metrics = evaluate_head(head, test_target, feature_store, tiny_config)

    assert metrics["auc"] == pytest.approx(0.5)
    assert all(value == pytest.approx(0.5) for value in metrics["per_class_auc"].values())


def test_evaluation_needs_frame_labels(head, labeled, tiny_config, feature_store):
    with pytest.raises(MissingFrameLabels):
        evaluate_head(head, labeled, feature_store, tiny_config)
