"""
Open-set split construction: some anomaly classes are labeled, the rest become external data.
"""

import logging
from dataclasses import replace
from typing import Tuple

import numpy as np

from cross_domain_analyzer.data.corpus_manifest import CorpusManifest
from cross_domain_analyzer.errors import TooFewClasses, TooFewNormals
from cross_domain_analyzer.logger import logger

logger = logging.getLogger(__name__)


def open_set_split(corpus: CorpusManifest, c: int, seed: int) -> Tuple[CorpusManifest, CorpusManifest]:
    """
    Draws ``c`` anomaly classes uniformly at random into the weakly-labeled set and puts
    the remaining classes into the external set. Each side receives as many normal videos
    as it has anomalous ones; external records lose their weak labels.

    Parameters
    ----------
    corpus : CorpusManifest
        Corpus with weak labels and anomaly classes.
    c : int
        Number of labeled anomaly classes.
    seed : int
        Seed of the class draw and the normal subsampling.

    Returns
    -------
    tuple
        ``(labeled, external)`` manifests.
    """
    classes = sorted(corpus.classes or {record.anomaly_class for record in corpus.abnormal if record.anomaly_class})
    if not classes:
        raise TooFewClasses("Corpus declares no anomaly classes.")
    if not 1 <= c <= len(classes):
        raise TooFewClasses(f"Requested {c} labeled classes, corpus has {len(classes)}.")

    rng = np.random.default_rng(seed)
    labeled_classes = sorted(rng.choice(classes, size=c, replace=False).tolist())
    external_classes = [name for name in classes if name not in labeled_classes]

    labeled_abnormal = [r for r in corpus.abnormal if r.anomaly_class in labeled_classes]
    external_abnormal = [r for r in corpus.abnormal if r.anomaly_class in external_classes]

    normal = corpus.normal
    needed = len(labeled_abnormal) + len(external_abnormal)
    if len(normal) < needed:
        raise TooFewNormals(f"Need {needed} normal videos to balance the split, corpus has {len(normal)}.")
    order = rng.permutation(len(normal))
    labeled_normal = [normal[i] for i in order[:len(labeled_abnormal)]]
    external_normal = [normal[i] for i in order[len(labeled_abnormal):needed]]

    labeled = replace(
        corpus,
        records=labeled_abnormal + labeled_normal,
        labeled=True,
        classes=labeled_classes,
    )
    external = replace(
        corpus,
        records=[replace(record, weak_label=None) for record in external_abnormal + external_normal],
        labeled=False,
        classes=external_classes,
    )
    logger.info(
        "Open-set split with c=%d: labeled classes %s (%d videos), external classes %s (%d videos).",
        c, labeled_classes, len(labeled), external_classes, len(external)
    )
    return labeled, external
