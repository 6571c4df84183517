"""
Module to initialize data handling.
"""

from cross_domain_analyzer.data.video_data import (
    HeadOutput, PseudoLabelSet, SegmentBatch, UncertaintyScores, VideoRecord, validate_record
)
from cross_domain_analyzer.data.corpus_manifest import CorpusManifest, load_manifest, save_manifest
from cross_domain_analyzer.data.feature_store import (
    FeatureBlob, FeatureStore, decode_blob, encode_blob, pool_segments, read_blob, write_blob
)
from cross_domain_analyzer.data.synthetic_corpus_generator import SynthSpec, SyntheticCorpusGenerator, generate
