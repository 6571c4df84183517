"""
Module for reading precomputed feature streams and pooling them to segments.
"""

import hashlib
import logging
import os
import threading
from dataclasses import dataclass
from multiprocessing.pool import ThreadPool
from typing import Dict, Iterable, List, Optional, Set, Tuple

import numpy as np
from tqdm import tqdm

from cross_domain_analyzer.data.corpus_manifest import CorpusManifest
from cross_domain_analyzer.data.video_data import SegmentBatch, VideoRecord
from cross_domain_analyzer.errors import (
    BadMagic, EmptyBlob, InvalidConfig, MissingFeatures, NonFiniteData, ShapeMismatch
)
from cross_domain_analyzer.logger import logger

logger = logging.getLogger(__name__)

MAGIC = b"CDLF"
FORMAT_VERSION = 1
HEADER_BYTES = 16
FEATURE_DTYPE = np.dtype("<f4")
HEADER_DTYPE = np.dtype("<u4")


@dataclass(frozen=True)
class FeatureBlob:
    """
    Raw backbone output of one stream of one video, ``T x D`` float32.
    """
    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ShapeMismatch(f"Feature blob must be 2-D, got shape {self.data.shape}.")
        if self.data.shape[0] < 1:
            raise EmptyBlob("Feature blob has no timesteps.")
        if self.data.shape[1] < 1:
            raise ShapeMismatch("Feature blob has zero feature dimension.")
        if not np.all(np.isfinite(self.data)):
            raise NonFiniteData("Feature blob contains non-finite values.")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape


def encode_blob(data: np.ndarray) -> bytes:
    """
    Serializes a ``T x D`` matrix to the CDLF little-endian container.
    """
    matrix = np.ascontiguousarray(data, dtype=FEATURE_DTYPE)
    if matrix.ndim != 2:
        raise ShapeMismatch(f"Expected a 2-D matrix, got shape {matrix.shape}.")
    header = np.array([FORMAT_VERSION, matrix.shape[0], matrix.shape[1]], dtype=HEADER_DTYPE)
    return MAGIC + header.tobytes() + matrix.tobytes(order="C")


def decode_blob(payload: bytes) -> FeatureBlob:
    """
    Parses a CDLF container and validates header, length and values.
    """
    if len(payload) < HEADER_BYTES or payload[:4] != MAGIC:
        raise BadMagic("Feature file does not start with CDLF.")
    version, n_steps, n_dims = np.frombuffer(payload, dtype=HEADER_DTYPE, count=3, offset=4)
    if version != FORMAT_VERSION:
        raise BadMagic(f"Unsupported feature format version {version}.")
    expected = int(n_steps) * int(n_dims) * FEATURE_DTYPE.itemsize
    if len(payload) - HEADER_BYTES != expected:
        raise ShapeMismatch(
            f"Payload holds {len(payload) - HEADER_BYTES} bytes, header declares {n_steps}x{n_dims} floats."
        )
    if n_steps == 0:
        raise EmptyBlob("Feature file declares zero timesteps.")
    data = np.frombuffer(payload, dtype=FEATURE_DTYPE, offset=HEADER_BYTES).reshape(int(n_steps), int(n_dims))
    return FeatureBlob(data=data.astype(np.float32))


def write_blob(data: np.ndarray, locator: str):
    """
    Writes a matrix to ``locator`` in the CDLF format.
    """
    os.makedirs(os.path.dirname(os.path.abspath(locator)), exist_ok=True)
    with open(locator, "wb") as handle:
        handle.write(encode_blob(data))


def read_blob(locator: str) -> FeatureBlob:
    """
    Reads and validates a CDLF feature file.

    Parameters
    ----------
    locator : str
        Path of the feature file.

    Returns
    -------
    FeatureBlob
        Bit-exact decoded matrix.
    """
    with open(locator, "rb") as handle:
        return decode_blob(handle.read())


def pool_segments(blob: FeatureBlob, n_s: int) -> np.ndarray:
    """
    Linearly interpolates the rows of a blob to ``n_s`` segments with the end points
    aligned: row ``j`` samples position ``j * (T - 1) / (n_s - 1)``.

    Parameters
    ----------
    blob : FeatureBlob
        Raw ``T x D`` features.
    n_s : int
        Number of segments, at least 2.

    Returns
    -------
    numpy.ndarray
        ``n_s x D`` float32 matrix.
    """
    if n_s < 2:
        raise InvalidConfig(f"n_s must be at least 2, got {n_s}.")
    data = np.asarray(blob.data, dtype=np.float64)
    n_steps = data.shape[0]
    if n_steps == 0:
        raise EmptyBlob("Cannot pool an empty blob.")
    if n_steps == 1:
        return np.repeat(data, n_s, axis=0).astype(np.float32)

    positions = np.linspace(0.0, n_steps - 1, n_s)
    lower = np.floor(positions).astype(np.int64)
    upper = np.minimum(lower + 1, n_steps - 1)
    weight = (positions - lower)[:, None]
    pooled = data[lower] + weight * (data[upper] - data[lower])
    return pooled.astype(np.float32)


class FeatureStore:
    """
    Loads and pools feature blobs, caching pooled matrices by content hash and ``n_s``.

    Attributes
    ----------
    workers : int
        Number of reader threads used by ``load_corpus``.
    accessed : Set[str]
        Stream names read through this store.
    """
    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))
        self.accessed: Set[str] = set()
        self._cache: Dict[Tuple[str, int], np.ndarray] = {}
        self._lock = threading.Lock()

    def load(self, record: VideoRecord, stream: str, n_s: int) -> np.ndarray:
        """
        Pooled ``n_s x D`` matrix of one stream of one record.
        """
        locator = record.stream_refs.get(stream)
        if locator is None:
            raise MissingFeatures(f"{record.video_id} has no blob for stream {stream}.")
        with open(locator, "rb") as handle:
            payload = handle.read()
        with self._lock:
            self.accessed.add(stream)
        key = (hashlib.blake2b(payload, digest_size=16).hexdigest(), n_s)
        pooled = self._cache.get(key)
        if pooled is None:
            pooled = pool_segments(decode_blob(payload), n_s)
            pooled.setflags(write=False)
            self._cache[key] = pooled
        return pooled

    def load_segments(self, record: VideoRecord, streams: Iterable[str], n_s: int) -> SegmentBatch:
        """
        Pooled matrices of the requested streams of one record.
        """
        return SegmentBatch(streams={name: self.load(record, name, n_s) for name in streams}, n_s=n_s)

    def load_corpus(
            self,
            manifest: CorpusManifest,
            streams: Optional[List[str]] = None,
            n_s: int = 64
    ) -> Dict[str, SegmentBatch]:
        """
        Pools every record of a corpus, in manifest order.

        Parameters
        ----------
        manifest : CorpusManifest
            Corpus to load.
        streams : list of str, optional
            Streams to read; all declared streams when omitted.
        n_s : int
            Segment count.

        Returns
        -------
        dict
            Video id to ``SegmentBatch``.
        """
        streams = list(streams) if streams is not None else list(manifest.streams)
        for name in streams:
            if name not in manifest.streams:
                raise MissingFeatures(f"Stream {name} is not declared by the manifest.")

        def load_one(record):
            batch = self.load_segments(record, streams, n_s)
            for name in streams:
                if batch.stream(name).shape[1] != manifest.streams[name]:
                    raise ShapeMismatch(
                        f"{record.video_id}: stream {name} has D={batch.stream(name).shape[1]}, "
                        f"manifest declares {manifest.streams[name]}."
                    )
            return batch

        logger.info("Loading %d videos (streams %s, n_s=%d).", len(manifest.records), streams, n_s)
        if self.workers == 1:
            batches = [load_one(record) for record in tqdm(manifest.records, desc="Pooling features", leave=False)]
        else:
            with ThreadPool(self.workers) as pool:
                batches = list(tqdm(
                    pool.imap(load_one, manifest.records),
                    total=len(manifest.records),
                    desc="Pooling features",
                    leave=False
                ))
        return {record.video_id: batch for record, batch in zip(manifest.records, batches)}
