"""
Utilities module for processing and persisting results.
"""

import hashlib
import json
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd
import yaml

__all__ = [
    "RESOLVED_CONFIG_NAME",
    "save_html",
    "save_png",
    "save_yaml",
    "save_csv",
    "config_hash",
    "file_digest",
    "directory_digest",
]

RESOLVED_CONFIG_NAME = "resolved_config.yaml"


def save_html(fig, filename, output_dir):
    """
    Save the plotly figure as an HTML file inside the output directory.

    Parameters:
    fig : plotly.graph_objects.Figure
        The figure object to save as an HTML file.
    filename : str
        The name of the HTML file, without extension.
    output_dir : str
        The directory receiving the file.

    Returns:
    str
        Path of the written file.
    """
    os.makedirs(output_dir, exist_ok=True)
    file_path = os.path.join(output_dir, f"{filename}.html")
    fig.write_html(file_path)
    return file_path


def save_png(fig, filename, output_dir):
    """
    Save a matplotlib figure as a PNG and close it.
    """
    os.makedirs(output_dir, exist_ok=True)
    file_path = os.path.join(output_dir, f"{filename}.png")
    fig.savefig(file_path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return file_path


def save_yaml(document, path):
    """
    Writes a mapping as block-style YAML, keeping key order.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(document, handle, sort_keys=False, default_flow_style=False)
    return path


def save_csv(frame: pd.DataFrame, path, index=False):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame.to_csv(path, index=index)
    return path


def config_hash(document) -> str:
    """
    Short content hash of a configuration mapping, independent of key order.
    """
    canonical = json.dumps(document, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def file_digest(path) -> str:
    digest = hashlib.blake2b(digest_size=16)
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def directory_digest(directory, exclude=()) -> str:
    """
    Hash over every file below ``directory``: relative paths and contents, in sorted order.

    Parameters:
    directory : str
        Root of the tree, e.g. a generated corpus.
    exclude : iterable of str
        Top-level file names left out of the hash.

    Returns:
    str
        Hex digest; equal trees give equal digests wherever they live.
    """
    digest = hashlib.blake2b(digest_size=16)
    for root, dirs, files in os.walk(directory):
        dirs.sort()
        for name in sorted(files):
            path = os.path.join(root, name)
            if root == directory and name in exclude:
                continue
            relative = os.path.relpath(path, directory).replace(os.sep, "/")
            digest.update(relative.encode("utf-8"))
            digest.update(file_digest(path).encode("ascii"))
    return digest.hexdigest()
