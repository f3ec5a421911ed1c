#!/usr/bin/env python3
"""
Download the SNAP email-Eu-core network and its department labels.

Writes plain-text copies into $EPISTEMIC_DATA_DIR (default ./data):
  email-Eu-core.txt                    - "u v" edge list, one email link per line
  email-Eu-core-department-labels.txt  - "node department" attribute lines

Usage: python fetch_email_eu_core.py
"""

import gzip
import logging
import os
import urllib.request
from pathlib import Path

from graph_model import load_attributes, load_edge_list

logger = logging.getLogger("fetch_email_eu_core")

BASE_URL = "https://snap.stanford.edu/data/"
FILES = ["email-Eu-core.txt", "email-Eu-core-department-labels.txt"]
DATA_ENV_VAR = "EPISTEMIC_DATA_DIR"


def data_dir() -> Path:
    return Path(os.environ.get(DATA_ENV_VAR, "data"))


def fetch(name: str, out_dir: Path) -> Path:
    """Download name.gz and store it decompressed as out_dir/name (skipped if present)"""
    target = out_dir / name
    if target.exists():
        logger.info("%s already present, skipping download", target)
        return target
    url = BASE_URL + name + ".gz"
    logger.info("Fetching %s", url)
    with urllib.request.urlopen(url, timeout=60) as response:
        payload = gzip.decompress(response.read())
    target.write_bytes(payload)
    logger.info("Saved %s (%d bytes)", target, len(payload))
    return target


def main():
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    out_dir = data_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    edges_path, labels_path = (fetch(name, out_dir) for name in FILES)

    graph = load_edge_list(edges_path.read_text(encoding="utf-8"))
    graph = load_attributes(graph, labels_path.read_text(encoding="utf-8"))
    logger.info("email-Eu-core: |N|=%d |E|=%d", graph.number_of_nodes(), graph.number_of_edges())


if __name__ == "__main__":
    main()
