#!/usr/bin/env python3
"""Download the TU graph-classification benchmarks into data/.

Usage: python scripts/fetch_tu_datasets.py [--root data] [NAME ...]

Needs network access.  Each dataset unpacks to <root>/<NAME>/<NAME>_*.txt,
the layout load_tu_dataset expects.
"""

import argparse
import io
import os
import sys
import urllib.request
import zipfile

BASE_URL = "https://www.chrsmrrs.com/graphkerneldatasets"
DEFAULT = ["MUTAG", "PTC_MR", "NCI109", "ENZYMES", "COLLAB",
           "IMDB-BINARY", "IMDB-MULTI"]
# PTC ships under its variant name upstream; expose it locally as PTC.
RENAME = {"PTC_MR": "PTC"}


def fetch(name, root):
    local = RENAME.get(name, name)
    target = os.path.join(root, local)
    if os.path.isfile(os.path.join(target, f"{local}_A.txt")):
        print(f"{local}: already present, skipping")
        return
    url = f"{BASE_URL}/{name}.zip"
    print(f"{local}: downloading {url}")
    with urllib.request.urlopen(url, timeout=120) as resp:
        payload = resp.read()
    os.makedirs(root, exist_ok=True)
    with zipfile.ZipFile(io.BytesIO(payload)) as zf:
        zf.extractall(root)
    if local != name:
        os.makedirs(target, exist_ok=True)
        src = os.path.join(root, name)
        for fn in os.listdir(src):
            os.replace(os.path.join(src, fn),
                       os.path.join(target, fn.replace(name, local)))
        os.rmdir(src)
    print(f"{local}: done")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("names", nargs="*", default=DEFAULT,
                        help="upstream dataset names (default: the full benchmark set)")
    parser.add_argument("--root", default=os.path.join(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data"))
    args = parser.parse_args()
    failures = 0
    for name in args.names or DEFAULT:
        try:
            fetch(name, args.root)
        except Exception as exc:  # noqa: BLE001 - keep fetching the rest
            print(f"{name}: FAILED ({exc})", file=sys.stderr)
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
