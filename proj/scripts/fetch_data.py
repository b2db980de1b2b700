#!/usr/bin/env python3
"""Download the canonical MNIST and CIFAR-10 files into data/.

The repository ships a small bundled digit subset under data/mnist so the
desk-scale experiments work offline. This script replaces it with the full
60,000/10,000-image MNIST IDX files and adds the CIFAR-10 binary batches,
which some of the statistics checks require.
"""

import argparse
import gzip
import hashlib
import shutil
import sys
import tarfile
import tempfile
import urllib.request
from pathlib import Path

MNIST_MIRRORS = [
    "https://storage.googleapis.com/cvdf-datasets/mnist/",
    "https://ossci-datasets.s3.amazonaws.com/mnist/",
]
MNIST_FILES = {
    "train-images-idx3-ubyte.gz": 47_040_016,
    "train-labels-idx1-ubyte.gz": 60_008,
    "t10k-images-idx3-ubyte.gz": 7_840_016,
    "t10k-labels-idx1-ubyte.gz": 10_008,
}
CIFAR_URL = "https://www.cs.toronto.edu/~kriz/cifar-10-binary.tar.gz"
CIFAR_MD5 = "c32a1d4ab5d03f1284b67883e8d87530"


def download(url: str, dest: Path) -> None:
    print(f"  {url}")
    with urllib.request.urlopen(url, timeout=60) as resp, open(dest, "wb") as out:
        shutil.copyfileobj(resp, out)


def fetch_mnist(root: Path) -> None:
    out_dir = root / "mnist"
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, full_size in MNIST_FILES.items():
        target = out_dir / name[: -len(".gz")]
        if target.exists() and target.stat().st_size == full_size:
            print(f"  {target} already present, skipping")
            continue
        last_error = None
        for mirror in MNIST_MIRRORS:
            try:
                with tempfile.NamedTemporaryFile(delete=False) as tmp:
                    tmp_path = Path(tmp.name)
                download(mirror + name, tmp_path)
                with gzip.open(tmp_path, "rb") as src, open(target, "wb") as dst:
                    shutil.copyfileobj(src, dst)
                tmp_path.unlink()
                last_error = None
                break
            except Exception as exc:  # noqa: BLE001 - try the next mirror
                last_error = exc
        if last_error is not None:
            raise RuntimeError(f"could not fetch {name}: {last_error}")


def fetch_cifar10(root: Path) -> None:
    out_dir = root / "cifar10"
    batches = [f"data_batch_{i}.bin" for i in range(1, 6)] + ["test_batch.bin"]
    if all((out_dir / b).exists() for b in batches):
        print(f"  {out_dir} already populated, skipping")
        return
    with tempfile.NamedTemporaryFile(delete=False) as tmp:
        tmp_path = Path(tmp.name)
    download(CIFAR_URL, tmp_path)
    digest = hashlib.md5(tmp_path.read_bytes()).hexdigest()
    if digest != CIFAR_MD5:
        raise RuntimeError(f"cifar-10-binary.tar.gz md5 {digest} != {CIFAR_MD5}")
    out_dir.mkdir(parents=True, exist_ok=True)
    with tarfile.open(tmp_path, "r:gz") as tar:
        for member in tar.getmembers():
            base = Path(member.name).name
            if base in batches or base == "batches.meta.txt":
                src = tar.extractfile(member)
                if src is None:
                    continue
                with open(out_dir / base, "wb") as dst:
                    shutil.copyfileobj(src, dst)
    tmp_path.unlink()


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default="data", help="output directory (default: data)")
    parser.add_argument("--dataset", choices=["mnist", "cifar10", "all"], default="all")
    args = parser.parse_args()

    root = Path(args.root)
    if args.dataset in ("mnist", "all"):
        print("fetching mnist:")
        fetch_mnist(root)
    if args.dataset in ("cifar10", "all"):
        print("fetching cifar10:")
        fetch_cifar10(root)
    print("done")
    return 0


if __name__ == "__main__":
    sys.exit(main())
