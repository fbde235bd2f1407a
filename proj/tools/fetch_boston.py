#!/usr/bin/env python3
"""Download the Boston housing data into data/boston.csv (not vendored).

The copy bundled in the mlxtend 0.24.0 wheel is used and checked against a
pinned SHA-256 before anything is written.
"""
import hashlib
import pathlib
import subprocess
import sys
import tempfile
import zipfile

WHEEL = "mlxtend==0.24.0"
MEMBER = "mlxtend/data/data/boston_housing.csv"
SHA256 = "8594f084258ead302f20a7479463f7a7584d33fe00042d442a7101530c8b46de"
COLUMNS = ["CRIM", "ZN", "INDUS", "CHAS", "NOX", "RM", "AGE", "DIS", "RAD", "TAX",
           "PTRATIO", "B", "LSTAT", "MEDV"]
OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "boston.csv"


def main():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp, WHEEL],
                       check=True)
        wheel = next(pathlib.Path(tmp).glob("*.whl"))
        raw = zipfile.ZipFile(wheel).read(MEMBER)
    digest = hashlib.sha256(raw).hexdigest()
    if digest != SHA256:
        sys.exit(f"checksum mismatch: {digest}")
    rows = [line.split(",") for line in raw.decode().strip().splitlines()]
    if any(len(r) != len(COLUMNS) for r in rows):
        sys.exit("unexpected column count")
    with open(OUT, "w") as f:
        f.write(",".join(COLUMNS) + "\n")
        for r in rows:
            f.write(",".join(repr(float(v)) for v in r) + "\n")
    print(f"wrote {len(rows)} rows to {OUT}")


if __name__ == "__main__":
    main()
