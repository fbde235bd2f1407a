#!/usr/bin/env python3
"""Regenerate the CSV files under data/.

diabetes.csv ships with scikit-learn. california_housing.csv comes from
scikit-learn's fetcher (network) or, offline, from a parquet copy passed with
--california-parquet. synthetic.csv is drawn from a fixed seed.
"""
import argparse
import pathlib

import numpy as np
import pandas as pd

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"


def diabetes():
    from sklearn.datasets import load_diabetes

    d = load_diabetes(scaled=False, as_frame=True)
    df = d.data.copy()
    df["target"] = d.target
    return df


def california(parquet):
    if parquet:
        df = pd.read_parquet(parquet)
    else:
        from sklearn.datasets import fetch_california_housing

        d = fetch_california_housing(as_frame=True)
        df = d.data.copy()
        df["MedHouseVal"] = d.target
    cols = ["MedInc", "HouseAge", "AveRooms", "AveBedrms", "Population", "AveOccup",
            "Latitude", "Longitude", "MedHouseVal"]
    return df[cols]


def synthetic(rows=2000, seed=20240611):
    # Piecewise target in two of five features, mildly noisy: stumps can carve it.
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(rows, 5))
    y = (np.where(x[:, 0] > 0.3, 2.0, -1.0) + 1.5 * np.tanh(x[:, 1]) +
         0.5 * x[:, 2] * (x[:, 3] > 0) + 0.3 * rng.normal(size=rows))
    df = pd.DataFrame(x, columns=[f"x{i}" for i in range(5)])
    df["y"] = y
    return df


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--california-parquet")
    ap.add_argument("--out", default=str(ROOT))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    diabetes().to_csv(out / "diabetes.csv", index=False)
    california(args.california_parquet).to_csv(out / "california_housing.csv", index=False)
    synthetic().to_csv(out / "synthetic.csv", index=False, float_format="%.10g")


if __name__ == "__main__":
    main()
