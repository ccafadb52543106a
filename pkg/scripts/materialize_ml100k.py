"""Write MovieLens 100k in its native layout (u.data, u.user, u.item).

The GroupLens site is the canonical source; if the official ``ml-100k.zip`` is
available, pass it with ``--zip``.  Otherwise the copy bundled with the
``pytorch-widedeep`` wheel is used (``pip download --no-deps pytorch-widedeep``
and pass ``--wheel``).  The MovieLens license forbids redistribution, so the
output directory is git-ignored.
"""

import argparse
import io
import zipfile
from pathlib import Path

import pandas as pd

GENRES = [
    "unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
    "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
    "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
]


def from_zip(path, out):
    with zipfile.ZipFile(path) as z:
        for name in ("u.data", "u.user", "u.item"):
            (out / name).write_bytes(z.read(f"ml-100k/{name}"))


def from_wheel(path, out):
    prefix = "pytorch_widedeep/datasets/data/MovieLens100k_"
    with zipfile.ZipFile(path) as z:
        frames = {
            part: pd.read_parquet(io.BytesIO(z.read(f"{prefix}{part}.parquet.brotli")))
            for part in ("data", "users", "items")
        }
    data = frames["data"]
    with open(out / "u.data", "w", newline="\n") as f:
        for r in data.itertuples(index=False):
            f.write(f"{r.user_id}\t{r.movie_id}\t{r.rating}\t{r.timestamp}\n")
    users = frames["users"]
    with open(out / "u.user", "w", newline="\n") as f:
        for r in users.itertuples(index=False):
            f.write(f"{r.user_id}|{r.age}|{r.gender}|{r.occupation}|{r.zip_code}\n")
    items = frames["items"]
    with open(out / "u.item", "w", newline="\n", encoding="latin-1") as f:
        for _, r in items.iterrows():
            def s(v):
                return "" if pd.isna(v) else str(v)
            flags = "|".join(str(int(r[g])) for g in GENRES)
            f.write(
                f"{r.movie_id}|{s(r.movie_title)}|{s(r.release_date)}|"
                f"{s(r.video_release_date)}|{s(r.IMDb_URL)}|{flags}\n"
            )


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--zip", type=Path)
    src.add_argument("--wheel", type=Path)
    p.add_argument("--out", type=Path, default=Path("data/ml-100k"))
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    if args.zip:
        from_zip(args.zip, args.out)
    else:
        from_wheel(args.wheel, args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
