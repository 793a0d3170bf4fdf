#!/usr/bin/env python3
"""Reports how many tarballs survive a disassemble/assemble round trip.

usage: wild_rate.py [--revive PATH] TARBALL...   (or a directory to scan)"""
import argparse
import pathlib
import subprocess
import sys
import tempfile

SUFFIXES = (".tar", ".tar.gz", ".tgz", ".tar.bz2", ".tar.xz")


def tarballs(paths):
    for p in map(pathlib.Path, paths):
        if p.is_dir():
            yield from sorted(q for q in p.rglob("*") if q.name.endswith(SUFFIXES))
        else:
            yield p


def round_trip(revive, path):
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        steps = [
            [revive, "disassemble", str(path), "-o", str(tmp / "d.sexp"), "--content-out", str(tmp / "c")],
            [revive, "assemble", str(tmp / "d.sexp"), "--content-dir", str(tmp / "c"), "-o", str(tmp / "out")],
        ]
        for argv in steps:
            r = subprocess.run(argv, capture_output=True, text=True)
            if r.returncode != 0:
                return r.stderr.strip().splitlines()[-1] if r.stderr.strip() else "exit %d" % r.returncode
        return None if (tmp / "out").read_bytes() == path.read_bytes() else "bytes differ"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--revive", default="revive")
    ap.add_argument("paths", nargs="+")
    args = ap.parse_args()
    ok = total = 0
    for path in tarballs(args.paths):
        total += 1
        err = round_trip(args.revive, path)
        if err is None:
            ok += 1
        else:
            print("%s: %s" % (path, err), file=sys.stderr)
    rate = 100.0 * ok / total if total else 0.0
    print("%d/%d round trips (%.1f%%)" % (ok, total, rate))


if __name__ == "__main__":
    main()
