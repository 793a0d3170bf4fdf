#!/usr/bin/env python3
"""Writes a random tar file with Python's tarfile module.

usage: make_tar.py OUT SEED MEMBERS FORMAT   (FORMAT: ustar, gnu or pax)"""
import io
import random
import sys
import tarfile

WORDS = [b"alpha ", b"beta ", b"gamma\n", b"delta ", b"0123 ", b"{\n", b"}\n"]


def content(rng):
    n = rng.choice([0, 1, 10, 100, 511, 512, 513, 2000, 10000])
    if rng.random() < 0.5:
        return bytes(rng.getrandbits(8) for _ in range(n))
    out = b""
    while len(out) < n:
        out += rng.choice(WORDS)
    return out[:n]


def name(rng, long_names):
    alphabet = "abcdefghijklmnopqrstuvwxyz0123456789_-."
    n = rng.randint(1, 12)
    if long_names and rng.random() < 0.1:
        n = rng.randint(100, 140)
    s = "".join(rng.choice(alphabet) for _ in range(n))
    return s if s not in (".", "..") else s + "x"


def main():
    out, seed, members, fmt = sys.argv[1], int(sys.argv[2]), int(sys.argv[3]), sys.argv[4]
    rng = random.Random(seed)
    formats = {"ustar": tarfile.USTAR_FORMAT, "gnu": tarfile.GNU_FORMAT, "pax": tarfile.PAX_FORMAT}
    long_names = fmt != "ustar"
    root = "pkg-%d" % seed
    dirs = [root]
    files = []
    with tarfile.open(out, "w", format=formats[fmt]) as tf:
        ti = tarfile.TarInfo(root)
        ti.type = tarfile.DIRTYPE
        ti.mode = 0o755
        ti.mtime = rng.randint(0, 2**31 - 1)
        tf.addfile(ti)
        used = set()
        for _ in range(members):
            parent = rng.choice(dirs)
            path = parent + "/" + name(rng, long_names)
            if path in used or (fmt == "ustar" and len(path) > 99):
                continue
            used.add(path)
            ti = tarfile.TarInfo(path)
            ti.mtime = rng.choice([0, 1579061438, rng.randint(0, 2**33 - 1) if fmt != "ustar" else 1234567890])
            ti.uid = rng.choice([0, 1000, 65534])
            ti.gid = rng.choice([0, 100, 1000])
            ti.uname = rng.choice(["", "root", "builder"])
            ti.gname = rng.choice(["", "root", "users"])
            k = rng.random()
            if k < 0.15 and len(dirs) < 50:
                ti.type = tarfile.DIRTYPE
                ti.mode = rng.choice([0o755, 0o700, 0o775])
                tf.addfile(ti)
                dirs.append(path)
            elif k < 0.25:
                ti.type = tarfile.SYMTYPE
                ti.mode = 0o777
                ti.linkname = name(rng, long_names) if rng.random() < 0.7 else "../" + name(rng, False)
                tf.addfile(ti)
            elif k < 0.28 and files:
                ti.type = tarfile.LNKTYPE
                ti.mode = 0o644
                ti.linkname = rng.choice(files)
                tf.addfile(ti)
            else:
                data = content(rng)
                ti.size = len(data)
                ti.mode = rng.choice([0o644, 0o755, 0o600, 0o444])
                tf.addfile(ti, io.BytesIO(data))
                files.append(path)


if __name__ == "__main__":
    main()
