#!/usr/bin/env python3
"""Normalized-archive hash of a path, written from the format description
alone. Prints: <hex sha256> <nix base32 sha256>."""
import hashlib
import os
import stat
import sys

ALPHABET = "0123456789abcdfghijklmnpqrsvwxyz"
VCS = {".git", ".svn", ".hg"}


def nix_base32(digest):
    out = []
    n = (len(digest) * 8 - 1) // 5 + 1
    for k in range(n - 1, -1, -1):
        b = k * 5
        i, j = divmod(b, 8)
        c = digest[i] >> j
        if i + 1 < len(digest):
            c |= digest[i + 1] << (8 - j)
        out.append(ALPHABET[c & 0x1F])
    return "".join(out)


def put(h, s):
    if isinstance(s, str):
        s = s.encode()
    h.update(len(s).to_bytes(8, "little"))
    h.update(s)
    h.update(b"\0" * (-len(s) % 8))


def walk(h, path, exclude_vcs):
    st = os.lstat(path)
    put(h, "(")
    if stat.S_ISLNK(st.st_mode):
        put(h, "type"); put(h, "symlink")
        put(h, "target"); put(h, os.fsencode(os.readlink(path)))
    elif stat.S_ISREG(st.st_mode):
        put(h, "type"); put(h, "regular")
        if st.st_mode & 0o111:
            put(h, "executable"); put(h, "")
        with open(path, "rb") as f:
            put(h, "contents"); put(h, f.read())
    elif stat.S_ISDIR(st.st_mode):
        put(h, "type"); put(h, "directory")
        names = sorted(os.fsencode(n) for n in os.listdir(path))
        for name in names:
            if exclude_vcs and name.decode(errors="replace") in VCS:
                continue
            put(h, "entry"); put(h, "(")
            put(h, "name"); put(h, name)
            put(h, "node"); walk(h, os.path.join(os.fsencode(path), name), exclude_vcs)
            put(h, ")")
    else:
        sys.exit("unsupported node: %s" % path)
    put(h, ")")


def main():
    args = sys.argv[1:]
    exclude = "--exclude-vcs" in args
    args = [a for a in args if a != "--exclude-vcs"]
    h = hashlib.sha256()
    put(h, "nix-archive-1")
    walk(h, args[0], exclude)
    d = h.digest()
    print(d.hex(), nix_base32(d))


if __name__ == "__main__":
    main()
