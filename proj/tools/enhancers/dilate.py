#!/usr/bin/env python3
"""Reference external enhancer: 3x3 binary dilation of a P5 condition map.

Usage: dilate.py condition.pgm out.pgm
"""
import sys


def read_pgm(path):
    data = open(path, "rb").read()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while data[pos:pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P5" or int(tokens[3]) != 255:
        raise SystemExit("not an 8-bit P5 image")
    w, h = int(tokens[1]), int(tokens[2])
    return w, h, bytearray(data[pos + 1:pos + 1 + w * h])


def main():
    if len(sys.argv) != 3:
        raise SystemExit(__doc__)
    w, h, px = read_pgm(sys.argv[1])
    out = bytearray(w * h)
    for r in range(h):
        for c in range(w):
            if not px[r * w + c]:
                continue
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < h and 0 <= cc < w:
                        out[rr * w + cc] = 255
    with open(sys.argv[2], "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(out)


if __name__ == "__main__":
    main()
