"""Single-file instance format.

A fixed 76-byte little-endian header is followed, for materialized
ensembles only, by the raw float64 sensing data.  Streamed files carry the
header alone; everything else is regenerated from the seed.  The header
stores a CRC32 of b so a reload can prove it reproduced the measurements
bit for bit.  Byte layout: docs/formats.md.
"""

import math
import struct
import zlib

import numpy as np

from .errors import FormatError
from .pr_init import generate_pr_instance
from .sensing import generate_binary_instance, generate_instance

MAGIC = b"QSRI"
VERSION = 1
HEADER = struct.Struct("<4sHBBBxxxQQQQQddII")

KINDS = {"quadratic": 0, "pr": 1, "binary": 2}
MODES = {"materialized": 0, "streamed": 1}
NOISE = {"gaussian": 0, "laplace": 1, "none": 2}


def _inverse(table, code, what):
    for name, c in table.items():
        if c == code:
            return name
    raise FormatError(f"unknown {what} code {code}")


def b_checksum(b):
    return zlib.crc32(np.ascontiguousarray(b, dtype="<f8").tobytes())


def encode(instance):
    data = instance.ensemble.data
    payload = b"" if data is None else np.ascontiguousarray(data, dtype="<f8").tobytes()
    mu0 = instance.mu0_target
    head = HEADER.pack(MAGIC, VERSION, KINDS[instance.kind], MODES[instance.mode],
                       NOISE[instance.noise_kind], instance.n, instance.k, instance.m,
                       instance.kprime, instance.seed & 0xFFFFFFFFFFFFFFFF,
                       mu0 if mu0 == mu0 else math.nan, instance.sigma,
                       b_checksum(instance.b), zlib.crc32(payload))
    return head + payload


def save_instance(instance, path):
    blob = encode(instance)
    with open(path, "wb") as fh:
        fh.write(blob)
    return len(blob)


def read_header(blob):
    if len(blob) < HEADER.size:
        raise FormatError("file shorter than the header")
    (magic, version, kind, mode, noise, n, k, m, kprime, seed, mu0, sigma, bcrc,
     pcrc) = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError("bad magic; not an instance file")
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}")
    return dict(kind=_inverse(KINDS, kind, "kind"), mode=_inverse(MODES, mode, "mode"),
                noise_kind=_inverse(NOISE, noise, "noise"), n=n, k=k, m=m, kprime=kprime,
                seed=seed, mu0_target=mu0, sigma=sigma, b_crc=bcrc, payload_crc=pcrc)


def decode(blob):
    h = read_header(blob)
    n, m = h["n"], h["m"]
    payload = blob[HEADER.size:]
    data = None
    if h["mode"] == "materialized":
        shape = (m, n) if h["kind"] == "pr" else (m, n, n)
        need = 8 * math.prod(shape)
        if len(payload) != need:
            raise FormatError(f"payload has {len(payload)} bytes, expected {need}")
        if zlib.crc32(payload) != h["payload_crc"]:
            raise FormatError("payload checksum mismatch")
        data = np.frombuffer(payload, dtype="<f8").reshape(shape).astype(np.float64)
    elif payload:
        raise FormatError("streamed file carries trailing bytes")
    common = dict(sigma=h["sigma"], mode=h["mode"], seed=h["seed"], data=data,
                  noise_kind=h["noise_kind"])
    if h["kind"] == "quadratic":
        inst = generate_instance(n, h["k"], m, h["mu0_target"], **common)
    elif h["kind"] == "pr":
        inst = generate_pr_instance(n, h["k"], m, h["mu0_target"], **common)
    else:
        inst = generate_binary_instance(n, h["k"], h["kprime"], m, **common)
    if b_checksum(inst.b) != h["b_crc"]:
        raise FormatError("regenerated measurements do not match the stored checksum")
    return inst


def load_instance(path):
    with open(path, "rb") as fh:
        return decode(fh.read())
