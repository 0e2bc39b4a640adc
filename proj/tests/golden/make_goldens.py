"""Writes the golden interchange files with nothing but the standard library.

Run from this directory: python3 make_goldens.py
"""
import json
import struct
import zlib


def mdie(ident, rows):
    dim = len(rows[0])
    out = b"MDIE" + struct.pack("<II", 1, len(ident)) + ident.encode() + struct.pack("<II", len(rows), dim)
    for r in rows:
        out += struct.pack("<%df" % dim, *r)
    return out


def mdil(h, w, c, values):
    return b"MDIL" + struct.pack("<IIII", 1, h, w, c) + struct.pack("<%dd" % len(values), *values)


def gray_png(rows):
    h, w = len(rows), len(rows[0])
    raw = b"".join(b"\x00" + bytes(r) for r in rows)

    def chunk(kind, data):
        body = kind + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)

    ihdr = struct.pack(">IIBBBBB", w, h, 8, 0, 0, 0, 0)
    return b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr) + chunk(b"IDAT", zlib.compress(raw)) + chunk(b"IEND", b"")


def dump(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


default_config = {
    "dnc": {"detection_threshold": 0.1, "row_sort": "greedy_global"},
    "init": {
        "canvas": [1024, 1024],
        "downscale_factor": 8,
        "gamma": 1.0,
        "layout_source": "random",
        "max_margin": 1,
        "noise_seed": 0,
        "variant": "mean_shift",
    },
    "sandbox": {
        "batch_size": 2,
        "kl_weight": 1.0,
        "lambda": 1.0,
        "learning_rate": 0.0001,
        "mixture_weights": [0.4, 0.4, 0.2],
        "sample_steps": 100,
        "schedule": "cosine",
        "steps": 100,
        "sweep_eta": 0.0,
        "sweep_gammas": [0.0, 1.0, 2.0, 3.0, 4.0],
        "sweep_trials": 500,
        "tau": 0.05,
    },
    "segmix": {
        "background_value": 0.0,
        "max_margin": 1,
        "out_size": [1024, 1024],
        "prompt": {
            "composite_template": "A photo of {ids}, simple background.",
            "count_noun": "objects",
            "prefix_count": False,
        },
        "random_scale_max": 1.0,
        "random_scale_min": 0.6,
        "scales": None,
        "seg_mix_prob": 0.3,
    },
}

files = {
    "embedding.mdie": mdie("olis", [[1.0, 0.0, 0.0, 0.0], [0.0, 0.6, 0.0, 0.8], [0.5, 0.5, 0.5, 0.5]]),
    "latent.mdil": mdil(2, 3, 2, [0.0, -1.5, 2.25, 1e-3, -0.0, 3.0, 4.5, -6.0, 7.125, 8.0, 1e10, -1e-10]),
    "layout.json": dump({"canvas": [64, 64], "boxes": [
        {"subject": 0, "x": 0, "y": 0, "w": 32, "h": 32},
        {"subject": 1, "x": 16, "y": 16, "w": 32, "h": 32}]}).encode(),
    "detections.json": dump({"image_id": "sample_0001", "boxes": [
        {"label": "olis", "x0": 1, "y0": 2, "x1": 11, "y1": 12, "confidence": 0.5},
        {"label": "bnha", "x0": 20, "y0": 4, "x1": 30, "y1": 9, "confidence": 0.25}]}).encode(),
    "config_default.json": dump(default_config).encode(),
    "mask.png": gray_png([[255 if (x + 2 * y) % 3 == 0 else 0 for x in range(6)] for y in range(4)]),
    "mask.json": dump({"subject": "olis", "class": "dog", "source": "sam"}).encode(),
}

for name, data in files.items():
    with open(name, "wb") as f:
        f.write(data)
