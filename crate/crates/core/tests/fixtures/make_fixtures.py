"""Regenerates the reference-encoder JPEG fixtures (libjpeg via Pillow).

Run from this directory: python3 make_fixtures.py
"""
import numpy as np
from PIL import Image

rng = np.random.default_rng(7)


def pattern(w, h):
    y, x = np.mgrid[0:h, 0:w]
    r = (x * 255 // max(w - 1, 1))
    g = (y * 255 // max(h - 1, 1))
    b = ((x * 7 + y * 13) % 256)
    img = np.stack([r, g, b], axis=-1).astype(np.int32)
    img += rng.integers(-20, 21, size=img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


for q in (25, 50, 75, 100):
    Image.fromarray(pattern(16, 16)).save(f"ref_q{q}.jpg", quality=q, subsampling=0)

src = pattern(40, 24)
Image.fromarray(src).save("ref_444_q90.jpg", quality=90, subsampling=0)
dec = np.asarray(Image.open("ref_444_q90.jpg").convert("RGB"))
dec.tofile("ref_444_q90.rgb")

Image.fromarray(pattern(37, 21)).save("ref_420_q80.jpg", quality=80, subsampling=2)
dec = np.asarray(Image.open("ref_420_q80.jpg").convert("RGB"))
dec.tofile("ref_420_q80.rgb")

Image.fromarray(pattern(24, 16)).convert("L").save("ref_gray_q70.jpg", quality=70)
Image.fromarray(pattern(24, 16)).save("ref_progressive.jpg", quality=70, progressive=True)

src = pattern(48, 32)
Image.fromarray(src).save("ref_restart_q85.jpg", quality=85, subsampling=0, restart_marker_blocks=2)
np.asarray(Image.open("ref_restart_q85.jpg").convert("RGB")).tofile("ref_restart_q85.rgb")
