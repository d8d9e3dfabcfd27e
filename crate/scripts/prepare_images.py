#!/usr/bin/env python3
"""Build the grayscale PGM corpora under data/ from sample images bundled with
common Python packages (scikit-image, scikit-learn, matplotlib, PyWavelets).

    data/test/   ten 512x512 evaluation images
    data/train/  disjoint training corpus (any size >= 16x16)

Usage: python3 scripts/prepare_images.py [--pywt-data DIR]
"""
import argparse
import os

import numpy as np
from PIL import Image

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def skimage_path(name):
    import skimage
    return os.path.join(os.path.dirname(skimage.__file__), "data", name)


def sklearn_path(name):
    import sklearn
    return os.path.join(os.path.dirname(sklearn.__file__), "datasets", "images", name)


def mpl_path(name):
    import matplotlib
    return os.path.join(matplotlib.get_data_path(), "sample_data", name)


def load_gray(path):
    return Image.open(path).convert("L")


def square_512(img):
    """Center-crop to a square, then resample to 512x512 if needed."""
    w, h = img.size
    s = min(w, h)
    left, top = (w - s) // 2, (h - s) // 2
    img = img.crop((left, top, left + s, top + s))
    if s != 512:
        img = img.resize((512, 512), Image.LANCZOS)
    return img


def write_pgm(img, path):
    a = np.asarray(img, dtype=np.uint8)
    h, w = a.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(a.tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--pywt-data", default="/tmp",
                    help="directory holding aero.npz and ascent.npz from the PyWavelets wheel")
    args = ap.parse_args()

    test = {
        "camera": load_gray(skimage_path("camera.png")),
        "astronaut": load_gray(skimage_path("astronaut.png")),
        "moon": load_gray(skimage_path("moon.png")),
        "grace_hopper": load_gray(mpl_path("grace_hopper.jpg")),
        "coffee": load_gray(skimage_path("coffee.png")),
        "motorcycle": load_gray(skimage_path("motorcycle_left.png")),
        "china": load_gray(sklearn_path("china.jpg")),
        "chelsea": load_gray(skimage_path("chelsea.png")),
    }
    for name in ("aero", "ascent"):
        arr = np.load(os.path.join(args.pywt_data, name + ".npz"))["data"]
        test[name] = Image.fromarray(arr.astype(np.uint8), "L")

    train = {
        "rocket": skimage_path("rocket.jpg"),
        "flower": sklearn_path("flower.jpg"),
        "hubble": skimage_path("hubble_deep_field.jpg"),
        "coins": skimage_path("coins.png"),
        "clock": skimage_path("clock_motion.png"),
        "retina": skimage_path("retina.jpg"),
        "cell": skimage_path("cell.png"),
        "ihc": skimage_path("ihc.png"),
        "brick": skimage_path("brick.png"),
        "grass": skimage_path("grass.png"),
        "gravel": skimage_path("gravel.png"),
        "page": skimage_path("page.png"),
        "text": skimage_path("text.png"),
        "color": skimage_path("color.png"),
    }

    os.makedirs(os.path.join(ROOT, "data", "test"), exist_ok=True)
    os.makedirs(os.path.join(ROOT, "data", "train"), exist_ok=True)
    for name, img in sorted(test.items()):
        write_pgm(square_512(img), os.path.join(ROOT, "data", "test", name + ".pgm"))
    for name, path in sorted(train.items()):
        write_pgm(load_gray(path), os.path.join(ROOT, "data", "train", name + ".pgm"))


if __name__ == "__main__":
    main()
