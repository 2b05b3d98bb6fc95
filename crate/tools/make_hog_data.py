"""Dumps HOG training images from scikit-image sample data.

    python tools/make_hog_data.py OUT_DIR

Writes OUT_DIR/pos (64x64 face crops: the LFW subset faces with flips and
small shifts) and OUT_DIR/neg (face-free photos and the LFW non-face
patches). The photos used by the bench scenes are left out.
"""

import os
import sys

import numpy as np
from PIL import Image, ImageFilter
from skimage import data, transform

N = 64


def save(img, path):
    Image.fromarray(np.clip(img * 255 + 0.5, 0, 255).astype(np.uint8)).save(path)


def main(out):
    pos_dir = os.path.join(out, "pos")
    neg_dir = os.path.join(out, "neg")
    os.makedirs(pos_dir, exist_ok=True)
    os.makedirs(neg_dir, exist_ok=True)

    lfw = data.lfw_subset()
    faces, patches = lfw[:100], lfw[100:]
    k = 0
    for face in faces:
        big = transform.resize(face, (N + 8, N + 8), order=1, anti_aliasing=False)
        for flip in (False, True):
            img = big[:, ::-1] if flip else big
            for dx, dy in [(4, 4), (0, 4), (8, 4), (4, 0), (4, 8)]:
                save(img[dy : dy + N, dx : dx + N], os.path.join(pos_dir, f"{k:05d}.png"))
                k += 1

    for i, p in enumerate(patches):
        save(transform.resize(p, (N, N), order=1), os.path.join(neg_dir, f"lfw_{i:03d}.png"))
    photos = {
        "rocket": data.rocket(),
        "chelsea": data.chelsea(),
        "coins": data.coins(),
        "brick": data.brick(),
        "grass": data.grass(),
        "gravel": data.gravel(),
        "page": data.page(),
        "text": data.text(),
        "clock": data.clock(),
        "horse": data.horse(),
        "moon": data.moon(),
        "hubble": data.hubble_deep_field(),
        "retina": data.retina(),
    }
    for name, img in photos.items():
        img = np.asarray(img)
        if img.dtype == bool:
            img = img.astype(np.uint8) * 255
        if img.ndim == 3:
            img = img[..., :3]
        pil = Image.fromarray(img.astype(np.uint8))
        pil.save(os.path.join(neg_dir, f"{name}.png"))
        # soft-focus copy
        pil.filter(ImageFilter.GaussianBlur(3)).save(os.path.join(neg_dir, f"{name}_blur.png"))
    print(f"{k} positives, {len(patches) + 2 * len(photos)} negative images")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "hogdata")
