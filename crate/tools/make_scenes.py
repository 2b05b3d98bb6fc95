"""Builds the bundled benchmark scenes from scikit-image sample photos.

Writes 640x480 PNGs and suite.json into crates/core/assets/scenes. Ground
truth boxes come from OpenCV's own Haar detector on the source photo.
"""

import json
import os
import sys

import cv2
import numpy as np
from skimage import data

W, H = 640, 480
ROOT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "assets")


def fit(img):
    return cv2.resize(img, (W, H), interpolation=cv2.INTER_AREA)


def astronaut_face(rgb, cascade):
    gray = cv2.cvtColor(rgb, cv2.COLOR_RGB2GRAY)
    faces = cascade.detectMultiScale(gray, 1.1, 5, minSize=(40, 40))
    if len(faces) != 1:
        sys.exit(f"expected one astronaut face, got {faces}")
    return [int(v) for v in faces[0]]


def main():
    out = os.path.join(ROOT, "scenes")
    os.makedirs(out, exist_ok=True)
    cascade = cv2.CascadeClassifier(
        os.path.join(ROOT, "models", "haarcascade_frontalface_default.xml")
    )

    # soft-focus background shared by the empty and two-face scenes, so the
    # pair differs only by the faces
    background = fit(cv2.GaussianBlur(data.coffee(), (0, 0), 4))

    astro = data.astronaut()[:384, :512]
    large = fit(astro)
    fx, fy, fw, fh = astronaut_face(large, cascade)

    # face crop with a margin, pasted twice at 96 px face size
    m = fw // 4
    crop = large[fy - m : fy + fh + m, fx - m : fx + fw + m]
    side = 96
    k = side / fw
    crop = cv2.resize(crop, None, fx=k, fy=k, interpolation=cv2.INTER_AREA)
    two = background.copy()
    truth = []
    for x0, y0 in [(120, 150), (400, 190)]:
        h, w = crop.shape[:2]
        two[y0 : y0 + h, x0 : x0 + w] = crop
        off = round(m * k)
        truth.append({"x": x0 + off, "y": y0 + off, "w": side, "h": side})

    scenes = [
        ("empty", "empty.png", "empty", background, None),
        ("one_large", "one_large.png", "one_large", large,
         [{"x": fx, "y": fy, "w": fw, "h": fh}]),
        ("two_small", "two_small.png", "two_small", two, truth),
    ]
    entries = []
    for sid, name, label, img, gt in scenes:
        cv2.imwrite(os.path.join(out, name), cv2.cvtColor(img, cv2.COLOR_RGB2BGR))
        e = {"id": sid, "path": name, "label": label}
        if gt is not None:
            e["ground_truth"] = gt
        entries.append(e)

    suite = {
        "algorithms": ["haar", "lbp", "hog"],
        "resolution": "640x480",
        "iterations": 20,
        "warmup_iterations": 3,
        "realtime_budget_ms": 40,
        "aggregation": "equal_time",
        "resolutions": ["32x32", "64x64", "128x128", "256x256", "480x360", "640x480"],
        "scenes": entries,
    }
    with open(os.path.join(out, "suite.json"), "w") as f:
        json.dump(suite, f, indent=2)
        f.write("\n")
    print(json.dumps(entries, indent=1))


if __name__ == "__main__":
    main()
