"""Stand-in segmentation program for ExternalProvider tests.

usage: stub_provider.py MODE MANIFEST OUTDIR
"""
import json
import os
import signal
import sys
import time

import numpy as np
from PIL import Image


def fixture_instances(w, h):
    """Person in the centre, a handbag, and a low-confidence person."""
    raster = np.zeros((h, w), np.uint8)
    raster[h // 4 : 3 * h // 4, w // 4 : 3 * w // 4] = 1
    raster[0:2, 0:3] = 2
    raster[h - 2 : h, w - 2 : w] = 3
    meta = [
        {"id": 1, "class_id": 0, "score": 0.9, "bbox": [w // 4, h // 4, 3 * w // 4 - w // 4, 3 * h // 4 - h // 4]},
        {"id": 2, "class_id": 26, "score": 0.8, "bbox": [0, 0, 3, 2]},
        {"id": 3, "class_id": 0, "score": 0.1, "bbox": [w - 2, h - 2, 2, 2]},
    ]
    return raster, meta


def main():
    mode, manifest_path, out_dir = sys.argv[1:4]
    manifest = json.loads(open(manifest_path).read())
    if mode == "fail":
        print("model exploded", file=sys.stderr)
        sys.exit(3)
    if mode == "hang":
        time.sleep(60)
    if mode == "kill":
        os.kill(os.getpid(), signal.SIGKILL)
    for fr in manifest["frames"]:
        w, h = fr["width"], fr["height"]
        assert Image.open(fr["path"]).size == (w, h)
        fid = fr["frame_id"]
        if mode == "garbage":
            open(os.path.join(out_dir, fid + ".json"), "w").write("{not json")
            Image.fromarray(np.zeros((h, w), np.uint8), mode="L").save(os.path.join(out_dir, fid + ".mask.png"))
            continue
        if mode == "overflow":
            raster = np.zeros((h, w), np.uint8)
            meta = [{"id": i, "class_id": 0, "score": 0.9, "bbox": [0, 0, 1, 1]} for i in range(1, 301)]
        else:
            raster, meta = fixture_instances(w, h)
        doc = {"frame_id": fid, "width": w, "height": h, "instances": meta}
        open(os.path.join(out_dir, fid + ".json"), "w").write(json.dumps(doc))
        Image.fromarray(raster, mode="L").save(os.path.join(out_dir, fid + ".mask.png"))


if __name__ == "__main__":
    main()
