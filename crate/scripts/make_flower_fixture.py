"""Build the 92x92 grayscale flower fixture from scikit-learn's bundled
sample image (flower.jpg, CC BY 2.0, see data/README.md)."""
import os
import sys

import sklearn.datasets
from PIL import Image

src = os.path.join(os.path.dirname(sklearn.datasets.__file__), "images", "flower.jpg")
img = Image.open(src).convert("L")
w, h = img.size
side = min(w, h)
left, top = (w - side) // 2, (h - side) // 2
img = img.crop((left, top, left + side, top + side)).resize((92, 92), Image.LANCZOS)
out = sys.argv[1]
with open(out, "wb") as f:
    f.write(b"P5\n92 92\n255\n")
    f.write(img.tobytes())
