#!/usr/bin/env python3
# Copyright 2026 The DQNN Developers
#
# Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
# in compliance with the License. You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software distributed under the License
# is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
# or implied. See the License for the specific language governing permissions and limitations under
# the License.
"""Rebuilds the test fixtures in crates/core/tests/data.

MNIST digits come from the `mnist` npm package (MIT), which ships a subset
of the MNIST digits as JSON arrays of 784 intensities in [0, 1]:

    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz

Wine comes from the copy bundled with scikit-learn (UCI Wine, 178 rows).

Usage: make_fixtures.py <path to extracted npm package> [out dir]
"""

import json
import os
import random
import shutil
import struct
import sys

TRAIN_PER_CLASS = 500
TEST_PER_CLASS = 100
CLASSES = (0, 1)


def load_digit(pkg, d):
    with open(os.path.join(pkg, "src", "digits", f"{d}.json")) as f:
        flat = json.load(f)["data"]
    return [[round(v * 255) for v in flat[i : i + 784]] for i in range(0, len(flat), 784)]


def write_idx(prefix, items):
    with open(prefix + "-images.idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(items), 28, 28))
        for img, _ in items:
            f.write(bytes(img))
    with open(prefix + "-labels.idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(items)))
        f.write(bytes(label for _, label in items))


def main():
    pkg = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else os.path.join(os.path.dirname(__file__), "..", "crates", "core", "tests", "data")
    train, test = [], []
    for d in CLASSES:
        imgs = load_digit(pkg, d)
        train += [(img, d) for img in imgs[:TRAIN_PER_CLASS]]
        test += [(img, d) for img in imgs[TRAIN_PER_CLASS : TRAIN_PER_CLASS + TEST_PER_CLASS]]
    rng = random.Random(2026)
    rng.shuffle(train)
    rng.shuffle(test)
    write_idx(os.path.join(out, "mnist01-train"), train)
    write_idx(os.path.join(out, "mnist01-test"), test)

    import sklearn

    src = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "data", "wine_data.csv")
    shutil.copyfile(src, os.path.join(out, "wine.csv"))


if __name__ == "__main__":
    main()
