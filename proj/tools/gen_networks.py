#!/usr/bin/env python3
# Copyright 2026 The gspc Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the shipped network layer tables under data/networks/.

Replacement rule for G(g) variants of WRN-40-2 and ResNet-34: every 3x3
convolution C_in->C_out inside a residual block becomes a grouped 3x3
convolution C_in->C_in (carrying the stride) followed by batch norm over C_in
and a pointwise convolution C_in->C_out. The stem convolution and the 1x1
projection shortcuts stay standard. For MobileNetV2 only the group count of the
3x3 convolution inside each inverted residual changes; its 1x1 projection
already plays the pointwise role.

Usage: gen_networks.py [out_dir]
"""

import os
import sys

VARIANTS = ["S", "G2", "G4", "G8", "G16", "GN"]

# Top1 error, carried as inert metadata.
TOP1 = {
    "wrn40_2": [4.79, 4.87, 5.00, 5.05, 5.13, 6.57],
    "resnet34": [26.73, 26.13, 26.58, 27.24, 27.99, 30.16],
    "mobilenet_v2": [26.03, 25.90, 26.34, 26.84, 27.06, 28.20],
}


def out_dim(n, k, s, p):
    return (n + 2 * p - k) // s + 1


class Table:
    def __init__(self):
        self.layers = []
        self.bn_channels = 0
        self.bn_elems = 0
        self.extras = []

    def conv(self, kind, cin, cout, k, s, p, g, h, w, bn=True):
        self.layers.append((kind, cin, cout, k, k, s, s, p, p, g, h, w))
        oh, ow = out_dim(h, k, s, p), out_dim(w, k, s, p)
        if bn:
            self.bn(cout, oh, ow)
        return oh, ow

    def bn(self, channels, h, w):
        self.bn_channels += channels
        self.bn_elems += channels * h * w

    def finish(self, fc_in, fc_out):
        # batch norm is one multiply-add per element at inference
        self.extras.append((2 * self.bn_channels, self.bn_elems,
                            f"batchnorm affine over {self.bn_channels} channels"))
        self.extras.append((fc_in * fc_out + fc_out, fc_in * fc_out,
                            f"classifier {fc_in}x{fc_out} + bias"))


def groups_for(variant, cin):
    if variant == "S":
        return 1
    if variant == "GN":
        return cin
    return int(variant[1:])


def replaced_conv(t, variant, cin, cout, stride, h, w, bn_after_pointwise=True):
    """3x3 conv, or its grouped + pointwise replacement."""
    if variant == "S":
        return t.conv("standard", cin, cout, 3, stride, 1, 1, h, w, bn=bn_after_pointwise)
    g = groups_for(variant, cin)
    oh, ow = t.conv("grouped", cin, cin, 3, stride, 1, g, h, w, bn=True)
    return t.conv("pointwise", cin, cout, 1, 1, 0, 1, oh, ow, bn=bn_after_pointwise)


def wrn40_2(variant):
    t = Table()
    h = w = 32
    t.conv("standard", 3, 16, 3, 1, 1, 1, h, w, bn=False)
    cin = 16
    for width, stride in ((32, 1), (64, 2), (128, 2)):
        for b in range(6):
            s = stride if b == 0 else 1
            # pre-activation: bn1 over the block input
            t.bn(cin, h, w)
            oh, ow = replaced_conv(t, variant, cin, width, s, h, w, bn_after_pointwise=True)
            replaced_conv(t, variant, width, width, 1, oh, ow, bn_after_pointwise=False)
            if b == 0:
                t.conv("pointwise", cin, width, 1, s, 0, 1, h, w, bn=False)
            cin = width
            h, w = oh, ow
    t.bn(cin, h, w)
    t.finish(128, 10)
    return t


def resnet34(variant):
    t = Table()
    h = w = 224
    h, w = t.conv("standard", 3, 64, 7, 2, 3, 1, h, w)
    h, w = out_dim(h, 3, 2, 1), out_dim(w, 3, 2, 1)  # max pool
    cin = 64
    for width, blocks, stride in ((64, 3, 1), (128, 4, 2), (256, 6, 2), (512, 3, 2)):
        for b in range(blocks):
            s = stride if b == 0 else 1
            oh, ow = replaced_conv(t, variant, cin, width, s, h, w)
            replaced_conv(t, variant, width, width, 1, oh, ow)
            if b == 0 and (s != 1 or cin != width):
                t.conv("pointwise", cin, width, 1, s, 0, 1, h, w)
            cin = width
            h, w = oh, ow
    t.finish(512, 1000)
    return t


def mobilenet_v2(variant):
    t = Table()
    h = w = 224
    h, w = t.conv("standard", 3, 32, 3, 2, 1, 1, h, w)
    cin = 32
    settings = [(1, 16, 1, 1), (6, 24, 2, 2), (6, 32, 3, 2), (6, 64, 4, 2),
                (6, 96, 3, 1), (6, 160, 3, 2), (6, 320, 1, 1)]
    for expand, cout, n, stride in settings:
        for b in range(n):
            s = stride if b == 0 else 1
            hidden = cin * expand
            if expand != 1:
                t.conv("pointwise", cin, hidden, 1, 1, 0, 1, h, w)
            if variant == "S":
                h, w = t.conv("standard", hidden, hidden, 3, s, 1, 1, h, w)
            else:
                h, w = t.conv("grouped", hidden, hidden, 3, s, 1, groups_for(variant, hidden), h, w)
            t.conv("pointwise", hidden, cout, 1, 1, 0, 1, h, w)
            cin = cout
    t.conv("pointwise", cin, 1280, 1, 1, 0, 1, h, w)
    t.finish(1280, 1000)
    return t


BUILDERS = {"wrn40_2": wrn40_2, "resnet34": resnet34, "mobilenet_v2": mobilenet_v2}


def write(out_dir, name, variant, t, top1):
    path = os.path.join(out_dir, f"{name}_{variant}.net")
    label = "S" if variant == "S" else f"G({variant[1:]})"
    with open(path, "w") as f:
        f.write("gspc-network 1\n")
        f.write(f"network {name}\n")
        f.write(f"variant {label}\n")
        f.write(f"top1 {top1:.2f}\n")
        f.write("# conv kind c_in c_out k_h k_w s_h s_w pad_h pad_w g in_h in_w\n")
        for layer in t.layers:
            f.write("conv " + " ".join(str(v) for v in layer) + "\n")
        f.write("# extra params macs note (non-convolutional cost)\n")
        for params, macs, note in t.extras:
            f.write(f"extra {params} {macs} {note}\n")
    return path


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(os.path.abspath(__file__)), "..", "data", "networks")
    os.makedirs(out_dir, exist_ok=True)
    for name, build in BUILDERS.items():
        for i, variant in enumerate(VARIANTS):
            t = build(variant)
            write(out_dir, name, variant, t, TOP1[name][i])
            macs = params = 0
            for kind, cin, cout, kh, kw, sh, sw, ph, pw, g, ih, iw in t.layers:
                oh, ow = out_dim(ih, kh, sh, ph), out_dim(iw, kw, sw, pw)
                macs += cin * cout * kh * kw * oh * ow // g
                params += cout * (cin // g) * kh * kw
            params += sum(p for p, _, _ in t.extras)
            macs += sum(m for _, m, _ in t.extras)
            print(f"{name:13s} {variant:4s} layers={len(t.layers):3d} params={params:>10d} macs={macs:>12d}")


if __name__ == "__main__":
    main()
