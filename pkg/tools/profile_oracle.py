"""Layer-shape arithmetic for the built-in CNN profiles.

Regenerates ``src/swarmsplit/profiles/{lenet,vgg16}.csv`` for a 595x326 RGB
input.  Run from the repository root::

    python tools/profile_oracle.py

Counting rules (float32 everywhere, 4 bytes per value):

* conv      flops = 2 * kh * kw * c_in * c_out * out_h * out_w   (bias ignored)
* dense     flops = 2 * n_in * n_out
* max pool  flops = kh * kw * c * out_h * out_w   (one comparison per window element)
* adaptive average pool  flops = c * in_h * in_w   (one add per input element)
* mem_bytes    = 4 * (weights + biases) + output_bytes
* output_bytes = 4 * out_h * out_w * c_out
* input_bytes  = 595 * 326 * 3   (8-bit RGB image)

Activations are folded into the layer that precedes them.  Pooling units are
folded into the preceding conv only where needed to reach the published layer
counts (7 for LeNet, 18 for VGG-16); the folding map is written into each
profile file as comment lines.
"""

from __future__ import annotations

import os
import sys

IMAGE_W = 595
IMAGE_H = 326
IMAGE_C = 3
FLOAT_BYTES = 4


def _conv(h, w, c, out_c, k, pad):
    oh = h + 2 * pad - k + 1
    ow = w + 2 * pad - k + 1
    params = out_c * (k * k * c + 1)
    flops = 2 * k * k * c * out_c * oh * ow
    return oh, ow, out_c, params, flops


def _maxpool(h, w, c, k=2):
    oh, ow = h // k, w // k
    return oh, ow, c, k * k * c * oh * ow


def _adaptive_avg(h, w, c, out_hw):
    return out_hw, out_hw, c, c * h * w


def _dense(n_in, n_out):
    return n_out * (n_in + 1), 2 * n_in * n_out


def lenet_layers():
    """LeNet-5 with an adaptive 5x5 average pool ahead of C5.

    Returns a list of dicts with keys name, params, flops, out_shape.
    """
    h, w, c = IMAGE_H, IMAGE_W, IMAGE_C
    layers = []

    h, w, c, p, f = _conv(h, w, c, 6, 5, 0)
    layers.append(dict(name="conv1", params=p, flops=f, out_shape=(h, w, c)))

    h, w, c, f = _maxpool(h, w, c)
    layers.append(dict(name="pool1", params=0, flops=f, out_shape=(h, w, c)))

    h, w, c, p, f = _conv(h, w, c, 16, 5, 0)
    layers.append(dict(name="conv2", params=p, flops=f, out_shape=(h, w, c)))

    h, w, c, f = _maxpool(h, w, c)
    h, w, c, f2 = _adaptive_avg(h, w, c, 5)
    layers.append(dict(name="pool2+avg5", params=0, flops=f + f2, out_shape=(h, w, c)))

    h, w, c, p, f = _conv(h, w, c, 120, 5, 0)
    layers.append(dict(name="conv3", params=p, flops=f, out_shape=(h, w, c)))

    n = h * w * c
    p, f = _dense(n, 84)
    layers.append(dict(name="fc1", params=p, flops=f, out_shape=(1, 1, 84)))
    p, f = _dense(84, 10)
    layers.append(dict(name="fc2", params=p, flops=f, out_shape=(1, 1, 10)))
    return layers


# (block, convs in block, pool folded into last conv of block)
_VGG_BLOCKS = [(64, 2, True), (128, 2, True), (256, 3, True), (512, 3, False), (512, 3, False)]


def vgg16_layers():
    """VGG-16 (configuration D) with pools 1-3 folded, 7x7 adaptive pool folded into pool5."""
    h, w, c = IMAGE_H, IMAGE_W, IMAGE_C
    layers = []
    for b, (width, n_conv, fold_pool) in enumerate(_VGG_BLOCKS, start=1):
        for k in range(1, n_conv + 1):
            h, w, c, p, f = _conv(h, w, c, width, 3, 1)
            name = f"conv{b}_{k}"
            if k == n_conv and fold_pool:
                h, w, c, fp = _maxpool(h, w, c)
                f += fp
                name += "+pool"
            layers.append(dict(name=name, params=p, flops=f, out_shape=(h, w, c)))
        if not fold_pool:
            h, w, c, f = _maxpool(h, w, c)
            name = f"pool{b}"
            if b == 5:
                h, w, c, f2 = _adaptive_avg(h, w, c, 7)
                f += f2
                name += "+avg7"
            layers.append(dict(name=name, params=0, flops=f, out_shape=(h, w, c)))
    n = h * w * c
    for name, n_out in (("fc6", 4096), ("fc7", 4096), ("fc8", 1000)):
        p, f = _dense(n, n_out)
        layers.append(dict(name=name, params=p, flops=f, out_shape=(1, 1, n_out)))
        n = n_out
    return layers


FOLDING = {
    "lenet": [
        "LeNet-5, 595x326x3 input, valid 5x5 convs, tanh folded into each layer",
        "pool2+avg5: 2x2 max pool followed by adaptive average pool to 5x5 (keeps C5 at 1x1x120)",
    ],
    "vgg16": [
        "VGG-16 configuration D, 595x326x3 input, same-padded 3x3 convs, ReLU folded into each layer",
        "max pools of blocks 1-3 folded into conv1_2, conv2_2, conv3_3 (13 conv + 2 pool + 3 dense = 18)",
        "pool5+avg7: 2x2 max pool followed by adaptive average pool to 7x7",
    ],
}


def rows(layers):
    out = []
    for idx, layer in enumerate(layers, start=1):
        oh, ow, oc = layer["out_shape"]
        output_bytes = FLOAT_BYTES * oh * ow * oc
        mem = FLOAT_BYTES * layer["params"] + output_bytes
        out.append((idx, layer["name"], mem, layer["flops"], output_bytes))
    return out


def input_bytes():
    return IMAGE_W * IMAGE_H * IMAGE_C


def render(model):
    layers = {"lenet": lenet_layers, "vgg16": vgg16_layers}[model]()
    lines = [f"#input_bytes={input_bytes()}"]
    lines += [f"# {note}" for note in FOLDING[model]]
    lines.append("index,name,mem_bytes,flops,output_bytes")
    lines += [",".join(str(v) for v in row) for row in rows(layers)]
    return "\n".join(lines) + "\n"


def main(argv=None):
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    target = os.path.join(root, "src", "swarmsplit", "profiles")
    for model in ("lenet", "vgg16"):
        path = os.path.join(target, f"{model}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(render(model))
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
