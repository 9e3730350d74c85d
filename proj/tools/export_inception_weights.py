# Copyright 2026 The TMO Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Exports torchvision Inception-v3 weights for the pixFID inception extractor.

Writes manifest.txt plus one little-endian float32 file per tensor. With
--reference, also writes a random input in [-1,1] (input.f32, 3x299x299) and
the torchvision activations the extractor must reproduce (features.f32,
768x8x8).
"""

import argparse
import os
import sys

import numpy as np
import torch
import torch.nn.functional as F
import torchvision

BLOCKS = [
    "Conv2d_1a_3x3", "Conv2d_2a_3x3", "Conv2d_2b_3x3", "Conv2d_3b_1x1", "Conv2d_4a_3x3",
    "Mixed_5b", "Mixed_5c", "Mixed_5d", "Mixed_6a", "Mixed_6b", "Mixed_6c", "Mixed_6d", "Mixed_6e",
]


def write_f32(path, array):
    np.ascontiguousarray(array, dtype="<f4").tofile(path)


def shape4(t):
    dims = list(t.shape) + [1] * (4 - t.dim())
    return "x".join(str(d) for d in dims)


def export(model, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    lines = ["# tmo inception v1"]
    for name, tensor in model.state_dict().items():
        if not name.startswith(tuple(b + "." for b in BLOCKS)) or name.endswith("num_batches_tracked"):
            continue
        write_f32(os.path.join(out_dir, name + ".f32"), tensor.detach().cpu().numpy())
        lines.append(f"{name} {shape4(tensor)} f32")
    with open(os.path.join(out_dir, "manifest.txt"), "w") as f:
        f.write("\n".join(lines) + "\n")


def features(model, x):
    m = model
    x = m.Conv2d_1a_3x3(x)
    x = m.Conv2d_2a_3x3(x)
    x = m.Conv2d_2b_3x3(x)
    x = m.maxpool1(x)
    x = m.Conv2d_3b_1x1(x)
    x = m.Conv2d_4a_3x3(x)
    x = m.maxpool2(x)
    for b in BLOCKS[5:]:
        x = getattr(m, b)(x)
    return F.avg_pool2d(x, kernel_size=3, stride=2)


def randomize_batch_norm(model, gen):
    for mod in model.modules():
        if isinstance(mod, torch.nn.BatchNorm2d):
            n = mod.num_features
            mod.weight.data = 0.5 + torch.rand(n, generator=gen)
            mod.bias.data = 0.2 * torch.randn(n, generator=gen)
            mod.reset_running_stats()
            mod.momentum = None
    model.train()
    with torch.no_grad():
        for _ in range(2):
            features(model, torch.rand(2, 3, 299, 299, generator=gen) * 2 - 1)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("out_dir")
    p.add_argument("--state-dict", help="torchvision inception_v3 state dict (.pth); random init when omitted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reference", action="store_true")
    args = p.parse_args()

    torch.manual_seed(args.seed)
    model = torchvision.models.inception_v3(weights=None, aux_logits=False, init_weights=True, transform_input=False)
    if args.state_dict:
        state = torch.load(args.state_dict, map_location="cpu")
        model.load_state_dict({k: v for k, v in state.items() if not k.startswith("AuxLogits.")}, strict=False)
    else:
        randomize_batch_norm(model, torch.Generator().manual_seed(args.seed))
    model.eval()
    export(model, args.out_dir)

    if args.reference:
        gen = torch.Generator().manual_seed(args.seed + 1)
        x = torch.rand(1, 3, 299, 299, generator=gen) * 2 - 1
        with torch.no_grad():
            y = features(model, x)
        write_f32(os.path.join(args.out_dir, "input.f32"), x[0].numpy())
        write_f32(os.path.join(args.out_dir, "features.f32"), y[0].numpy())
    return 0


if __name__ == "__main__":
    sys.exit(main())
