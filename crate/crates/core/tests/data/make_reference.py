"""Writes reference.safetensors with the Python safetensors package and
reference.json describing every tensor (dtype, shape, raw bytes as hex)."""

import json

import torch
from safetensors.torch import save_file

torch.manual_seed(7)
tensors = {
    "embed.weight": torch.randn(4, 3, dtype=torch.float32),
    "layer.0.attn": torch.randn(2, 5, dtype=torch.float16),
    "layer.0.mlp": torch.randn(3, 2, dtype=torch.bfloat16),
    "head.bias": torch.randn(3, dtype=torch.float64),
    "position_ids": torch.arange(6, dtype=torch.int64).reshape(1, 6),
    "mask": torch.tensor([True, False, True]),
    "bytes": torch.tensor([0, 1, 255], dtype=torch.uint8),
    "empty": torch.zeros(0, 3, dtype=torch.float32),
    "scalar": torch.tensor(2.5, dtype=torch.float32),
}
save_file(tensors, "reference.safetensors", metadata={"format": "pt", "origin": "reference"})

names = {
    torch.float32: "F32",
    torch.float16: "F16",
    torch.bfloat16: "BF16",
    torch.float64: "F64",
    torch.int64: "I64",
    torch.bool: "BOOL",
    torch.uint8: "U8",
}
described = {}
for name, t in tensors.items():
    raw = t.contiguous().reshape(-1).view(torch.uint8).numpy().tobytes() if t.numel() else b""
    described[name] = {"dtype": names[t.dtype], "shape": list(t.shape), "hex": raw.hex()}
with open("reference.json", "w") as f:
    json.dump({"metadata": {"format": "pt", "origin": "reference"}, "tensors": described}, f, indent=1, sort_keys=True)
