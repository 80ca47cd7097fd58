"""Train the digit fixtures used by the mapper tests and `insitu infer`.

Writes a 64-32-10 MLP and a small conv net (4 3x3 filters, then dense) for the
8x8 digits set, plus the held-out evaluation split, into
crates/core/data/digits/. Features are pixel intensities divided by 16.

    python3 scripts/train_digits.py
"""

import csv
import json
from pathlib import Path

import numpy as np
import torch
from sklearn.datasets import load_digits
from sklearn.model_selection import train_test_split
from torch import nn

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "data" / "digits"
SEED = 7


def fit(model, x, y, epochs=300, lr=0.01, wd=1e-4):
    opt = torch.optim.Adam(model.parameters(), lr=lr, weight_decay=wd)
    loss_fn = nn.CrossEntropyLoss()
    for _ in range(epochs):
        opt.zero_grad()
        loss = loss_fn(model(x), y)
        loss.backward()
        opt.step()
    return model


def accuracy(model, x, y):
    with torch.no_grad():
        return (model(x).argmax(1) == y).double().mean().item()


def write_weights(path, tensors):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["tensor", "index", "value"])
        for name, t in tensors.items():
            arr = t.detach().double().numpy()
            for idx in np.ndindex(arr.shape):
                w.writerow([name, ":".join(str(i) for i in idx), repr(float(arr[idx]))])


def main():
    torch.manual_seed(SEED)
    digits = load_digits()
    x = digits.data / 16.0
    y = digits.target
    x_tr, x_te, y_tr, y_te = train_test_split(
        x, y, test_size=0.2, random_state=SEED, stratify=y
    )
    xt = torch.tensor(x_tr, dtype=torch.float32)
    yt = torch.tensor(y_tr)
    xe = torch.tensor(x_te, dtype=torch.float32)
    ye = torch.tensor(y_te)

    mlp = nn.Sequential(nn.Linear(64, 32), nn.ReLU(), nn.Linear(32, 10))
    fit(mlp, xt, yt)
    print(f"mlp eval accuracy {accuracy(mlp, xe, ye):.4f}")

    cnn = nn.Sequential(
        nn.Unflatten(1, (1, 8, 8)),
        nn.Conv2d(1, 4, 3),
        nn.ReLU(),
        nn.Flatten(),
        nn.Linear(4 * 6 * 6, 10),
    )
    fit(cnn, xt, yt)
    print(f"cnn eval accuracy {accuracy(cnn, xe, ye):.4f}")

    OUT.mkdir(parents=True, exist_ok=True)
    write_weights(
        OUT / "mlp_weights.csv",
        {
            "fc1.weight": mlp[0].weight,
            "fc1.bias": mlp[0].bias,
            "fc2.weight": mlp[2].weight,
            "fc2.bias": mlp[2].bias,
        },
    )
    write_weights(
        OUT / "cnn_weights.csv",
        {
            "conv1.weight": cnn[1].weight,
            "conv1.bias": cnn[1].bias,
            "fc.weight": cnn[4].weight,
            "fc.bias": cnn[4].bias,
        },
    )
    mlp_model = {
        "name": "digits-mlp",
        "input_shape": [64],
        "weights": "mlp_weights.csv",
        "layers": [
            {"kind": "dense", "in_features": 64, "out_features": 32,
             "activation": "relu", "precision": "i4",
             "weight": "fc1.weight", "bias": "fc1.bias"},
            {"kind": "dense", "in_features": 32, "out_features": 10,
             "activation": "none", "precision": "i4",
             "weight": "fc2.weight", "bias": "fc2.bias"},
        ],
    }
    cnn_model = {
        "name": "digits-cnn",
        "input_shape": [1, 8, 8],
        "weights": "cnn_weights.csv",
        "layers": [
            {"kind": "conv2d", "in_channels": 1, "out_channels": 4,
             "kernel": [3, 3], "stride": 1, "input_hw": [8, 8],
             "activation": "relu", "precision": "i8",
             "weight": "conv1.weight", "bias": "conv1.bias"},
            {"kind": "dense", "in_features": 144, "out_features": 10,
             "activation": "none", "precision": "i8",
             "weight": "fc.weight", "bias": "fc.bias"},
        ],
    }
    (OUT / "mlp.json").write_text(json.dumps(mlp_model, indent=2) + "\n")
    (OUT / "cnn.json").write_text(json.dumps(cnn_model, indent=2) + "\n")
    with open(OUT / "eval.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"f{i}" for i in range(64)] + ["label"])
        for row, label in zip(x_te, y_te):
            w.writerow([repr(float(v)) for v in row] + [int(label)])


if __name__ == "__main__":
    main()
