"""Writes the golden fixtures under crates/core/tests/fixtures.

An independent numpy implementation of the file formats and the
sense / reconstruct path. Weights come from closed-form expressions so the
fixtures do not depend on the Rust random number generator.

    python3 scripts/make_golden.py
"""

import struct
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "fixtures"

B, RATE, K, T = 4, 0.5, 1, 2
N = B * B
M = int(np.floor(N * RATE + 1e-9))
H = N * T
WIDTH, HEIGHT = 10, 7


def layer_dims():
    dims = [(N, M, "identity")]
    prev = M
    for _ in range(K):
        dims.append((prev, H, "relu"))
        prev = H
    dims.append((prev, N, "identity"))
    return dims


def make_layers():
    layers = []
    for li, (din, dout, act) in enumerate(layer_dims()):
        k = np.arange(dout * din, dtype=np.float64)
        w = np.sin(0.37 * k + 1.1 * li + 0.2) / np.sqrt(din)
        j = np.arange(dout, dtype=np.float64)
        b = 0.1 * np.cos(0.9 * j + 0.5 * li)
        layers.append((w.reshape(dout, din), b, act))
    return layers


def make_image():
    r = np.arange(HEIGHT)[:, None]
    c = np.arange(WIDTH)[None, :]
    return ((r * 37 + c * 23 + (r * c) % 11 * 5) % 256).astype(np.uint8)


def model_bytes(layers):
    header = (
        f"block_size={B}\nrate={RATE!r}\nrecon_layers={K}\nredundancy={T}\n"
        f"linear_sensing=0\nmeasurement_dim={M}\nlayer_count={len(layers)}\n"
    )
    for i, (w, _, act) in enumerate(layers):
        header += f"layer.{i}={w.shape[1]},{w.shape[0]},{act}\n"
    hb = header.encode()
    out = b"BCSMODEL" + struct.pack("<II", 1, len(hb)) + hb
    for w, b, _ in layers:
        out += w.astype("<f8").tobytes() + b.astype("<f8").tobytes()
    return out


def blocks_of(img):
    rows, cols = -(-HEIGHT // B), -(-WIDTH // B)
    padded = np.pad(img, ((0, rows * B - HEIGHT), (0, cols * B - WIDTH)), mode="edge")
    unit = padded.astype(np.float64) / 255.0
    vecs = []
    for gr in range(rows):
        for gc in range(cols):
            blk = unit[gr * B:(gr + 1) * B, gc * B:(gc + 1) * B]
            vecs.append(blk.flatten(order="F"))
    return np.array(vecs), rows, cols


def forward(layers, x):
    for w, b, act in layers:
        x = x @ w.T + b
        if act == "relu":
            x = np.maximum(x, 0.0)
    return x


def measurement_bytes(y, rows, cols):
    out = b"BCSMEAS\0" + struct.pack("<IIdIIIII", 1, B, RATE, M, WIDTH, HEIGHT, rows, cols)
    return out + y.astype("<f8").tobytes()


def assemble(xhat, rows, cols):
    canvas = np.zeros((rows * B, cols * B))
    for i, v in enumerate(xhat):
        gr, gc = divmod(i, cols)
        canvas[gr * B:(gr + 1) * B, gc * B:(gc + 1) * B] = v.reshape(B, B, order="F")
    canvas = np.clip(canvas, 0.0, 1.0)
    pix = np.clip(np.floor(canvas * 255.0 + 0.5), 0, 255).astype(np.uint8)
    return pix[:HEIGHT, :WIDTH]


def pgm(img):
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode() + img.tobytes()


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    layers = make_layers()
    img = make_image()
    x, rows, cols = blocks_of(img)
    y = forward(layers[:1], x)
    xhat = forward(layers[1:], y)
    recon = assemble(xhat, rows, cols)

    (OUT / "golden_model.bcsm").write_bytes(model_bytes(layers))
    (OUT / "golden_image.pgm").write_bytes(pgm(img))
    (OUT / "golden_measurements.bcsmeas").write_bytes(measurement_bytes(y, rows, cols))
    (OUT / "golden_recon.pgm").write_bytes(pgm(recon))
    # Pre-clamp network outputs, for comparing against the full forward pass.
    np.savetxt(OUT / "golden_outputs.txt", xhat, fmt="%.17e")
    print(f"wrote fixtures to {OUT}: {len(x)} blocks, M={M}")


if __name__ == "__main__":
    main()
