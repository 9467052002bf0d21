#!/usr/bin/env python3
"""Line-delimited JSON evaluator for configs/resonant.json."""
import json
import math
import sys

VIN = 40.0

for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    req = json.loads(line)
    p = req["params"]
    lr, cr, n = p["Lr"][0], p["Cr"][0], p["n"][0]
    z0 = math.sqrt(lr / cr)
    fr = 1.0 / (2 * math.pi * math.sqrt(lr * cr))
    vout, loss, ipk = [], [], []
    for fsw in p["fsw"]:
        x = fsw / fr
        gain = 1.0 / math.sqrt((1 - x * x) ** 2 * 0.3 + 0.09 * x * x + 1e-3)
        v = VIN * n * min(gain, 3.0)
        i = v / max(z0, 1e-3)
        vout.append(v)
        ipk.append(i)
        loss.append(0.05 * i * i + 1e-6 * fsw)
    out = {"id": req["id"], "meas": {"vout": vout, "loss": loss, "ipk": ipk}}
    sys.stdout.write(json.dumps(out) + "\n")
    sys.stdout.flush()
