#!/usr/bin/env python3
"""Straight-line evaluation of a fixed 2-layer relu net (dims 3 -> 4 -> 2).

Weights are stored [in][out]; no libraries, plain float arithmetic.
Output is frozen into tests/test_numeric_core.cpp.
"""

W1 = [[0.5, -0.25, 0.125, 1.0],
      [-1.0, 0.75, 0.5, -0.5],
      [0.25, 0.5, -0.75, 0.25]]
b1 = [0.1, -0.2, 0.3, 0.0]
W2 = [[1.0, -0.5],
      [0.5, 0.25],
      [-0.75, 1.5],
      [0.25, -1.0]]
b2 = [0.05, -0.05]
x = [0.3, -0.7, 1.1]

h = []
for j in range(4):
    acc = b1[j]
    for i in range(3):
        acc += x[i] * W1[i][j]
    h.append(acc if acc > 0.0 else 0.0)

y = []
for j in range(2):
    acc = b2[j]
    for i in range(4):
        acc += h[i] * W2[i][j]
    y.append(acc)

print("hidden", [repr(v) for v in h])
print("output", [repr(v) for v in y])
