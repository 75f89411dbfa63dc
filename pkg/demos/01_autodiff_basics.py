"""
Reverse-mode gradients on numpy arrays
======================================

A quick tour of the Tensor wrapper: build an expression, call backward,
and compare the result with a derivative worked out by hand.
"""

import numpy as np

from casep.tensor import Tensor, conv1d, conv1d_transposed

# y = sum(w * x + b) with w = [1, 2, 3]
w = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
b = Tensor(np.array([0.5, 0.5, 0.5]), requires_grad=True)
x = np.array([4.0, 5.0, 6.0])

y = (w * x + b).sum()
y.backward()

print("value          ", y.item())
print("dy/dw (== x)   ", w.grad)
print("dy/db (== ones)", b.grad)

# The same machinery differentiates through convolution. The transposed
# convolution is the exact adjoint, so these two inner products agree to
# machine precision.
rng = np.random.default_rng(0)
kernel = rng.standard_normal((2, 3, 4))
signal = Tensor(rng.standard_normal((3, 16)))
probe = Tensor(rng.standard_normal((2, 7)))

forward = (conv1d(signal, Tensor(kernel), stride=2) * probe).sum().item()
adjoint = (signal * conv1d_transposed(probe, Tensor(kernel), stride=2)).sum().item()
print("conv inner product     ", forward)
print("transposed-conv product", adjoint)
print("difference             ", abs(forward - adjoint))
