"""JSON encoding of complex arrays as nested ``[re, im]`` pairs."""

import numpy as np


def encode_complex(a) -> list:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.shape[-1:] != (2,):
        raise ValueError("complex arrays are encoded as [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]
