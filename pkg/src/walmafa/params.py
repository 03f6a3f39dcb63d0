"""Named parameter storage and the binary checkpoint container."""

from __future__ import annotations

import struct
from collections.abc import Iterator, Mapping
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .errors import ShapeError, VersionError

CHECKPOINT_MAGIC = b"WMFACKPT"
CHECKPOINT_VERSION = 1

_DTYPE_TAGS = {"f8": np.dtype("<f8"), "f4": np.dtype("<f4")}


class ParamStore:
    """Ordered map of hierarchical names to parameter arrays.

    Names are dotted paths (``"encoder.0.1.norm1.gain"``). Shapes are fixed
    at creation; :meth:`set` refuses a differently shaped value. Each entry
    carries a trainable flag; frozen entries are skipped by the optimizer
    and by :func:`walmafa.gradcheck.grad_check`.
    """

    def __init__(self):
        self._values: dict[str, np.ndarray] = {}
        self._trainable: dict[str, bool] = {}

    def add(self, name: str, value, trainable: bool = True) -> np.ndarray:
        if name in self._values:
            raise KeyError(f"parameter {name!r} already exists")
        arr = np.array(value, copy=True)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        self._values[name] = arr
        self._trainable[name] = trainable
        return arr

    def set(self, name: str, value) -> None:
        value = np.asarray(value)
        current = self._values[name]
        if value.shape != current.shape:
            raise ShapeError(f"{name}: expected shape {current.shape}, got {value.shape}")
        self._values[name] = value.astype(current.dtype, copy=True)

    def __getitem__(self, name: str) -> np.ndarray:
        return self._values[name]

    def __contains__(self, name: str) -> bool:
        return name in self._values

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def names(self, prefix: str = "") -> list[str]:
        return [n for n in self._values if n.startswith(prefix)]

    def is_trainable(self, name: str) -> bool:
        return self._trainable[name]

    def freeze(self, name: str) -> None:
        self._trainable[name] = False

    def unfreeze(self, name: str) -> None:
        self._trainable[name] = True

    def count(self, trainable_only: bool = False) -> int:
        return int(sum(v.size for n, v in self._values.items()
                       if self._trainable[n] or not trainable_only))

    def copy(self) -> "ParamStore":
        other = ParamStore()
        for n, v in self._values.items():
            other.add(n, v.copy(), self._trainable[n])
        return other

    def astype(self, dtype) -> "ParamStore":
        other = ParamStore()
        for n, v in self._values.items():
            other.add(n, v.astype(dtype), self._trainable[n])
        return other

    def tensors(self, requires_grad: bool = True) -> dict[str, Tensor]:
        """Wrap every entry in a leaf :class:`Tensor` sharing the stored array.

        Trainable entries require gradients when ``requires_grad`` is set.
        """
        return {n: Tensor(v, requires_grad=requires_grad and self._trainable[n], name=n)
                for n, v in self._values.items()}


class Scope(Mapping):
    """Read-only prefixed view over a name → tensor mapping."""

    def __init__(self, table: Mapping, prefix: str = ""):
        self._table = table
        self._prefix = prefix

    def __getitem__(self, key):
        return self._table[self._prefix + key]

    def __iter__(self):
        p = self._prefix
        return (k[len(p):] for k in self._table if k.startswith(p))

    def __len__(self):
        return sum(1 for _ in self)

    def sub(self, name: str) -> "Scope":
        return Scope(self._table, f"{self._prefix}{name}.")


# -- checkpoint container -------------------------------------------------
#
# layout (all integers little-endian):
#   magic[8] | version u32 | n_entries u32
#   per entry: name_len u32 | name utf-8 | dtype tag[2] | trainable u8 |
#              ndim u32 | shape u64 * ndim | nbytes u64 | raw little-endian data

def save_checkpoint(store: ParamStore, path) -> None:
    chunks = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(store))]
    for name in store:
        arr = store[name]
        tag = {np.dtype("float64"): "f8", np.dtype("float32"): "f4"}.get(arr.dtype)
        if tag is None:
            raise TypeError(f"{name}: unsupported dtype {arr.dtype}")
        raw = np.ascontiguousarray(arr, dtype=_DTYPE_TAGS[tag]).tobytes()
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(tag.encode("ascii"))
        chunks.append(struct.pack("<BI", int(store.is_trainable(name)), arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(struct.pack("<Q", len(raw)))
        chunks.append(raw)
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path) -> ParamStore:
    buf = Path(path).read_bytes()
    if buf[:8] != CHECKPOINT_MAGIC:
        raise VersionError(f"{path}: not a checkpoint file")
    version, count = struct.unpack_from("<II", buf, 8)
    if version != CHECKPOINT_VERSION:
        raise VersionError(f"{path}: checkpoint version {version}, expected {CHECKPOINT_VERSION}")
    pos = 16
    store = ParamStore()
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        name = buf[pos:pos + name_len].decode("utf-8")
        pos += name_len
        tag = buf[pos:pos + 2].decode("ascii")
        pos += 2
        trainable, ndim = struct.unpack_from("<BI", buf, pos)
        pos += 5
        shape = struct.unpack_from(f"<{ndim}Q", buf, pos)
        pos += 8 * ndim
        (nbytes,) = struct.unpack_from("<Q", buf, pos)
        pos += 8
        dtype = _DTYPE_TAGS[tag]
        arr = np.frombuffer(buf[pos:pos + nbytes], dtype=dtype).reshape(shape)
        pos += nbytes
        store.add(name, arr.astype(dtype.newbyteorder("="), copy=True), bool(trainable))
    return store
