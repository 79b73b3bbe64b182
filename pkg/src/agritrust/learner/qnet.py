"""GRU Q-network over observation histories and its binary checkpoint format.

Checkpoint layout (all little-endian)::

    magic        4 bytes  b"AGTQ"
    version      uint16   (1)
    hidden       uint32
    n_actions    uint32
    obs_dim      uint32
    n_objectives uint32
    history      uint32   (0 = full episode)
    n_tensors    uint32
    per tensor:
      name_len uint16, name utf-8 bytes,
      ndim uint8, dims uint32 * ndim,
      data float32 * prod(dims)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import torch
from torch import nn

from agritrust.cropsim import N_ACTIONS, OBS_FIELDS

MAGIC = b"AGTQ"
VERSION = 1

# rough magnitudes of the observation fields, in OBS_FIELDS order
OBS_SCALE = (250.0, 160.0, 8.0, 10.0, 25.0, 0.45, 35.0, 25.0, 20.0, 5.5)


class QNetwork(nn.Module):
    """Recurrent encoder plus a linear head giving ``n_objectives`` values per action.

    ``forward`` always starts from a zero hidden state unless one is passed,
    so the same history always encodes to the same hidden states.
    """

    def __init__(self, hidden: int = 64, n_actions: int = N_ACTIONS, n_objectives: int = 1,
                 obs_dim: int = len(OBS_FIELDS), history: int | None = None):
        super().__init__()
        self.hidden = hidden
        self.n_actions = n_actions
        self.n_objectives = n_objectives
        self.obs_dim = obs_dim
        self.history = history
        self.register_buffer("obs_scale", torch.tensor(OBS_SCALE[:obs_dim], dtype=torch.float32), persistent=False)
        self.gru = nn.GRU(obs_dim, hidden, batch_first=True)
        self.head = nn.Linear(hidden, n_actions * n_objectives)

    def encode(self, obs: torch.Tensor, h0: torch.Tensor | None = None):
        x = obs / self.obs_scale.to(obs.dtype)
        return self.gru(x, h0)

    def q_from_hidden(self, h: torch.Tensor) -> torch.Tensor:
        q = self.head(h)
        return q.view(*h.shape[:-1], self.n_actions, self.n_objectives)

    def forward(self, obs: torch.Tensor, h0: torch.Tensor | None = None):
        """Q-values for every prefix of ``obs`` [B, L, D] -> [B, L, A, m], plus the final hidden state."""
        out, h = self.encode(obs, h0)
        return self.q_from_hidden(out), h


def clone_network(net: QNetwork) -> QNetwork:
    twin = QNetwork(net.hidden, net.n_actions, net.n_objectives, net.obs_dim, net.history)
    twin.load_state_dict(net.state_dict())
    return twin.to(next(net.parameters()).dtype)


def save_checkpoint(net: QNetwork, path: str | Path) -> None:
    state = net.state_dict()
    chunks = [
        MAGIC,
        struct.pack("<HIIIIII", VERSION, net.hidden, net.n_actions, net.obs_dim, net.n_objectives,
                    net.history or 0, len(state)),
    ]
    for name, tensor in state.items():
        arr = tensor.detach().cpu().numpy().astype("<f4")
        raw = name.encode()
        chunks.append(struct.pack("<H", len(raw)) + raw)
        chunks.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes(order="C"))
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path: str | Path) -> QNetwork:
    buf = memoryview(Path(path).read_bytes())
    if bytes(buf[:4]) != MAGIC:
        raise ValueError(f"{path}: not a Q-network checkpoint")
    off = 4
    version, hidden, n_actions, obs_dim, n_obj, history, n_tensors = struct.unpack_from("<HIIIIII", buf, off)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    off += struct.calcsize("<HIIIIII")
    state = {}
    for _ in range(n_tensors):
        (nlen,) = struct.unpack_from("<H", buf, off)
        off += 2
        name = bytes(buf[off:off + nlen]).decode()
        off += nlen
        (ndim,) = struct.unpack_from("<B", buf, off)
        off += 1
        dims = struct.unpack_from(f"<{ndim}I", buf, off)
        off += 4 * ndim
        count = int(np.prod(dims)) if ndim else 1
        arr = np.frombuffer(buf, dtype="<f4", count=count, offset=off).reshape(dims)
        off += 4 * count
        state[name] = torch.from_numpy(arr.astype(np.float32))
    net = QNetwork(hidden, n_actions, n_obj, obs_dim, history or None)
    net.load_state_dict(state)
    return net
