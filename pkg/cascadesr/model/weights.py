"""
Flat binary weight files:

    magic 'ERBPNW\\0\\0' | uint32 version
    uint32 scale, num_units, num_features, init_features, in_channels
    uint32 metadata length | utf-8 'key=value' lines
    uint32 tensor count | per tensor: uint16 name length, name, uint8 ndim, uint32 dims
    little-endian float64 data of every tensor in declaration order
"""
import os
import struct
import logging
import numpy as np
import torch

from cascadesr.errors import FormatError
from cascadesr.model.erbpn import ERBPN

logger = logging.getLogger()

MAGIC = b'ERBPNW\x00\x00'
VERSION = 1


class _Reader:
    def __init__(self, buf, path):
        self.buf = buf
        self.path = path
        self.pos = 0

    def read(self, n):
        if self.pos + n > len(self.buf):
            raise FormatError(f'{self.path} is truncated at byte {self.pos}')
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.read(struct.calcsize(fmt)))


def save_weights(model, path):
    state = model.state_dict()
    meta = ''.join(f'{k}={v}\n' for k, v in model.metadata.items()).encode('utf-8')
    header = [
        MAGIC,
        struct.pack('<I', VERSION),
        struct.pack('<5I', model.scale, model.num_units, model.num_features,
                    model.init_features, model.in_channels),
        struct.pack('<I', len(meta)), meta,
        struct.pack('<I', len(state)),
    ]
    for name, t in state.items():
        encoded = name.encode('utf-8')
        header.append(struct.pack('<H', len(encoded)) + encoded)
        header.append(struct.pack('<B', t.dim()) + struct.pack(f'<{t.dim()}I', *t.shape))
    dirname = os.path.dirname(path)
    if dirname:
        os.makedirs(dirname, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(b''.join(header))
        for t in state.values():
            f.write(t.detach().cpu().numpy().astype('<f8').tobytes())
    return path


def load_weights(path):
    """Rebuild the network recorded in a weight file, with bit-identical parameters."""
    with open(path, 'rb') as f:
        buf = f.read()
    r = _Reader(buf, path)
    if r.read(len(MAGIC)) != MAGIC:
        raise FormatError(f'{path} is not a weight file')
    version, = r.unpack('<I')
    if version != VERSION:
        raise FormatError(f'{path}: unsupported weight format version {version}')
    scale, num_units, num_features, init_features, in_channels = r.unpack('<5I')
    meta_len, = r.unpack('<I')
    try:
        meta_lines = r.read(meta_len).decode('utf-8').splitlines()
    except UnicodeDecodeError as e:
        raise FormatError(f'{path}: bad metadata: {e}')
    metadata = dict(line.split('=', 1) for line in meta_lines if '=' in line)
    count, = r.unpack('<I')
    table = []
    for _ in range(count):
        name_len, = r.unpack('<H')
        name = r.read(name_len).decode('utf-8')
        ndim, = r.unpack('<B')
        table.append((name, r.unpack(f'<{ndim}I')))

    try:
        model = ERBPN(scale=scale, num_features=num_features, init_features=init_features,
                      num_units=num_units, in_channels=in_channels)
    except ValueError as e:
        raise FormatError(f'{path}: bad architecture header: {e}')
    expected = [(k, tuple(v.shape)) for k, v in model.state_dict().items()]
    if [(k, tuple(s)) for k, s in table] != expected:
        raise FormatError(f'{path}: layer table does not match the architecture in its header')
    state = {}
    for name, shape in table:
        n = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(r.read(8 * n), dtype='<f8').astype(np.float64).reshape(shape)
        state[name] = torch.from_numpy(data.copy())
    if r.pos != len(buf):
        raise FormatError(f'{path}: {len(buf) - r.pos} trailing bytes')
    model.load_state_dict(state)
    model.metadata = metadata
    logger.info(f'Loaded ERBPN x{scale} ({num_units} units, {num_features} features) from {path}')
    return model
