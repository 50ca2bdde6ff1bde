import numpy as np

from spikemotion.synthetic import write_sequence


def static_sequence(root, category="baseline", sequence="static", n=6, shape=(16, 20), value=90):
    frames = [np.full(shape, value, np.uint8) for _ in range(n)]
    gts = [np.zeros(shape, np.uint8) for _ in range(n)]
    return write_sequence(root, category, sequence, frames, gts)


def tree_bytes(root):
    """{relative path: bytes} of every PNG under ``root``."""
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*.png"))}
