"""Counter-based random streams keyed by labels.

Every stream is a Philox generator whose 128-bit key is the BLAKE2b digest of
the seed and the labels, so draws depend only on the key and never on call
order, thread scheduling or platform.
"""

import hashlib

import numpy as np

KEY_BYTES = 16


def stream_key(seed: int, *labels: object) -> int:
    """Derive the 128-bit Philox key of a labelled stream.

    Args:
        seed: Run seed
        labels: Stream labels (parameter names, silo ids, round numbers...)

    Returns:
        Integer key in [0, 2**128)
    """
    material = "/".join([str(seed), *(str(label) for label in labels)])
    digest = hashlib.blake2b(material.encode("utf-8"), digest_size=KEY_BYTES).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, *labels: object) -> np.random.Generator:
    """Return a fresh generator for the (seed, labels) stream.

    Args:
        seed: Run seed
        labels: Stream labels

    Returns:
        numpy Generator backed by Philox
    """
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *labels)))
