"""Per-trial outcome record shared by every protocol pipeline."""

from dataclasses import dataclass


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one Monte Carlo codeword trial."""

    frame_error: bool
    bit_errors: int
    total_bits: int
    decoder_nodes: int
    wait_fraction: float = None
    out_of_set: bool = False
    decoder_exhausted: bool = False


def symbol_bit_errors(decoded, reference, q: int):
    """Bit errors between symbol blocks under the plain binary index map."""
    import numpy as np

    decoded = np.asarray(decoded, dtype=np.int64)
    reference = np.asarray(reference, dtype=np.int64)
    width = max(1, int(np.ceil(np.log2(q))))
    diff = np.bitwise_xor(decoded & ((1 << width) - 1), reference & ((1 << width) - 1))
    errors = 0
    for _ in range(width):
        errors += int(np.sum(diff & 1))
        diff >>= 1
    return errors, width * reference.size
