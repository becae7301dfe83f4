"""Regenerates the two-record CIFAR fixtures (see README.md in this folder)."""
from pathlib import Path

here = Path(__file__).resolve().parent


def pixels(record):
    if record == 0:
        return bytes((i * 7 + 1) % 256 for i in range(3072))
    return bytes(255 - (i % 256) for i in range(3072))


(here / "cifar10_two_records.bin").write_bytes(
    bytes([3]) + pixels(0) + bytes([9]) + pixels(1))
(here / "cifar100_two_records.bin").write_bytes(
    bytes([11, 42]) + pixels(0) + bytes([19, 99]) + pixels(1))
