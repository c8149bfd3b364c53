"""Round-robin bank layout: logical indices to (bank, offset) pairs and back.

Element e of a dimension with b banks lives in bank e mod b at offset
e div b. Multi-dimensional memories flatten per-dimension banks and offsets
row-major.
"""

from __future__ import annotations

from dataclasses import dataclass

from .surface import BankSpec, MemT


@dataclass(frozen=True)
class BankLayout:
    name: str
    dims: tuple[BankSpec, ...]

    @property
    def flat_banks(self) -> int:
        n = 1
        for d in self.dims:
            n *= d.banks
        return n

    @property
    def bank_size(self) -> int:
        """Elements held by each flat bank."""
        n = 1
        for d in self.dims:
            n *= d.size // d.banks
        return n

    def offsets_per_dim(self) -> tuple[int, ...]:
        return tuple(d.size // d.banks for d in self.dims)

    def flatten_bank(self, banks: tuple[int, ...]) -> int:
        flat = 0
        for d, b in zip(self.dims, banks):
            flat = flat * d.banks + b
        return flat

    def unflatten_bank(self, flat: int) -> tuple[int, ...]:
        out = []
        for d in reversed(self.dims):
            out.append(flat % d.banks)
            flat //= d.banks
        return tuple(reversed(out))

    def flatten_offset(self, offsets: tuple[int, ...]) -> int:
        flat = 0
        for width, o in zip(self.offsets_per_dim(), offsets):
            flat = flat * width + o
        return flat


def bank_and_offset(layout: BankLayout, logical: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Map a logical index vector to (flat bank, per-dimension offsets)."""
    if len(logical) != len(layout.dims):
        raise ValueError(f"{layout.name}: expected {len(layout.dims)} indices")
    banks = []
    offsets = []
    for d, i in zip(layout.dims, logical):
        if not 0 <= i < d.size:
            raise IndexError(f"{layout.name}: index {i} out of range [0, {d.size})")
        banks.append(i % d.banks)
        offsets.append(i // d.banks)
    return layout.flatten_bank(tuple(banks)), tuple(offsets)


def logical_of(layout: BankLayout, flat_bank: int, offsets: tuple[int, ...]) -> tuple[int, ...]:
    """Inverse of bank_and_offset."""
    banks = layout.unflatten_bank(flat_bank)
    return tuple(o * d.banks + b for d, b, o in zip(layout.dims, banks, offsets))


def layout_of(name: str, mem: MemT) -> BankLayout:
    return BankLayout(name, mem.dims)
