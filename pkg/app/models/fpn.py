from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from ..core.config import settings
from ..core.errors import (
    InstanceTooLargeError,
    NonLinearMapError,
    PreconditionError,
    SizeMismatchError,
    SpaceMismatchError,
    UnsupportedPrimeError,
)
from ..services.finite_field import nullspace_mod_p, rank_mod_p, rref_mod_p, vec2de

SUPPORTED_PRIMES = (2, 3, 5, 7)


@lru_cache(maxsize=64)
def _vector_table(p: int, n: int) -> np.ndarray:
    size = p**n
    idx = np.arange(size, dtype=np.int64)
    table = np.empty((size, n), dtype=np.int64)
    for j in range(n - 1, -1, -1):
        idx, table[:, j] = np.divmod(idx, p)
    table.setflags(write=False)
    return table


class FpnSpace(BaseModel):
    """The group F_p^n; elements are indices whose base-p digits (big-endian) are the coordinates."""

    model_config = ConfigDict(frozen=True)

    p: int
    n: int

    @field_validator("p")
    @classmethod
    def _supported_prime(cls, p: int) -> int:
        if p not in SUPPORTED_PRIMES:
            raise UnsupportedPrimeError(f"p={p} not in supported primes {SUPPORTED_PRIMES}")
        return p

    @model_validator(mode="after")
    def _size_guard(self) -> "FpnSpace":
        if self.n < 0:
            raise PreconditionError("dimension must be non-negative")
        if self.p**self.n > settings.FPN_SIZE_LIMIT:
            raise InstanceTooLargeError(
                f"p^n = {self.p}^{self.n} exceeds the size guard {settings.FPN_SIZE_LIMIT}"
            )
        return self

    @property
    def size(self) -> int:
        return self.p**self.n

    @property
    def shape(self) -> tuple:
        return (self.p,) * self.n

    def vectors(self) -> np.ndarray:
        """All elements as a read-only ``(size, n)`` digit table, row ``k`` = element ``k``."""
        return _vector_table(self.p, self.n)

    def encode(self, vectors: np.ndarray) -> np.ndarray:
        weights = self.p ** np.arange(self.n - 1, -1, -1, dtype=np.int64)
        return (np.asarray(vectors, dtype=np.int64) % self.p) @ weights

    def digits(self, index: int) -> tuple:
        return tuple(int(d) for d in self.vectors()[index])

    def index(self, digits: Sequence[int]) -> int:
        if len(digits) != self.n:
            raise SizeMismatchError(f"expected {self.n} coordinates, got {len(digits)}")
        return vec2de(digits, self.p)

    def add(self, a, b) -> np.ndarray:
        v = self.vectors()
        return self.encode(v[a] + v[b])

    def neg(self, a) -> np.ndarray:
        return self.encode(-self.vectors()[a])

    def lift(self, extra: int) -> "FpnSpace":
        return FpnSpace(p=self.p, n=self.n + extra)


def same_space(a: FpnSpace, b: FpnSpace) -> None:
    if a != b:
        raise SpaceMismatchError(f"functions live on different spaces: {a} vs {b}")


class DensityFunction:
    """A table ``F_p^n -> [0, 1]``; indicator sets are the 0/1 special case."""

    def __init__(self, space: FpnSpace, values: Iterable[float]) -> None:
        arr = np.array(values, dtype=np.float64).reshape(-1)
        if arr.size != space.size:
            raise SizeMismatchError(f"expected {space.size} values, got {arr.size}")
        if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
            raise PreconditionError("density values must lie in [0, 1]")
        arr.setflags(write=False)
        self.space = space
        self.values = arr

    @classmethod
    def indicator(cls, space: FpnSpace, elements: Iterable[int]) -> "DensityFunction":
        arr = np.zeros(space.size)
        idx = np.fromiter(elements, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= space.size):
            raise PreconditionError("element index outside the space")
        arr[idx] = 1.0
        return cls(space, arr)

    @classmethod
    def constant(cls, space: FpnSpace, value: float) -> "DensityFunction":
        return cls(space, np.full(space.size, float(value)))

    @property
    def is_indicator(self) -> bool:
        return bool(np.all((self.values == 0.0) | (self.values == 1.0)))

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values > 0.0)

    def mean(self) -> float:
        return float(self.values.mean())

    def l1_distance(self, other: "DensityFunction") -> float:
        """``||f - g||_1 = E_x |f(x) - g(x)|``."""
        same_space(self.space, other.space)
        return float(np.abs(self.values - other.values).mean())

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, DensityFunction)
            and self.space == other.space
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return f"DensityFunction(p={self.space.p}, n={self.space.n}, mean={self.mean():.4f})"


class Spectrum:
    """Fourier coefficients ``f^(y) = E_x f(x) e^{-2 pi i x.y / p}`` indexed like the space."""

    def __init__(self, space: FpnSpace, values: np.ndarray) -> None:
        arr = np.asarray(values, dtype=np.complex128).reshape(-1)
        if arr.size != space.size:
            raise SizeMismatchError(f"expected {space.size} coefficients, got {arr.size}")
        self.space = space
        self.values = arr

    def __getitem__(self, y: int) -> complex:
        return complex(self.values[y])

    def l2_squared(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


class Subspace:
    """A subspace of F_p^n held as a reduced row-echelon basis."""

    def __init__(self, space: FpnSpace, basis: np.ndarray | Sequence[Sequence[int]] = ()) -> None:
        raw = np.asarray(basis, dtype=np.int64)
        if raw.size == 0:
            self.basis = np.zeros((0, space.n), dtype=np.int64)
        else:
            self.basis, _ = rref_mod_p(raw.reshape(-1, space.n), space.p)
        self.space = space

    @classmethod
    def whole(cls, space: FpnSpace) -> "Subspace":
        return cls(space, np.eye(space.n, dtype=np.int64))

    @classmethod
    def zero(cls, space: FpnSpace) -> "Subspace":
        return cls(space)

    @classmethod
    def orthogonal_to(cls, space: FpnSpace, vectors: np.ndarray) -> "Subspace":
        """``{x : x . y = 0 for every listed y}``."""
        vectors = np.asarray(vectors, dtype=np.int64).reshape(-1, space.n)
        if vectors.shape[0] == 0:
            return cls.whole(space)
        return cls(space, nullspace_mod_p(vectors, space.p, space.n))

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[0])

    @property
    def codimension(self) -> int:
        return self.space.n - self.dimension

    def annihilator(self) -> "Subspace":
        """``H^perp``; its basis rows define a linear map with kernel ``H``."""
        if self.dimension == 0:
            return Subspace.whole(self.space)
        return Subspace(self.space, nullspace_mod_p(self.basis, self.space.p, self.space.n))

    def contains(self, digits: Sequence[int]) -> bool:
        vec = np.asarray(digits, dtype=np.int64).reshape(1, -1) % self.space.p
        stacked = np.vstack([self.basis, vec])
        return rank_mod_p(stacked, self.space.p) == self.dimension

    def member_indices(self) -> np.ndarray:
        labels = self.coset_labels()
        return np.flatnonzero(labels == labels[0])

    def coset_labels(self) -> np.ndarray:
        """Label each element by its coset ``x + H`` (labels in ``[0, p^codim)``)."""
        ann = self.annihilator().basis
        if ann.shape[0] == 0:
            return np.zeros(self.space.size, dtype=np.int64)
        images = (self.space.vectors() @ ann.T) % self.space.p
        weights = self.space.p ** np.arange(ann.shape[0] - 1, -1, -1, dtype=np.int64)
        return images @ weights

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Subspace)
            and self.space == other.space
            and np.array_equal(self.basis, other.basis)
        )

    def __repr__(self) -> str:
        return f"Subspace(p={self.space.p}, n={self.space.n}, dim={self.dimension})"


class LinearMap:
    """``phi : F_p^n -> F_p^m`` acting on column vectors by an ``m x n`` matrix."""

    def __init__(self, domain: FpnSpace, codomain_dim: int, matrix: np.ndarray | Sequence[Sequence[int]]) -> None:
        mat = np.asarray(matrix, dtype=np.int64)
        if mat.size == 0:
            mat = np.zeros((codomain_dim, domain.n), dtype=np.int64)
        if mat.shape != (codomain_dim, domain.n):
            raise SizeMismatchError(
                f"matrix shape {mat.shape} does not match ({codomain_dim}, {domain.n})"
            )
        if np.any(mat < 0) or np.any(mat >= domain.p):
            raise NonLinearMapError("matrix entries must lie in [0, p)")
        self.domain = domain
        self.codomain = FpnSpace(p=domain.p, n=codomain_dim)
        self.matrix = mat

    @classmethod
    def from_table(cls, domain: FpnSpace, codomain_dim: int, table: Sequence[int]) -> "LinearMap":
        """Recover the matrix from a full image table, rejecting non-linear tables."""
        table = np.asarray(table, dtype=np.int64)
        codomain = FpnSpace(p=domain.p, n=codomain_dim)
        if table.shape != (domain.size,):
            raise SizeMismatchError(f"image table must have {domain.size} entries")
        columns = []
        for j in range(domain.n):
            unit = [0] * domain.n
            unit[j] = 1
            columns.append(codomain.vectors()[table[domain.index(unit)]])
        matrix = np.array(columns, dtype=np.int64).T.reshape(codomain_dim, domain.n)
        candidate = cls(domain, codomain_dim, matrix)
        if not np.array_equal(candidate.apply(np.arange(domain.size)), table):
            raise NonLinearMapError("image table is not a linear map")
        return candidate

    @property
    def rank(self) -> int:
        return rank_mod_p(self.matrix, self.domain.p)

    def apply(self, indices) -> np.ndarray:
        vecs = self.domain.vectors()[np.asarray(indices, dtype=np.int64)]
        return self.codomain.encode((vecs @ self.matrix.T) % self.domain.p)

    def kernel(self) -> Subspace:
        return Subspace(self.domain, nullspace_mod_p(self.matrix, self.domain.p, self.domain.n))
