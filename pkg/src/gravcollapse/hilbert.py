"""Dense finite-dimensional Hilbert-space primitives.

Kronecker products use the "leftmost slowest" convention throughout the
package: for factors of dimensions ``(d_A, d_B)`` the ambient index is
``i_A * d_B + i_B``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12


class DimensionError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateVector:
    """Complex amplitude vector on a (optionally labelled) basis.

    ``normalised`` marks the role of the vector: physical states carry it,
    residuals and other intermediate vectors do not.
    """

    amplitudes: np.ndarray
    basis_labels: tuple[str, ...] | None = None
    normalised: bool = True

    def __post_init__(self):
        amp = _frozen(np.ravel(self.amplitudes))
        if amp.size == 0:
            raise DimensionError("empty state vector")
        object.__setattr__(self, "amplitudes", amp)
        if self.basis_labels is not None:
            labels = tuple(str(s) for s in self.basis_labels)
            if len(labels) != amp.size:
                raise DimensionError(
                    f"{len(labels)} basis labels for dimension {amp.size}")
            object.__setattr__(self, "basis_labels", labels)
        if self.normalised:
            n2 = float(np.vdot(amp, amp).real)
            if abs(n2 - 1.0) > NORM_TOL:
                raise ValueError(f"state flagged normalised has <psi|psi> = {n2!r}")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def normalise(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalise the zero vector")
        return StateVector(self.amplitudes / n, self.basis_labels, True)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    @classmethod
    def basis(cls, dim: int, index: int, labels=None) -> "StateVector":
        v = np.zeros(dim, dtype=complex)
        v[index] = 1.0
        return cls(v, labels)

    @classmethod
    def raw(cls, amplitudes, labels=None) -> "StateVector":
        """Non-normalised vector (residuals, operator images)."""
        return cls(amplitudes, labels, normalised=False)


@dataclass(frozen=True)
class HermitianOperator:
    """Dense square matrix.

    ``hermitian=True`` (the default) enforces ``A == A^dagger`` to 1e-12.
    Measurement operators are built with ``hermitian=False``.
    """

    entries: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        m = _frozen(np.atleast_2d(self.entries))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator must be square, got shape {m.shape}")
        object.__setattr__(self, "entries", m)
        if self.hermitian:
            dev = np.max(np.abs(m - m.conj().T))
            if dev > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(m)))):
                raise ValueError(f"operator is not Hermitian (max deviation {dev:.3e})")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def dagger(self) -> "HermitianOperator":
        return HermitianOperator(self.entries.conj().T, self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, HermitianOperator):
            return HermitianOperator(self.entries @ other.entries, hermitian=False)
        return NotImplemented

    @classmethod
    def identity(cls, dim: int) -> "HermitianOperator":
        return cls(np.eye(dim))

    @classmethod
    def diag(cls, values) -> "HermitianOperator":
        return cls(np.diag(np.asarray(values, dtype=complex)))

    @classmethod
    def general(cls, entries) -> "HermitianOperator":
        return cls(entries, hermitian=False)


@dataclass(frozen=True)
class TensorFactorization:
    factor_dims: tuple[int, ...]
    kron_order: str = field(default="leftmost-slowest")

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims or any(d < 1 for d in dims):
            raise DimensionError(f"invalid factor dimensions {self.factor_dims}")
        if self.kron_order != "leftmost-slowest":
            raise ValueError(f"unsupported kron order {self.kron_order!r}")
        object.__setattr__(self, "factor_dims", dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.factor_dims))

    def check(self, dim: int) -> None:
        if dim != self.dim:
            raise DimensionError(
                f"factorisation {self.factor_dims} has dimension {self.dim}, got {dim}")


def _vec(v) -> np.ndarray:
    if isinstance(v, StateVector):
        return v.amplitudes
    return np.asarray(v, dtype=complex).ravel()


def _mat(h) -> np.ndarray:
    if isinstance(h, HermitianOperator):
        return h.entries
    return np.asarray(h, dtype=complex)


def inner(u, v) -> complex:
    """<u|v>, antilinear in the first argument."""
    a, b = _vec(u), _vec(v)
    if a.size != b.size:
        raise DimensionError(f"inner product of dimensions {a.size} and {b.size}")
    return complex(np.vdot(a, b))


def norm(v) -> float:
    a = _vec(v)
    return float(np.sqrt(np.vdot(a, a).real))


def tensor(u, v) -> StateVector:
    a, b = _vec(u), _vec(v)
    flag = (getattr(u, "normalised", False) and getattr(v, "normalised", False))
    labels = None
    lu = getattr(u, "basis_labels", None)
    lv = getattr(v, "basis_labels", None)
    if lu is not None and lv is not None:
        labels = tuple(x + y for x in lu for y in lv)
    out = np.kron(a, b)
    if flag and abs(np.vdot(out, out).real - 1.0) > NORM_TOL:
        flag = False
    return StateVector(out, labels, normalised=flag)


def kron_op(*ops) -> HermitianOperator:
    m = _mat(ops[0])
    herm = all(getattr(o, "hermitian", True) for o in ops)
    for o in ops[1:]:
        m = np.kron(m, _mat(o))
    return HermitianOperator(m, hermitian=herm)


def apply(h, v) -> StateVector:
    m, a = _mat(h), _vec(v)
    if m.shape[1] != a.size:
        raise DimensionError(f"operator of dimension {m.shape[1]} applied to vector of {a.size}")
    return StateVector.raw(m @ a)


def projector(v) -> HermitianOperator:
    a = _vec(v)
    return HermitianOperator(np.outer(a, a.conj()))


def split_parallel(w, v) -> tuple[complex, np.ndarray]:
    """Decompose ``w`` against the unit vector ``v``.

    Returns ``(<v|w>, w_perp)`` with ``w = <v|w> v + w_perp``.
    """
    a, b = _vec(v), _vec(w)
    c = np.vdot(a, b)
    return complex(c), b - c * a


def partial_expectation(h, factor: int, state, factorization: TensorFactorization
                        ) -> HermitianOperator:
    """Contract ``h`` with ``state`` on the given tensor factor.

    For a two-factor space and ``factor=1`` this is ``<B|H|B>``, an operator
    on factor A. ``factor`` counts from the left in the kron order.
    """
    m = _mat(h)
    dims = factorization.factor_dims
    factorization.check(m.shape[0])
    if not 0 <= factor < len(dims):
        raise DimensionError(f"factor index {factor} out of range for {dims}")
    s = _vec(state)
    if s.size != dims[factor]:
        raise DimensionError(
            f"state of dimension {s.size} does not live in factor {factor} of {dims}")
    k = len(dims)
    t = m.reshape(dims + dims)
    # contract bra on row index `factor`, ket on column index `factor`
    t = np.tensordot(s.conj(), t, axes=([0], [factor]))
    t = np.tensordot(t, s, axes=([k - 1 + factor], [0]))
    rest = int(np.prod([d for i, d in enumerate(dims) if i != factor]))
    out = t.reshape(rest, rest)
    return HermitianOperator(out, hermitian=getattr(h, "hermitian", True))


def random_state(dim: int, rng: np.random.Generator) -> StateVector:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(v / np.linalg.norm(v))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0
                     ) -> HermitianOperator:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HermitianOperator(scale * (a + a.conj().T) / 2)

