"""Jordan-Wigner Pauli strings and matrix-free Hamiltonians.

Conventions
-----------
* Majoranas are labelled 1..N; qubit ``j`` (1-based) hosts Majoranas
  ``2j - 1`` and ``2j`` and corresponds to bit ``j - 1`` of masks and of
  computational basis indices.
* A :class:`PauliString` stands for ``i**phase * sqrt(2)**sqrt2_exp * X^x Z^z``
  where ``X^x Z^z`` is the per-qubit product ``X_q^{x_q} Z_q^{z_q}``. Thus
  ``Y = i X Z`` is ``(x=1, z=1, phase=1)``.
* ``Z|0> = +|0>``: a set basis bit is a spin-down (``sigma^z = -1``) qubit.

String algebra is exact (integer phase mod 4, integer power of sqrt 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .disorder import DenseCouplingTensor, EdgeCouplings
from .graph import MajoranaGraph

_PHASES = (1, 1j, -1, -1j)


def _popcount(x: int) -> int:
    return bin(x).count("1")


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0
    phase: int = 0
    sqrt2_exp: int = 0

    def __post_init__(self):
        full = (1 << self.n_qubits) - 1
        if self.x & ~full or self.z & ~full:
            raise ValueError("mask exceeds n_qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, kind: str) -> "PauliString":
        """Single-qubit Pauli ``kind`` in {X, Y, Z} on 1-based ``qubit``."""
        bit = 1 << (qubit - 1)
        if kind == "X":
            return cls(n_qubits, x=bit)
        if kind == "Z":
            return cls(n_qubits, z=bit)
        if kind == "Y":
            return cls(n_qubits, x=bit, z=bit, phase=1)
        raise ValueError(f"unknown Pauli {kind!r}")

    def __mul__(self, other: "PauliString") -> "PauliString":
        if not isinstance(other, PauliString):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        # Z^a X^b = (-1)^{|a & b|} X^b Z^a
        sign = 2 * (_popcount(self.z & other.x) & 1)
        return PauliString(
            self.n_qubits,
            self.x ^ other.x,
            self.z ^ other.z,
            self.phase + other.phase + sign,
            self.sqrt2_exp + other.sqrt2_exp,
        )

    def scaled(self, phase: int = 0, sqrt2_exp: int = 0) -> "PauliString":
        return PauliString(
            self.n_qubits, self.x, self.z, self.phase + phase, self.sqrt2_exp + sqrt2_exp
        )

    def adjoint(self) -> "PauliString":
        return PauliString(
            self.n_qubits,
            self.x,
            self.z,
            -self.phase + 2 * (_popcount(self.x & self.z) & 1),
            self.sqrt2_exp,
        )

    def commutes(self, other: "PauliString") -> bool:
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def scale(self) -> float:
        return math.sqrt(2) ** self.sqrt2_exp

    @property
    def coefficient(self) -> complex:
        return _PHASES[self.phase] * 2.0 ** (self.sqrt2_exp / 2)

    def exact_scalar(self) -> tuple[int, Fraction]:
        """(phase, rational scale) when the scale is rational, i.e. sqrt2_exp even."""
        if self.sqrt2_exp % 2:
            raise ValueError("scale is an odd power of sqrt(2)")
        return self.phase, Fraction(2) ** (self.sqrt2_exp // 2)

    def same_operator(self, other: "PauliString") -> bool:
        return (self.n_qubits, self.x, self.z, self.phase, self.sqrt2_exp) == (
            other.n_qubits, other.x, other.z, other.phase, other.sqrt2_exp
        )

    def word(self) -> tuple[int, str]:
        """(phase, Pauli word) with ``i**phase * word`` equal to the unscaled string."""
        letters = []
        n_y = 0
        for q in range(self.n_qubits):
            xb, zb = (self.x >> q) & 1, (self.z >> q) & 1
            if xb and zb:
                letters.append("Y")
                n_y += 1
            else:
                letters.append("X" if xb else "Z" if zb else "I")
        # X Z = -i Y per qubit
        return (self.phase - n_y) % 4, "".join(letters)

    def to_dense(self) -> np.ndarray:
        return PauliSum([(1.0, self)], self.n_qubits).to_dense()

    def __repr__(self) -> str:
        ph, w = self.word()
        return f"PauliString({['+', '+i', '-', '-i'][ph]} 2^({self.sqrt2_exp}/2) {w})"


def _check_majorana(i: int, n: int) -> None:
    if n < 2 or n % 2:
        raise ValueError(f"N must be even and >= 2, got {n}")
    if not 1 <= i <= n:
        raise ValueError(f"Majorana index must lie in 1..{n}, got {i}")


def jw_majorana(i: int, n: int) -> PauliString:
    """Jordan-Wigner image of Majorana ``i`` (1-based) for N = ``n`` Majoranas.

    gamma_{2j-1} = Z_1..Z_{j-1} X_j / sqrt 2 and gamma_{2j} = Z_1..Z_{j-1} Y_j / sqrt 2.
    """
    _check_majorana(i, n)
    j = (i + 1) // 2
    bit = 1 << (j - 1)
    z = bit - 1
    if i % 2:
        return PauliString(n // 2, x=bit, z=z, sqrt2_exp=-1)
    return PauliString(n // 2, x=bit, z=z | bit, phase=1, sqrt2_exp=-1)


def majorana_product(indices: Sequence[int], n: int) -> PauliString:
    if len(set(indices)) != len(indices):
        raise ValueError(f"repeated Majorana index in {tuple(indices)}")
    out = PauliString.identity(n // 2)
    for i in indices:
        out = out * jw_majorana(i, n)
    return out


def anticommutator(a: PauliString, b: PauliString) -> Optional[PauliString]:
    """{a, b} as a single string, or None when it vanishes."""
    if not a.commutes(b):
        return None
    return (a * b).scaled(sqrt2_exp=2)  # factor 2 = sqrt(2)^2


def anticommutator_check(i: int, j: int, n: int) -> Fraction:
    """Exact value c with {gamma_i, gamma_j} = c * identity."""
    res = anticommutator(jw_majorana(i, n), jw_majorana(j, n))
    if res is None:
        return Fraction(0)
    if not res.is_identity:
        raise ArithmeticError(f"{{gamma_{i}, gamma_{j}}} is not proportional to identity")
    phase, scale = res.exact_scalar()
    if phase % 2:
        raise ArithmeticError("imaginary anticommutator")
    return scale if phase == 0 else -scale


def _parity(mask: int, basis: np.ndarray) -> np.ndarray:
    return np.bitwise_count(basis & mask).astype(np.int8) & 1


class PauliSum:
    """Weighted sum of Pauli strings, merged on canonical ``X^x Z^z`` keys.

    Immutable by convention. ``terms`` maps ``(x, z)`` to the complex
    coefficient of ``X^x Z^z``.
    """

    def __init__(self, terms: Iterable[tuple[complex, PauliString]] = (), n_qubits: Optional[int] = None):
        merged: dict[tuple[int, int], complex] = {}
        for coeff, s in terms:
            if n_qubits is None:
                n_qubits = s.n_qubits
            elif s.n_qubits != n_qubits:
                raise ValueError("qubit count mismatch")
            key = (s.x, s.z)
            merged[key] = merged.get(key, 0) + complex(coeff) * s.coefficient
        if n_qubits is None:
            raise ValueError("empty PauliSum needs n_qubits")
        self.n_qubits = n_qubits
        self.terms = {k: v for k, v in sorted(merged.items()) if v != 0}

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def __len__(self) -> int:
        return len(self.terms)

    def strings(self) -> list[tuple[complex, PauliString]]:
        return [(c, PauliString(self.n_qubits, x, z)) for (x, z), c in self.terms.items()]

    def __add__(self, other: "PauliSum") -> "PauliSum":
        return PauliSum(self.strings() + other.strings(), self.n_qubits)

    def __mul__(self, scalar: complex) -> "PauliSum":
        return PauliSum([(scalar * c, s) for c, s in self.strings()], self.n_qubits)

    __rmul__ = __mul__

    def adjoint(self) -> "PauliSum":
        return PauliSum(
            [(np.conj(c), s.adjoint()) for c, s in self.strings()], self.n_qubits
        )

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        adj = self.adjoint().terms
        keys = set(adj) | set(self.terms)
        return all(abs(self.terms.get(k, 0) - adj.get(k, 0)) <= atol for k in keys)

    @cached_property
    def _grouped(self) -> list[tuple[int, np.ndarray]]:
        """Per x-mask diagonal: (X^x Z^z v)[b] = (-1)^{|z & (b ^ x)|} v[b ^ x]."""
        basis = np.arange(self.dim, dtype=np.int64)
        groups: dict[int, np.ndarray] = {}
        for (x, z), c in self.terms.items():
            sign = 1 - 2 * _parity(z, basis).astype(np.float64)
            groups[x] = groups.get(x, 0) + c * sign
        out = []
        for x in sorted(groups):
            d = groups[x]
            if np.all(d.imag == 0):
                d = d.real.copy()
            out.append((x, d))
        return out

    @cached_property
    def _perms(self) -> dict[int, np.ndarray]:
        basis = np.arange(self.dim, dtype=np.int64)
        return {x: basis ^ x for x, _ in self._grouped if x}

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Matrix-free H @ v, summing x-groups in ascending mask order."""
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise ValueError(f"state has shape {v.shape}, operator acts on dimension {self.dim}")
        out = np.zeros(self.dim, dtype=np.result_type(v.dtype, np.complex128))
        for x, d in self._grouped:
            w = d * v
            if x:
                out += w[self._perms[x]]
            else:
                out += w
        return out

    def expectation(self, v: np.ndarray) -> complex:
        return complex(np.vdot(v, self.apply(v)))

    @cached_property
    def sparse(self):
        """CSR matrix with the same action as :meth:`apply`."""
        from scipy import sparse

        rows, cols, vals = [], [], []
        basis = np.arange(self.dim, dtype=np.int64)
        for x, d in self._grouped:
            rows.append(basis)
            cols.append(basis ^ x)
            vals.append(d[basis ^ x])
        if not rows:
            return sparse.csr_matrix((self.dim, self.dim), dtype=np.complex128)
        m = sparse.csr_matrix(
            (np.concatenate(vals).astype(np.complex128), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.dim, self.dim),
        )
        m.sum_duplicates()
        return m

    def to_dense(self) -> np.ndarray:
        return self.sparse.toarray()

    def to_text(self) -> str:
        lines = []
        for c, s in self.strings():
            ph, w = s.word()
            c = c * _PHASES[ph]
            re, im = c.real + 0.0, c.imag + 0.0  # drop negative zeros
            lines.append(f"{re:+.17g}{im:+.17g}j  {w}")
        return "\n".join(lines) + "\n"


def build_battery(model: str, n: int) -> PauliSum:
    """Battery Hamiltonian: sum of sigma^x (model X) or sigma^z (model Z) over N/2 qubits."""
    model = model.upper()
    if n < 2 or n % 2:
        raise ValueError(f"N must be even and >= 2, got {n}")
    if model not in ("X", "Z"):
        raise ValueError(f"battery model must be X or Z, got {model!r}")
    nq = n // 2
    return PauliSum([(1.0, PauliString.single(nq, q, model)) for q in range(1, nq + 1)], nq)


def build_graph_charger(g: MajoranaGraph, c: EdgeCouplings) -> PauliSum:
    """i * sum over edges (a < b) of J_ab gamma_{a+1} gamma_{b+1}."""
    if c.graph != g:
        raise ValueError("couplings were sampled for a different graph")
    n = g.n_vertices
    terms = [
        (1j * J, majorana_product((a + 1, b + 1), n)) for (a, b), J in zip(g.edges, c.values)
    ]
    return PauliSum(terms, n // 2)


def build_dense_charger(c: DenseCouplingTensor) -> PauliSum:
    """i^(q/2) * sum over increasing tuples of J gamma_{i1} ... gamma_{iq}."""
    if c.q % 2:
        raise ValueError("q must be even")
    pref = 1j ** (c.q // 2)
    terms = [
        (pref * J, majorana_product(tuple(i + 1 for i in idx), c.n))
        for idx, J in zip(c.indices, c.values)
    ]
    return PauliSum(terms, c.n // 2)


def sigma_x_majorana_form(i: int, n: int) -> PauliString:
    """(sqrt 2)^(2i-1) (-i)^(i-1) gamma_1 ... gamma_{2i-1}, the inverse map for sigma^x_i."""
    prod = majorana_product(tuple(range(1, 2 * i)), n)
    return prod.scaled(phase=-(i - 1), sqrt2_exp=2 * i - 1)


def sigma_z_majorana_form(i: int, n: int) -> PauliString:
    """-2i gamma_{2i-1} gamma_{2i}."""
    return majorana_product((2 * i - 1, 2 * i), n).scaled(phase=-1, sqrt2_exp=2)


def battery_x_majorana_expansion(n: int, phase_offset: int = -1) -> PauliSum:
    """sum_k 2^(k - 1/2) (-i)^(k + phase_offset) gamma_1 ... gamma_{2k-1}.

    The default offset -1 reproduces sum_i sigma^x_i exactly; offset +1
    yields its negative.
    """
    terms = []
    for k in range(1, n // 2 + 1):
        s = majorana_product(tuple(range(1, 2 * k)), n).scaled(
            phase=-(k + phase_offset), sqrt2_exp=2 * k - 1
        )
        terms.append((1.0, s))
    return PauliSum(terms, n // 2)
