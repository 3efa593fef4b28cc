"""
Dense exterior algebra over oriented R^n for n <= 8.

A degree-p form stores C(n, p) coefficients indexed by the lexicographic
enumeration of p-subsets of {1..n}. Basis elements are labelled internally
by bitmasks; bit i (0-based) set means e_{i+1} is a factor. Multivectors
(elements of the exterior powers of V rather than V*) reuse the same storage
and are only distinguished by WeightedForm.contravariant.
"""

from __future__ import annotations

import enum
import itertools
import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .config import MAX_DIMENSION
from .errors import (
    DegreeError,
    DimensionError,
    FormLiteralError,
    ParameterError,
)

logger = logging.getLogger(__name__)


class Orientation(enum.IntEnum):
    """Sign of the orientation relative to e_1 ^ ... ^ e_n."""

    POSITIVE = 1
    NEGATIVE = -1


class Variance(enum.Enum):
    """Which spaces a DensityMap maps between."""

    ENDOMORPHISM = "V->V"
    TO_DUAL = "V->V*"
    FROM_DUAL = "V*->V"


# Extra top-degree weight picked up by det for each variance: one factor of
# the determinant line per V* leg of Hom(source, target).
_VARIANCE_DET_CORRECTION = {
    Variance.ENDOMORPHISM: 0,
    Variance.TO_DUAL: 2,
    Variance.FROM_DUAL: -2,
}


def _check_dim(n: int) -> None:
    if not 1 <= n <= MAX_DIMENSION:
        raise DimensionError(
            f"dimension must be in 1..{MAX_DIMENSION}, got {n}"
        )


def _check_degree(n: int, p: int) -> None:
    if not 0 <= p <= n:
        raise DegreeError(f"degree {p} out of range for dimension {n}")


@lru_cache(maxsize=None)
def basis(n: int, p: int) -> Tuple[Tuple[int, ...], ...]:
    """Sorted 0-based index tuples of degree p, in lexicographic order."""
    _check_dim(n)
    _check_degree(n, p)
    return tuple(itertools.combinations(range(n), p))


@lru_cache(maxsize=None)
def basis_masks(n: int, p: int) -> Tuple[int, ...]:
    """Bitmask labels of basis(n, p), in the same order."""
    return tuple(sum(1 << i for i in idx) for idx in basis(n, p))


@lru_cache(maxsize=None)
def _position(n: int, p: int) -> Dict[int, int]:
    return {mask: k for k, mask in enumerate(basis_masks(n, p))}


def mask_position(n: int, mask: int) -> int:
    """Position of a bitmask in the enumeration of its degree."""
    return _position(n, bin(mask).count("1"))[mask]


def wedge_sign(a: int, b: int) -> int:
    """
    Sign of e_A ^ e_B relative to e_{A u B} for disjoint bitmasks.

    Counts the pairs (i in A, j in B) with i > j, i.e. the crossings needed
    to merge the two sorted index lists.
    """
    crossings = 0
    rest = b
    while rest:
        low = rest & -rest
        # bits of a strictly above this bit of b
        crossings += bin(a & ~((low << 1) - 1)).count("1")
        rest ^= low
    return -1 if crossings & 1 else 1


@lru_cache(maxsize=None)
def wedge_table(n: int, p: int, q: int) -> np.ndarray:
    """Structure constants T[i, j, k] with e_i ^ e_j = sum_k T[i, j, k] e_k."""
    if p + q > n:
        raise DegreeError(f"degree {p}+{q} exceeds dimension {n}")
    table = np.zeros((comb(n, p), comb(n, q), comb(n, p + q)))
    target = _position(n, p + q)
    for i, a in enumerate(basis_masks(n, p)):
        for j, b in enumerate(basis_masks(n, q)):
            if a & b:
                continue
            table[i, j, target[a | b]] = wedge_sign(a, b)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def contraction_table(n: int, p: int) -> np.ndarray:
    """C[v, i, k] with iota(e_v) e_i = sum_k C[v, i, k] e_k, for p >= 1."""
    if p < 1:
        raise DegreeError("cannot contract a degree-0 form")
    table = np.zeros((n, comb(n, p), comb(n, p - 1)))
    target = _position(n, p - 1)
    for i, mask in enumerate(basis_masks(n, p)):
        for v in range(n):
            if not mask & (1 << v):
                continue
            before = bin(mask & ((1 << v) - 1)).count("1")
            table[v, i, target[mask ^ (1 << v)]] = -1.0 if before & 1 else 1.0
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def pairing_matrix(n: int, p: int) -> np.ndarray:
    """
    P[i, j] = coefficient of e_i ^ e_j on e_1...n for degrees p and n - p.

    Every row and column holds exactly one entry of +1 or -1.
    """
    matrix = wedge_table(n, p, n - p)[:, :, 0].copy()
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=None)
def minor_indices(n: int, p: int) -> Tuple[np.ndarray, np.ndarray]:
    """Row and column index grids used to extract all p x p minors at once."""
    idx = np.array(basis(n, p), dtype=int).reshape(comb(n, p), p)
    rows = idx[:, None, :, None]
    cols = idx[None, :, None, :]
    return rows, cols


def compound_matrix(a: np.ndarray, p: int) -> np.ndarray:
    """The p-th compound: entry (I, J) is det(a[I, J])."""
    n = a.shape[0]
    if p == 0:
        return np.ones((1, 1))
    rows, cols = minor_indices(n, p)
    return np.linalg.det(a[rows, cols])


@dataclass(frozen=True, eq=False)
class Form:
    """
    A degree-p alternating form on R^n.

    Attributes:
        dim: ambient dimension n.
        degree: form degree p.
        coeffs: read-only array of length C(n, p).
    """

    dim: int
    degree: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        _check_dim(self.dim)
        _check_degree(self.dim, self.degree)
        data = np.array(self.coeffs, dtype=float).reshape(-1)
        if data.shape[0] != comb(self.dim, self.degree):
            raise DegreeError(
                f"expected {comb(self.dim, self.degree)} coefficients for "
                f"degree {self.degree} in dimension {self.dim}, "
                f"got {data.shape[0]}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "coeffs", data)

    @classmethod
    def zero(cls, n: int, p: int) -> "Form":
        return cls(n, p, np.zeros(comb(n, p)))

    @classmethod
    def scalar(cls, n: int, value: float) -> "Form":
        return cls(n, 0, np.array([value]))

    @classmethod
    def basis_form(cls, n: int, *indices: int) -> "Form":
        """e_{i1} ^ ... ^ e_{ip} from 1-based indices in any order."""
        return cls.from_terms(n, len(indices), [(indices, 1.0)])

    @classmethod
    def volume(cls, n: int) -> "Form":
        return cls(n, n, np.ones(1))

    @classmethod
    def from_terms(
        cls,
        n: int,
        p: int,
        terms: Iterable[Tuple[Sequence[int], float]],
    ) -> "Form":
        """
        Build a form from (1-based index sequence, value) pairs.

        Index sequences need not be sorted; the permutation sign is applied.
        Repeated indices inside one term give a zero term.
        """
        coeffs = np.zeros(comb(n, p))
        position = _position(n, p)
        for indices, value in terms:
            if len(indices) != p:
                raise DegreeError(f"term {tuple(indices)} is not of degree {p}")
            if any(not 1 <= i <= n for i in indices):
                raise DimensionError(f"index out of range in {tuple(indices)}")
            if len(set(indices)) != p:
                continue
            sign, mask = 1, 0
            for i in indices:
                bit = 1 << (i - 1)
                sign *= wedge_sign(mask, bit)
                mask |= bit
            coeffs[position[mask]] += sign * value
        return cls(n, p, coeffs)

    def terms(self) -> List[Tuple[Tuple[int, ...], float]]:
        """Nonzero terms as (sorted 1-based indices, value)."""
        return [
            (tuple(i + 1 for i in idx), float(c))
            for idx, c in zip(basis(self.dim, self.degree), self.coeffs)
            if c != 0.0
        ]

    def _same_space(self, other: "Form") -> None:
        if self.dim != other.dim:
            raise DimensionError(
                f"dimension mismatch: {self.dim} vs {other.dim}"
            )
        if self.degree != other.degree:
            raise DegreeError(
                f"degree mismatch: {self.degree} vs {other.degree}"
            )

    def __add__(self, other: "Form") -> "Form":
        self._same_space(other)
        return Form(self.dim, self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other: "Form") -> "Form":
        self._same_space(other)
        return Form(self.dim, self.degree, self.coeffs - other.coeffs)

    def __neg__(self) -> "Form":
        return Form(self.dim, self.degree, -self.coeffs)

    def __mul__(self, scalar: float) -> "Form":
        return Form(self.dim, self.degree, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "Form":
        return Form(self.dim, self.degree, self.coeffs / float(scalar))

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def is_zero(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= atol))

    def allclose(
        self, other: "Form", rtol: float = 1e-10, atol: float = 1e-12
    ) -> bool:
        self._same_space(other)
        return bool(
            np.allclose(self.coeffs, other.coeffs, rtol=rtol, atol=atol)
        )

    def top_coefficient(self) -> float:
        """Coefficient on e_1...n of a top-degree form."""
        if self.degree != self.dim:
            raise DegreeError(f"degree {self.degree} is not top degree")
        return float(self.coeffs[0])

    def embed(self, n: int) -> "Form":
        """The same form on R^n, n >= dim, in the first coordinates."""
        if n < self.dim:
            raise DimensionError(f"cannot embed dimension {self.dim} into {n}")
        return Form.from_terms(n, self.degree, self.terms())

    def __repr__(self) -> str:
        shown = " ".join(
            f"{v:+.4g}e{''.join(str(i) for i in idx)}"
            for idx, v in self.terms()
        )
        return f"Form(dim={self.dim}, degree={self.degree}, {shown or '0'})"


def wedge(a: Form, b: Form) -> Form:
    """Exterior product a ^ b."""
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.degree + b.degree > a.dim:
        raise DegreeError(
            f"degree {a.degree}+{b.degree} exceeds dimension {a.dim}"
        )
    table = wedge_table(a.dim, a.degree, b.degree)
    coeffs = np.einsum("i,j,ijk->k", a.coeffs, b.coeffs, table)
    return Form(a.dim, a.degree + b.degree, coeffs)


def wedge_power(a: Form, k: int) -> Form:
    """a ^ a ^ ... ^ a (k factors); k = 0 gives the constant 1."""
    result = Form.scalar(a.dim, 1.0)
    for _ in range(k):
        result = wedge(result, a)
    return result


def contract(v: Sequence[float], a: Form) -> Form:
    """Interior product iota(v) a."""
    vec = np.asarray(v, dtype=float).reshape(-1)
    if vec.shape[0] != a.dim:
        raise DimensionError(
            f"vector of length {vec.shape[0]} in dimension {a.dim}"
        )
    table = contraction_table(a.dim, a.degree)
    coeffs = np.einsum("v,vik,i->k", vec, table, a.coeffs)
    return Form(a.dim, a.degree - 1, coeffs)


def contractions(a: Form) -> np.ndarray:
    """Row v holds the coefficients of iota(e_v) a."""
    table = contraction_table(a.dim, a.degree)
    return np.einsum("vik,i->vk", table, a.coeffs)


def top_pair(a: Form, b: Form) -> float:
    """Coefficient of a ^ b on e_1...n for complementary degrees."""
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.degree + b.degree != a.dim:
        raise DegreeError(
            f"degrees {a.degree} and {b.degree} are not complementary "
            f"in dimension {a.dim}"
        )
    return float(a.coeffs @ pairing_matrix(a.dim, a.degree) @ b.coeffs)


def complement_from_pairing(n: int, p: int, values: np.ndarray) -> Form:
    """
    The (n - p)-form beta with top_pair(e_I, beta) = values[I].

    This realises the isomorphism (Lambda^p)^* = Lambda^(n-p) (x) Lambda^n.
    """
    coeffs = np.linalg.solve(pairing_matrix(n, p), np.asarray(values, float))
    return Form(n, n - p, coeffs)


def pairing_values(beta: Form, p: int) -> np.ndarray:
    """values[I] = top_pair(e_I, beta) for all degree-p basis forms e_I."""
    if beta.degree + p != beta.dim:
        raise DegreeError(
            f"degree {beta.degree} does not complement {p} in dimension "
            f"{beta.dim}"
        )
    return pairing_matrix(beta.dim, p) @ beta.coeffs


def _check_metric(g: np.ndarray, n: int) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != (n, n):
        raise DimensionError(f"metric must be {n}x{n}, got {g.shape}")
    if not np.allclose(g, g.T, rtol=1e-12, atol=1e-12):
        raise ParameterError("metric is not symmetric")
    eigenvalues = np.linalg.eigvalsh(g)
    if np.min(eigenvalues) <= 0.0:
        logger.error("Metric is not positive definite: %s", eigenvalues)
        raise ParameterError("metric is not positive definite")
    return g


def inner_product_matrix(g: np.ndarray, p: int) -> np.ndarray:
    """Gram matrix of the degree-p basis forms for the metric g."""
    return compound_matrix(np.linalg.inv(g), p)


def hodge_star(
    a: Form,
    g: np.ndarray | None = None,
    orient: Orientation = Orientation.POSITIVE,
) -> Form:
    """
    Hodge star for a positive definite metric g (identity when omitted).

    Defined by b ^ *a = <b, a>_g vol_g for every b of the same degree, with
    vol_g = orient * sqrt(det g) e_1...n.
    """
    n, p = a.dim, a.degree
    g = np.eye(n) if g is None else _check_metric(g, n)
    scale = int(orient) * float(np.sqrt(np.linalg.det(g)))
    values = scale * inner_product_matrix(g, p) @ a.coeffs
    return complement_from_pairing(n, p, values)


def pullback(a: Form, matrix: np.ndarray) -> Form:
    """
    A* a, where (A* a)(X1, ..., Xp) = a(A X1, ..., A Xp).

    Under pullback e^i goes to sum_j A[i, j] e^j, so coefficients transform
    by the p-th compound matrix.
    """
    m = np.asarray(matrix, dtype=float)
    if m.shape != (a.dim, a.dim):
        raise DimensionError(f"matrix must be {a.dim}x{a.dim}, got {m.shape}")
    return Form(a.dim, a.degree, a.coeffs @ compound_matrix(m, a.degree))


def invariant_derivative(a: Form, d_coframe: Sequence[Form]) -> Form:
    """
    Exterior derivative of a form with constant coefficients in a coframe.

    d_coframe[i] is the 2-form d(e_{i+1}). The coframe is extended as an
    antiderivation:

        d(e_I) = sum_k (-1)^(k-1) e_i1 ... d(e_ik) ... e_ip
    """
    n = a.dim
    if len(d_coframe) != n:
        raise DimensionError(
            f"need {n} coframe derivatives, got {len(d_coframe)}"
        )
    for de in d_coframe:
        if (de.dim, de.degree) != (n, 2):
            raise DegreeError(
                f"coframe derivatives must be 2-forms on R^{n}, got degree "
                f"{de.degree} on R^{de.dim}"
            )
    if a.degree + 1 > n:
        raise DegreeError(f"degree {a.degree} has no derivative in dim {n}")
    result = Form.zero(n, a.degree + 1)
    for idx, value in a.terms():
        for k, i in enumerate(idx):
            head = Form.basis_form(n, *idx[:k])
            tail = Form.basis_form(n, *idx[k + 1 :])
            term = wedge(wedge(head, d_coframe[i - 1]), tail)
            result = result + term * (-value if k % 2 else value)
    return result


def evaluate(a: Form, *vectors: Sequence[float]) -> float:
    """a(X1, ..., Xp) for p vectors."""
    if len(vectors) != a.degree:
        raise DegreeError(f"expected {a.degree} vectors, got {len(vectors)}")
    if a.degree == 0:
        return float(a.coeffs[0])
    cols = np.column_stack([np.asarray(v, dtype=float) for v in vectors])
    rows = np.array(basis(a.dim, a.degree), dtype=int)
    minors = np.linalg.det(cols[rows])
    return float(a.coeffs @ minors)


def two_form_matrix(a: Form) -> np.ndarray:
    """Antisymmetric matrix M with a(X, Y) = X^T M Y."""
    if a.degree != 2:
        raise DegreeError(f"expected a 2-form, got degree {a.degree}")
    m = np.zeros((a.dim, a.dim))
    for (i, j), c in zip(basis(a.dim, 2), a.coeffs):
        m[i, j] = c
        m[j, i] = -c
    return m


@dataclass(frozen=True, eq=False)
class WeightedForm:
    """
    A form or multivector tensored with the w-th power of Lambda^n V*.

    Attributes:
        base: coefficients; for a multivector they label e_I in Lambda^p V.
        weight: integer power w of the top exterior power.
        contravariant: True when base is a multivector.
    """

    base: Form
    weight: int = 0
    contravariant: bool = False

    @property
    def degree(self) -> int:
        return self.base.degree

    def wedge(self, other: "WeightedForm") -> "WeightedForm":
        if self.contravariant != other.contravariant:
            raise DegreeError("cannot wedge a form with a multivector")
        return WeightedForm(
            wedge(self.base, other.base),
            self.weight + other.weight,
            self.contravariant,
        )

    def power(self, k: int) -> "WeightedForm":
        return WeightedForm(
            wedge_power(self.base, k), self.weight * k, self.contravariant
        )

    def density(self) -> Tuple[float, int]:
        """
        Value and weight of a pure density.

        A top-degree multivector is one factor of Lambda^n V = (Lambda^n V*)^-1,
        so it lowers the weight by one.
        """
        n = self.base.dim
        if self.degree == 0:
            return float(self.base.coeffs[0]), self.weight
        if self.degree != n:
            raise DegreeError(f"degree {self.degree} is not 0 or {n}")
        shift = -1 if self.contravariant else 1
        return float(self.base.coeffs[0]), self.weight + shift


def dual_multivector(a: Form) -> WeightedForm:
    """
    Identify an (n - p)-form with an element of Lambda^p V (x) Lambda^n V*.

    The multivector s satisfies <alpha, s> = top_pair(alpha, a) for all
    p-forms alpha.
    """
    p = a.dim - a.degree
    return WeightedForm(Form(a.dim, p, pairing_values(a, p)), 1, True)


@dataclass(frozen=True, eq=False)
class DensityMap:
    """
    A linear map between V and/or V* with values twisted by (Lambda^n V*)^w.

    Attributes:
        matrix: n x n array; column j is the image of the j-th basis element.
        weight: density weight w of the values.
        variance: source and target spaces.
    """

    matrix: np.ndarray
    weight: int
    variance: Variance

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density map must be square, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def det_weight(self) -> int:
        """Power of Lambda^n V* in which det(matrix) lives."""
        return self.dim * self.weight + _VARIANCE_DET_CORRECTION[self.variance]

    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def root_volume(self) -> float:
        """|det|^(1 / det_weight), a density of weight one."""
        return abs(self.det()) ** (1.0 / self.det_weight)

    def trace_of_square(self) -> float:
        return float(np.trace(self.matrix @ self.matrix))


def form_from_literal(data: Dict[str, Any]) -> Form:
    """
    Parse {"dim": n, "degree": p, "terms": [{"indices": [...], "value": x}]}.

    Indices are 1-based and strictly increasing; omitted terms are zero and
    a repeated index set is an error.
    """
    if not isinstance(data, dict):
        raise FormLiteralError("form literal must be a JSON object")
    for key in ("dim", "degree", "terms"):
        if key not in data:
            raise FormLiteralError(f"missing key {key!r}", position=key)
    n, p, terms = data["dim"], data["degree"], data["terms"]
    if not isinstance(n, int) or not 1 <= n <= MAX_DIMENSION:
        raise FormLiteralError(f"invalid dim {n!r}", position="dim")
    if not isinstance(p, int) or not 0 <= p <= n:
        raise FormLiteralError(f"invalid degree {p!r}", position="degree")
    if not isinstance(terms, list):
        raise FormLiteralError("terms must be a list", position="terms")
    seen = set()
    parsed = []
    for k, term in enumerate(terms):
        where = f"terms[{k}]"
        if not isinstance(term, dict) or "indices" not in term:
            raise FormLiteralError("term needs 'indices'", position=where)
        indices = term["indices"]
        value = term.get("value", 1.0)
        if not isinstance(indices, list) or len(indices) != p:
            raise FormLiteralError(
                f"indices must be a list of length {p}", position=where
            )
        if any(not isinstance(i, int) or not 1 <= i <= n for i in indices):
            raise FormLiteralError(
                f"indices must be integers in 1..{n}", position=where
            )
        if any(a >= b for a, b in zip(indices, indices[1:])):
            raise FormLiteralError(
                "indices must be strictly increasing", position=where
            )
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise FormLiteralError("value must be a number", position=where)
        if tuple(indices) in seen:
            raise FormLiteralError(
                f"duplicate index set {indices}", position=where
            )
        seen.add(tuple(indices))
        parsed.append((indices, float(value)))
    return Form.from_terms(n, p, parsed)


def form_to_literal(a: Form) -> Dict[str, Any]:
    return {
        "dim": a.dim,
        "degree": a.degree,
        "terms": [
            {"indices": list(idx), "value": value} for idx, value in a.terms()
        ],
    }


def load_form(path: str) -> Form:
    """Read a form literal from a JSON file."""
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        logger.error("Malformed form JSON %s: %s", path, e)
        raise FormLiteralError(
            f"malformed JSON: {e.msg}",
            position=f"line {e.lineno} column {e.colno}",
        ) from e
    except OSError as e:
        logger.error("Cannot read form file %s: %s", path, e)
        raise FormLiteralError(f"cannot read {path}: {e}") from e
    return form_from_literal(data)
