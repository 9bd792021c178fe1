"""Symbolic algebra of quantum stochastic differentials.

Canonical basis differentials dL(mu, nu) carry a lower index
mu in {'-', 1..d} and an upper index nu in {1..d, '+'}; dL('-', '+') is dt.
Products follow the vacuum table

    dL(mu, i) * dL(k, nu) = delta(i, k) * dL(mu, nu)

where delta vanishes unless i == k is one of the inner indices 1..d.  At
d = 1 this realizes the four-dimensional algebra spanned by dt, the
annihilation dL(-), creation dL(+) and counting dL(o) differentials, with

    dL(-) dL(+) = dt,  dL(-) dL(o) = dL(-),  dL(o) dL(+) = dL(+),
    dL(o) dL(o) = dL(o),  all other pairs = 0.

Scalar coefficients are ExactComplex, so every table identity is decided
exactly; elements may instead carry square-matrix (operator) coefficients
for the system-operator differentials used by the trajectory equations.
Zero coefficients are pruned, making equality structural.
"""

from __future__ import annotations

from typing import Dict, Iterable, Tuple, Union

import numpy as np

from .exact import EC_I, EC_ONE, ExactComplex

Index = Union[int, str]
Key = Tuple[Index, Index]

MINUS = "-"
PLUS = "+"


def _check_lower(mu: Index, d: int) -> None:
    if mu == MINUS:
        return
    if isinstance(mu, int) and 1 <= mu <= d:
        return
    raise ValueError(f"lower index {mu!r} not in {{'-', 1..{d}}}")


def _check_upper(nu: Index, d: int) -> None:
    if nu == PLUS:
        return
    if isinstance(nu, int) and 1 <= nu <= d:
        return
    raise ValueError(f"upper index {nu!r} not in {{1..{d}, '+'}}")


def _flip(idx: Index) -> Index:
    """Index switch of the involution: -(-) = +, -(+) = -, -(k) = k."""
    if idx == MINUS:
        return PLUS
    if idx == PLUS:
        return MINUS
    return idx


def _is_zero_coeff(c) -> bool:
    if isinstance(c, ExactComplex):
        return c.is_zero()
    return not np.any(c)


def _conj_coeff(c):
    if isinstance(c, ExactComplex):
        return c.conjugate()
    return np.conjugate(c.T)


def _basis_order(key: Key) -> tuple:
    mu, nu = key

    def rank(idx):
        if idx == MINUS:
            return -1
        if idx == PLUS:
            return 10 ** 6
        return idx

    return (0 if key == (MINUS, PLUS) else 1, rank(mu), rank(nu))


class ItoElement:
    """Finitely supported combination of canonical differentials."""

    __slots__ = ("d", "coeffs", "kind")

    def __init__(self, d: int, coeffs: Dict[Key, object]):
        if d < 1:
            raise ValueError("dimension d must be >= 1")
        pruned: Dict[Key, object] = {}
        kind = None
        for (mu, nu), c in coeffs.items():
            _check_lower(mu, d)
            _check_upper(nu, d)
            if isinstance(c, ExactComplex):
                ckind = "scalar"
            elif isinstance(c, (int, float, complex)):
                c = ExactComplex.from_number(c)
                ckind = "scalar"
            elif isinstance(c, np.ndarray) and c.ndim == 2 and c.shape[0] == c.shape[1]:
                c = np.asarray(c, dtype=complex)
                ckind = "operator"
            else:
                raise TypeError(f"unsupported coefficient type {type(c).__name__}")
            if kind is None:
                kind = ckind
            elif kind != ckind:
                raise TypeError("scalar and operator coefficients cannot be mixed")
            if not _is_zero_coeff(c):
                pruned[(mu, nu)] = c
        if kind == "operator" and d != 1:
            raise ValueError("operator coefficients are supported only at d = 1")
        self.d = d
        self.coeffs = pruned
        self.kind = kind if pruned else "zero"

    # -- linear structure -------------------------------------------------
    def _compatible(self, other: "ItoElement") -> None:
        if self.d != other.d:
            raise ValueError(f"dimension mismatch: d={self.d} vs d={other.d}")
        if self.kind != "zero" and other.kind != "zero" and self.kind != other.kind:
            raise TypeError("cannot combine scalar and operator elements")

    def __add__(self, other: "ItoElement") -> "ItoElement":
        self._compatible(other)
        out = dict(self.coeffs)
        for key, c in other.coeffs.items():
            out[key] = out[key] + c if key in out else c
        return ItoElement(self.d, out)

    def __sub__(self, other: "ItoElement") -> "ItoElement":
        return self + (-other)

    def __neg__(self) -> "ItoElement":
        return ItoElement(self.d, {k: -c for k, c in self.coeffs.items()})

    def scaled(self, s) -> "ItoElement":
        if self.kind == "operator":
            s = complex(s)
        else:
            s = ExactComplex.from_number(s)
        return ItoElement(self.d, {k: s * c for k, c in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, ItoElement):
            return mul(self, other)
        return self.scaled(other)

    def __rmul__(self, other):
        return self.scaled(other)

    # -- structural equality ----------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, ItoElement):
            return NotImplemented
        if self.d != other.d or set(self.coeffs) != set(other.coeffs):
            return False
        for key, c in self.coeffs.items():
            o = other.coeffs[key]
            if isinstance(c, ExactComplex) != isinstance(o, ExactComplex):
                return False
            if isinstance(c, ExactComplex):
                if c != o:
                    return False
            elif not np.array_equal(c, o):
                return False
        return True

    def __hash__(self):
        if self.kind == "operator":
            raise TypeError("operator-coefficient elements are unhashable")
        return hash((self.d, frozenset(self.coeffs.items())))

    def is_zero(self) -> bool:
        return not self.coeffs

    # -- rendering ----------------------------------------------------------
    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"ItoElement(d={self.d}, {render(self)!r})"


def _token(key: Key, d: int) -> str:
    mu, nu = key
    if key == (MINUS, PLUS):
        return "dt"
    if d == 1:
        if key == (MINUS, 1):
            return "dL(-)"
        if key == (1, PLUS):
            return "dL(+)"
        if key == (1, 1):
            return "dL(o)"
    return f"dL({mu},{nu})"


def render(a: ItoElement) -> str:
    """Stable plain-text rendering, e.g. ``dt + 2*dL(-)``.

    Terms are emitted in canonical basis order (dt first); a unit scalar
    coefficient is dropped, operator coefficients render as nested lists.
    """
    if a.is_zero():
        return "0"
    parts = []
    for key in sorted(a.coeffs, key=_basis_order):
        c = a.coeffs[key]
        tok = _token(key, a.d)
        if isinstance(c, ExactComplex):
            if c == EC_ONE:
                parts.append(tok)
            else:
                s = str(c)
                if ("+" in s[1:]) or ("-" in s[1:]):
                    s = f"({s})"
                parts.append(f"{s}*{tok}")
        else:
            parts.append(f"{c.tolist()!r}*{tok}")
    return " + ".join(parts)


# -- basis factories --------------------------------------------------------

def basis(mu: Index, nu: Index, d: int = 1, coeff=1) -> ItoElement:
    return ItoElement(d, {(mu, nu): coeff})


def time_element(d: int = 1, coeff=1) -> ItoElement:
    """dt = dL('-', '+')."""
    return basis(MINUS, PLUS, d, coeff)


def annihilation(k: int = 1, d: int = 1, coeff=1) -> ItoElement:
    return basis(MINUS, k, d, coeff)


def creation(k: int = 1, d: int = 1, coeff=1) -> ItoElement:
    return basis(k, PLUS, d, coeff)


def exchange(j: int = 1, k: int = 1, d: int = 1, coeff=1) -> ItoElement:
    return basis(j, k, d, coeff)


def wiener(d: int = 1) -> ItoElement:
    """dw = dL(-) + dL(+), the standard coordinate noise."""
    return annihilation(d=d) + creation(d=d)


def compensated_poisson(d: int = 1) -> ItoElement:
    """dm = dL(-) + dL(+) + dL(o), the standard compensated counting noise."""
    return wiener(d) + exchange(d=d)


def momentum_noise(hbar=1, d: int = 1) -> ItoElement:
    """df = i*hbar*(dL(-) - dL(+)), the field momentum differential."""
    ih = EC_I * ExactComplex.from_number(hbar)
    return annihilation(d=d, coeff=ih) + creation(d=d, coeff=-ih)


def standard_noise(eps, d: int = 1) -> ItoElement:
    """Standard zero-mean noise dy with (dy)^2 = dt + eps*dy.

    eps = 0 is the Wiener differential, eps = 1 the compensated Poisson one.
    """
    if d != 1:
        raise ValueError("standard_noise is a d = 1 construction")
    e = ExactComplex.from_number(eps)
    out = wiener(d)
    if not e.is_zero():
        out = out + exchange(d=d, coeff=e)
    return out


def basis_keys(d: int = 1) -> Iterable[Key]:
    lowers = [MINUS] + list(range(1, d + 1))
    uppers = list(range(1, d + 1)) + [PLUS]
    for mu in lowers:
        for nu in uppers:
            yield (mu, nu)


# -- products ----------------------------------------------------------------

def _coeff_mul(ca, cb):
    if isinstance(ca, ExactComplex) and isinstance(cb, ExactComplex):
        return ca * cb
    if isinstance(ca, np.ndarray) and isinstance(cb, np.ndarray):
        return ca @ cb
    raise TypeError("cannot multiply scalar with operator coefficients")


def mul(a: ItoElement, b: ItoElement) -> ItoElement:
    """Table product: dL(mu,i) dL(k,nu) = delta(i,k) dL(mu,nu).

    Operator coefficients compose in order, a's coefficient on the left.
    """
    a._compatible(b)
    out: Dict[Key, object] = {}
    for (mu, iota), ca in a.coeffs.items():
        if iota == PLUS:
            continue
        for (kappa, nu), cb in b.coeffs.items():
            if kappa != iota:
                continue
            c = _coeff_mul(ca, cb)
            out[(mu, nu)] = out[(mu, nu)] + c if (mu, nu) in out else c
    return ItoElement(a.d, out)


def star(a: ItoElement) -> ItoElement:
    """Involution: coefficient at (mu, nu) becomes the adjoint of the one at
    (-nu, -mu), with -(-)=+, -(+)=-, -(k)=k.  star(dL(+)) = dL(-), star(dt) = dt."""
    out = {}
    for (mu, nu), c in a.coeffs.items():
        out[(_flip(nu), _flip(mu))] = _conj_coeff(c)
    return ItoElement(a.d, out)


def commutator_elem(a: ItoElement, b: ItoElement) -> ItoElement:
    return mul(a, b) - mul(b, a)


def ito_correction(dx: ItoElement, dy: ItoElement, middle: np.ndarray | None = None) -> ItoElement:
    """Correction term dX dY of a product differential.

    With operator coefficients A, B this is the table contraction
    sum_k A[mu,k] @ B[k,nu]; an optional ``middle`` operator M is sandwiched,
    giving sum_k A[mu,k] @ M @ B[k,nu] (the form taken by d(chi chi+) where
    M is the unnormalized density chi chi+).
    """
    if middle is None:
        return mul(dx, dy)
    if dx.kind != "operator" or dy.kind != "operator":
        raise TypeError("middle sandwich requires operator coefficients")
    out: Dict[Key, object] = {}
    for (mu, iota), ca in dx.coeffs.items():
        if iota == PLUS:
            continue
        for (kappa, nu), cb in dy.coeffs.items():
            if kappa != iota:
                continue
            c = ca @ middle @ cb
            out[(mu, nu)] = out[(mu, nu)] + c if (mu, nu) in out else c
    return ItoElement(dx.d, out)


def product_differential(dx: ItoElement, dy: ItoElement,
                         x: np.ndarray, y: np.ndarray) -> ItoElement:
    """Full differential d(XY) = dX.Y + X.dY + dX dY for operator processes."""
    if dx.kind not in ("operator", "zero") or dy.kind not in ("operator", "zero"):
        raise TypeError("product_differential requires operator coefficients")
    first = ItoElement(dx.d, {k: c @ y for k, c in dx.coeffs.items()})
    second = ItoElement(dy.d, {k: x @ c for k, c in dy.coeffs.items()})
    return first + second + mul(dx, dy)


def density_differential(dchi: ItoElement, rho: np.ndarray) -> ItoElement:
    """Differential of chi chi+ for dchi = A[mu,nu] chi dL(mu,nu).

    Coefficient at (mu, nu): A rho + rho A* + sum_k A[mu,k] rho A*[k,nu],
    where A* are the coefficients of star(dchi).
    """
    if dchi.kind not in ("operator", "zero"):
        raise TypeError("density_differential requires operator coefficients")
    dchi_star = star(dchi)
    first = ItoElement(dchi.d, {k: c @ rho for k, c in dchi.coeffs.items()})
    second = ItoElement(dchi.d, {k: rho @ c for k, c in dchi_star.coeffs.items()})
    return first + second + ito_correction(dchi, dchi_star, middle=rho)


# -- triangular matrix representation ----------------------------------------

class TriangularRep:
    """(d+2) x (d+2) upper-triangular matrix over ExactComplex in the
    Minkowski basis (-, 1..d, +); an exact algebra homomorphism of mul."""

    __slots__ = ("d", "entries")

    def __init__(self, d: int, entries):
        n = d + 2
        rows = tuple(tuple(ExactComplex.from_number(entries[i][j]) for j in range(n))
                     for i in range(n))
        for i in range(n):
            for j in range(n):
                if j < i and not rows[i][j].is_zero():
                    raise ValueError("representation matrix must be upper triangular")
        self.d = d
        self.entries = rows

    @classmethod
    def zero(cls, d: int) -> "TriangularRep":
        n = d + 2
        return cls(d, [[0] * n for _ in range(n)])

    def __matmul__(self, other: "TriangularRep") -> "TriangularRep":
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        n = self.d + 2
        out = [[ExactComplex(0) for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                acc = ExactComplex(0)
                for k in range(n):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                out[i][j] = acc
        return TriangularRep(self.d, out)

    def __add__(self, other: "TriangularRep") -> "TriangularRep":
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        n = self.d + 2
        return TriangularRep(self.d, [[self.entries[i][j] + other.entries[i][j]
                                       for j in range(n)] for i in range(n)])

    def __sub__(self, other: "TriangularRep") -> "TriangularRep":
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        n = self.d + 2
        return TriangularRep(self.d, [[self.entries[i][j] - other.entries[i][j]
                                       for j in range(n)] for i in range(n)])

    def __eq__(self, other):
        if not isinstance(other, TriangularRep):
            return NotImplemented
        return self.d == other.d and self.entries == other.entries

    def __hash__(self):
        return hash((self.d, self.entries))

    def is_zero(self) -> bool:
        return all(e.is_zero() for row in self.entries for e in row)

    def to_complex(self) -> np.ndarray:
        n = self.d + 2
        return np.array([[complex(self.entries[i][j]) for j in range(n)]
                         for i in range(n)])

    def __repr__(self):
        return f"TriangularRep(d={self.d}, {[[str(e) for e in row] for row in self.entries]})"


def matrix_rep(a: ItoElement) -> TriangularRep:
    """Map dL(mu, nu) to the matrix unit e[row(mu), col(nu)] with
    row(-) = 0, row(k) = k, col(k) = k, col(+) = d+1."""
    if a.kind == "operator":
        raise TypeError("matrix_rep requires scalar coefficients")
    n = a.d + 2
    entries = [[ExactComplex(0) for _ in range(n)] for _ in range(n)]
    for (mu, nu), c in a.coeffs.items():
        i = 0 if mu == MINUS else mu
        j = n - 1 if nu == PLUS else nu
        entries[i][j] = entries[i][j] + c
    return TriangularRep(a.d, entries)
