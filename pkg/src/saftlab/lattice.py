"""Integer sampling lattices, coset representatives, coset splitting.

For a non-singular integer matrix ``M`` with ``m = |det M|`` the integer
vectors inside the half-open parallelepiped ``M [0,1)^n`` form a complete set
of residues of ``Z^n / M Z^n`` (and likewise with ``M^T``).  Everything here
uses exact integer arithmetic — membership and decomposition are computed via
the adjugate, never a floating-point inverse — so coset bookkeeping cannot
drift for large indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import ceil, floor

import numpy as np

from .grid import SeqFn

__all__ = [
    "SamplingLattice",
    "build_lattice",
    "decompose",
    "split_sequence",
    "merge_sequence",
]


def _int_rows(M) -> list[list[int]]:
    arr = np.asarray(M)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"M must be a square matrix, got shape {arr.shape}")
    if not np.allclose(arr, np.round(arr)):
        raise ValueError("M must have integer entries")
    return [[int(round(x)) for x in row] for row in arr]


def _det_int(rows: list[list[int]]) -> int:
    # Bareiss fraction-free elimination: exact over Python ints.
    a = [row[:] for row in rows]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _adjugate_int(rows: list[list[int]]) -> list[list[int]]:
    n = len(rows)
    if n == 1:
        return [[1]]
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [rows[r][c] for c in range(n) if c != j]
                for r in range(n) if r != i
            ]
            adj[j][i] = (-1) ** (i + j) * _det_int(minor)
    return adj


def _coset_reps(rows: list[list[int]]) -> list[tuple[int, ...]]:
    """Integer points of ``M [0,1)^n``, zero first then lexicographic."""
    n = len(rows)
    det = _det_int(rows)
    adj = _adjugate_int(rows)
    corners = [
        [sum(rows[i][j] * v[j] for j in range(n)) for i in range(n)]
        for v in itertools.product((0, 1), repeat=n)
    ]
    lo = [floor(min(c[i] for c in corners)) for i in range(n)]
    hi = [ceil(max(c[i] for c in corners)) for i in range(n)]
    reps = []
    for k in itertools.product(*(range(lo[i], hi[i] + 1) for i in range(n))):
        # k in M[0,1)^n  <=>  (adj M) k / det in [0,1)^n, checked exactly
        num = [sum(adj[i][j] * k[j] for j in range(n)) for i in range(n)]
        if det > 0:
            inside = all(0 <= x < det for x in num)
        else:
            inside = all(det < x <= 0 for x in num)
        if inside:
            reps.append(k)
    reps.sort()
    zero = (0,) * n
    if zero not in reps:
        raise AssertionError("coset enumeration must contain 0")
    reps.remove(zero)
    return [zero] + reps


@dataclass(frozen=True)
class SamplingLattice:
    """Integer matrix ``M`` with coset representatives of ``Z^n/MZ^n``
    (``gamma``) and of ``Z^n/M^T Z^n`` (``eta``), zero first, lexicographic.
    """

    M: np.ndarray
    m: int
    gamma: tuple[tuple[int, ...], ...]
    eta: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def m_inverse(self) -> np.ndarray:
        """Float inverse of M (adjugate over determinant, so exact up to
        one final division)."""
        rows = _int_rows(self.M)
        det = _det_int(rows)
        adj = np.array(_adjugate_int(rows), dtype=float)
        return adj / det


def build_lattice(M) -> SamplingLattice:
    """Enumerate coset representatives for ``M`` and ``M^T``.

    Raises ValueError for singular or non-integer ``M``.
    """
    rows = _int_rows(M)
    det = _det_int(rows)
    if det == 0:
        raise ValueError("M is singular")
    m = abs(det)
    gamma = _coset_reps(rows)
    rows_t = [list(col) for col in zip(*rows)]
    eta = _coset_reps(rows_t)
    if len(gamma) != m or len(eta) != m:
        raise AssertionError(f"expected {m} coset reps, found {len(gamma)}/{len(eta)}")
    lat = SamplingLattice(
        M=np.array(rows, dtype=int),
        m=m,
        gamma=tuple(gamma),
        eta=tuple(eta),
    )
    lat.M.setflags(write=False)
    return lat


def decompose(lat: SamplingLattice, k, which: str = "MT") -> tuple[tuple[int, ...], int]:
    """Write an integer vector as ``M^T r + eta_j`` (or ``M r + gamma_j``).

    Returns ``(r, j)``; the decomposition is total and unique.  ``which`` is
    ``"MT"`` (default, input-side cosets) or ``"M"``.
    """
    k = tuple(int(round(x)) for x in np.asarray(k).reshape(-1))
    n = lat.n
    if len(k) != n:
        raise ValueError(f"index must have length {n}")
    rows = _int_rows(lat.M)
    if which.upper() in ("MT", "M^T"):
        reps = lat.eta
        mat = [list(col) for col in zip(*rows)]
    elif which.upper() == "M":
        reps = lat.gamma
        mat = rows
    else:
        raise ValueError("which must be 'M' or 'MT'")
    det = _det_int(mat)
    adj = _adjugate_int(mat)
    for j, rep in enumerate(reps):
        diff = [k[i] - rep[i] for i in range(n)]
        num = [sum(adj[i][l] * diff[l] for l in range(n)) for i in range(n)]
        if all(x % det == 0 for x in num):
            r = tuple(x // det for x in num)
            return r, j
    raise AssertionError("coset decomposition failed; lattice reps incomplete")


def split_sequence(lat: SamplingLattice, s: SeqFn) -> list[SeqFn]:
    """Coset subsequences ``s_l(r) = s(M^T r + eta_l)``, one per coset."""
    if s.n != lat.n:
        raise ValueError(f"sequence dimension {s.n} != lattice dimension {lat.n}")
    parts: list[dict] = [{} for _ in range(lat.m)]
    for k, z in s.entries.items():
        r, j = decompose(lat, k, "MT")
        parts[j][r] = z
    return [SeqFn(n=s.n, entries=p) for p in parts]


def merge_sequence(lat: SamplingLattice, parts: list[SeqFn]) -> SeqFn:
    """Inverse of `split_sequence`: ``s(M^T r + eta_l) = parts[l](r)``."""
    if len(parts) != lat.m:
        raise ValueError(f"need {lat.m} subsequences, got {len(parts)}")
    mt = lat.M.T
    entries = {}
    for l, part in enumerate(parts):
        eta = np.array(lat.eta[l])
        for r, z in part.entries.items():
            k = tuple(int(x) for x in (mt @ np.array(r) + eta))
            entries[k] = z
    return SeqFn(n=lat.n, entries=entries)
