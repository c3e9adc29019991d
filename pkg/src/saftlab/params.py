"""Parameter blocks (A, B, C, D | P, Q) for the affine-Fourier family.

A parameter block is valid when

* ``A B^T`` and ``C D^T`` are symmetric,
* ``A D^T - B C^T = I``,
* ``B`` is non-singular.

The first three say the matrix ``[[A, B], [C, D]]`` is symplectic; everything
downstream (inversion, convolution theorems, sampling identities) relies on
them.  Offsets ``P`` (input side) and ``Q`` (output side) are free vectors.

Two unit-modulus scalar fields derived from a block appear throughout:

* `chirp`: ``exp(i*pi * t^T B^{-1}A t)``, the input-side quadratic phase;
* `modulation`: ``exp(i*pi * w^T D B^{-1} w + 2i*pi (Q^T - P^T D B^{-1}) w)``,
  the output-side quadratic/linear phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "SaftParams",
    "ValidityReport",
    "validate",
    "preset",
    "inverse_params",
    "chirp",
    "modulation",
    "random_params",
]

#: default tolerance for the symplectic constraint residuals (inputs may come
#: from text files with rounded entries)
DEFAULT_CONSTRAINT_TOL = 1e-10

#: |det B| below this times ||B||^n counts as singular
SINGULARITY_RTOL = 1e-12


def _as_matrix(x, n: int, name: str) -> np.ndarray:
    m = np.asarray(x, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.shape != (n, n):
        raise ValueError(f"{name} must be {n}x{n}, got shape {m.shape}")
    return m


def _as_offset(x, n: int, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.size == 1 and n > 1 and np.all(v == 0):
        v = np.zeros(n)
    if v.shape != (n,):
        raise ValueError(f"{name} must be a length-{n} vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class SaftParams:
    """Immutable parameter block; ``B^{-1}`` and friends are cached once.

    Construction only enforces structural consistency (shapes).  Constraint
    residuals are computed and stored so `validate` can report them; if ``B``
    is numerically singular the cached inverse is absent and operations that
    need it raise.
    """

    n: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    P: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n <= 0:
            raise ValueError("dimension n must be a positive integer")
        object.__setattr__(self, "n", n)
        for name in "ABCD":
            object.__setattr__(self, name, _as_matrix(getattr(self, name), n, name))
        for name in "PQ":
            object.__setattr__(self, name, _as_offset(getattr(self, name), n, name))
        for name in "ABCDPQ":
            getattr(self, name).setflags(write=False)

        A, B, C, D = self.A, self.B, self.C, self.D
        det_b = float(np.linalg.det(B))
        norm_b = float(np.linalg.norm(B, ord=2)) if np.any(B) else 0.0
        # floor applied after the power so an all-zero B cannot underflow
        # the threshold to 0 and slip past the guard
        singular = abs(det_b) < SINGULARITY_RTOL * max(norm_b**n, 1e-300)
        object.__setattr__(self, "_det_b", det_b)
        object.__setattr__(self, "_b_singular", bool(singular))
        residuals = {
            "ab_symmetry": float(np.max(np.abs(A @ B.T - B @ A.T))),
            "cd_symmetry": float(np.max(np.abs(C @ D.T - D @ C.T))),
            "symplectic_identity": float(np.max(np.abs(A @ D.T - B @ C.T - np.eye(n)))),
        }
        object.__setattr__(self, "_residuals", residuals)
        if not singular:
            b_inv = np.linalg.inv(B)
            caches = {
                "_b_inv": b_inv,
                "_b_inv_a": b_inv @ A,          # symmetric for valid blocks
                "_d_b_inv": D @ b_inv,
                "_b_inv_p": b_inv @ self.P,
                # linear coefficient of the modulation phase: Q - (D B^{-1})^T P
                "_mod_lin": self.Q - (D @ b_inv).T @ self.P,
            }
            for k, v in caches.items():
                v.setflags(write=False)
                object.__setattr__(self, k, v)
        else:
            for k in ("_b_inv", "_b_inv_a", "_d_b_inv", "_b_inv_p", "_mod_lin"):
                object.__setattr__(self, k, None)

    # -- cached views ------------------------------------------------------

    @property
    def det_b(self) -> float:
        return self._det_b

    @property
    def abs_det_b(self) -> float:
        return abs(self._det_b)

    @property
    def b_inv(self) -> np.ndarray:
        if self._b_inv is None:
            raise ValueError("B is numerically singular; this operation needs B^{-1}")
        return self._b_inv

    @property
    def b_inv_a(self) -> np.ndarray:
        if self._b_inv_a is None:
            raise ValueError("B is numerically singular; this operation needs B^{-1}")
        return self._b_inv_a

    @property
    def d_b_inv(self) -> np.ndarray:
        if self._d_b_inv is None:
            raise ValueError("B is numerically singular; this operation needs B^{-1}")
        return self._d_b_inv

    @property
    def b_inv_p(self) -> np.ndarray:
        if self._b_inv_p is None:
            raise ValueError("B is numerically singular; this operation needs B^{-1}")
        return self._b_inv_p

    def is_chirp_free(self, tol: float = 0.0) -> bool:
        """True when the input-side quadratic phase vanishes (A == 0)."""
        return float(np.max(np.abs(self.A))) <= tol

    def __repr__(self):  # compact; the matrices are small
        with np.printoptions(precision=4, suppress=True):
            return (
                f"SaftParams(n={self.n}, A={self.A.tolist()}, B={self.B.tolist()}, "
                f"C={self.C.tolist()}, D={self.D.tolist()}, P={self.P.tolist()}, Q={self.Q.tolist()})"
            )


@dataclass(frozen=True)
class ValidityReport:
    ok: bool
    residuals: dict
    b_singular: bool
    tol: float

    def __str__(self):
        lines = [f"valid: {self.ok} (tol {self.tol:g})"]
        for k, v in self.residuals.items():
            lines.append(f"  {k}: {v:.3e}")
        lines.append(f"  b_singular: {self.b_singular}")
        return "\n".join(lines)


def validate(p: SaftParams, tol: float = DEFAULT_CONSTRAINT_TOL) -> ValidityReport:
    """Check the symplectic constraints and B's invertibility.

    Structural problems (wrong shapes) raise at construction time and never
    reach here; this reports constraint failures.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    bad = p._b_singular or any(r > tol for r in p._residuals.values())
    return ValidityReport(ok=not bad, residuals=dict(p._residuals), b_singular=p._b_singular, tol=tol)


def require_valid(p: SaftParams, tol: float = DEFAULT_CONSTRAINT_TOL) -> None:
    rep = validate(p, tol)
    if not rep.ok:
        raise ValueError(f"invalid parameter block:\n{rep}")


# ---------------------------------------------------------------------------
# presets


def preset(kind: str, n: int | None = None, **kwargs) -> SaftParams:
    """Construct a named special-case parameter block.

    Kinds (all validated to 1e-12 before returning):

    - ``ft``: A=D=P=Q=0, B=I, C=-I.
    - ``lct``: full matrices A, B, C, D (P=Q=0).
    - ``separable_lct``: per-axis diagonals a, b, c, d (P=Q=0).
    - ``separable_frft``: angles theta_i; A=D=diag(cos), B=-C=diag(sin).
    - ``nonseparable_fresnel``: A=D=I, C=0, B symmetric.
    - ``separable_fresnel``: A=D=I, C=0, B=diag(b).
    - ``separable_lorentz``: rapidities phi_i; A=D=diag(cosh), B=C=diag(sinh).
    - ``custom``: full A, B, C, D, P, Q.
    """
    kind = kind.lower().replace("-", "_")
    if kind == "ft":
        if n is None:
            raise ValueError("ft preset needs the dimension n")
        Z, I = np.zeros((n, n)), np.eye(n)
        p = SaftParams(n, Z, I, -I, Z, np.zeros(n), np.zeros(n))
    elif kind == "lct":
        A = np.asarray(kwargs["A"], dtype=float)
        n = A.shape[0] if A.ndim else 1
        p = SaftParams(n, kwargs["A"], kwargs["B"], kwargs["C"], kwargs["D"], np.zeros(n), np.zeros(n))
    elif kind == "separable_lct":
        a, b, c, d = (np.atleast_1d(np.asarray(kwargs[k], dtype=float)) for k in "abcd")
        n = a.size
        p = SaftParams(n, np.diag(a), np.diag(b), np.diag(c), np.diag(d), np.zeros(n), np.zeros(n))
    elif kind == "separable_frft":
        theta = np.atleast_1d(np.asarray(kwargs["theta"], dtype=float))
        n = theta.size
        if np.any(np.abs(np.sin(theta)) < 1e-12):
            raise ValueError("frft angles with sin(theta) = 0 give a singular B")
        cos, sin = np.diag(np.cos(theta)), np.diag(np.sin(theta))
        p = SaftParams(n, cos, sin, -sin, cos, np.zeros(n), np.zeros(n))
    elif kind == "nonseparable_fresnel":
        B = np.asarray(kwargs["B"], dtype=float)
        n = B.shape[0]
        if np.max(np.abs(B - B.T)) > 1e-12:
            raise ValueError("nonseparable fresnel block requires a symmetric B")
        I, Z = np.eye(n), np.zeros((n, n))
        p = SaftParams(n, I, B, Z, I, np.zeros(n), np.zeros(n))
    elif kind == "separable_fresnel":
        b = np.atleast_1d(np.asarray(kwargs["b"], dtype=float))
        n = b.size
        I, Z = np.eye(n), np.zeros((n, n))
        p = SaftParams(n, I, np.diag(b), Z, I, np.zeros(n), np.zeros(n))
    elif kind == "separable_lorentz":
        phi = np.atleast_1d(np.asarray(kwargs["phi"], dtype=float))
        n = phi.size
        if np.any(np.abs(np.sinh(phi)) < 1e-12):
            raise ValueError("lorentz rapidity 0 gives a singular B")
        ch, sh = np.diag(np.cosh(phi)), np.diag(np.sinh(phi))
        p = SaftParams(n, ch, sh, sh, ch, np.zeros(n), np.zeros(n))
    elif kind == "custom":
        A = np.asarray(kwargs["A"], dtype=float)
        n = A.shape[0] if A.ndim else 1
        p = SaftParams(
            n, kwargs["A"], kwargs["B"], kwargs["C"], kwargs["D"],
            kwargs.get("P", np.zeros(n)), kwargs.get("Q", np.zeros(n)),
        )
    else:
        raise ValueError(f"unknown preset kind {kind!r}")
    rep = validate(p, 1e-12)
    if not rep.ok:
        raise ValueError(f"preset {kind!r} arguments give an invalid block:\n{rep}")
    return p


def inverse_params(p: SaftParams) -> SaftParams:
    """Parameter block of the inverse transform.

    ``(A', B', C', D') = (D^T, -B^T, -C^T, A^T)`` with offsets
    ``P' = B^T Q - D^T P`` and ``Q' = C^T P - A^T Q``.  Applying it twice
    returns the original block (an involution on valid blocks).
    """
    require_valid(p)
    return SaftParams(
        p.n,
        p.D.T,
        -p.B.T,
        -p.C.T,
        p.A.T,
        p.B.T @ p.Q - p.D.T @ p.P,
        p.C.T @ p.P - p.A.T @ p.Q,
    )


# ---------------------------------------------------------------------------
# unit-modulus factors


def _quad_phase(points: np.ndarray, m: np.ndarray, n: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != n:
        raise ValueError(f"points must have trailing dimension {n}")
    return np.einsum("...i,ij,...j->...", pts, m, pts)


def chirp(p: SaftParams, t) -> np.ndarray | complex:
    """Input-side quadratic phase ``exp(i*pi * t^T B^{-1}A t)``.

    ``t`` may be a single n-vector or an array of shape (..., n).  The result
    has unit modulus exactly (a purely imaginary exponent is used).
    """
    ph = _quad_phase(t, p.b_inv_a, p.n)
    out = np.exp(1j * np.pi * ph)
    return complex(out) if out.ndim == 0 else out


def modulation(p: SaftParams, w) -> np.ndarray | complex:
    """Output-side phase ``exp(i*pi w^T D B^{-1} w + 2i*pi (Q^T - P^T D B^{-1}) w)``."""
    w_arr = np.asarray(w, dtype=float)
    ph = _quad_phase(w_arr, p.d_b_inv, p.n) + 2.0 * (w_arr @ p._mod_lin)
    out = np.exp(1j * np.pi * ph)
    return complex(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# random valid blocks for tests and the verify CLI


def random_params(
    n: int,
    rng: np.random.Generator,
    *,
    blocks: int = 4,
    scale: float = 1.0,
    offsets: bool = True,
    max_rate: float = 2.0,
    min_det_b: float = 0.3,
) -> SaftParams:
    """Draw a random valid parameter block.

    The symplectic part is a product of elementary symplectic factors (free
    propagation with a symmetric upper block, a thin-lens lower block, a
    per-axis rotation, an axis scaling), so the constraints hold by
    construction.  Draws are rejected until ``|det B| >= min_det_b`` and the
    quadratic-phase rates ``||B^{-1}A||`` and ``||D B^{-1}||`` are at most
    ``max_rate`` — bounded rates keep grid-based evaluations of the transform
    well resolved at moderate grid sizes.
    """

    def sym(k):
        S = rng.uniform(-scale, scale, (k, k))
        return (S + S.T) / 2.0

    I = np.eye(n)
    Z = np.zeros((n, n))
    for _ in range(256):
        S = np.eye(2 * n)
        for _ in range(blocks):
            kind = rng.integers(0, 4)
            if kind == 0:       # free propagation
                T = sym(n)
                F = np.block([[I, T], [Z, I]])
            elif kind == 1:     # thin lens
                L = sym(n)
                F = np.block([[I, Z], [L, I]])
            elif kind == 2:     # per-axis rotation
                th = rng.uniform(0.2, np.pi - 0.2, n)
                c, s = np.diag(np.cos(th)), np.diag(np.sin(th))
                F = np.block([[c, s], [-s, c]])
            else:               # axis scaling
                d = np.exp(rng.uniform(-0.4, 0.4, n))
                F = np.block([[np.diag(d), Z], [Z, np.diag(1.0 / d)]])
            S = F @ S
        A, B = S[:n, :n], S[:n, n:]
        C, D = S[n:, :n], S[n:, n:]
        if abs(np.linalg.det(B)) < min_det_b:
            continue
        b_inv = np.linalg.inv(B)
        if np.linalg.norm(b_inv @ A, 2) > max_rate or np.linalg.norm(D @ b_inv, 2) > max_rate:
            continue
        P = rng.uniform(-1, 1, n) if offsets else np.zeros(n)
        Q = rng.uniform(-1, 1, n) if offsets else np.zeros(n)
        p = SaftParams(n, A, B, C, D, P, Q)
        if validate(p, 1e-9).ok:
            return p
    raise RuntimeError("could not draw a valid parameter block (rate bounds too tight?)")
