"""Estimator-style facade over the transform plans.

`SaftTransformer` follows the fit/transform/get_params/set_params protocol
so the transform drops into pipeline code that expects that shape.  It is
a thin adapter: all numerics live in `saft`; the estimator only resolves
parameters, pins the sampling geometry at fit time, and converts between
arrays and grid functions.
"""

from __future__ import annotations

import numpy as np

from .grid import GridFn, sampling_grid
from .params import SaftParams, preset, require_valid
from .saft import saft_forward, saft_inverse, saft_plan

__all__ = ["SaftTransformer"]


class SaftTransformer:
    """Configurable forward/inverse transform with a fitted grid geometry.

    Parameters
    ----------
    kind : preset name understood by `preset`.
    n : dimension (used when building presets and default grids).
    preset_args : extra keyword arguments the preset needs (angles,
        diagonal entries, full matrices, ...).
    blocks : optional dict with keys A, B, C, D, P, Q; overrides the preset.
    backend : "fast" (chirp-DFT) or "quad" (direct quadrature).
    halfwidth, per_unit : default sampling geometry when fit receives a bare
        array instead of a grid function.

    After `fit`: ``params_`` (resolved parameter blocks), ``in_grid_`` and
    ``out_grid_`` (sampling geometries), ``plan_`` (the transform plan).
    """

    def __init__(
        self,
        kind: str = "ft",
        n: int = 1,
        preset_args: dict | None = None,
        blocks: dict | None = None,
        backend: str = "fast",
        halfwidth: float = 8.0,
        per_unit: int = 16,
    ):
        self.kind = kind
        self.n = n
        self.preset_args = preset_args
        self.blocks = blocks
        self.backend = backend
        self.halfwidth = halfwidth
        self.per_unit = per_unit

    # -- estimator protocol -------------------------------------------------

    def get_params(self, deep: bool = True) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "preset_args": self.preset_args,
            "blocks": self.blocks,
            "backend": self.backend,
            "halfwidth": self.halfwidth,
            "per_unit": self.per_unit,
        }

    def set_params(self, **kwargs) -> "SaftTransformer":
        valid = self.get_params()
        for key, value in kwargs.items():
            if key not in valid:
                raise ValueError(
                    f"unknown parameter {key!r}; valid: {sorted(valid)}"
                )
            setattr(self, key, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"SaftTransformer({args})"

    # -- fitting ------------------------------------------------------------

    def _resolve_params(self) -> SaftParams:
        if self.blocks is not None:
            blocks = {k: np.asarray(v, dtype=float) for k, v in self.blocks.items()}
            p = SaftParams(self.n, **blocks)
        else:
            p = preset(self.kind, n=self.n, **(self.preset_args or {}))
        require_valid(p)
        return p

    def _as_grid(self, X) -> GridFn:
        if isinstance(X, GridFn):
            return X
        values = np.asarray(X)
        grid = sampling_grid(self.halfwidth, self.per_unit, n=self.n)
        if values.shape != grid.shape:
            raise ValueError(
                f"array shape {values.shape} does not match the default grid "
                f"{grid.shape}; pass a grid function to use other geometry"
            )
        return grid.with_values(values.astype(complex))

    def fit(self, X=None, y=None) -> "SaftTransformer":
        """Resolve parameters and pin the sampling geometry from ``X``
        (grid function, array on the default grid, or None for defaults)."""
        params = self._resolve_params()
        grid = self._as_grid(X) if X is not None else sampling_grid(
            self.halfwidth, self.per_unit, n=self.n
        )
        plan = saft_plan(params, grid, backend=self.backend)
        self.params_ = params
        self.in_grid_ = plan.in_template
        self.out_grid_ = plan.out_template
        self.plan_ = plan
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "plan_"):
            raise RuntimeError("transformer is not fitted; call fit first")

    # -- transforming -------------------------------------------------------

    def transform(self, X):
        """Forward transform; grid in, grid out / array in, array out."""
        self._check_fitted()
        as_grid = isinstance(X, GridFn)
        g = X if as_grid else self.in_grid_.with_values(np.asarray(X, dtype=complex))
        if not g.same_geometry(self.in_grid_):
            raise ValueError("input geometry differs from the fitted grid")
        out = saft_forward(self.plan_, g)
        return out if as_grid else out.values

    def inverse_transform(self, X):
        """Inverse transform from the fitted output geometry."""
        self._check_fitted()
        as_grid = isinstance(X, GridFn)
        g = X if as_grid else self.out_grid_.with_values(np.asarray(X, dtype=complex))
        if not g.same_geometry(self.out_grid_):
            raise ValueError("input geometry differs from the fitted output grid")
        out = saft_inverse(self.plan_, g)
        return out if as_grid else out.values

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)
