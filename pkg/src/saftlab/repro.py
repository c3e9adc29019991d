"""Worked end-to-end recovery example with a smooth band-limited window.

The scenario: a two-dimensional generator whose frequency profile is the
tensor square root of a partition of unity (a compactly supported "Meyer
style" window), a two-term point-mass filter, the coefficient sequence
c(1,0)=1, c(0,1)=2, and four measurement channels sampled on 2Z^2.  Both
recovery routes run end to end, the per-frequency channel matrix is checked
against its Vandermonde-times-diagonal factorization, and deterministic CSV
surfaces plus a JSON report are emitted for external plotting.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .conv import conv_dd, conv_sd
from .dynsamp import (
    _filter_symbol,
    _folded_dt_values,
    _require_plain_fourier,
    build_B_window,
    build_D,
    continuous_solve_grid,
    filtered_levels,
    measure_from_samples,
    recover_continuous,
    recover_discrete,
    solve_grid,
    stability_report,
)
from .grid import GridFn, SeqFn
from .grid import sampling_grid
from .lattice import SamplingLattice, build_lattice
from .params import SaftParams, chirp, modulation, preset, require_valid
from .saft import saft_inverse, saft_plan
from .sis import SisModel, build_sis

__all__ = [
    "MeyerSpec",
    "ExampleScenario",
    "meyer_aux",
    "meyer_psi",
    "meyer_time_table",
    "tensor_window_samples",
    "build_example",
    "periodized_window_transform",
    "window_periodization_check",
    "channel_vandermonde",
    "factorization_residual",
    "run_example",
]

DEFAULT_SAMPLE_THRESHOLD = 1e-14
DEFAULT_TABLE_KMAX = 8192
DEFAULT_TABLE_NFREQ = 1 << 17


@dataclass(frozen=True)
class MeyerSpec:
    """Constants of the smooth window.

    ``taper`` holds the quartic transition polynomial coefficients (applied
    as x^4 * (t0 + t1 x + t2 x^2 + t3 x^3)); the window is 1 up to
    ``flat_end``, tapers until ``support_end``, and vanishes beyond.
    """

    taper: tuple = (35.0, -84.0, 70.0, -20.0)
    flat_end: float = 1.0 / 3.0
    support_end: float = 2.0 / 3.0


def meyer_aux(x, spec: MeyerSpec = MeyerSpec()):
    """Transition profile v on [0, 1]: v(0)=0, v(1)=1, v(x)+v(1-x)=1, with
    three vanishing derivatives at both ends (that symmetry is what makes
    the window squares sum to one across the seam)."""
    xv = np.asarray(x, dtype=float)
    t0, t1, t2, t3 = spec.taper
    out = xv**4 * (t0 + xv * (t1 + xv * (t2 + xv * t3)))
    return float(out) if out.ndim == 0 else out


def meyer_psi(x, spec: MeyerSpec = MeyerSpec()):
    """Even frequency window: 1 on the flat core, cosine-of-taper on the
    transition band, 0 outside; continuous, and its squares over integer
    shifts form a partition of unity."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    xa = np.abs(np.atleast_1d(arr))
    out = np.zeros_like(xa)
    out[xa <= spec.flat_end] = 1.0
    mid = (xa > spec.flat_end) & (xa < spec.support_end)
    if np.any(mid):
        t = (xa[mid] - spec.flat_end) / (spec.support_end - spec.flat_end)
        out[mid] = np.cos(0.5 * np.pi * meyer_aux(t, spec))
    return float(out[0]) if scalar else out.reshape(arr.shape)


def meyer_time_table(
    kmax: int = DEFAULT_TABLE_KMAX,
    nfreq: int = DEFAULT_TABLE_NFREQ,
    spec: MeyerSpec = MeyerSpec(),
) -> np.ndarray:
    """Integer-argument samples of the window's time-domain profile.

    The window is supported inside [-1, 1], so one DFT of its samples on
    that interval yields every integer time sample at once; the only error
    is index aliasing at offset nfreq/2, which the |t|^-4 tail puts below
    double precision at the defaults.  Returns t[0..kmax] (the profile is
    real and even).
    """
    if 2 * kmax >= nfreq:
        raise ValueError("nfreq must exceed 2*kmax for the aliasing margin")
    xi = -1.0 + 2.0 * np.arange(nfreq) / nfreq
    coef = np.fft.ifft(meyer_psi(xi, spec))
    idx = (2 * np.arange(kmax + 1)) % nfreq
    return 2.0 * np.real(coef[idx])


def tensor_window_samples(
    table: np.ndarray, threshold: float
) -> tuple[SeqFn, float, float]:
    """Thresholded integer samples of the tensor window on Z^2.

    Keeps index pairs whose product magnitude exceeds ``threshold`` relative
    to the center value; the kept set is hyperbola-shaped because the 1-D
    profile decays like |t|^-4.  Returns (samples, kept_l1, discarded_l1),
    the l1 masses of the kept and discarded products over the full signed
    index range of the table.
    """
    t0 = abs(table[0])
    if t0 == 0:
        raise ValueError("degenerate window: zero center sample")
    rel = np.abs(table) / t0
    kmax = len(table) - 1
    k1_list: list[np.ndarray] = []
    k2_list: list[np.ndarray] = []
    for k1 in range(kmax + 1):
        if rel[k1] == 0.0:
            continue
        k2 = np.nonzero(rel > threshold / rel[k1])[0]
        if k2.size:
            k1_list.append(np.full(k2.size, k1, dtype=np.int64))
            k2_list.append(k2.astype(np.int64))
    K1 = np.concatenate(k1_list) if k1_list else np.zeros(0, dtype=np.int64)
    K2 = np.concatenate(k2_list) if k2_list else np.zeros(0, dtype=np.int64)
    V = table[K1] * table[K2]
    entries: dict[tuple, complex] = {}
    kept_l1 = 0.0
    for s1, s2 in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        mask = np.ones(K1.size, dtype=bool)
        if s1 < 0:
            mask &= K1 > 0
        if s2 < 0:
            mask &= K2 > 0
        keys = np.stack([s1 * K1[mask], s2 * K2[mask]], axis=1)
        vals = V[mask]
        kept_l1 += float(np.sum(np.abs(vals)))
        entries.update(zip(map(tuple, keys.tolist()), vals.tolist()))
    signed_l1_1d = t0 + 2.0 * float(np.sum(np.abs(table[1:])))
    discarded_l1 = max(signed_l1_1d**2 - kept_l1, 0.0)
    return SeqFn(n=2, entries=entries), kept_l1, discarded_l1


@dataclass(frozen=True)
class ExampleScenario:
    """Everything the worked example needs, fully constructed."""

    params: SaftParams
    spec: MeyerSpec
    c1: complex
    c2: complex
    lat: SamplingLattice
    filt: SeqFn
    coeffs: SeqFn
    psi_table: np.ndarray
    window_samples: SeqFn       # plain tensor-window integer samples
    phi_samples: SeqFn          # generator samples (window / input phases)
    sample_threshold: float
    kept_l1: float
    discarded_l1: float
    model: SisModel
    masking_residual: float
    phi0_min: float


def _tensor_psi(nu: np.ndarray, spec: MeyerSpec) -> np.ndarray:
    return meyer_psi(nu[..., 0], spec) * meyer_psi(nu[..., 1], spec)


def build_example(
    params: SaftParams | None = None,
    c1: complex = 1.0,
    c2: complex = 0.5,
    threshold: float = DEFAULT_SAMPLE_THRESHOLD,
    halfwidth: float = 8.0,
    per_unit: int = 16,
    table_kmax: int = DEFAULT_TABLE_KMAX,
    cutoff: int = 8,
    spec: MeyerSpec = MeyerSpec(),
) -> ExampleScenario:
    """Assemble the worked scenario.

    The generator is chosen so its transform is exactly the tensor window
    on the reduced frequencies: for non-Fourier parameter blocks that means
    dividing the window profile by the input chirp and offset phase.  The
    point-mass filter has symbol c1 e^{2 i pi (w1+w2)} + c2 e^{2 i pi
    (w1+2w2)}; masking it with the indicator of the window's support box
    turns it into the band-limited filter whose action on the generator's
    span is identical (the masking residual is reported, and is zero by
    support disjointness).
    """
    p = preset("ft", n=2) if params is None else params
    require_valid(p)
    if p.n != 2:
        raise ValueError("the worked example is two-dimensional")
    c1 = complex(c1)
    c2 = complex(c2)
    filt = SeqFn.from_items(2, {(-1, -1): c1, (-1, -2): c2})
    coeffs = SeqFn.from_items(2, {(1, 0): 1.0, (0, 1): 2.0})
    lat = build_lattice([[2, 0], [0, 2]])

    table = meyer_time_table(table_kmax, spec=spec)
    window, kept_l1, discarded_l1 = tensor_window_samples(table, threshold)

    # generator samples: window divided by the input-side phases, so the
    # transform is eta(w) psi(nu1) psi(nu2) / sqrt(d) on nu = B^{-1} w
    if p.is_chirp_free(1e-14) and not np.any(p.b_inv_p):
        phi_samples = window
    else:
        keys, vals = window.as_arrays()
        kf = keys.astype(float)
        fac = np.conj(chirp(p, kf)) * np.exp(-2j * np.pi * (kf @ p.b_inv_p))
        phi_samples = SeqFn(
            n=2, entries=dict(zip(map(tuple, keys.tolist()), (vals * fac).tolist()))
        )

    def spectrum_fn(wpts):
        wf = np.asarray(wpts, dtype=float)
        nu = wf @ p.b_inv.T
        return (
            modulation(p, wf) * _tensor_psi(nu, spec) / np.sqrt(p.abs_det_b)
        ).astype(complex)

    tgrid = sampling_grid(halfwidth, per_unit, n=2)
    plan = saft_plan(p, tgrid)
    spec_grid = plan.out_template.with_values(spectrum_fn(plan.w_points()))
    phi_grid = saft_inverse(plan, spec_grid)
    model = build_sis(p, phi_grid, cutoff=cutoff, spectrum_fn=spectrum_fn)

    # masking identity: with the filter band-limited to the support box E,
    # (masked symbol) x (window) == (full symbol) x (window) at every
    # shifted reduced frequency, because the window vanishes off E
    nu0 = (plan.w_points().reshape(-1, p.n)) @ p.b_inv.T
    shifts = np.array(
        [(i, j) for i in (-2, -1, 0, 1, 2) for j in (-2, -1, 0, 1, 2)], dtype=float
    )
    pts = nu0[:, None, :] + shifts[None, :, :]
    chi = np.all(np.abs(pts) <= spec.support_end, axis=-1).astype(float)
    sym = _filter_symbol(p, filt, pts)
    masking_residual = float(np.max(np.abs((chi - 1.0) * sym * _tensor_psi(pts, spec))))

    # unsquared periodization of the window: bounded away from zero.  The
    # sum is 1-periodic, so reduce to the unit cell before the local shifts.
    nu_frac = nu0 - np.floor(nu0)
    phi0 = np.zeros(nu_frac.shape[0])
    for s in shifts:
        phi0 += _tensor_psi(nu_frac + s, spec)
    phi0_min = float(np.min(phi0))

    return ExampleScenario(
        params=p,
        spec=spec,
        c1=c1,
        c2=c2,
        lat=lat,
        filt=filt,
        coeffs=coeffs,
        psi_table=table,
        window_samples=window,
        phi_samples=phi_samples,
        sample_threshold=threshold,
        kept_l1=kept_l1,
        discarded_l1=discarded_l1,
        model=model,
        masking_residual=masking_residual,
        phi0_min=phi0_min,
    )


def periodized_window_transform(
    scenario: ExampleScenario, x_points: np.ndarray, cutoff: int = 2
) -> np.ndarray:
    """Shift sum of the generator transform with the squared conjugate
    modulation weights, evaluated at physical frequencies (the diagonal
    factor of the channel-matrix factorization)."""
    p = scenario.params
    pts = np.asarray(x_points, dtype=float)
    shifts = np.stack(
        np.meshgrid(*([range(-cutoff, cutoff + 1)] * 2), indexing="ij"), axis=-1
    ).reshape(-1, 2).astype(float)
    stacked = pts[..., None, :] + shifts
    eta_sq = np.conj(modulation(p, stacked)) ** 2
    vals = scenario.model.spectrum_fn(stacked)
    return np.sum(eta_sq * vals, axis=-1)


def window_periodization_check(
    scenario: ExampleScenario, grid_n: int = 33
) -> dict:
    """Two-route check of the window periodization and its filter pull-out.

    Route one periodizes the analytic spectrum directly; route two
    transforms the thresholded integer samples (a genuinely independent
    computation).  Both the unfiltered sum and the once-filtered sum are
    compared; the once-filtered sum must equal the filter symbol times the
    unfiltered one.  Residuals are bounded by the discarded sample mass.
    """
    pft = preset("ft", n=2)
    shape = (grid_n, grid_n)
    axes = [np.arange(grid_n) / grid_n] * 2
    x = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)

    freq0 = np.zeros(x.shape[0])
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            freq0 = freq0 + _tensor_psi(x + np.array([i, j], dtype=float), scenario.spec)
    samp0 = _folded_dt_values(pft, scenario.window_samples, shape).reshape(-1)

    level1 = conv_dd(pft, scenario.filt, scenario.window_samples)
    samp1 = _folded_dt_values(pft, level1, shape).reshape(-1)
    sym = _filter_symbol(pft, scenario.filt, x)

    return {
        "periodization_residual": float(np.max(np.abs(samp0 - freq0))),
        "factor_pullout_residual": float(np.max(np.abs(samp1 - sym * freq0))),
    }


def channel_vandermonde(
    scenario: ExampleScenario, lat: SamplingLattice, wpts: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Filter-symbol values on the dual cosets and their Vandermonde
    determinant (the all-symbols-distinct stability factor): entry v is the
    symbol at the reduced M^{-1}(w + gamma_v), and the determinant is the
    product of pairwise differences."""
    p = scenario.params
    pts = np.asarray(wpts, dtype=float).reshape(-1, p.n)
    minv = lat.m_inverse()
    gam = np.array(lat.gamma, dtype=float)
    x = (pts[:, None, :] + gam[None, :, :]) @ minv.T
    beta = _filter_symbol(p, scenario.filt, (x - p.P) @ p.b_inv.T)
    m = lat.m
    det = np.ones(pts.shape[0], dtype=complex)
    for v in range(m):
        for u in range(v + 1, m):
            det = det * (beta[:, u] - beta[:, v])
    return beta, det


def factorization_residual(
    scenario: ExampleScenario, lat: SamplingLattice, field
) -> tuple[float, float]:
    """How exactly the channel matrix splits into Vandermonde times the
    diagonal of unfiltered periodizations.

    Row j of the periodization field is (symbol)^j times row 0, so its
    determinant must equal the Vandermonde determinant of the symbols times
    the product of the row-0 entries.  Returns (max residual, min |det|).
    """
    _, detE = channel_vandermonde(scenario, lat, field.wpoints)
    detD = np.linalg.det(field.entries)
    predicted = detE * np.prod(field.entries[:, 0, :], axis=-1)
    return float(np.max(np.abs(detD - predicted))), float(np.min(np.abs(detD)))


def _restrict_stems(s: SeqFn, radius: int) -> list[tuple]:
    rows = []
    for k in sorted(s.entries):
        if max(abs(x) for x in k) <= radius:
            rows.append((k, s.entries[k]))
    return rows


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(repr(float(x)) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _emit_figures(scenario: ExampleScenario, outdir: Path) -> dict:
    """Deterministic CSV surfaces for external plotting; returns sizes."""
    p = scenario.params
    spec = scenario.spec
    outdir.mkdir(parents=True, exist_ok=True)

    xs = (np.arange(-600, 601)) / 400.0
    _write_csv(
        outdir / "fig01_psi.csv", "x,psi", [(x, meyer_psi(x, spec)) for x in xs]
    )

    tmpl = scenario.model.spectrum
    nu = (tmpl.points() @ p.b_inv.T).reshape(-1, 2)
    vals = _tensor_psi(nu, spec)
    _write_csv(
        outdir / "fig02_spectrum.csv",
        "nu1,nu2,window",
        np.column_stack([nu, vals]),
    )

    f_grid = conv_sd(p, scenario.coeffs, scenario.model.phi)
    fpts = f_grid.points().reshape(-1, 2)
    fv = f_grid.values.reshape(-1)
    _write_csv(
        outdir / "fig03_f_real.csv", "x1,x2,value",
        np.column_stack([fpts, fv.real]),
    )
    _write_csv(
        outdir / "fig04_f_imag.csv", "x1,x2,value",
        np.column_stack([fpts, fv.imag]),
    )

    f_samples = conv_dd(p, scenario.coeffs, scenario.phi_samples)
    stems = _restrict_stems(f_samples, 12)
    _write_csv(
        outdir / "fig05_samples_real.csv", "k1,k2,value",
        [(k[0], k[1], v.real) for k, v in stems],
    )
    _write_csv(
        outdir / "fig06_samples_imag.csv", "k1,k2,value",
        [(k[0], k[1], v.imag) for k, v in stems],
    )

    axes = [np.arange(64) / 64.0] * 2
    xg = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)
    phi0 = periodized_window_transform(scenario, xg @ p.B.T)
    _write_csv(
        outdir / "fig07_periodization_real.csv", "w1,w2,value",
        np.column_stack([xg, phi0.real]),
    )
    _write_csv(
        outdir / "fig08_periodization_imag.csv", "w1,w2,value",
        np.column_stack([xg, phi0.imag]),
    )

    filtered = conv_sd(p, scenario.filt, scenario.model.phi)
    gpts = filtered.points().reshape(-1, 2)
    gv = filtered.values.reshape(-1)
    _write_csv(
        outdir / "fig09_filtered_real.csv", "x1,x2,value",
        np.column_stack([gpts, gv.real]),
    )

    filt_samples = conv_dd(p, scenario.filt, scenario.phi_samples)
    stems = _restrict_stems(filt_samples, 12)
    _write_csv(
        outdir / "fig10_samples_imag.csv", "k1,k2,value",
        [(k[0], k[1], v.imag) for k, v in stems],
    )

    return {
        "time_grid": list(scenario.model.phi.shape),
        "spectrum_grid": list(tmpl.shape),
        "f_grid": list(f_grid.shape),
    }


def run_example(
    scenario: ExampleScenario,
    outdir: str | Path | None = None,
    window: tuple = ((-8, -8), (8, 8)),
) -> tuple[dict, SeqFn | None]:
    """Measure, check stability, recover along both routes, verify the
    factorizations, and (optionally) emit figure CSVs and report.json.

    Returns (report, recovered coefficients or None).  A structurally
    degenerate filter (vanishing symbol differences) produces verdict
    "fail" with the offending frequency, never a silent wrong answer.
    """
    p = scenario.params
    lat = scenario.lat
    lo = np.asarray(window[0], dtype=int)
    hi = np.asarray(window[1], dtype=int)
    timings: dict[str, float] = {}
    report: dict = {
        "c1": [scenario.c1.real, scenario.c1.imag],
        "c2": [scenario.c2.real, scenario.c2.imag],
        "sample_threshold": scenario.sample_threshold,
        "kept_l1": scenario.kept_l1,
        "discarded_l1": scenario.discarded_l1,
        "masking_residual": scenario.masking_residual,
        "phi0_min": scenario.phi0_min,
        "window": [lo.tolist(), hi.tolist()],
        "sizes": {
            "generator_samples": len(scenario.phi_samples.entries),
            "time_grid": list(scenario.model.phi.shape),
        },
    }

    t0 = time.perf_counter()
    levels = filtered_levels(p, scenario.filt, scenario.phi_samples, lat.m, "cc")
    ms = measure_from_samples(p, lat, scenario.coeffs, levels)
    timings["measure"] = time.perf_counter() - t0
    report["sizes"]["level_samples"] = [len(l.entries) for l in levels]
    report["sizes"]["channel_samples"] = [len(v.entries) for v in ms.levels]

    t0 = time.perf_counter()
    field = build_B_window(p, lat, lo, hi, levels)
    stab = stability_report(field)
    timings["field"] = time.perf_counter() - t0
    report["discrete_stability"] = {
        "verdict": stab.verdict,
        "min_abs_det": stab.min_abs_det,
        "argmin_w": stab.argmin_w.tolist(),
        "max_cond": stab.max_cond,
    }
    wpts, shape, _ = solve_grid(p, lo, hi)
    report["sizes"]["solve_grid"] = list(shape)

    recovered: SeqFn | None = None
    if stab.ok:
        t0 = time.perf_counter()
        recovered, _info = recover_discrete(ms, field, r_window=(lo, hi))
        timings["recover_discrete"] = time.perf_counter() - t0
        diff = recovered.plus(scenario.coeffs.scaled(-1.0))
        report["recovery_error"] = diff.l2norm() / scenario.coeffs.l2norm()
    else:
        report["recovery_error"] = None

    # periodization route and factorization checks need plain-Fourier blocks
    plain = True
    try:
        _require_plain_fourier(p)
    except ValueError:
        plain = False

    report["min_det_E"] = None
    report["min_det_D"] = None
    report["recovery_error_continuous"] = None
    report["mutual_error"] = None
    report["factorization_residual"] = None
    report["factorization_residual_2x2"] = None
    cont_ok = True
    if plain:
        t0 = time.perf_counter()
        h_levels = [conv_dd(p, scenario.coeffs, lv) for lv in levels]
        wptsC, shapeC, loC, qsh = continuous_solve_grid(p, lat, lo, hi)
        Dfield = build_D(scenario.model, scenario.filt, lat, wptsC)
        stabD = stability_report(Dfield)
        timings["periodization_field"] = time.perf_counter() - t0
        report["sizes"]["continuous_solve_grid"] = list(qsh)
        report["periodization_stability"] = {
            "verdict": stabD.verdict,
            "min_abs_det": stabD.min_abs_det,
            "argmin_w": stabD.argmin_w.tolist(),
            "max_cond": stabD.max_cond,
        }
        _, detE = channel_vandermonde(scenario, lat, wptsC)
        report["min_det_E"] = float(np.min(np.abs(detE)))
        resid, min_det_d = factorization_residual(scenario, lat, Dfield)
        report["factorization_residual"] = resid
        report["min_det_D"] = min_det_d

        # printed two-channel subsystem: cosets {0, (0,1)} of diag(1, 2)
        lat2 = build_lattice([[1, 0], [0, 2]])
        axes = [np.arange(9) / 9.0] * 2
        w9 = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)
        D2 = build_D(scenario.model, scenario.filt, lat2, w9, J=2)
        resid2, _ = factorization_residual(scenario, lat2, D2)
        report["factorization_residual_2x2"] = resid2

        cont_ok = stabD.ok
        if stabD.ok:
            t0 = time.perf_counter()
            rec_c, _ic = recover_continuous(p, lat, h_levels, Dfield, (lo, hi))
            timings["recover_continuous"] = time.perf_counter() - t0
            diff = rec_c.plus(scenario.coeffs.scaled(-1.0))
            report["recovery_error_continuous"] = (
                diff.l2norm() / scenario.coeffs.l2norm()
            )
            if recovered is not None:
                report["mutual_error"] = (
                    recovered.plus(rec_c.scaled(-1.0)).l2norm()
                    / scenario.coeffs.l2norm()
                )
        report["window_checks"] = window_periodization_check(scenario)

    report["verdict"] = "pass" if (stab.ok and cont_ok) else "fail"
    report["timings"] = {k: round(v, 4) for k, v in timings.items()}

    if outdir is not None:
        out = Path(outdir)
        t0 = time.perf_counter()
        report["sizes"].update(_emit_figures(scenario, out))
        report["timings"]["figures"] = round(time.perf_counter() - t0, 4)
        written = {k: v for k, v in report.items() if k != "timings"}
        (out / "report.json").write_text(
            json.dumps(written, indent=2, sort_keys=True) + "\n"
        )
    return report, recovered
