"""Dense sector eigensolves, level-spacing diagnostics and scar identification."""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.exceptions import RankWarning
from scipy import stats

from .entanglement import batch_entropies
from .hilbert import ManyBodyOperator, dense_cap

DEGENERACY_TOL = 1e-12
CLUSTER_TOL = 1e-9
SCAR_FLAG = 0.99
MIN_LEVELS = 50


class TooFewLevels(ValueError):
    pass


# ---------------------------------------------------------------------------
# eigensolver
# ---------------------------------------------------------------------------


def eigensolve_sector(H: ManyBodyOperator, indices: Optional[Sequence[int]] = None,
                      cap: Optional[int] = None, check: int = 5):
    """Full dense eigendecomposition of ``H`` restricted to ``indices``.

    A real symmetric solver is used whenever the restricted matrix is real.
    ``check`` eigenpairs (spread over the spectrum) are verified against
    ``||Hv - Ev|| < 1e-9 ||H||``.

    Returns
    -------
    energies : ndarray
        Ascending eigenvalues.
    vectors : ndarray
        Orthonormal eigenvectors as columns, in the order of ``indices``.
    """
    sub = H if indices is None else H.restrict(indices)
    if not sub.is_hermitian():
        raise ValueError(f"sector matrix is not hermitian ({sub.hermitian_error():.2e})")
    M = sub.to_dense(dense_cap() if cap is None else cap)
    if sub.max_imag() == 0.0:
        M = M.real
    w, v = np.linalg.eigh(M)
    if check and w.size:
        scale = max(float(np.max(np.abs(w))), 1.0)
        for k in np.unique(np.linspace(0, w.size - 1, min(check, w.size)).astype(int)):
            r = np.linalg.norm(M @ v[:, k] - w[k] * v[:, k])
            if r > 1e-9 * scale:
                raise ArithmeticError(f"eigenpair {k} residual {r:.2e}")
    return w, v


# ---------------------------------------------------------------------------
# level statistics
# ---------------------------------------------------------------------------


def collapse_degeneracies(energies: np.ndarray, tol: float = DEGENERACY_TOL) -> np.ndarray:
    """Sorted levels with near-coincident values merged.

    The spectrum is first mapped to unit bandwidth; levels closer than ``tol``
    to their predecessor are dropped. Returned levels are on that unit scale.
    """
    e = np.sort(np.asarray(energies, dtype=float))
    if e.size < 2:
        return e
    width = e[-1] - e[0]
    if width <= 0:
        return e[:1] * 0
    x = (e - e[0]) / width
    keep = np.concatenate([[True], np.diff(x) >= tol])
    return x[keep]


def central_window(levels: np.ndarray, fraction: float) -> np.ndarray:
    """Middle ``fraction`` of the sorted levels."""
    if not 0 < fraction <= 1:
        raise ValueError("window fraction must lie in (0, 1]")
    n = levels.size
    cut = int(round(n * (1 - fraction) / 2))
    return levels[cut:n - cut]


def _windowed(energies, window_fraction):
    levels = central_window(collapse_degeneracies(energies), window_fraction)
    if levels.size < MIN_LEVELS:
        raise TooFewLevels(f"{levels.size} levels after windowing (need {MIN_LEVELS})")
    return levels


def r_values(energies, window_fraction: float = 0.8) -> np.ndarray:
    s = np.diff(_windowed(energies, window_fraction))
    return np.minimum(s[:-1], s[1:]) / np.maximum(s[:-1], s[1:])


def r_statistic(energies, window_fraction: float = 0.8) -> float:
    """Mean consecutive-spacing ratio over the central window."""
    return float(np.mean(r_values(energies, window_fraction)))


def goe_surmise(s):
    s = np.asarray(s, dtype=float)
    return 0.5 * math.pi * s * np.exp(-0.25 * math.pi * s**2)


def goe_cdf(s):
    s = np.asarray(s, dtype=float)
    return 1.0 - np.exp(-0.25 * math.pi * s**2)


def unfold(levels: np.ndarray, degree: int = 7) -> tuple:
    """Map sorted levels through a polynomial fit of the cumulative staircase.

    The degree is lowered until the fit is well conditioned and monotone on the
    data. Returns ``(unfolded levels, degree used)``.
    """
    x = np.sort(np.asarray(levels, dtype=float))
    staircase = np.arange(1, x.size + 1, dtype=float)
    for deg in range(degree, 0, -1):
        with warnings.catch_warnings():
            warnings.simplefilter("error", RankWarning)
            try:
                poly = np.polynomial.Polynomial.fit(x, staircase, deg)
            except (RankWarning, np.linalg.LinAlgError):
                continue
        u = poly(x)
        if np.all(np.diff(u) > 0):
            return u, deg
    raise ArithmeticError("staircase fit failed at every degree")


def unfolded_spacings(energies, degree: int = 7, window_fraction: float = 0.8) -> tuple:
    """Nearest-neighbour spacings of the unfolded central window, rescaled to unit mean."""
    levels = collapse_degeneracies(energies)
    u, deg = unfold(levels, degree)
    u = central_window(u, window_fraction)
    if u.size < MIN_LEVELS:
        raise TooFewLevels(f"{u.size} levels after windowing (need {MIN_LEVELS})")
    s = np.diff(u)
    return s / s.mean(), deg


@dataclass
class SpacingHistogram:
    edges: np.ndarray
    densities: np.ndarray
    goe_reference: np.ndarray
    spacings: np.ndarray
    degree: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def integral(self) -> float:
        return float(np.sum(self.densities * np.diff(self.edges)))


def spacing_histogram(energies, unfolding_degree: int = 7, bins: int = 40,
                      window_fraction: float = 0.8, s_max: Optional[float] = None) -> SpacingHistogram:
    """Normalized histogram of unfolded spacings with the GOE surmise on bin centers."""
    s, deg = unfolded_spacings(energies, unfolding_degree, window_fraction)
    top = max(float(s.max()), 4.0) if s_max is None else s_max
    dens, edges = np.histogram(s, bins=bins, range=(0.0, top), density=True)
    centers = 0.5 * (edges[1:] + edges[:-1])
    return SpacingHistogram(edges, dens, goe_surmise(centers), s, deg)


def ks_distance_goe(spacings) -> float:
    """Kolmogorov-Smirnov distance between the empirical spacing CDF and the GOE surmise CDF."""
    return float(stats.kstest(np.asarray(spacings), goe_cdf).statistic)


@dataclass
class SpectralReport:
    energies: np.ndarray
    r_mean: float
    n_levels: int
    window: float
    histogram: Optional[SpacingHistogram] = None
    ks_distance: Optional[float] = None
    unfolding: dict = field(default_factory=dict)


def spectral_report(energies, window_fraction: float = 0.8, unfolding_degree: int = 7,
                    bins: int = 40) -> SpectralReport:
    e = np.sort(np.asarray(energies, dtype=float))
    r = r_values(e, window_fraction)
    hist = spacing_histogram(e, unfolding_degree, bins, window_fraction)
    return SpectralReport(
        energies=e, r_mean=float(r.mean()), n_levels=int(r.size + 2), window=window_fraction,
        histogram=hist, ks_distance=ks_distance_goe(hist.spacings),
        unfolding={"method": "polynomial staircase fit", "degree": hist.degree},
    )


# ---------------------------------------------------------------------------
# scar identification
# ---------------------------------------------------------------------------


def energy_clusters(energies: np.ndarray, tol: float = CLUSTER_TOL) -> list:
    """Index ranges ``(start, stop)`` of runs of sorted energies closer than ``tol``."""
    e = np.asarray(energies)
    if e.size == 0:
        return []
    breaks = np.nonzero(np.diff(e) > tol)[0] + 1
    starts = np.concatenate([[0], breaks])
    stops = np.concatenate([breaks, [e.size]])
    return list(zip(starts.tolist(), stops.tolist()))


@dataclass
class ScarOverlap:
    overlaps: np.ndarray
    flags: np.ndarray
    vectors: np.ndarray  # eigenvectors after rotation inside degenerate clusters


def scar_overlap(energies: np.ndarray, eigenvectors: np.ndarray, tower_matrix: np.ndarray,
                 threshold: float = SCAR_FLAG, cluster_tol: float = CLUSTER_TOL) -> ScarOverlap:
    """Weight of every eigenstate inside the span of the scar states.

    ``tower_matrix`` holds the scar states (restricted to the same basis) as
    columns. Inside a degenerate cluster the eigenvectors are rotated onto the
    principal vectors of the pair (cluster span, scar span), so that scar
    content is concentrated in as few members as possible; the reported
    overlaps are the squared cosines of the principal angles.
    """
    if eigenvectors.shape[0] != tower_matrix.shape[0]:
        raise ValueError("eigenvectors and scar states live in different bases")
    V = np.array(eigenvectors, dtype=complex if np.iscomplexobj(tower_matrix) else eigenvectors.dtype)
    if tower_matrix.shape[1] == 0:
        z = np.zeros(V.shape[1])
        return ScarOverlap(z, z > 1, V)
    # orthonormal basis of the scar span; restricted towers are rank deficient
    Q, sv, _ = np.linalg.svd(tower_matrix, full_matrices=False)
    Q = Q[:, sv > 1e-10 * max(1.0, float(sv[0]))]
    overlaps = np.empty(V.shape[1])
    for a, b in energy_clusters(energies, cluster_tol):
        M = Q.conj().T @ V[:, a:b]
        if b - a == 1:
            overlaps[a] = float(np.vdot(M[:, 0], M[:, 0]).real)
            continue
        _, sv, wh = np.linalg.svd(M)
        V[:, a:b] = V[:, a:b] @ wh.conj().T
        ov = np.zeros(b - a)
        ov[:sv.size] = sv**2
        overlaps[a:b] = ov
    overlaps = np.clip(overlaps, 0.0, 1.0)
    return ScarOverlap(overlaps, overlaps > threshold, V)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


@dataclass
class EigenstateRecord:
    energy: float
    sz: float
    entropy: float
    scar_overlap: float
    scar_flag: bool
    sector: str = ""


def annotate_sectors(H: ManyBodyOperator, sectors: Sequence, local_dim: int, L: int,
                     tower_matrix: Optional[np.ndarray] = None, sz_diagonal: Optional[np.ndarray] = None,
                     L_A: Optional[int] = None, threshold: float = SCAR_FLAG) -> tuple:
    """Diagonalize each sector and build one :class:`EigenstateRecord` per eigenstate.

    ``sectors`` are objects with ``indices`` and ``name`` (see the
    fragmentation module). Returns ``(records, spectra)`` where ``spectra``
    maps sector names to ascending energies.
    """
    cut = L // 2 if L_A is None else L_A
    records, spectra = [], {}
    for sec in sectors:
        idx = np.asarray(sec.indices, dtype=np.int64)
        w, v = eigensolve_sector(H, idx)
        spectra[sec.name] = w
        if tower_matrix is not None:
            ov = scar_overlap(w, v, tower_matrix[idx], threshold)
            overlaps, flags, v = ov.overlaps, ov.flags, ov.vectors
        else:
            overlaps, flags = np.zeros(w.size), np.zeros(w.size, dtype=bool)
        full = np.zeros((local_dim**L, w.size), dtype=v.dtype)
        full[idx] = v
        ent = batch_entropies(full, cut, local_dim)
        prob = np.abs(v) ** 2
        sz = prob.T @ sz_diagonal[idx] if sz_diagonal is not None else np.zeros(w.size)
        for k in range(w.size):
            records.append(EigenstateRecord(float(w[k]), float(sz[k]), float(ent[k]),
                                            float(overlaps[k]), bool(flags[k]), sec.name))
    records.sort(key=lambda r: r.energy)
    return records, spectra


def decile_atypicality(records: Sequence[EigenstateRecord], reference_sector: str) -> list:
    """Compare every flagged scar with thermal states of similar energy.

    Deciles are taken over the energies of ``reference_sector``; the thermal
    reference of a decile is the median entropy of its non-flagged states.
    Scars outside the reference range fall into the nearest edge decile.
    Returns ``(energy, entropy, decile, median)`` per flagged record.
    """
    ref = [r for r in records if r.sector == reference_sector]
    e = np.array([r.energy for r in ref])
    edges = np.quantile(e, np.linspace(0, 1, 11))
    which = np.clip(np.searchsorted(edges, e, side="right") - 1, 0, 9)
    medians = []
    for k in range(10):
        ent = [r.entropy for r, d in zip(ref, which) if d == k and not r.scar_flag]
        medians.append(float(np.median(ent)) if ent else float("nan"))
    out = []
    for r in records:
        if r.scar_flag:
            k = int(np.clip(np.searchsorted(edges, r.energy, side="right") - 1, 0, 9))
            out.append((r.energy, r.entropy, k, medians[k]))
    return out


def write_spectrum_csv(energies, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "energy"])
        for i, e in enumerate(energies):
            w.writerow([i, repr(float(e))])


def write_rstat_json(report: SpectralReport, path, extra: Optional[dict] = None) -> None:
    payload = {"r_mean": report.r_mean, "window": report.window, "n_levels": report.n_levels,
               "ks_distance": report.ks_distance, "unfolding": report.unfolding}
    payload.update(extra or {})
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)


def write_pofs_csv(hist: SpacingHistogram, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "density", "goe_reference"])
        for s, d, g in zip(hist.centers, hist.densities, hist.goe_reference):
            w.writerow([repr(float(s)), repr(float(d)), repr(float(g))])


def write_eigenstates_csv(records: Sequence[EigenstateRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["energy", "sz", "entropy", "scar_overlap", "scar_flag"])
        for r in records:
            w.writerow([f"{r.energy:.12g}", f"{r.sz:.12g}", f"{r.entropy:.12g}",
                        f"{r.scar_overlap:.12g}", int(r.scar_flag)])
