"""Parameter-plane maps of the signal two-photon amplitude.

The destructive interference that empties the two-photon component of
the signal site happens at isolated points of the (onsite energy, loss)
plane, and each zero carries quantized phase winding.  On a sampled grid
the robust detector is therefore a plaquette-by-plaquette winding count
of the amplitude phase; a winding cell is then halved once to sharpen
the position estimate to a quarter cell.  Map points are independent of
each other, and a point that lands on a resolvent pole is recorded as a
gap rather than aborting the sweep.

A second scan cross-checks the closed-form optimal kerr strength: with
the detuning pinned to the analytic optimum, the exact (all orders in
kerr) amplitude magnitude is minimized over the kerr strength by
golden-section search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .analytics import optimal_point
from .lattice import LatticeSpec, PoleError, eigendecompose, signal_site
from .weakdrive import (
    UndefinedCorrelationError,
    _perturbative_parts,
    g2_zero_delay,
    signal_amplitude,
    solve_weak_drive,
)

TWO_PI = 2.0 * math.pi

# relative tolerance of the golden-section kerr scan
ALPHA_SCAN_RTOL = 1e-4

_METHODS = ("perturbative", "exact")


class GridTooCoarseError(ValueError):
    """A plaquette wound more than once; the grid cannot separate zeros."""


@dataclass(frozen=True)
class GridSpec:
    """Rectangular (onsite energy) x (loss) sampling grid.

    ``fixed`` supplies everything about the chain except the onsite
    energy and loss, which are swept; its own values of those two fields
    are ignored.  It must carry a nonzero drive.
    """

    fixed: LatticeSpec
    onsite_min: float = -0.5
    onsite_max: float = 0.5
    n_onsite: int = 201
    loss_min: float = 0.005
    loss_max: float = 1.0
    n_loss: int = 201

    def __post_init__(self):
        if not self.onsite_min < self.onsite_max:
            raise ValueError("need onsite_min < onsite_max")
        if not 0 < self.loss_min < self.loss_max:
            raise ValueError("need 0 < loss_min < loss_max")
        if self.n_onsite < 2 or self.n_loss < 2:
            raise ValueError("need at least 2 points per axis")

    @property
    def onsite_values(self) -> np.ndarray:
        return np.linspace(self.onsite_min, self.onsite_max, self.n_onsite)

    @property
    def loss_values(self) -> np.ndarray:
        return np.linspace(self.loss_min, self.loss_max, self.n_loss)


@dataclass(frozen=True)
class PhaseSingularity:
    onsite_energy: float
    loss: float
    winding: int

    @property
    def z(self) -> complex:
        return self.onsite_energy - 0.5j * self.loss


@dataclass
class ZMap:
    """Signal amplitude and g2 sampled on a GridSpec.

    Arrays are indexed [onsite index, loss index].  Failed points (pole
    hits) hold NaN.  ``singularities`` is filled in by
    find_phase_singularities.
    """

    grid: GridSpec
    method: str
    amplitudes: np.ndarray
    g2: np.ndarray
    singularities: list | None = None

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.amplitudes)

    def to_csv(self, path_or_file, header_lines=()) -> None:
        if hasattr(path_or_file, "write"):
            self._write_csv(path_or_file, header_lines)
        else:
            with open(path_or_file, "w", encoding="utf-8") as fh:
                self._write_csv(fh, header_lines)

    def _write_csv(self, fh, header_lines) -> None:
        es = self.grid.onsite_values
        gs = self.grid.loss_values
        for line in header_lines:
            fh.write(line.rstrip("\n") + "\n")
        fh.write("E,gamma,re_amp,im_amp,g2\n")
        for i, e in enumerate(es):
            for j, g in enumerate(gs):
                a = self.amplitudes[i, j]
                fh.write(
                    f"{e:.17g},{g:.17g},{a.real:.17g},{a.imag:.17g},"
                    f"{self.g2[i, j]:.17g}\n"
                )


def _signal_first_order(spectrum, z: complex, f: np.ndarray, kerr: float, site: int):
    """(two-photon amplitude, g2) of ``site`` at first order in the kerr strength."""
    psi1, c0, c1 = _perturbative_parts(spectrum, z, f)
    amp = complex(c0[site, site] + kerr * c1[site, site])
    denom = abs(psi1[site]) ** 4
    g2 = math.nan if denom == 0.0 else 2.0 * abs(amp) ** 2 / denom
    return amp, g2


def _signal_exact(spec: LatticeSpec):
    solution = solve_weak_drive(spec, method="exact")
    amp = complex(signal_amplitude(solution))
    try:
        g2 = g2_zero_delay(solution)
    except UndefinedCorrelationError:
        g2 = math.nan
    return amp, g2


_GAP = (complex(math.nan, math.nan), math.nan)


def _point_evaluator(grid: GridSpec, method: str):
    """(onsite, loss) -> (amplitude, g2); pole hits come back as NaN gaps."""
    if method not in _METHODS:
        raise ValueError(f"method must be one of {_METHODS}, got {method!r}")
    fixed = grid.fixed
    if not np.any(fixed.drive_vector):
        raise ValueError("grid.fixed must carry a nonzero drive")
    if method == "exact":

        def evaluate(e: float, g: float):
            try:
                return _signal_exact(replace(fixed, onsite_energy=float(e), loss=float(g)))
            except PoleError:
                return _GAP

        return evaluate

    spectrum = eigendecompose(LatticeSpec(n_sites=fixed.n_sites, intercell=fixed.intercell))
    f = fixed.drive_vector
    s = signal_site(fixed.n_sites)

    def evaluate(e: float, g: float):
        try:
            return _signal_first_order(spectrum, e - 0.5j * g, f, fixed.kerr, s)
        except PoleError:
            return _GAP

    return evaluate


def z_grid_map(grid: GridSpec, method: str = "perturbative") -> ZMap:
    """Signal amplitude and g2 over the (onsite energy, loss) plane.

    ``method`` picks the weak-drive solver: "perturbative" keeps the
    first order in the kerr strength (one eigendecomposition for the
    whole map), "exact" does a full two-photon solve per point.
    """
    evaluate = _point_evaluator(grid, method)
    es = grid.onsite_values
    gs = grid.loss_values
    amplitudes = np.empty((es.size, gs.size), dtype=complex)
    g2 = np.empty((es.size, gs.size))
    for i, e in enumerate(es):
        for j, g in enumerate(gs):
            amplitudes[i, j], g2[i, j] = evaluate(e, g)
    return ZMap(grid=grid, method=method, amplitudes=amplitudes, g2=g2)


def _wrap(delta: np.ndarray) -> np.ndarray:
    return (delta + math.pi) % TWO_PI - math.pi


def _plaquette_windings(phases: np.ndarray) -> np.ndarray:
    # wrap each oriented leg, return legs included: negating a wrapped
    # forward diff differs from wrapping the reversed diff exactly at the
    # pi boundary, and that boundary is what a cell-centered double zero
    # produces (corner phases alternating by pi)
    d_e = np.diff(phases, axis=0)
    d_g = np.diff(phases, axis=1)
    circulation = (
        _wrap(d_e[:, :-1]) + _wrap(d_g[1:, :]) + _wrap(-d_e[:, 1:]) + _wrap(-d_g[:-1, :])
    )
    # plaquettes touching a gap point cannot be assessed; count them as 0
    return np.nan_to_num(np.rint(circulation / TWO_PI), nan=0.0).astype(int)


def _cell_winding(corner_phases) -> int:
    # corner order: (e0,g0), (e1,g0), (e1,g1), (e0,g1)
    p = np.asarray(corner_phases)
    walk = _wrap(np.diff(np.append(p, p[0])))
    return int(round(float(walk.sum()) / TWO_PI))


def find_phase_singularities(zmap: ZMap) -> list:
    """Locate amplitude zeros by plaquette phase winding.

    Every plaquette whose wrapped phase circulation is +-2*pi holds one
    zero.  The plaquette is halved once (five fresh amplitude samples)
    and the zero reported at the center of the winding subcell, so the
    position is good to a quarter of the original cell.  Deeper
    subdivision is deliberately not attempted.

    The result is stored on ``zmap.singularities`` and returned.  Raises
    GridTooCoarseError when any plaquette winds more than once, which
    means distinct zeros share a cell and the winding count per cell is
    no longer trustworthy.
    """
    windings = _plaquette_windings(zmap.phases)
    if np.any(np.abs(windings) > 1):
        raise GridTooCoarseError(
            "a plaquette carries winding beyond +-1; refine the grid to separate the zeros"
        )
    evaluate = _point_evaluator(zmap.grid, zmap.method)

    def phase(e: float, g: float) -> float:
        return float(np.angle(evaluate(e, g)[0]))

    stored = zmap.phases
    es = zmap.grid.onsite_values
    gs = zmap.grid.loss_values
    found = []
    for i, j in zip(*np.nonzero(windings)):
        target = int(windings[i, j])
        exs = (es[i], 0.5 * (es[i] + es[i + 1]), es[i + 1])
        gxs = (gs[j], 0.5 * (gs[j] + gs[j + 1]), gs[j + 1])
        ph = np.empty((3, 3))
        ph[0, 0] = stored[i, j]
        ph[2, 0] = stored[i + 1, j]
        ph[0, 2] = stored[i, j + 1]
        ph[2, 2] = stored[i + 1, j + 1]
        ph[1, 0] = phase(exs[1], gxs[0])
        ph[0, 1] = phase(exs[0], gxs[1])
        ph[1, 1] = phase(exs[1], gxs[1])
        ph[2, 1] = phase(exs[2], gxs[1])
        ph[1, 2] = phase(exs[1], gxs[2])
        pick = None
        for a in range(2):
            for b in range(2):
                w = _cell_winding((ph[a, b], ph[a + 1, b], ph[a + 1, b + 1], ph[a, b + 1]))
                if w == target:
                    pick = (a, b)
                    break
            if pick is not None:
                break
        if pick is None:
            # zero sits on a subcell edge; report the parent center
            center_e = exs[1]
            center_g = gxs[1]
        else:
            a, b = pick
            center_e = 0.5 * (exs[a] + exs[a + 1])
            center_g = 0.5 * (gxs[b] + gxs[b + 1])
        found.append(
            PhaseSingularity(onsite_energy=center_e, loss=center_g, winding=target)
        )
    zmap.singularities = found
    return found


def optimal_alpha_scan(
    n_sites: int,
    intercell: float,
    loss: float,
    alpha_bracket=None,
    drive_amplitude: float = 1e-3,
) -> float:
    """Kerr strength minimizing the exact signal amplitude at the analytic detuning.

    The onsite energy is pinned to the closed-form optimum for the given
    loss; |two-photon signal amplitude| is then minimized over the kerr
    strength by golden-section search to ALPHA_SCAN_RTOL relative.  The
    minimizer does not depend on the drive amplitude (the whole
    amplitude scales as its square).

    ``alpha_bracket`` is an optional (low, high) interval that must
    contain the minimum; by default a bracket around the closed-form
    kerr strength is grown until it does.
    """
    point = optimal_point(n_sites, loss)
    base = LatticeSpec(
        n_sites=n_sites,
        intercell=intercell,
        onsite_energy=point.onsite_energy,
        loss=loss,
        drive=drive_amplitude,
    )

    def magnitude(alpha: float) -> float:
        solution = solve_weak_drive(replace(base, kerr=float(alpha)), method="exact")
        return abs(signal_amplitude(solution))

    if alpha_bracket is None:
        lo, hi = point.kerr / 4.0, point.kerr * 4.0
        attempts = 4
    else:
        lo, hi = (float(a) for a in alpha_bracket)
        if not lo < hi:
            raise ValueError(f"alpha_bracket must satisfy low < high, got {(lo, hi)}")
        attempts = 1
    probe_points = 33
    for _ in range(attempts):
        grid = np.linspace(lo, hi, probe_points)
        values = [magnitude(a) for a in grid]
        k = int(np.argmin(values))
        if 0 < k < grid.size - 1:
            break
        lo, hi = lo / 4.0, hi * 4.0
    else:
        raise ValueError(
            f"no interior amplitude minimum bracketed for n_sites={n_sites}, loss={loss}"
        )
    result = minimize_scalar(
        magnitude,
        bracket=(grid[k - 1], grid[k], grid[k + 1]),
        method="golden",
        options={"xtol": ALPHA_SCAN_RTOL},
    )
    return float(result.x)


@dataclass(frozen=True)
class AlphaScanRecord:
    n_sites: int
    loss: float
    analytic_kerr: float
    numeric_kerr: float
    relative_gap: float


def alpha_scan_records(
    n_sites_list,
    loss: float,
    intercell: float = 0.1,
    drive_amplitude: float = 1e-3,
) -> list:
    """Run optimal_alpha_scan over several chain lengths at one loss rate."""
    records = []
    for n in n_sites_list:
        point = optimal_point(int(n), loss)
        numeric = optimal_alpha_scan(
            int(n), intercell, loss, drive_amplitude=drive_amplitude
        )
        records.append(
            AlphaScanRecord(
                n_sites=int(n),
                loss=loss,
                analytic_kerr=point.kerr,
                numeric_kerr=numeric,
                relative_gap=abs(numeric - point.kerr) / abs(point.kerr),
            )
        )
    return records
