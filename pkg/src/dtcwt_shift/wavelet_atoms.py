"""Modulated wavelets, their Hilbert partners and the complex wavelet.

A modulated wavelet is ``psi(y) = w(y) cos(omega0 y + xi0)``.  Its Hilbert
partner ``psi'`` and the complex wavelet ``Psi = (psi + i psi')/2`` are
produced here, together with the dilated/translated atoms used by the
transform.

On periodic grids atoms are evaluated from the closed-form Fourier transform
of the window (Poisson summation), so they are the exact periodizations of
the real-line atoms up to the grid's band limit.  ``psi'`` is obtained by
applying ``-i sign(xi)`` to those spectra, which is exactly what
:func:`~dtcwt_shift.signal_core.hilbert_transform` does to the sampled atom.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence
import math

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import erfcinv, erfc

from .signal_core import (
    GridSpec,
    SampledSignal,
    dilate_translate,
    hilbert_transform,
    norm,
)

__all__ = [
    "PairConstructionError",
    "Window",
    "ShannonWindow",
    "GaussianWindow",
    "RaisedCosineWindow",
    "TabulatedWindow",
    "ModulatedWavelet",
    "WaveletPair",
    "make_shannon_pair",
    "make_gabor_pair",
    "make_raised_cosine_pair",
    "gabor_sigma_for_bandwidth",
    "complex_wavelet",
    "extract_modulation",
    "ModulationEstimate",
]

# fraction of window energy that defines the band limit Omega
BAND_ENERGY = 0.9999
# Gabor pairs are rejected when the Bedrosian defect exceeds this
LEAKAGE_TOL = 1e-6


class PairConstructionError(ValueError):
    """A wavelet pair could not be built from the requested parameters."""


class Window:
    """Localization window ``w`` of a modulated wavelet."""

    kind = "abstract"
    derivative_available = True

    def value(self, y):
        raise NotImplementedError

    def derivative(self, y):
        raise NotImplementedError

    def ft(self, eta):
        """Fourier transform ``w_hat(eta) = int w(y) exp(-i eta y) dy``."""
        raise NotImplementedError

    @property
    def support(self) -> Optional[tuple]:
        """Compact support ``(p, q)`` or None."""
        return None

    @property
    def lipschitz(self) -> Optional[float]:
        return None

    @property
    def extent(self) -> tuple:
        """Interval outside which the window is negligible (< 1e-16 relative)."""
        raise NotImplementedError

    def band_limit(self) -> float:
        """Half-width of the band holding ``BAND_ENERGY`` of the window energy."""
        lo, hi = self.extent
        width = hi - lo
        eta_max = 4000.0 / width
        eta = np.linspace(0.0, eta_max, 400001)
        dens = np.abs(self.ft(eta)) ** 2 + np.abs(self.ft(-eta)) ** 2
        cum = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2 * np.diff(eta))])
        total = 2 * np.pi * self.l2_norm() ** 2
        idx = np.searchsorted(cum, BAND_ENERGY * total)
        return float(eta[min(idx, len(eta) - 1)])

    def l2_norm(self) -> float:
        lo, hi = self.extent
        y = np.linspace(lo, hi, 200001)
        return float(np.sqrt(np.trapezoid(np.abs(self.value(y)) ** 2, y)))

    def derivative_l2_norm(self) -> float:
        lo, hi = self.extent
        y = np.linspace(lo, hi, 200001)
        return float(np.sqrt(np.trapezoid(np.abs(self.derivative(y)) ** 2, y)))

    def params(self) -> dict:
        return {}


class ShannonWindow(Window):
    """``w(y) = sinc(y/2)``, band-limited to ``[-pi/2, pi/2]``.

    The spectrum's two edge frequencies carry weight ``1/sqrt(2)`` with
    phases 1 (at ``-pi/2``) and ``-i`` (at ``+pi/2``).  On the real line this
    is immaterial (a null set); on a periodic grid it splits each shared
    band-edge frequency between neighbouring scales, which makes the
    periodized Shannon system exactly orthonormal.
    """

    kind = "shannon_sinc"

    def value(self, y):
        return np.sinc(np.asarray(y, dtype=float) / 2)

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        u = np.pi * y / 2
        with np.errstate(divide="ignore", invalid="ignore"):
            d = (u * np.cos(u) - np.sin(u)) / (u**2) * (np.pi / 2)
        return np.where(np.abs(u) < 1e-6, -u * np.pi / 6, d)

    def ft(self, eta):
        eta = np.asarray(eta, dtype=float)
        half = np.pi / 2
        out = np.where(np.abs(eta) < half, 2.0, 0.0).astype(complex)
        out = np.where(np.isclose(eta, -half, rtol=1e-9, atol=0), math.sqrt(2), out)
        out = np.where(np.isclose(eta, half, rtol=1e-9, atol=0), -1j * math.sqrt(2), out)
        return out

    @property
    def extent(self):
        return (-math.inf, math.inf)

    def band_limit(self) -> float:
        return math.pi / 2

    def l2_norm(self) -> float:
        return math.sqrt(2.0)

    def derivative_l2_norm(self) -> float:
        # Parseval: (1/2pi) int_{|eta|<pi/2} eta^2 * 4 d eta
        return math.sqrt(4 * 2 * (math.pi / 2) ** 3 / 3 / (2 * math.pi))

    @property
    def lipschitz(self):
        y = np.linspace(0, 6, 60001)
        return float(np.max(np.abs(self.derivative(y))))


class GaussianWindow(Window):
    kind = "gaussian"

    def __init__(self, sigma: float, center: float = 0.0):
        if not sigma > 0:
            raise PairConstructionError(f"sigma must be > 0, got {sigma}")
        self.sigma = float(sigma)
        self.center = float(center)

    def value(self, y):
        u = (np.asarray(y, dtype=float) - self.center) / self.sigma
        return np.exp(-0.5 * u * u)

    def derivative(self, y):
        u = (np.asarray(y, dtype=float) - self.center) / self.sigma
        return -u / self.sigma * np.exp(-0.5 * u * u)

    def ft(self, eta):
        eta = np.asarray(eta, dtype=float)
        s = self.sigma
        return s * math.sqrt(2 * math.pi) * np.exp(-0.5 * (s * eta) ** 2 - 1j * eta * self.center)

    @property
    def extent(self):
        return (self.center - 9 * self.sigma, self.center + 9 * self.sigma)

    def band_limit(self) -> float:
        # |w_hat|^2 is a Gaussian of standard deviation 1/(sigma sqrt 2)
        z = math.sqrt(2) * float(erfcinv(1 - BAND_ENERGY))
        return z / (self.sigma * math.sqrt(2))

    def l2_norm(self) -> float:
        return math.sqrt(self.sigma * math.sqrt(math.pi))

    def derivative_l2_norm(self) -> float:
        # int (y/s^2)^2 exp(-y^2/s^2) dy = sqrt(pi) / (2 s)
        return math.sqrt(math.sqrt(math.pi) / (2 * self.sigma))

    @property
    def lipschitz(self):
        return math.exp(-0.5) / self.sigma

    def params(self):
        return {"sigma": self.sigma, "center": self.center}


class RaisedCosineWindow(Window):
    """``w(y) = (1 + cos(2 pi (y - m)/(q - p)))/2`` on ``[p, q]``, zero elsewhere."""

    kind = "raised_cosine"

    def __init__(self, p: float, q: float):
        if not p < q:
            raise PairConstructionError(f"raised cosine needs p < q, got p={p}, q={q}")
        self.p, self.q = float(p), float(q)

    @property
    def _mid(self):
        return 0.5 * (self.p + self.q)

    @property
    def _width(self):
        return self.q - self.p

    def value(self, y):
        y = np.asarray(y, dtype=float)
        inside = (y >= self.p) & (y <= self.q)
        return np.where(inside, 0.5 * (1 + np.cos(2 * np.pi * (y - self._mid) / self._width)), 0.0)

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        inside = (y >= self.p) & (y <= self.q)
        a = 2 * np.pi / self._width
        return np.where(inside, -0.5 * a * np.sin(a * (y - self._mid)), 0.0)

    def ft(self, eta):
        eta = np.asarray(eta, dtype=float)
        width = self._width
        a = 2 * np.pi / width

        def box(nu):
            # int_{-W/2}^{W/2} exp(-i nu u) du
            return width * np.sinc(nu * width / (2 * np.pi))

        core = 0.5 * box(eta) + 0.25 * (box(eta - a) + box(eta + a))
        return core * np.exp(-1j * eta * self._mid)

    @property
    def support(self):
        return (self.p, self.q)

    @property
    def extent(self):
        return (self.p, self.q)

    @property
    def lipschitz(self):
        return math.pi / self._width

    def l2_norm(self) -> float:
        return math.sqrt(3 * self._width / 8)

    def derivative_l2_norm(self) -> float:
        return math.sqrt(np.pi**2 / (2 * self._width))

    def params(self):
        return {"p": self.p, "q": self.q}


class TabulatedWindow(Window):
    """Window given by samples; derivative by cubic-spline differentiation."""

    kind = "tabulated"

    def __init__(self, window: SampledSignal):
        if not window.is_real:
            raise PairConstructionError("tabulated window must be real")
        self.table = window
        self._spline = CubicSpline(window.x, window.samples, extrapolate=False)
        self._dspline = self._spline.derivative()

    def value(self, y):
        return np.nan_to_num(self._spline(np.asarray(y, dtype=float)), nan=0.0)

    def derivative(self, y):
        return np.nan_to_num(self._dspline(np.asarray(y, dtype=float)), nan=0.0)

    def ft(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        x = self.table.x
        out = np.empty(eta.shape, dtype=complex)
        step = max(1, 2**22 // len(x))
        flat = eta.ravel()
        res = out.ravel()
        for i in range(0, len(flat), step):
            res[i : i + step] = np.exp(-1j * np.outer(flat[i : i + step], x)) @ self.table.samples
        return res.reshape(eta.shape) * self.table.grid.dx

    @property
    def extent(self):
        g = self.table.grid
        return (g.x0, g.x0 + (g.n_samples - 1) * g.dx)

    @property
    def lipschitz(self):
        lo, hi = self.extent
        return float(np.max(np.abs(self.derivative(np.linspace(lo, hi, 100001)))))

    def params(self):
        g = self.table.grid
        return {"n_samples": g.n_samples, "x0": g.x0, "dx": g.dx}


@dataclass(frozen=True, eq=False)
class ModulatedWavelet:
    """``psi(y) = w(y) cos(omega0 y + xi0)``."""

    window: Window
    omega0: float
    xi0: float = 0.0
    band_limit: float = 0.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise PairConstructionError(f"omega0 must be > 0, got {self.omega0}")
        if self.band_limit > 0 and not self.band_limit < self.omega0:
            raise PairConstructionError(
                f"window band limit {self.band_limit:.4g} is not below omega0={self.omega0:.4g}"
            )

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.real(self.window.value(y)) * np.cos(self.omega0 * y + self.xi0)

    def quadrature(self, y):
        """Bedrosian form ``w(y) sin(omega0 y + xi0)``."""
        y = np.asarray(y, dtype=float)
        return np.real(self.window.value(y)) * np.sin(self.omega0 * y + self.xi0)

    def analytic(self, y):
        """``exp(i xi0)/2 * w(y) exp(i omega0 y)``."""
        y = np.asarray(y, dtype=float)
        return 0.5 * np.exp(1j * self.xi0) * self.window.value(y) * np.exp(1j * self.omega0 * y)

    def carrier_ft(self, eta, window_shift: float = 0.0, derivative: bool = False):
        """Fourier transform of ``w(y - t) exp(i omega0 y)`` (or of ``w'(y) exp(i omega0 y)``)."""
        nu = np.asarray(eta, dtype=float) - self.omega0
        out = self.window.ft(nu)
        if window_shift:
            out = out * np.exp(-1j * nu * window_shift)
        if derivative:
            out = out * (1j * nu)
        return out

    def ft(self, eta):
        eta = np.asarray(eta, dtype=float)
        pos = self.window.ft(eta - self.omega0)
        neg = np.conj(self.window.ft(-eta - self.omega0))
        return 0.5 * (np.exp(1j * self.xi0) * pos + np.exp(-1j * self.xi0) * neg)


def _atom_spectra(grid: GridSpec, j: int, ks: Sequence[float], shift: float, mother_ft) -> np.ndarray:
    """Samples of periodized ``Xi_{j,k}[g](x - shift)`` for each k, from ``g_hat``."""
    if not grid.periodic:
        raise ValueError("spectral atoms need a periodic grid")
    xi = grid.angular_frequencies
    scale = 2.0**j
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    base = scale**-0.5 * mother_ft(xi / scale)
    n = grid.n_samples
    if n % 2 == 0:
        base = base.copy()
        base[n // 2] = 0.0
    phase = np.exp(-1j * np.outer(ks / scale + shift, xi) + 1j * xi * grid.x0)
    return np.fft.ifft(base * phase, axis=-1) / grid.dx


@dataclass(frozen=True, eq=False)
class WaveletPair:
    """A modulated wavelet ``psi`` and its Hilbert partner ``psi'``.

    ``hilbert`` records how ``psi'`` is defined: ``"closed_form"`` when the
    Bedrosian form ``w sin(omega0 y + xi0)`` is exactly ``H psi`` (band-limited
    windows) and ``"numerical"`` when ``psi'`` is ``H psi`` computed by FFT.
    """

    psi: ModulatedWavelet
    orthonormal: bool
    label: str
    hilbert: str = "numerical"
    metadata: dict = field(default_factory=dict)

    @property
    def omega0(self) -> float:
        return self.psi.omega0

    @property
    def xi0(self) -> float:
        return self.psi.xi0

    @property
    def window(self) -> Window:
        return self.psi.window

    @property
    def exactly_modulated(self) -> bool:
        return bool(self.metadata.get("exactly_modulated", False))

    # -- atoms ---------------------------------------------------------
    def psi_ft(self, eta):
        return self.psi.ft(eta)

    def psi_prime_ft(self, eta):
        eta = np.asarray(eta, dtype=float)
        return -1j * np.sign(eta) * self.psi.ft(eta)

    def analytic_ft(self, eta):
        eta = np.asarray(eta, dtype=float)
        return 0.5 * (1 + np.sign(eta)) * self.psi.ft(eta)

    def atoms(self, grid: GridSpec, j: int, ks, shift: float = 0.0):
        """Rows ``psi_{j,k}(x - shift)`` and ``psi'_{j,k}(x - shift)`` for each k."""
        if grid.periodic:
            psi = _atom_spectra(grid, j, ks, shift, self.psi_ft).real
            psi_p = _atom_spectra(grid, j, ks, shift, self.psi_prime_ft).real
            return psi, psi_p
        rows, rows_p = [], []
        for k in np.atleast_1d(ks):
            target = GridSpec(grid.n_samples, grid.x0 - shift, grid.dx, periodic=False)
            sig = dilate_translate(self.psi, j, k, target)
            if self.hilbert == "closed_form":
                sig_p = dilate_translate(self.psi.quadrature, j, k, target)
            else:
                sig_p = hilbert_transform(sig)
            rows.append(sig.samples)
            rows_p.append(sig_p.samples)
        return np.array(rows), np.array(rows_p)

    def analytic_atoms(self, grid: GridSpec, j: int, ks, shift: float = 0.0) -> np.ndarray:
        """Rows ``Psi_{j,k}(x - shift)`` with ``Psi = (psi + i psi')/2``."""
        if grid.periodic:
            return _atom_spectra(grid, j, ks, shift, self.analytic_ft)
        psi, psi_p = self.atoms(grid, j, ks, shift)
        return 0.5 * (psi + 1j * psi_p)

    def carrier_atoms(
        self,
        grid: GridSpec,
        j: int,
        ks,
        shift: float = 0.0,
        window_shift: float = 0.0,
        derivative: bool = False,
    ) -> np.ndarray:
        """Rows of ``Xi_{j,k}[w(. - t) exp(i omega0 .)](x - shift)``.

        ``t`` is ``window_shift`` (in the wavelet's own variable).  With
        ``derivative=True`` the window is replaced by ``dw/dy``.  Built directly
        from the window, independently of ``psi'``.
        """
        if grid.periodic:
            return _atom_spectra(
                grid,
                j,
                ks,
                shift,
                lambda eta: self.psi.carrier_ft(eta, window_shift, derivative),
            )
        w = self.window
        win = w.derivative if derivative else w.value
        rows = []
        scale = 2.0**j
        for k in np.atleast_1d(ks):
            y = scale * (grid.x - shift) - k
            rows.append(np.sqrt(scale) * win(y - window_shift) * np.exp(1j * self.omega0 * y))
        return np.array(rows)

    def default_grid(self, n_samples: int = 8192) -> GridSpec:
        """Non-periodic grid wide enough for the mother wavelet."""
        lo, hi = self.window.extent
        if not math.isfinite(lo):
            lo, hi = -256.0, 256.0
        pad = 0.25 * (hi - lo)
        lo, hi = lo - pad, hi + pad
        return GridSpec(n_samples, lo, (hi - lo) / n_samples, periodic=False)

    def describe(self) -> dict:
        w = self.window
        d = {
            "label": self.label,
            "window": w.kind,
            "omega0": self.omega0,
            "xi0": self.xi0,
            "Omega": self.psi.band_limit,
            "orthonormal": self.orthonormal,
            "hilbert": self.hilbert,
        }
        d.update(w.params())
        lip = w.lipschitz
        if lip is not None:
            d["lipschitz"] = lip
        if w.support is not None:
            d["p"], d["q"] = w.support
        d.update({k: v for k, v in self.metadata.items() if k not in d})
        return d


def _tail_energy_shannon(grid: GridSpec) -> float:
    """Energy of the unit-norm Shannon wavelet outside the grid's interval."""
    lo, hi = grid.x0, grid.x0 + grid.length
    # psi = 2 sinc(2y) - sinc(y); integrate psi^2 over the interval on a fine grid
    y = np.linspace(lo, hi, max(200001, int(8 * (hi - lo)) + 1))
    psi = 2 * np.sinc(2 * y) - np.sinc(y)
    inside = np.trapezoid(psi**2, y)
    return max(0.0, 1.0 - float(inside))


def make_shannon_pair(grid: Optional[GridSpec] = None, tail_tol: float = 1e-6) -> WaveletPair:
    """Shannon pair ``psi = sinc(y/2) cos(3 pi y/2)``, ``psi' = sinc(y/2) sin(3 pi y/2)``.

    On periodic grids the system is evaluated exactly by Poisson summation.
    A non-periodic grid must hold all but ``tail_tol`` of the wavelet energy.
    """
    tail = 0.0
    if grid is not None and not grid.periodic:
        tail = _tail_energy_shannon(grid)
        if tail > tail_tol:
            raise PairConstructionError(
                f"grid {grid.describe()} leaves tail energy {tail:.3g} > {tail_tol:g}"
            )
    window = ShannonWindow()
    psi = ModulatedWavelet(window, 1.5 * math.pi, 0.0, band_limit=math.pi / 2)
    return WaveletPair(
        psi,
        orthonormal=True,
        label="shannon",
        hilbert="closed_form",
        metadata={"exactly_modulated": True, "tail_energy": tail, "bedrosian_defect": 0.0},
    )


def gabor_sigma_for_bandwidth(omega_band: float) -> float:
    """Gaussian width whose window band limit (99.99% energy) is ``omega_band``."""
    return GaussianWindow(1.0).band_limit() / omega_band


def _bedrosian_leakage(omega0: float, sigma: float) -> float:
    # relative L2 size of the part of w_hat(. - omega0) on the negative axis
    return math.sqrt(float(erfc(sigma * omega0)) / 2)


def _measure_bedrosian_defect(psi: ModulatedWavelet, grid: GridSpec) -> float:
    """``||H psi - w sin(omega0 y + xi0)|| / ||psi||`` measured on ``grid``."""
    if grid.periodic:
        sig = SampledSignal(_atom_spectra(grid, 0, [0.0], 0.0, psi.ft)[0].real, grid)
        hp = hilbert_transform(sig)
        ref = SampledSignal(
            _atom_spectra(
                grid,
                0,
                [0.0],
                0.0,
                lambda eta: (psi.window.ft(eta - psi.omega0) * np.exp(1j * psi.xi0)
                             - np.conj(psi.window.ft(-eta - psi.omega0)) * np.exp(-1j * psi.xi0)) / 2j,
            )[0].real,
            grid,
        )
    else:
        sig = SampledSignal(psi(grid.x), grid)
        hp = hilbert_transform(sig)
        ref = SampledSignal(psi.quadrature(grid.x), grid)
    return norm(hp - ref) / norm(sig)


def make_gabor_pair(
    omega0: float = 5.3,
    xi0: float = 5.2,
    sigma: Optional[float] = None,
    grid: Optional[GridSpec] = None,
) -> WaveletPair:
    """Gaussian-windowed pair ``g(y) cos(omega0 y + xi0)`` with ``psi' = H psi``.

    ``sigma`` defaults to the width giving a window band limit of 2.  Pairs
    whose spectral leakage across zero frequency exceeds ``LEAKAGE_TOL`` are
    rejected, since the Bedrosian form would then not hold.
    """
    if sigma is None:
        sigma = gabor_sigma_for_bandwidth(2.0)
    window = GaussianWindow(sigma)
    leak = _bedrosian_leakage(omega0, sigma)
    if leak > LEAKAGE_TOL:
        raise PairConstructionError(
            f"omega0*sigma={omega0 * sigma:.3g} too small: spectral leakage {leak:.3g} > {LEAKAGE_TOL:g}"
        )
    omega_band = window.band_limit()
    psi = ModulatedWavelet(window, omega0, xi0, band_limit=omega_band)
    if grid is None:
        grid = GridSpec(8192, -12 * sigma, 24 * sigma / 8192, periodic=False)
    defect = _measure_bedrosian_defect(psi, grid)
    return WaveletPair(
        psi,
        orthonormal=False,
        label=f"gabor(omega0={omega0:g},xi0={xi0:g},sigma={sigma:.6g})",
        hilbert="numerical",
        metadata={"exactly_modulated": True, "bedrosian_defect": defect, "leakage": leak, "sigma": sigma},
    )


def make_raised_cosine_pair(
    omega0: float = 5.3,
    xi0: float = 5.2,
    p: float = -3.0,
    q: float = 3.0,
    grid: Optional[GridSpec] = None,
) -> WaveletPair:
    """Raised-cosine windowed pair with ``psi' = H psi`` computed numerically.

    The window is compactly supported with Lipschitz constant ``pi/(q - p)``.
    Compact support rules out exact band-limitation, so the Bedrosian form is
    only approximate; the measured defect is recorded in the metadata.
    """
    window = RaisedCosineWindow(p, q)
    if omega0 * (q - p) < 2 * math.pi:
        raise PairConstructionError(
            f"omega0={omega0} is too small for support length {q - p} (need omega0 (q-p) >= 2 pi)"
        )
    psi = ModulatedWavelet(window, omega0, xi0, band_limit=0.0)
    if grid is None:
        width = q - p
        grid = GridSpec(16384, p - 4 * width, 9 * width / 16384, periodic=True)
    defect = _measure_bedrosian_defect(psi, grid)
    return WaveletPair(
        psi,
        orthonormal=False,
        label=f"raised_cosine(omega0={omega0:g},xi0={xi0:g},p={p:g},q={q:g})",
        hilbert="numerical",
        metadata={
            "exactly_modulated": False,
            "bedrosian_defect": defect,
            "band_limit_measured": window.band_limit(),
        },
    )


def complex_wavelet(pair: WaveletPair, j: int, k: float, target: GridSpec) -> SampledSignal:
    """``Psi_{j,k} = (psi_{j,k} + i psi'_{j,k}) / 2`` sampled on ``target``."""
    row = pair.analytic_atoms(target, j, [k])[0]
    return SampledSignal(row, target, f"Psi[{pair.label}]", {"j": j, "k": k})


@dataclass(frozen=True)
class ModulationEstimate:
    window: SampledSignal
    omega0: float
    xi0: float
    partial: bool
    n_segments: int


def extract_modulation(pair: WaveletPair, grid: Optional[GridSpec] = None, floor: float = 0.01) -> ModulationEstimate:
    """Recover ``w``, ``omega0`` and ``xi0`` from ``psi`` and ``psi'``.

    ``w = sqrt(psi^2 + psi'^2)``; the phase of ``psi + i psi'`` is unwrapped
    and fitted by a line over the contiguous run of samples around the window
    peak where ``w`` exceeds ``floor`` times its maximum and decreases away
    from the peak.  Sign changes of the window only shift the phase by pi and
    are absorbed by ``|.|``.  ``partial`` is set when the window has several
    lobes (interior zeros), so only the main lobe was used.
    """
    if grid is None:
        grid = pair.default_grid()
    psi, psi_p = pair.atoms(grid, 0, [0.0])
    z = psi[0] + 1j * psi_p[0]
    w = np.abs(z)
    mask = w > floor * w.max()
    # window zeros show up as local minima of |z| even when no sample falls
    # below the floor; they split segments as well
    interior_min = np.zeros_like(mask)
    interior_min[1:-1] = (w[1:-1] < w[:-2]) & (w[1:-1] <= w[2:])
    cut = ~mask | interior_min
    starts = np.flatnonzero(~cut & np.concatenate([[True], cut[:-1]]))
    n_segments = len(starts)
    peak = int(np.argmax(w))
    lo = peak
    while lo > 0 and mask[lo - 1] and w[lo - 1] <= w[lo]:
        lo -= 1
    hi = peak
    while hi < len(mask) - 1 and mask[hi + 1] and w[hi + 1] <= w[hi]:
        hi += 1
    y = grid.x[lo : hi + 1]
    phase = np.unwrap(np.angle(z[lo : hi + 1]))
    slope, intercept = np.polyfit(y, phase, 1)
    xi0 = float(np.mod(intercept, 2 * np.pi))
    # a negative window lobe shows up as a pi offset
    if np.real(np.sum(z * np.exp(-1j * (slope * grid.x + xi0)))) < 0:
        xi0 = float(np.mod(xi0 + np.pi, 2 * np.pi))
    window = SampledSignal(w, grid, "window", {"pair": pair.label})
    return ModulationEstimate(window, float(slope), xi0, bool(n_segments > 1), n_segments)
