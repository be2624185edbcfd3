"""
Oraculos numericos independientes de las formas cerradas.

- Pozo finito de profundidad V0 sobre [0, L], resuelto por biseccion en las condiciones
  de empalme par/impar respecto a x = L/2; el pozo infinito es su limite V0 -> infinito.
- Cuadratura sobre mallas uniformes de funciones de onda muestreadas.
- Derivadas temporales por diferencias centradas con extrapolacion de Richardson.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
import pandas as pd
from scipy import integrate, optimize

from spectral_dynamics import (
    WellConfig,
    check_quantum_number,
    eigenvalue,
    force_matrix_element,
    packet_value,
)

logger = logging.getLogger(__name__)

MATCHING_TOLERANCE = 1e-10
ROOT_XTOL = 1e-14


class InsufficientDepth(ValueError):
    pass


class BracketingFailure(ValueError):
    pass


class UnsolvedLevel(ValueError):
    pass


class GridTooCoarse(ValueError):
    pass


@dataclass(frozen=True)
class FiniteWell:
    """Pozo de profundidad V0: potencial 0 en [0, L] y V0 fuera."""
    V0: float
    cfg: WellConfig = WellConfig()

    def __post_init__(self):
        V0 = float(self.V0)
        if not np.isfinite(V0) or V0 <= 0:
            raise ValueError(f"V0 must be strictly positive, got {self.V0}")
        object.__setattr__(self, "V0", V0)

    @classmethod
    def from_ratio(cls, ratio, cfg):
        """Pozo con V0 = ratio * E_1 del pozo infinito."""
        return cls(ratio * eigenvalue(1, cfg), cfg)

    @property
    def half_width(self):
        return self.cfg.L / 2.0

    @property
    def strength(self):
        # z0 = a sqrt(2 m V0) / hbar con a = L/2
        return self.half_width * np.sqrt(2.0 * self.cfg.m * self.V0) / self.cfg.hbar

    def bound_state_count(self):
        return int(np.ceil(self.strength / (np.pi / 2.0)))

    def matching_function(self, n):
        """
        Condicion de empalme sin polos para el nivel n en la variable z = k a.

        Par (n impar):   z sin z - sqrt(z0^2 - z^2) cos z
        Impar (n par):   z cos z + sqrt(z0^2 - z^2) sin z
        """
        z0 = self.strength

        def outer(z):
            return np.sqrt(max(z0**2 - z**2, 0.0))

        if n % 2 == 1:
            return lambda z: z * np.sin(z) - outer(z) * np.cos(z)
        return lambda z: z * np.cos(z) + outer(z) * np.sin(z)


@dataclass(frozen=True)
class FiniteWellLevel:
    """
    Estado ligado n del pozo finito. En la coordenada centrada y = x - L/2:
    dentro A cos(k y) (par) o A sin(k y) (impar); fuera, cola exponencial exp(-kappa (|y| - a)).
    """
    index: int
    energy: float
    k: float
    kappa: float
    amplitude: float
    well: FiniteWell

    @property
    def parity(self):
        return "even" if self.index % 2 == 1 else "odd"

    def _inside(self, y):
        if self.parity == "even":
            return self.amplitude * np.cos(self.k * y)
        return self.amplitude * np.sin(self.k * y)

    def _inside_slope(self, y):
        if self.parity == "even":
            return -self.amplitude * self.k * np.sin(self.k * y)
        return self.amplitude * self.k * np.cos(self.k * y)

    def value(self, x):
        a = self.well.half_width
        y = np.asarray(x, dtype=float) - a
        edge = self._inside(np.sign(y) * a)
        outside = edge * np.exp(-self.kappa * np.maximum(np.abs(y) - a, 0.0))
        values = np.where(np.abs(y) <= a, self._inside(y), outside)
        return float(values) if values.ndim == 0 else values

    def derivative(self, x):
        a = self.well.half_width
        y = np.asarray(x, dtype=float) - a
        edge = self._inside(np.sign(y) * a)
        outside = -np.sign(y) * self.kappa * edge * np.exp(-self.kappa * np.maximum(np.abs(y) - a, 0.0))
        values = np.where(np.abs(y) <= a, self._inside_slope(y), outside)
        return float(values) if values.ndim == 0 else values

    def boundary_values(self):
        """(psi(0), psi(L)) evaluados con la forma interior en y = -a, +a."""
        a = self.well.half_width
        return float(self._inside(-a)), float(self._inside(a))

    def matching_residual(self):
        """
        Salto relativo de psi' en las dos paredes. psi es continua por construccion
        (la cola arranca del valor interior), asi que solo la derivada puede no empalmar.
        """
        a = self.well.half_width
        scale = abs(self.amplitude) * (self.k + self.kappa)
        residuals = []
        for side in (-1.0, 1.0):
            edge = self._inside(side * a)
            outside_slope = -side * self.kappa * edge
            residuals.append(abs(self._inside_slope(side * a) - outside_slope) / scale)
        return max(residuals)

    def node_count(self, points=None):
        points = points or 2000 * self.index
        x = np.linspace(0.0, self.well.cfg.L, points + 2)[1:-1]
        values = self.value(x)
        signs = np.sign(values[values != 0.0])
        return int(np.count_nonzero(np.diff(signs)))


def _bracket(fw, n, scan_points):
    # Intervalo de la raiz n: ((n-1) pi/2, n pi/2) recortado a z0
    z0 = fw.strength
    lo = (n - 1) * np.pi / 2.0
    hi = min(n * np.pi / 2.0, z0)
    f = fw.matching_function(n)
    grid = np.linspace(lo, hi, scan_points + 1)
    values = np.array([f(z) for z in grid])
    changes = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]
    if len(changes) != 1:
        raise BracketingFailure(
            f"level {n}: found {len(changes)} sign changes in [{lo:.6g}, {hi:.6g}] (z0={z0:.6g})"
        )
    i = changes[0]
    return grid[i], grid[i + 1]


def _normalized_amplitude(fw, n, k, kappa):
    a = fw.half_width
    shape = np.cos if n % 2 == 1 else np.sin
    inside, _ = integrate.quad(lambda y: shape(k * y) ** 2, -a, a, epsabs=1e-14, epsrel=1e-13, limit=200)
    # Colas exponenciales: 2 * edge^2 / (2 kappa)
    outside = shape(k * a) ** 2 / kappa
    # Signo elegido para coincidir con sqrt(2/L) sin(k_n x) del pozo infinito
    sign = -1.0 if (n // 2) % 2 == 1 else 1.0
    return sign / np.sqrt(inside + outside)


@lru_cache(maxsize=None)
def _solve_levels(fw, count, scan_points):
    levels = []
    for n in range(1, count + 1):
        lo, hi = _bracket(fw, n, scan_points)
        f = fw.matching_function(n)
        z = optimize.bisect(f, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=400)
        residual = abs(f(z)) / fw.strength
        a = fw.half_width
        k = z / a
        kappa = np.sqrt(max(fw.strength**2 - z**2, 0.0)) / a
        if kappa == 0.0:
            raise InsufficientDepth(f"level {n} sits at the top of the well (V0={fw.V0:g})")
        energy = fw.cfg.hbar**2 * k**2 / (2.0 * fw.cfg.m)
        level = FiniteWellLevel(n, energy, k, kappa, _normalized_amplitude(fw, n, k, kappa), fw)
        if level.matching_residual() > MATCHING_TOLERANCE:
            raise BracketingFailure(
                f"level {n}: matching residual {level.matching_residual():.3e} above {MATCHING_TOLERANCE:g}"
            )
        logger.debug("V0=%g level %d: E=%.15g, condition residual %.2e", fw.V0, n, energy, residual)
        levels.append(level)
    return tuple(levels)


def solve_finite_well_levels(fw, count, scan_points=64):
    """
    Resuelve los `count` primeros estados ligados del pozo finito.

    Cada raiz se aisla con un barrido de cambios de signo dentro de su intervalo natural
    y se refina por biseccion.

    Raises:
    - InsufficientDepth si el pozo liga menos de `count` estados
    - BracketingFailure si una raiz no queda aislada
    """
    count = check_quantum_number(count, "count")
    available = fw.bound_state_count()
    if available < count:
        raise InsufficientDepth(f"V0={fw.V0:g} binds {available} states, {count} requested")
    return list(_solve_levels(fw, count, scan_points))


def finite_force_matrix_element(fw, n, j, levels):
    """
    <n| dV/dx |j> del pozo finito. dV/dx = -V0 delta(x) + V0 delta(x - L), asi que
    basta con los valores de contorno: V0 [psi_n(L) psi_j(L) - psi_n(0) psi_j(0)].
    """
    n = check_quantum_number(n)
    j = check_quantum_number(j, "j")
    solved = {level.index: level for level in levels if level.well == fw}
    for index in (n, j):
        if index not in solved:
            raise UnsolvedLevel(f"level {index} has not been solved for V0={fw.V0:g}")
    left_n, right_n = solved[n].boundary_values()
    left_j, right_j = solved[j].boundary_values()
    return fw.V0 * (right_n * right_j - left_n * left_j)


def _study_rung(cfg, pairs, V0):
    fw = FiniteWell(V0, cfg)
    needed = max(max(n, j) for n, j in pairs)
    try:
        levels = solve_finite_well_levels(fw, needed)
        values = {(n, j): finite_force_matrix_element(fw, n, j, levels) for n, j in pairs}
    except (InsufficientDepth, BracketingFailure, UnsolvedLevel) as e:
        raise type(e)(f"rung V0={V0:g}: {e}") from e
    logger.debug("convergence rung V0=%g done", V0)
    return values


def convergence_study(cfg, pairs, ladder, workers=None):
    """
    Compara el elemento de fuerza del pozo finito con la forma cerrada del infinito
    a lo largo de una escalera creciente de V0.

    Parameters:
    - cfg: WellConfig
    - pairs: lista de (n, j)
    - ladder: lista de V0 (valores absolutos de energia)
    - workers: si > 1, los peldanos se resuelven en paralelo

    Returns:
    - DataFrame con columnas n, j, V0, finite_value, target, abs_err, rel_err, empirical_order
    """
    pairs = [(check_quantum_number(n), check_quantum_number(j, "j")) for n, j in pairs]
    ladder = sorted(float(v) for v in ladder)
    if not pairs or not ladder:
        raise ValueError("convergence study needs at least one pair and one ladder rung")

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rungs = list(pool.map(lambda V0: _study_rung(cfg, pairs, V0), ladder))
    else:
        rungs = [_study_rung(cfg, pairs, V0) for V0 in ladder]

    rows = []
    for n, j in pairs:
        target = force_matrix_element(n, j, cfg)
        previous = None
        for V0, values in zip(ladder, rungs):
            finite = values[(n, j)]
            abs_err = abs(finite - target)
            rel_err = abs_err / abs(target) if target != 0 else np.nan
            order = np.nan
            if previous is not None:
                prev_V0, prev_err = previous
                if prev_err > 0 and abs_err > 0:
                    order = np.log(prev_err / abs_err) / np.log(V0 / prev_V0)
            rows.append({
                "n": n,
                "j": j,
                "V0": V0,
                "finite_value": finite,
                "target": target,
                "abs_err": abs_err,
                "rel_err": rel_err,
                "empirical_order": order,
            })
            previous = (V0, abs_err)
    return pd.DataFrame(rows, columns=["n", "j", "V0", "finite_value", "target", "abs_err", "rel_err", "empirical_order"])


def summarize_convergence(df):
    """Resumen por pareja (n, j): error final, monotonia y orden empirico medio."""
    summary = []
    for (n, j), group in df.groupby(["n", "j"], sort=True):
        group = group.sort_values("V0")
        errors = group["abs_err"].to_numpy()
        summary.append({
            "n": int(n),
            "j": int(j),
            "target": float(group["target"].iloc[-1]),
            "final_value": float(group["finite_value"].iloc[-1]),
            "final_rel_err": None if np.isnan(group["rel_err"].iloc[-1]) else float(group["rel_err"].iloc[-1]),
            "monotone": bool(np.all(np.diff(errors) < 0)),
            "mean_order": None if group["empirical_order"].isna().all() else float(group["empirical_order"].mean()),
        })
    return summary


class Observable(Enum):
    PROBABILITY = "probability"
    POSITION = "position"
    MOMENTUM = "momentum"


@dataclass(frozen=True, eq=False)
class GridField:
    """Muestras complejas sobre una malla uniforme que cubre [-pad, L + pad]."""
    x: np.ndarray
    values: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        values = np.array(self.values, dtype=complex).reshape(-1)
        if x.size != values.size:
            raise ValueError(f"{x.size} grid points but {values.size} samples")
        if x.size < 5:
            raise GridTooCoarse("a grid field needs at least 5 points")
        steps = np.diff(x)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("grid spacing must be uniform and positive")
        x.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", values)

    @property
    def spacing(self):
        return (self.x[-1] - self.x[0]) / (self.x.size - 1)

    @classmethod
    def from_function(cls, fn, cfg, points=4096, pad=0.0):
        x = np.linspace(-pad, cfg.L + pad, points)
        return cls(x, fn(x), cfg.hbar)

    @classmethod
    def from_packet(cls, packet, t, cfg, points=4096, pad=0.0):
        return cls.from_function(lambda x: packet_value(packet, x, t, cfg), cfg, points, pad)

    @classmethod
    def from_level(cls, level, points=4096, pad=None):
        # Colas hasta exp(-20) por defecto
        if pad is None:
            pad = 20.0 / level.kappa
        return cls.from_function(level.value, level.well.cfg, points, pad)


def _wide_central_difference(values, h, fallback):
    # (f[i+2] - f[i-2]) / 4h en el interior; los extremos reutilizan la derivada fina
    wide = fallback.copy()
    wide[2:-2] = (values[4:] - values[:-4]) / (4.0 * h)
    return wide


def grid_expectation(field, observable, tolerance=1e-3):
    """
    Valor esperado por cuadratura compuesta (Simpson) sobre la malla.

    probability = int |psi|^2, position = int x |psi|^2,
    momentum = -i hbar int psi^* psi' con psi' por diferencias centradas extrapoladas.

    La estimacion de error compara la regla en paso h con la de paso 2h; si supera
    `tolerance` se lanza GridTooCoarse. Se devuelve la parte real y se exige que la
    imaginaria sea pequena.
    """
    observable = Observable(observable)
    x, psi, h = field.x, field.values, field.spacing
    density = np.abs(psi) ** 2

    if observable is Observable.MOMENTUM:
        fine = np.gradient(psi, h, edge_order=2)
        wide = _wide_central_difference(psi, h, fine)
        extrapolated = (4.0 * fine - wide) / 3.0
        value = -1j * field.hbar * integrate.simpson(np.conj(psi) * extrapolated, x=x)
        raw = -1j * field.hbar * integrate.simpson(np.conj(psi) * fine, x=x)
        error = abs(raw - value)
    else:
        weight = np.ones_like(x) if observable is Observable.PROBABILITY else x
        integrand = weight * density
        value = integrate.simpson(integrand, x=x)
        # Paso h frente a paso 2h sobre el mismo tramo (numero impar de puntos)
        m = x.size if x.size % 2 == 1 else x.size - 1
        fine = integrate.simpson(integrand[:m], x=x[:m])
        coarse = integrate.simpson(integrand[:m:2], x=x[:m:2])
        error = abs(fine - coarse) / 15.0

    if error > tolerance:
        raise GridTooCoarse(
            f"{observable.value}: error estimate {error:.3e} exceeds tolerance {tolerance:g} "
            f"with {x.size} points"
        )
    if error > tolerance / 10.0:
        logger.warning("%s: error estimate %.3e is close to tolerance %g", observable.value, error, tolerance)
    value = complex(value)
    if abs(value.imag) > tolerance:
        raise GridTooCoarse(f"{observable.value}: imaginary part {value.imag:.3e} is not negligible")
    return value.real


def overlap_matrix(levels, points=8193):
    """<psi_n | psi_j> por cuadratura sobre una malla comun que cubre las colas de todos los niveles."""
    levels = list(levels)
    well = levels[0].well
    pad = 20.0 / min(level.kappa for level in levels)
    x = np.linspace(-pad, well.cfg.L + pad, points)
    samples = np.array([level.value(x) for level in levels])
    size = len(levels)
    overlaps = np.empty((size, size))
    for p in range(size):
        for q in range(size):
            overlaps[p, q] = integrate.simpson(samples[p] * samples[q], x=x)
    return overlaps


def richardson_extrapolate(base_values, p, r=2.0):
    """
    Extrapolacion de Richardson de una sucesion de aproximaciones con error O(h^p),
    con pasos que se dividen por `r` entre una entrada y la siguiente.
    """
    count = len(base_values)
    if count < 2:
        raise ValueError("richardson_extrapolate requires at least two base values.")
    vals = [float(v) for v in base_values]
    for j in range(1, count):
        factor = r ** (p * j)
        for k in range(count - 1, j - 1, -1):
            vals[k] = (factor * vals[k] - vals[k - 1]) / (factor - 1.0)
    return vals[-1]


def numerical_time_derivative(f, t, h=1e-5, richardson=False):
    """(f(t+h) - f(t-h)) / 2h; con richardson=True combina pasos h y h/2."""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")

    def centered(step):
        return (f(t + step) - f(t - step)) / (2.0 * step)

    if not richardson:
        return centered(h)
    return richardson_extrapolate([centered(h), centered(h / 2.0)], p=2)
