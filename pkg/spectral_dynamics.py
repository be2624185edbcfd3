"""
Dinamica espectral de paquetes de ondas en el pozo cuadrado infinito.

Contiene los tipos basicos (WellConfig, WavePacket, TimeSeries) y las formas
cerradas de los valores esperados: momento, su derivada temporal, fuerza y
posicion, asi como el residuo de Ehrenfest.

Todas las sumas dobles estan truncadas a la longitud del paquete; las
identidades entre ellas son exactas a cualquier truncamiento.
"""

import hashlib
import json
import logging
import numbers
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from export import write_table

logger = logging.getLogger(__name__)

DEFAULT_NORM_TOLERANCE = 1e-12
HERMITICITY_TOLERANCE = 1e-12


class WellConfigError(ValueError):
    pass


class InvalidQuantumNumber(ValueError):
    pass


class NormalizationViolation(ValueError):
    pass


class HermiticityViolation(ValueError):
    """The assembled double sum kept an imaginary part it should not have."""


class InvalidTimeSeries(ValueError):
    pass


@dataclass(frozen=True)
class WellConfig:
    """
    Parametros fisicos del pozo: anchura L, masa m y constante de Planck reducida.

    Por defecto unidades naturales (L = m = hbar = 1).
    """
    L: float = 1.0
    m: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("L", "m", "hbar"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise WellConfigError(f"{name} must be a real number, got {value!r}")
            if not np.isfinite(value) or value <= 0:
                raise WellConfigError(f"{name} must be strictly positive, got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def natural(cls):
        return cls(1.0, 1.0, 1.0)

    def wavenumber(self, n):
        return n * np.pi / self.L

    def to_dict(self):
        return {"L": self.L, "m": self.m, "hbar": self.hbar}


def check_quantum_number(n, name="n"):
    # bool es subclase de int, no lo aceptamos como numero cuantico
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        raise InvalidQuantumNumber(f"{name} must be a positive integer, got {n!r}")
    if n < 1:
        raise InvalidQuantumNumber(f"{name} must be >= 1, got {n}")
    return int(n)


def eigenvalue(n, cfg):
    """E_n = hbar^2 k_n^2 / 2m with k_n = n pi / L."""
    n = check_quantum_number(n)
    k = cfg.wavenumber(n)
    return cfg.hbar**2 * k**2 / (2.0 * cfg.m)


def eigenfunction_value(n, x, cfg):
    """
    Valor de la autofuncion sqrt(2/L) sin(k_n x) dentro del pozo y 0 fuera.

    Las paredes (x = 0, x = L) devuelven exactamente 0. Acepta escalares o arrays.
    """
    n = check_quantum_number(n)
    x_arr = np.asarray(x, dtype=float)
    inside = (x_arr > 0.0) & (x_arr < cfg.L)
    values = np.where(inside, np.sqrt(2.0 / cfg.L) * np.sin(cfg.wavenumber(n) * x_arr), 0.0)
    if values.ndim == 0:
        return float(values)
    return values


def beta(n, j):
    """Parity factor 1 - (-1)^(n+j): 0 when n+j is even, 2 when it is odd."""
    n = check_quantum_number(n)
    j = check_quantum_number(j, "j")
    return 0 if (n + j) % 2 == 0 else 2


def beat_frequency(n, j, cfg):
    # omega_nj = omega_j - omega_n (omega_12 del ejemplo de dos estados)
    return (eigenvalue(j, cfg) - eigenvalue(n, cfg)) / cfg.hbar


def force_matrix_element(n, j, cfg):
    """<n| dV/dx |j> = -(hbar^2 / m L) k_n k_j beta_nj."""
    n = check_quantum_number(n)
    j = check_quantum_number(j, "j")
    if beta(n, j) == 0:
        return 0.0
    return -(cfg.hbar**2 / (cfg.m * cfg.L)) * cfg.wavenumber(n) * cfg.wavenumber(j) * beta(n, j)


def momentum_matrix_element(n, j, cfg):
    """
    <n| p |j> = -i hbar (2/L) k_n k_j beta_nj / (k_n^2 - k_j^2), cero en la diagonal.
    """
    n = check_quantum_number(n)
    j = check_quantum_number(j, "j")
    if n == j:
        return 0j
    kn, kj = cfg.wavenumber(n), cfg.wavenumber(j)
    return -1j * cfg.hbar * (2.0 / cfg.L) * kn * kj * beta(n, j) / (kn**2 - kj**2)


def position_matrix_element(n, j, cfg):
    """
    <n| x |j> en la base de la caja.

    La diagonal vale L/2; fuera de ella -4 L n j beta_nj / (pi^2 (n^2 - j^2)^2),
    que sale de las integrales de productos de senos.
    """
    n = check_quantum_number(n)
    j = check_quantum_number(j, "j")
    if n == j:
        return cfg.L / 2.0
    return -4.0 * cfg.L * n * j * beta(n, j) / (np.pi**2 * (n**2 - j**2) ** 2)


@dataclass(frozen=True, eq=False)
class WavePacket:
    """
    Paquete truncado: coeficientes complejos a_1..a_N sobre la base de autoestados.

    Parameters:
    - coeffs: amplitudes, la posicion i corresponde a n = i + 1
    - tolerance: tolerancia de normalizacion (sum |a_n|^2 = 1)
    """
    coeffs: np.ndarray
    tolerance: float = DEFAULT_NORM_TOLERANCE

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=complex).reshape(-1)
        if arr.size == 0:
            raise NormalizationViolation("a wave packet needs at least one coefficient")
        if not np.all(np.isfinite(arr)):
            raise NormalizationViolation("wave packet coefficients must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def from_triples(cls, triples, tolerance=DEFAULT_NORM_TOLERANCE):
        """Construye el paquete desde una lista de (n, re, im)."""
        entries = {}
        for triple in triples:
            if len(triple) != 3:
                raise ValueError(f"packet entries must be (n, re, im) triples, got {triple!r}")
            n, re, im = triple
            n = check_quantum_number(n)
            if n in entries:
                raise ValueError(f"state n={n} given more than once")
            entries[n] = complex(float(re), float(im))
        if not entries:
            raise NormalizationViolation("a wave packet needs at least one coefficient")
        coeffs = np.zeros(max(entries), dtype=complex)
        for n, value in entries.items():
            coeffs[n - 1] = value
        return cls(coeffs, tolerance)

    @classmethod
    def from_text(cls, text, tolerance=DEFAULT_NORM_TOLERANCE):
        # Una terna "n re im" por linea, se permiten comentarios con '#'
        triples = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'n re im', got {line!r}")
            try:
                triples.append((int(parts[0]), float(parts[1]), float(parts[2])))
            except ValueError:
                raise ValueError(f"line {lineno}: could not parse {line!r}")
        return cls.from_triples(triples, tolerance)

    @classmethod
    def eigenstate(cls, n, tolerance=DEFAULT_NORM_TOLERANCE):
        n = check_quantum_number(n)
        coeffs = np.zeros(n, dtype=complex)
        coeffs[-1] = 1.0
        return cls(coeffs, tolerance)

    @property
    def truncation(self):
        return self.coeffs.size

    @property
    def norm(self):
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def is_normalized(self):
        return abs(self.norm - 1.0) <= self.tolerance

    def require_normalized(self):
        if not self.is_normalized():
            raise NormalizationViolation(
                f"sum |a_n|^2 = {self.norm!r} differs from 1 by more than {self.tolerance:g}; "
                "call normalized() explicitly"
            )
        return self

    def normalized(self):
        norm = self.norm
        if norm == 0.0:
            raise NormalizationViolation("cannot normalize a packet with all coefficients zero")
        return WavePacket(self.coeffs / np.sqrt(norm), self.tolerance)

    def padded(self, truncation):
        if truncation < self.truncation:
            raise ValueError("padding cannot shorten a packet")
        coeffs = np.zeros(truncation, dtype=complex)
        coeffs[: self.truncation] = self.coeffs
        return WavePacket(coeffs, self.tolerance)

    def to_triples(self):
        return [(n, float(a.real), float(a.imag)) for n, a in enumerate(self.coeffs, 1) if a != 0]

    def digest(self):
        payload = json.dumps([[n, re, im] for n, re, im in self.to_triples()])
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _mode_arrays(packet, cfg):
    n = np.arange(1, packet.truncation + 1)
    k = n * np.pi / cfg.L
    omega = cfg.hbar * k**2 / (2.0 * cfg.m)
    return n, k, omega


def _beta_matrix(n):
    return np.where((n[:, None] + n[None, :]) % 2 == 0, 0.0, 2.0)


def _paired_double_sum(packet, t, cfg, weights, label):
    """
    Suma sum_{n,j} a_n^* a_j w_nj e^{i (omega_n - omega_j) t} emparejando (n, j) con (j, n).

    Los pesos deben cumplir w_jn = conj(w_nj); cada pareja suma entonces un numero
    real y la parte imaginaria solo puede ser ruido de redondeo.
    """
    _, _, omega = _mode_arrays(packet, cfg)
    a = packet.coeffs
    phase = np.exp(1j * (omega[:, None] - omega[None, :]) * t)
    terms = np.conj(a)[:, None] * a[None, :] * phase * weights

    paired = np.triu(terms, 1) + np.triu(terms.T, 1)
    total = paired.sum() + np.trace(terms)

    scale = float(np.abs(terms).sum())
    if scale > 0.0 and abs(total.imag) > HERMITICITY_TOLERANCE * scale:
        raise HermiticityViolation(
            f"{label}: imaginary part {total.imag:.3e} is not negligible against {scale:.3e}"
        )
    return float(total.real)


def _force_weights(packet, cfg):
    n, k, _ = _mode_arrays(packet, cfg)
    return k[:, None] * k[None, :] * _beta_matrix(n)


def force_expectation(packet, t, cfg):
    """<dV/dx>(t) = -(hbar^2 / m L) sum a_n^* a_j k_n k_j beta_nj e^{i(omega_n - omega_j)t}."""
    packet.require_normalized()
    total = _paired_double_sum(packet, t, cfg, _force_weights(packet, cfg), "force_expectation")
    return -(cfg.hbar**2 / (cfg.m * cfg.L)) * total


def momentum_rate(packet, t, cfg):
    """d<p>/dt = (hbar^2 / m L) sum a_n^* a_j k_n k_j beta_nj e^{i(omega_n - omega_j)t}."""
    packet.require_normalized()
    total = _paired_double_sum(packet, t, cfg, _force_weights(packet, cfg), "momentum_rate")
    return (cfg.hbar**2 / (cfg.m * cfg.L)) * total


def momentum_expectation(packet, t, cfg):
    """
    <p>(t) = (-i hbar)(2/L) sum_{n != j} a_n^* a_j k_n k_j beta_nj / (k_n^2 - k_j^2) e^{i(omega_n - omega_j)t}.
    """
    packet.require_normalized()
    n, k, _ = _mode_arrays(packet, cfg)
    diff = k[:, None] ** 2 - k[None, :] ** 2
    np.fill_diagonal(diff, 1.0)
    ratio = k[:, None] * k[None, :] * _beta_matrix(n) / diff
    np.fill_diagonal(ratio, 0.0)
    weights = -1j * cfg.hbar * (2.0 / cfg.L) * ratio
    return _paired_double_sum(packet, t, cfg, weights, "momentum_expectation")


def position_expectation(packet, t, cfg):
    packet.require_normalized()
    n, _, _ = _mode_arrays(packet, cfg)
    diff_sq = (n[:, None] ** 2 - n[None, :] ** 2) ** 2
    np.fill_diagonal(diff_sq, 1)
    weights = -4.0 * cfg.L * n[:, None] * n[None, :] * _beta_matrix(n) / (np.pi**2 * diff_sq)
    np.fill_diagonal(weights, cfg.L / 2.0)
    return _paired_double_sum(packet, t, cfg, weights, "position_expectation")


def ehrenfest_residual(packet, t, cfg):
    """d<p>/dt + <dV/dx>; cero salvo redondeo."""
    return momentum_rate(packet, t, cfg) + force_expectation(packet, t, cfg)


def packet_value(packet, x, t, cfg):
    """Psi(x, t) = sum a_n Psi_n(x) e^{-i omega_n t}; escalar o array en x."""
    n, k, omega = _mode_arrays(packet, cfg)
    x_arr = np.asarray(x, dtype=float)
    inside = (x_arr > 0.0) & (x_arr < cfg.L)
    amplitudes = packet.coeffs * np.exp(-1j * omega * t)
    modes = np.sqrt(2.0 / cfg.L) * np.sin(np.multiply.outer(x_arr, k))
    values = np.where(inside, modes @ amplitudes, 0.0 + 0.0j)
    if values.ndim == 0:
        return complex(values)
    return values


OBSERVABLES = {
    "momentum": momentum_expectation,
    "momentum_rate": momentum_rate,
    "force": force_expectation,
    "position": position_expectation,
    "ehrenfest_residual": ehrenfest_residual,
}


def time_grid(t_start, t_end, steps):
    if steps < 1:
        raise InvalidTimeSeries(f"time grid needs at least one step, got {steps}")
    if steps == 1:
        return np.array([float(t_start)])
    if not t_end > t_start:
        raise InvalidTimeSeries(f"t_end ({t_end}) must be greater than t_start ({t_start})")
    return np.linspace(t_start, t_end, steps)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Observable muestreado sobre una malla temporal, con metadatos del paquete y el pozo."""
    times: np.ndarray
    values: np.ndarray
    label: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.array(self.times, dtype=float).reshape(-1)
        values = np.array(self.values).reshape(-1)
        if times.size != values.size:
            raise InvalidTimeSeries(f"{times.size} times but {values.size} values")
        if times.size == 0:
            raise InvalidTimeSeries("a time series needs at least one point")
        if np.any(np.diff(times) <= 0):
            raise InvalidTimeSeries("times must be strictly increasing")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def is_complex(self):
        return np.iscomplexobj(self.values)

    def to_frame(self):
        if self.is_complex:
            return pd.DataFrame({"t": self.times, "value": self.values.real, "value_imag": self.values.imag})
        return pd.DataFrame({"t": self.times, "value": self.values.astype(float)})

    def export(self, path, fmt="csv"):
        meta = {"label": self.label, **self.metadata}
        return write_table(self.to_frame(), path, fmt, metadata=meta)


def sample_series(observable, packet, times, cfg, label=None, workers=None):
    """
    Evalua un observable (nombre de OBSERVABLES o callable(packet, t, cfg)) en cada tiempo.

    Cada punto es independiente; con workers > 1 se reparte en un pool de hilos.
    """
    if isinstance(observable, str):
        if observable not in OBSERVABLES:
            raise ValueError(f"unknown observable {observable!r}; choose from {sorted(OBSERVABLES)}")
        label = label or observable
        observable = OBSERVABLES[observable]
    label = label or getattr(observable, "__name__", "observable")
    times = np.asarray(times, dtype=float)

    def evaluate(t):
        return observable(packet, float(t), cfg)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(evaluate, times))
    else:
        values = [evaluate(t) for t in times]

    logger.debug("sampled %s at %d time points", label, len(times))
    metadata = {"packet": packet.digest(), "config": cfg.to_dict()}
    return TimeSeries(times, np.asarray(values), label, metadata)
