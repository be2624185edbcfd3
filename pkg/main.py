import sys
import argparse
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from export import human_table, write_json, write_table
from spectral_dynamics import (
    WavePacket,
    WellConfig,
    eigenvalue,
    force_expectation,
    momentum_expectation,
    momentum_rate,
    position_expectation,
    sample_series,
    time_grid,
    TimeSeries,
)

DEFAULT_STATES = [[1, 0.7071067811865476, 0.0], [2, 0.7071067811865476, 0.0]]
# Escalera de V0 en multiplos de E_1 del pozo infinito
DEFAULT_LADDER = [1e2, 1e3, 1e4, 1e5]
DEFAULT_PAIRS = [[1, 2], [1, 3], [2, 3]]
DEFAULT_THRESHOLD = 1e-9

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_THRESHOLD = 2


class ConfigError(ValueError):
    """Error de configuracion con el campo afectado y, si procede, linea/columna del JSON."""

    def __init__(self, message, field=None, line=None, column=None):
        self.field = field
        self.line = line
        self.column = column
        location = ""
        if field:
            location += f"{field}: "
        if line is not None:
            location = f"line {line}, column {column}: " + location
        super().__init__(location + message)


def _number(value, name, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=name)
    if integer:
        if int(value) != value:
            raise ConfigError(f"expected an integer, got {value!r}", field=name)
        return int(value)
    return float(value)


def _section(data, name):
    section = data.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError("expected an object", field=name)
    return section


def _reject_unknown(data, allowed, prefix=""):
    for key in data:
        if key not in allowed:
            raise ConfigError("unknown field", field=prefix + key)


@dataclass
class RunConfig:
    """Configuracion completa de una ejecucion; cada campo tiene valor por defecto."""
    well: WellConfig = field(default_factory=WellConfig)
    states: list = field(default_factory=lambda: [list(s) for s in DEFAULT_STATES])
    renormalize: bool = False
    t_start: float = 0.0
    t_end: float = 1.0
    steps: int = 201
    ladder: list = field(default_factory=lambda: list(DEFAULT_LADDER))
    pairs: list = field(default_factory=lambda: [list(p) for p in DEFAULT_PAIRS])
    grid_points: int = 4096
    fmt: str = "csv"
    out: str = "output"
    threshold: float = DEFAULT_THRESHOLD
    n_levels: int = 10
    n: int = 1

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("the configuration must be a JSON object")
        _reject_unknown(data, {"well", "packet", "time", "oracle", "output", "threshold", "n_levels", "n"})
        run = cls()

        well = _section(data, "well")
        _reject_unknown(well, {"L", "m", "hbar"}, "well.")
        try:
            run.well = WellConfig(**{key: _number(value, f"well.{key}") for key, value in well.items()})
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e), field="well")

        packet = _section(data, "packet")
        _reject_unknown(packet, {"states", "renormalize"}, "packet.")
        if "states" in packet:
            states = packet["states"]
            if not isinstance(states, list) or not states:
                raise ConfigError("expected a non-empty list of [n, re, im]", field="packet.states")
            run.states = []
            for i, state in enumerate(states):
                name = f"packet.states[{i}]"
                if not isinstance(state, list) or len(state) != 3:
                    raise ConfigError("expected [n, re, im]", field=name)
                run.states.append([_number(state[0], name, integer=True), _number(state[1], name), _number(state[2], name)])
        renormalize = packet.get("renormalize", False)
        if not isinstance(renormalize, bool):
            raise ConfigError("expected true or false", field="packet.renormalize")
        run.renormalize = renormalize

        time = _section(data, "time")
        _reject_unknown(time, {"t_start", "t_end", "steps"}, "time.")
        run.t_start = _number(time.get("t_start", run.t_start), "time.t_start")
        run.t_end = _number(time.get("t_end", run.t_end), "time.t_end")
        run.steps = _number(time.get("steps", run.steps), "time.steps", integer=True)

        oracle = _section(data, "oracle")
        _reject_unknown(oracle, {"ladder", "pairs", "grid_points"}, "oracle.")
        if "ladder" in oracle:
            ladder = oracle["ladder"]
            if not isinstance(ladder, list) or not ladder:
                raise ConfigError("expected a non-empty list", field="oracle.ladder")
            run.ladder = [_number(v, "oracle.ladder") for v in ladder]
        if "pairs" in oracle:
            pairs = oracle["pairs"]
            if not isinstance(pairs, list) or not pairs:
                raise ConfigError("expected a non-empty list of [n, j]", field="oracle.pairs")
            run.pairs = []
            for pair in pairs:
                if not isinstance(pair, list) or len(pair) != 2:
                    raise ConfigError("expected [n, j]", field="oracle.pairs")
                run.pairs.append([_number(v, "oracle.pairs", integer=True) for v in pair])
        run.grid_points = _number(oracle.get("grid_points", run.grid_points), "oracle.grid_points", integer=True)

        output = _section(data, "output")
        _reject_unknown(output, {"format", "path"}, "output.")
        run.fmt = output.get("format", run.fmt)
        run.out = output.get("path", run.out)
        if not isinstance(run.out, str):
            raise ConfigError("expected a path string", field="output.path")

        run.threshold = _number(data.get("threshold", run.threshold), "threshold")
        run.n_levels = _number(data.get("n_levels", run.n_levels), "n_levels", integer=True)
        run.n = _number(data.get("n", run.n), "n", integer=True)
        run.validate()
        return run

    def validate(self):
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.fmt!r}; use 'csv' or 'json'", field="output.format")
        if not self.threshold > 0:
            raise ConfigError("must be positive", field="threshold")
        if self.n_levels < 1:
            raise ConfigError("must be at least 1", field="n_levels")
        if self.n < 1:
            raise ConfigError("must be at least 1", field="n")
        if self.grid_points < 5:
            raise ConfigError("must be at least 5", field="oracle.grid_points")
        if any(not v > 0 for v in self.ladder):
            raise ConfigError("every rung must be positive", field="oracle.ladder")
        if any(v < 1 for pair in self.pairs for v in pair):
            raise ConfigError("quantum numbers start at 1", field="oracle.pairs")
        try:
            time_grid(self.t_start, self.t_end, self.steps)
        except ValueError as e:
            raise ConfigError(str(e), field="time")
        return self

    def to_dict(self):
        return {
            "well": self.well.to_dict(),
            "packet": {"states": [list(s) for s in self.states], "renormalize": self.renormalize},
            "time": {"t_start": self.t_start, "t_end": self.t_end, "steps": self.steps},
            "oracle": {"ladder": list(self.ladder), "pairs": [list(p) for p in self.pairs], "grid_points": self.grid_points},
            "output": {"format": self.fmt, "path": self.out},
            "threshold": self.threshold,
            "n_levels": self.n_levels,
            "n": self.n,
        }

    def digest(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def packet(self):
        """Paquete de ondas de la configuracion; sin normalizar da ConfigError salvo con renormalize."""
        try:
            packet = WavePacket.from_triples(self.states)
            if self.renormalize:
                return packet.normalized()
            return packet.require_normalized()
        except ValueError as e:
            raise ConfigError(str(e), field="packet.states")

    def times(self):
        return time_grid(self.t_start, self.t_end, self.steps)

    def metadata(self):
        return {"config_digest": self.digest(), "config": self.to_dict()}


def load_config(path):
    """Lee la configuracion JSON; los errores de sintaxis llevan linea y columna."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read configuration: {e}", field="--config")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, line=e.lineno, column=e.colno)
    return RunConfig.from_dict(data)


def apply_overrides(run, args):
    # Los flags de linea de comandos tienen prioridad sobre el fichero
    if getattr(args, "packet", None):
        try:
            text = Path(args.packet).read_text(encoding="utf-8")
            run.states = [list(t) for t in WavePacket.from_text(text, tolerance=np.inf).to_triples()]
        except (OSError, ValueError) as e:
            raise ConfigError(str(e), field="--packet")
    if getattr(args, "renormalize", False):
        run.renormalize = True
    if getattr(args, "out", None):
        run.out = args.out
    if getattr(args, "format", None):
        run.fmt = args.format
    if getattr(args, "threshold", None) is not None:
        run.threshold = args.threshold
    if getattr(args, "n", None) is not None:
        run.n = args.n
        run.n_levels = args.n
    return run.validate()


def _write(run, df, name):
    path = Path(run.out) / f"{name}.{run.fmt}"
    write_table(df, path, run.fmt, metadata=run.metadata())
    return path


# --- Subcomandos ---

def cmd_eigen(run):
    """Tabla (n, E_n, k_n) de los primeros n_levels autoestados."""
    rows = []
    for n in range(1, run.n_levels + 1):
        rows.append({"n": n, "E_n": eigenvalue(n, run.well), "k_n": run.well.wavenumber(n)})
    return pd.DataFrame(rows, columns=["n", "E_n", "k_n"])


def cmd_verify(run, workers=None):
    """
    <p>, d<p>/dt, <dV/dx> y residuo de Ehrenfest en cada tiempo.

    Returns:
    - (DataFrame, max |residuo|)
    """
    packet = run.packet()
    times = run.times()
    columns = {
        "momentum": momentum_expectation,
        "momentum_rate": momentum_rate,
        "force": force_expectation,
    }
    df = pd.DataFrame({"t": times})
    for name, observable in columns.items():
        df[name] = sample_series(observable, packet, times, run.well, label=name, workers=workers).values
    df["residual"] = df["momentum_rate"] + df["force"]
    max_residual = float(df["residual"].abs().max())
    return df, max_residual


def cmd_symbolic(run, n):
    """Derivacion simbolica de V Psi_n y comprobacion de la forma simetrica."""
    from dist_calc import (
        differentiate,
        potential_term,
        symmetric_specification_form,
        wave_function,
    )

    psi = wave_function(n, run.well)
    second = differentiate(differentiate(psi))
    potential = potential_term(n, run.well)
    symmetric = symmetric_specification_form(n, run.well)
    check = "PASS" if symmetric.equals(potential) else "FAIL"
    lines = [
        f"Psi_{n}      = {psi.to_text()}",
        f"Psi_{n}''    = {second.to_text()}",
        f"V Psi_{n}    = {potential.to_text()}",
        f"symmetric  = {symmetric.to_text()}",
        f"symmetric == V Psi_{n}: {check}",
    ]
    return "\n".join(lines)


def cmd_oracle(run, workers=None):
    """
    Estudio de convergencia del pozo finito y comprobacion en malla del paquete en t_start.

    Returns:
    - (tabla de convergencia, tabla de comprobacion en malla)
    """
    from oracles import GridField, Observable, convergence_study, grid_expectation

    E1 = eigenvalue(1, run.well)
    ladder = [ratio * E1 for ratio in run.ladder]
    study = convergence_study(run.well, [tuple(p) for p in run.pairs], ladder, workers=workers)

    packet = run.packet()
    t = run.t_start
    grid = GridField.from_packet(packet, t, run.well, points=run.grid_points)
    checks = []
    for observable, closed_form in ((Observable.POSITION, position_expectation), (Observable.MOMENTUM, momentum_expectation)):
        numeric = grid_expectation(grid, observable)
        exact = closed_form(packet, t, run.well)
        checks.append({"observable": observable.value, "t": t, "grid": numeric, "closed_form": exact, "abs_err": abs(numeric - exact)})
    return study, pd.DataFrame(checks, columns=["observable", "t", "grid", "closed_form", "abs_err"])


def cmd_evolve(run, workers=None):
    """Series temporales de <p>, <x> y <dV/dx> para graficar externamente."""
    packet = run.packet()
    times = run.times()
    paths = []
    for label, observable in (("momentum", momentum_expectation), ("position", position_expectation), ("force", force_expectation)):
        series = sample_series(observable, packet, times, run.well, label=label, workers=workers)
        series = TimeSeries(series.times, series.values, label, {**series.metadata, **run.metadata()})
        path = Path(run.out) / f"evolve_{label}.{run.fmt}"
        try:
            series.export(path, run.fmt)
        except OSError as e:
            raise OSError(f"could not write {path}: {e}") from e
        paths.append(path)
    return paths


# Interfaz de linea de comandos
def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="Fichero JSON de configuracion")
    common.add_argument("--out", type=str, help="Directorio de salida para los resultados")
    common.add_argument("--format", choices=["csv", "json"], help="Formato de los ficheros de salida")
    common.add_argument("--threshold", type=float, help="Umbral del residuo de Ehrenfest (verify)")
    common.add_argument("--n", type=int, help="Numero cuantico (symbolic) o numero de niveles (eigen)")
    common.add_argument("--packet", type=str, help="Fichero de texto con ternas 'n re im'")
    common.add_argument("--renormalize", action="store_true", help="Normalizar el paquete en lugar de rechazarlo")
    common.add_argument("--workers", type=int, default=None, help="Hilos para mallas temporales y escaleras de V0")
    common.add_argument("--verbose", action="store_true", help="Mensajes de depuracion")

    parser = argparse.ArgumentParser(description="Pozo cuadrado infinito: calculo distribucional, dinamica espectral y oraculos")
    subparsers = parser.add_subparsers(dest="command")
    subparsers.add_parser("eigen", parents=[common], help="Autovalores y numeros de onda")
    subparsers.add_parser("evolve", parents=[common], help="Series temporales de valores esperados")
    subparsers.add_parser("verify", parents=[common], help="Residuo de Ehrenfest")
    subparsers.add_parser("symbolic", parents=[common], help="Derivacion simbolica de V Psi_n")
    subparsers.add_parser("oracle", parents=[common], help="Convergencia del pozo finito")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        print("\nError: Debes especificar un subcomando.")
        return EXIT_ERROR

    if args.verbose:
        logging.basicConfig(level=logging.DEBUG, format="%(levelname)s %(name)s: %(message)s")

    try:
        run = load_config(args.config) if args.config else RunConfig()
        run = apply_overrides(run, args)

        if args.command == "eigen":
            df = cmd_eigen(run)
            print(human_table(df))
            print(f"\nTabla guardada en {_write(run, df, 'eigen')}")

        elif args.command == "verify":
            df, max_residual = cmd_verify(run, args.workers)
            print(human_table(df))
            path = _write(run, df, "verify")
            print(f"\nmax |residual| = {max_residual:.6g} (threshold {run.threshold:g})")
            print(f"Informe guardado en {path}")
            if max_residual > run.threshold:
                print("Error: el residuo supera el umbral.")
                return EXIT_THRESHOLD

        elif args.command == "symbolic":
            text = cmd_symbolic(run, run.n)
            print(text)
            path = Path(run.out) / f"symbolic_n{run.n}.txt"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text + "\n", encoding="utf-8")

        elif args.command == "oracle":
            from oracles import summarize_convergence

            print(f"Resolviendo pozos finitos para {len(run.ladder)} valores de V0...")
            study, checks = cmd_oracle(run, args.workers)
            print(human_table(study))
            print()
            print(human_table(checks))
            print(f"\nEstudio guardado en {_write(run, study, 'oracle')}")
            _write(run, checks, "grid_check")
            summary_path = write_json(
                {"metadata": run.metadata(), "summary": summarize_convergence(study)},
                Path(run.out) / "oracle_summary.json",
            )
            print(f"Resumen guardado en {summary_path}")

        elif args.command == "evolve":
            paths = cmd_evolve(run, args.workers)
            for path in paths:
                print(f"Serie guardada en {path}")

    except (ValueError, OSError) as e:
        print(f"Error: {e}")
        return EXIT_ERROR

    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
