import json
from pathlib import Path

import numpy as np
import pandas as pd

# Formatos fijos: 17 cifras para ficheros, 6 para tablas legibles
MACHINE_FLOAT_FORMAT = "%.17g"
HUMAN_SIGNIFICANT_DIGITS = 6


class NumpyEncoder(json.JSONEncoder):
    """
    Custom JSON encoder that handles NumPy types
    """
    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, np.complexfloating):
            return {"re": float(obj.real), "im": float(obj.imag)}
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        elif isinstance(obj, np.bool_):
            return bool(obj)
        return json.JSONEncoder.default(self, obj)


def human_table(df):
    # Tabla para consola con 6 cifras significativas
    return df.to_string(index=False, float_format=lambda v: f"{v:.{HUMAN_SIGNIFICANT_DIGITS}g}")


def table_to_csv_text(df):
    return df.to_csv(index=False, float_format=MACHINE_FLOAT_FORMAT, lineterminator="\n")


def table_to_json_document(df, metadata=None):
    # No usamos df.to_json: recorta la precision a 15 cifras
    records = [{col: _plain(value) for col, value in row.items()} for row in df.to_dict(orient="records")]
    return {"metadata": metadata or {}, "columns": list(df.columns), "records": records}


def _plain(value):
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return None if np.isnan(value) else value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(document, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, cls=NumpyEncoder, indent=2, sort_keys=False)
        f.write("\n")
    return path


def write_table(df, path, fmt="csv", metadata=None):
    """
    Escribe un DataFrame como CSV (columnas en orden fijo) o como JSON con bloque de metadatos.

    Returns:
    - Path del fichero escrito
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(table_to_csv_text(df))
    elif fmt == "json":
        write_json(table_to_json_document(df, metadata), path)
    else:
        raise ValueError(f"unknown output format {fmt!r}; use 'csv' or 'json'")
    return path


def read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def frame_from_json_document(document):
    return pd.DataFrame(document["records"], columns=document["columns"])
