"""CSV, PGM and JSON writers for correlation tensors."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .correlation import CorrelationTensor, g2_from_g4

FLATTENING_NOTE = "row/col index of pair (p,q), sites 1-based: (p-1)*N+(q-1)"


def time_label(t: float) -> str:
    return format(float(t), ".10g")


def write_matrix_csv(path: Path, matrix: np.ndarray, header: str) -> None:
    lines = [f"# {header}"]
    lines.extend(",".join(format(float(v), ".17g") for v in row) for row in matrix)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix_csv(path: Path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", comments="#", ndmin=2)


def read_g4_csv(re_path: Path, im_path: Path) -> np.ndarray:
    return read_matrix_csv(re_path) + 1j * read_matrix_csv(im_path)


def write_pgm(path: Path, magnitude: np.ndarray, cell: int = 16) -> None:
    """Plain (P2) grayscale heatmap, each matrix entry drawn as a ``cell`` square."""
    peak = float(magnitude.max(initial=0.0))
    levels = np.zeros(magnitude.shape, dtype=int) if peak == 0 else np.rint(255 * magnitude / peak).astype(int)
    img = np.kron(levels, np.ones((cell, cell), dtype=int))
    rows = [" ".join(str(v) for v in row) for row in img]
    text = f"P2\n{img.shape[1]} {img.shape[0]}\n255\n" + "\n".join(rows) + "\n"
    Path(path).write_text(text, encoding="ascii")


def write_snapshot(out_dir: Path, g: CorrelationTensor, heatmap: bool = True,
                   label: str | None = None) -> dict:
    """Write the CSV pair, G2 CSV and optional heatmap for one tensor.

    Returns the written file names keyed by role.
    """
    out_dir = Path(out_dir)
    n = g.n_sites
    tag = label if label is not None else "t" + time_label(g.time)
    header = f"N={n}; t={time_label(g.time)}; {FLATTENING_NOTE}"
    files = {
        "g4_re": f"g4_{tag}_re.csv",
        "g4_im": f"g4_{tag}_im.csv",
        "g2": f"g2_{tag}.csv",
    }
    write_matrix_csv(out_dir / files["g4_re"], g.matrix.real, "G4 real part; " + header)
    write_matrix_csv(out_dir / files["g4_im"], g.matrix.imag, "G4 imaginary part; " + header)
    write_matrix_csv(out_dir / files["g2"], g2_from_g4(g), f"G2[p,q], p,q = 1..{n}; t={time_label(g.time)}")
    if heatmap:
        files["heatmap"] = f"g4_{tag}.pgm"
        write_pgm(out_dir / files["heatmap"], np.abs(g.matrix))
    return files


def write_json(path: Path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
