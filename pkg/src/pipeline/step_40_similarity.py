"""Step 40: Semantic agreement between two unique codebooks.

Codes are embedded as "Name. Description", compared pairwise by cosine
similarity, and the matrix is reordered by linear assignment so the best
one-to-one matches sit on the leading diagonal.
"""

import logging
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from matplotlib.colors import Normalize  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402
from scipy.optimize import linear_sum_assignment  # noqa: E402

from src.codebook.csv_io import read_ucc_entries  # noqa: E402
from src.codebook.cumulative import code_text  # noqa: E402
from src.llm.embeddings import EmbeddingProvider, embed  # noqa: E402
from src.pipeline.errors import InputError, MetricError  # noqa: E402
from src.schemas.models import Assignment, SimilarityMatrix  # noqa: E402

logger = logging.getLogger(__name__)

PAD_VALUE = -1.0
DEFAULT_HIGHLIGHT = 0.75
_SLACK = 1e-9


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    """u.v / (|u||v|); zero vectors are rejected."""
    a = np.asarray(u, dtype=float)
    b = np.asarray(v, dtype=float)
    if a.shape != b.shape:
        raise MetricError(f"Vector shapes differ: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise MetricError("Cosine is undefined for a zero vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def _unit_rows(vectors: np.ndarray, side: str) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise MetricError(f"Zero vector among the {side} embeddings")
    return vectors / norms


def cosine_matrix(
    a: np.ndarray,
    b: np.ndarray,
    row_labels: Optional[list[str]] = None,
    col_labels: Optional[list[str]] = None,
) -> SimilarityMatrix:
    """Pairwise cosine of every row of a against every row of b."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise MetricError(f"Embedding dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    values = np.clip(_unit_rows(a, "row") @ _unit_rows(b, "column").T, -1.0, 1.0)
    return SimilarityMatrix(
        row_labels=row_labels or [str(i) for i in range(a.shape[0])],
        col_labels=col_labels or [str(j) for j in range(b.shape[0])],
        values=values.tolist(),
    )


def optimal_diagonal_ordering(m: SimilarityMatrix) -> tuple[Assignment, SimilarityMatrix]:
    """Trace-maximizing matching and the matrix with matches on the diagonal.

    Rectangular matrices are padded to square with -1; padded matches are dropped.
    Unmatched rows and columns follow the matched block in their original order.
    """
    values = np.asarray(m.values, dtype=float)
    if values.size == 0:
        raise MetricError("Cannot order an empty similarity matrix")
    n_rows, n_cols = values.shape
    size = max(n_rows, n_cols)
    padded = np.full((size, size), PAD_VALUE)
    padded[:n_rows, :n_cols] = values

    row_ind, col_ind = linear_sum_assignment(1.0 - padded)
    pairs = [(int(r), int(c)) for r, c in zip(row_ind, col_ind) if r < n_rows and c < n_cols]
    score = float(sum(values[r, c] for r, c in pairs))

    matched_rows = [r for r, _ in pairs]
    matched_cols = [c for _, c in pairs]
    row_order = matched_rows + [r for r in range(n_rows) if r not in matched_rows]
    col_order = matched_cols + [c for c in range(n_cols) if c not in matched_cols]

    assignment = Assignment(pairs=pairs, score=score, row_order=row_order, col_order=col_order)
    reordered = SimilarityMatrix(
        row_labels=[m.row_labels[r] for r in row_order],
        col_labels=[m.col_labels[c] for c in col_order],
        values=values[np.ix_(row_order, col_order)].tolist(),
        ordering=assignment,
    )
    logger.debug(f"Assignment over {n_rows}x{n_cols}: {len(pairs)} pairs, score {score:.4f}")
    return assignment, reordered


def write_matrix_csv(m: SimilarityMatrix, path: Path) -> None:
    """Labeled matrix CSV at full precision."""
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(m.values, index=m.row_labels, columns=m.col_labels)
    df.to_csv(path, index_label="code", encoding="utf-8", lineterminator="\n")


def read_matrix_csv(path: Path) -> SimilarityMatrix:
    """Inverse of write_matrix_csv."""
    if not path.exists():
        raise InputError(f"Matrix CSV not found: {path}")
    # Raw cells: labels may repeat or look like missing values
    raw = pd.read_csv(
        path, header=None, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8"
    )
    cells = raw.to_numpy(dtype=object)
    return SimilarityMatrix(
        row_labels=[str(label) for label in cells[1:, 0]],
        col_labels=[str(label) for label in cells[0, 1:]],
        values=[[float(v) for v in row] for row in cells[1:, 1:]],
    )


def write_heatmap_svg(
    m: SimilarityMatrix, path: Path, threshold: Optional[float] = DEFAULT_HIGHLIGHT
) -> int:
    """Red-intensity heatmap; cells at or above threshold get a box. Returns highlight count."""
    values = np.asarray(m.values, dtype=float)
    n_rows, n_cols = values.shape
    cmap = plt.get_cmap("Reds")
    norm = Normalize(vmin=0.0, vmax=1.0, clip=True)

    plt.rcParams["svg.hashsalt"] = "its-heatmap"
    fig, ax = plt.subplots(figsize=(max(4.0, 0.3 * n_cols + 3), max(3.0, 0.3 * n_rows + 2)))
    highlights = 0
    for i in range(n_rows):
        for j in range(n_cols):
            cell = Rectangle(
                (j, i), 1, 1, facecolor=cmap(norm(values[i, j])), edgecolor="white", linewidth=0.3
            )
            cell.set_gid(f"cell-{i}-{j}")
            ax.add_patch(cell)
            if threshold is not None and values[i, j] >= threshold - _SLACK:
                box = Rectangle((j, i), 1, 1, fill=False, edgecolor="black", linewidth=1.2)
                box.set_gid(f"highlight-{i}-{j}")
                ax.add_patch(box)
                highlights += 1

    ax.set_xlim(0, n_cols)
    ax.set_ylim(n_rows, 0)
    ax.set_aspect("equal")
    fontsize = 6 if max(n_rows, n_cols) > 20 else 8
    ax.set_xticks(np.arange(n_cols) + 0.5)
    ax.set_xticklabels(m.col_labels, rotation=90, fontsize=fontsize)
    ax.set_yticks(np.arange(n_rows) + 0.5)
    ax.set_yticklabels(m.row_labels, fontsize=fontsize)
    fig.colorbar(plt.cm.ScalarMappable(norm=norm, cmap=cmap), ax=ax, label="cosine similarity")
    fig.tight_layout()

    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return highlights


def export_matrix(
    m: SimilarityMatrix,
    csv_path: Path,
    svg_path: Path,
    threshold: Optional[float] = DEFAULT_HIGHLIGHT,
) -> None:
    """Write the matrix CSV and heatmap SVG."""
    write_matrix_csv(m, csv_path)
    highlights = write_heatmap_svg(m, svg_path, threshold)
    logger.info(
        f"Exported {len(m.row_labels)}x{len(m.col_labels)} matrix to {csv_path} "
        f"({highlights} cells >= {threshold})"
    )


def similarity_between(
    left_ucc: Path, right_ucc: Path, provider: EmbeddingProvider, batch_size: int = 64
) -> SimilarityMatrix:
    """Cosine matrix between two UCC CSVs, rows from left and columns from right."""
    left = read_ucc_entries(left_ucc)
    right = read_ucc_entries(right_ucc)
    if not left or not right:
        raise InputError(f"Empty codebook: {left_ucc if not left else right_ucc}")
    logger.info(
        f"Step 40: embedding {len(left)} + {len(right)} codes with provider '{provider.name}'"
    )
    a = embed([code_text(e.code) for e in left], provider, batch_size)
    b = embed([code_text(e.code) for e in right], provider, batch_size)
    return cosine_matrix(a, b, [e.code.name for e in left], [e.code.name for e in right])
