"""Tests for cosine matrices, diagonal ordering and the heatmap export."""

import itertools
from pathlib import Path

import numpy as np
import pytest

from src.codebook.csv_io import write_ucc
from src.codebook.cumulative import append_unique
from src.llm.embeddings import HashEmbeddingProvider, embed
from src.pipeline.commands import cmd_eval_similarity
from src.pipeline.config import get_config
from src.pipeline.errors import EmbeddingError, MetricError
from src.pipeline.step_40_similarity import (
    cosine,
    cosine_matrix,
    optimal_diagonal_ordering,
    read_matrix_csv,
    similarity_between,
    write_heatmap_svg,
    write_matrix_csv,
)
from src.schemas.models import SimilarityMatrix, UniqueCumulativeCodebook
from tests.conftest import make_code


def _matrix(values: list[list[float]]) -> SimilarityMatrix:
    return SimilarityMatrix(
        row_labels=[f"r{i}" for i in range(len(values))],
        col_labels=[f"c{j}" for j in range(len(values[0]))],
        values=values,
    )


def _brute_force(values: np.ndarray) -> float:
    """Best one-to-one matching by enumerating every injective map."""
    if values.shape[0] > values.shape[1]:
        values = values.T
    n_rows, n_cols = values.shape
    return max(
        sum(values[r, c] for r, c in zip(range(n_rows), cols))
        for cols in itertools.permutations(range(n_cols), n_rows)
    )


def test_two_by_two_assignment() -> None:
    """Diagonal already optimal: score 1.7, order unchanged."""
    assignment, ordered = optimal_diagonal_ordering(_matrix([[0.9, 0.1], [0.2, 0.8]]))
    assert sorted(assignment.pairs) == [(0, 0), (1, 1)]
    assert assignment.score == pytest.approx(1.7)
    assert ordered.values == [[0.9, 0.1], [0.2, 0.8]]


def test_reordering_puts_matches_on_the_diagonal() -> None:
    """Swapped columns come back to the diagonal with their labels."""
    assignment, ordered = optimal_diagonal_ordering(_matrix([[0.1, 0.9], [0.8, 0.2]]))
    assert assignment.score == pytest.approx(1.7)
    assert [ordered.values[i][i] for i in range(2)] == [0.9, 0.8]
    assert ordered.col_labels == ["c1", "c0"]
    assert ordered.ordering == assignment


def test_assignment_matches_brute_force() -> None:
    """Random matrices up to 7x7, square and rectangular."""
    rng = np.random.default_rng(11)
    for _ in range(100):
        shape = (int(rng.integers(1, 8)), int(rng.integers(1, 8)))
        values = rng.uniform(-1.0, 1.0, size=shape)
        assignment, _ = optimal_diagonal_ordering(_matrix(values.tolist()))
        assert assignment.score == pytest.approx(_brute_force(values), abs=1e-9)
        assert len(assignment.pairs) == min(shape)


def test_assignment_score_ignores_input_order() -> None:
    """Permuting rows and columns first leaves the optimum unchanged."""
    rng = np.random.default_rng(3)
    values = rng.uniform(0.0, 1.0, size=(6, 6))
    base, _ = optimal_diagonal_ordering(_matrix(values.tolist()))
    shuffled = values[rng.permutation(6)][:, rng.permutation(6)]
    again, _ = optimal_diagonal_ordering(_matrix(shuffled.tolist()))
    assert again.score == pytest.approx(base.score)


def test_rectangular_keeps_unmatched_rows_last() -> None:
    """Extra rows follow the matched block in original order."""
    assignment, ordered = optimal_diagonal_ordering(_matrix([[0.1, 0.2], [0.9, 0.0], [0.0, 0.8]]))
    assert sorted(assignment.pairs) == [(1, 0), (2, 1)]
    assert ordered.row_labels == ["r1", "r2", "r0"]
    assert assignment.row_order[-1] == 0


def test_cosine_properties() -> None:
    """Bounded, symmetric, self-similar, and equal to the normalized dot product."""
    rng = np.random.default_rng(5)
    for _ in range(1000):
        u, v = rng.normal(size=8), rng.normal(size=8)
        c = cosine(u.tolist(), v.tolist())
        assert -1.0 <= c <= 1.0
        assert c == pytest.approx(cosine(v.tolist(), u.tolist()))
        assert c == pytest.approx(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))
    assert cosine([3.0, 4.0], [6.0, 8.0]) == pytest.approx(1.0)


def test_cosine_rejects_zero_and_mismatched_vectors() -> None:
    """Zero vectors and shape mismatches are metric errors."""
    with pytest.raises(MetricError):
        cosine([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(MetricError):
        cosine([1.0], [1.0, 0.0])
    with pytest.raises(MetricError):
        cosine_matrix(np.array([[1.0, 0.0]]), np.array([[1.0, 0.0, 0.0]]))


def test_cosine_matrix_agrees_with_pairwise_cosine() -> None:
    """Every cell equals the scalar cosine of its rows."""
    rng = np.random.default_rng(8)
    a, b = rng.normal(size=(4, 5)), rng.normal(size=(3, 5))
    m = cosine_matrix(a, b)
    for i in range(4):
        for j in range(3):
            assert m.values[i][j] == pytest.approx(cosine(a[i].tolist(), b[j].tolist()))


def test_hash_embeddings_are_deterministic() -> None:
    """Same text, same unit vector; batching does not change rows."""
    provider = HashEmbeddingProvider(dim=64)
    texts = ["Fear. Worry about the baby.", "Hope. Looking forward.", "Fear. Worry about the baby."]
    matrix = embed(texts, provider, batch_size=2)
    assert matrix.shape == (3, 64)
    assert np.allclose(matrix[0], matrix[2])
    assert np.allclose(np.linalg.norm(matrix, axis=1), 1.0)
    with pytest.raises(EmbeddingError):
        embed([], provider)


def test_matrix_csv_roundtrip(tmp_path: Path) -> None:
    """Labels and full-precision values survive the CSV."""
    m = SimilarityMatrix(
        row_labels=["Fear, again", "Hope"],
        col_labels=["Worry", "Joy"],
        values=[[0.123456789012345, -0.5], [1.0, 0.3333333333333333]],
    )
    write_matrix_csv(m, tmp_path / "m.csv")
    assert read_matrix_csv(tmp_path / "m.csv") == m



def test_matrix_csv_roundtrip_keeps_repeated_and_missing_looking_labels(tmp_path: Path) -> None:
    """Repeated names and labels like NA or null come back verbatim."""
    m = SimilarityMatrix(
        row_labels=["Trust", "NA", "null"],
        col_labels=["Trust", "Trust", "N/A"],
        values=[[1.0, 0.5, 0.25], [0.1, 0.2, 0.3], [-0.4, 0.0, 0.9]],
    )
    write_matrix_csv(m, tmp_path / "m.csv")
    assert read_matrix_csv(tmp_path / "m.csv") == m


def test_heatmap_has_one_rect_per_cell(tmp_path: Path) -> None:
    """Every cell is drawn; cells at or above the threshold are boxed."""
    m = _matrix([[0.9, 0.1, 0.75], [0.2, 0.8, 0.4]])
    path = tmp_path / "heat.svg"
    highlights = write_heatmap_svg(m, path, threshold=0.75)
    svg = path.read_text(encoding="utf-8")
    assert svg.count('id="cell-') == 6
    assert svg.count('id="highlight-') == highlights == 3
    assert write_heatmap_svg(m, tmp_path / "plain.svg", threshold=None) == 0


def _write_ucc(path: Path, *names: str) -> Path:
    ucc = UniqueCumulativeCodebook()
    for name in names:
        append_unique(ucc, make_code(name), "int01", 1)
    write_ucc(ucc, path)
    return path


def test_similarity_between_identical_codebooks(tmp_path: Path) -> None:
    """A codebook against itself: unit diagonal and a perfect matching."""
    path = _write_ucc(tmp_path / "ucc.csv", "Fear", "Hope", "Money worries")
    m = similarity_between(path, path, HashEmbeddingProvider(dim=128))
    assert [m.values[i][i] for i in range(3)] == pytest.approx([1.0, 1.0, 1.0])
    assignment, _ = optimal_diagonal_ordering(m)
    assert assignment.score == pytest.approx(3.0)


def test_cmd_eval_similarity_writes_artifacts(tmp_path: Path) -> None:
    """Raw and ordered CSV and SVG plus the assignment."""
    left = _write_ucc(tmp_path / "left.csv", "Fear", "Hope")
    right = _write_ucc(tmp_path / "right.csv", "Hope", "Fear", "Joy")
    out = tmp_path / "sim"

    assignment, ordered = cmd_eval_similarity(get_config(), left, right, out, provider="hash")

    written = sorted(p.name for p in out.iterdir())
    assert written == [
        "assignment.json",
        "similarity.csv",
        "similarity.svg",
        "similarity_ordered.csv",
        "similarity_ordered.svg",
    ]
    assert sorted(assignment.pairs) == [(0, 1), (1, 0)]
    assert ordered.col_labels[:2] == ["Fear", "Hope"]
