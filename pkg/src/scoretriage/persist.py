"""File formats: response CSVs, scale/matrix/report JSON, audit CSVs.

Every loader re-validates what it reads. Floats are written with ``repr``
so they round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path
from typing import Iterable, Sequence, Union

from .aggregation import GlobalTable
from .core import MISSING, AgreementMatrix, Dataset, ScoreScale, ValidationError, require_valid
from .samplers import SamplingWeights

PathLike = Union[str, Path]

RESPONSE_HEADER = ["candidate_id", "item_id", "machine_label", "human_label"]
GLOBAL_HEADER = ["candidate_id", "global_machine", "global_human"]

_NEWLINE = re.compile(rb"\r\n|\r|\n")


def _dump_json(obj, path: PathLike) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _read_json(path: PathLike):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}: malformed JSON at byte {e.pos}: {e.msg}") from None


def save_scale(scale: ScoreScale, path: PathLike) -> None:
    _dump_json(list(scale.classes), path)


def load_scale(path: PathLike) -> ScoreScale:
    data = _read_json(path)
    if not isinstance(data, list):
        raise ValidationError(f"{path}: scale file must hold a JSON array of labels")
    return ScoreScale(tuple(data))


def _as_scale(scale) -> ScoreScale:
    return scale if isinstance(scale, ScoreScale) else load_scale(scale)


def _line_offsets(raw: bytes) -> list[int]:
    starts = [0]
    starts.extend(m.end() for m in _NEWLINE.finditer(raw))
    return starts


def load_dataset(responses_path: PathLike, scale) -> Dataset:
    """Read a response CSV; ``scale`` is a ScoreScale or a scale-file path."""
    scale = _as_scale(scale)
    raw = Path(responses_path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ValidationError(f"{responses_path}: invalid UTF-8 at byte offset {e.start}") from None
    if text.startswith("\ufeff"):
        text = text[1:]
    offsets = _line_offsets(raw)
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)

    def where(row_number: int, line_index: int) -> str:
        offset = offsets[min(line_index, len(offsets) - 1)]
        return f"{responses_path}: row {row_number} (byte offset {offset})"

    cands, items, machine, human = [], [], [], []
    line_before = 0
    row_number = 0
    try:
        for row in reader:
            start_line, line_before = line_before, reader.line_num
            if row_number == 0:
                if row != RESPONSE_HEADER:
                    raise ValidationError(f"{where(0, start_line)}: header must be {','.join(RESPONSE_HEADER)}")
                row_number += 1
                continue
            if not row:
                continue
            if len(row) != len(RESPONSE_HEADER):
                raise ValidationError(f"{where(row_number, start_line)}: expected 4 fields, got {len(row)}")
            cid, iid, m, h = row
            labels = []
            for value in (m, h):
                if value == "":
                    labels.append(MISSING)
                elif value in scale:
                    labels.append(scale.index_of(value))
                else:
                    raise ValidationError(f"{where(row_number, start_line)}: unknown label {value!r}")
            cands.append(cid)
            items.append(iid)
            machine.append(labels[0])
            human.append(labels[1])
            row_number += 1
    except csv.Error as e:
        raise ValidationError(f"{where(row_number, line_before)}: malformed CSV: {e}") from None
    if row_number == 0:
        raise ValidationError(f"{responses_path}: empty file")
    return require_valid(Dataset(scale, cands, items, machine, human))


def save_dataset(dataset: Dataset, path: PathLike) -> None:
    """UTF-8 CSV sorted by (candidate_id, item_id); absent labels are empty."""
    scale = dataset.scale

    def label(v):
        return "" if v == MISSING else scale.label_of(int(v))

    order = sorted(range(len(dataset)), key=lambda i: (dataset.candidate_ids[i], dataset.item_ids[i]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESPONSE_HEADER)
        for i in order:
            writer.writerow([dataset.candidate_ids[i], dataset.item_ids[i],
                             label(dataset.machine[i]), label(dataset.human[i])])


def save_matrix(matrix: AgreementMatrix, path: PathLike) -> None:
    _dump_json({
        "scale": list(matrix.scale.classes),
        "probs": [[float(p) for p in row] for row in matrix.probs],
        "row_counts": [int(c) for c in matrix.row_counts],
    }, path)


def load_matrix(path: PathLike, scale=None) -> AgreementMatrix:
    data = _read_json(path)
    if not isinstance(data, dict) or not {"scale", "probs", "row_counts"} <= set(data):
        raise ValidationError(f"{path}: matrix file needs keys scale, probs, row_counts")
    matrix_scale = ScoreScale(tuple(data["scale"]))
    if scale is not None and _as_scale(scale) != matrix_scale:
        raise ValidationError(f"{path}: matrix scale does not match the scale file")
    try:
        return AgreementMatrix(matrix_scale, data["probs"], data["row_counts"])
    except ValidationError as e:
        raise ValidationError(f"{path}: {e}") from None
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{path}: malformed matrix: {e}") from None


def save_weights(weights: SamplingWeights, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        records = bool(weights.keys) and isinstance(weights.keys[0], tuple)
        writer.writerow(["candidate_id", "item_id", "probability"] if records else ["identifier", "probability"])
        for key, p in zip(weights.keys, weights.probs):
            writer.writerow([*key, repr(float(p))] if records else [key, repr(float(p))])


def save_sample(sample: Sequence, path: PathLike) -> None:
    """Drawn identifiers in draw order."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        records = bool(sample) and isinstance(sample[0], tuple)
        writer.writerow(["rank", "candidate_id", "item_id"] if records else ["rank", "identifier"])
        for rank, key in enumerate(sample):
            writer.writerow([rank, *key] if records else [rank, key])


def save_global_table(table: GlobalTable, scale: ScoreScale, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GLOBAL_HEADER)
        for cid, (m, h) in table.rows.items():
            writer.writerow([cid, scale.label_of(m), "" if h is None else scale.label_of(h)])


def save_json(obj, path: PathLike) -> None:
    if hasattr(obj, "to_dict"):
        obj = obj.to_dict()
    _dump_json(obj, path)


def write_rows(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """CSV with floats written via repr."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
