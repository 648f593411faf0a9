"""File formats: label matrices, datasets, PSM CSV and JSON reports."""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .epl import OptResult, PartitionSample
from .partition import Partition
from .uncertainty import Bound, CredibleBall, HPDRegion

_SPLIT = re.compile(r"[,\s]+")


class LabelFileError(ValueError):
    """A label matrix file could not be parsed."""


def _tokens(line: str) -> list[str]:
    return [t for t in _SPLIT.split(line.strip()) if t]


def parse_label_matrix(text: str) -> np.ndarray:
    """Parse S rows of N integer labels separated by commas or whitespace.

    A single header row of non-integer tokens is allowed as the first line.
    """
    rows: list[list[int]] = []
    width = None
    seen_first = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = _tokens(line)
        if not toks:
            continue
        try:
            values = [int(t) for t in toks]
        except ValueError:
            if not seen_first:
                seen_first = True
                continue
            raise LabelFileError(f"row {lineno}: non-integer label") from None
        seen_first = True
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise LabelFileError(f"row {lineno}: expected {width} labels, found {len(values)}")
        rows.append(values)
    if not rows:
        raise LabelFileError("no label rows found")
    return np.array(rows, dtype=np.int64)


def read_sample(path) -> PartitionSample:
    return PartitionSample(parse_label_matrix(Path(path).read_text()))


def read_partition(path) -> Partition:
    mat = parse_label_matrix(Path(path).read_text())
    if mat.shape[0] != 1:
        raise LabelFileError(f"expected a single partition row, found {mat.shape[0]}")
    return Partition(mat[0])


def format_label_matrix(labels) -> str:
    if isinstance(labels, PartitionSample):
        labels = labels.labels + 1
    labels = np.atleast_2d(np.asarray(labels))
    return "".join(",".join(map(str, row)) + "\n" for row in labels.tolist())


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_sample(path, sample) -> None:
    atomic_write(path, format_label_matrix(sample))


def format_matrix(mat) -> str:
    mat = np.atleast_2d(np.asarray(mat, dtype=np.float64))
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in mat)


def read_dataset(path) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise LabelFileError(f"cannot parse dataset {path}: {exc}") from None
    if data.size == 0:
        raise LabelFileError(f"dataset {path} is empty")
    return data


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def partition_json(p: Partition) -> list[int]:
    return p.tolist()


def bound_json(b: Bound) -> dict:
    return {"labels": b.partition.tolist(), "distance": b.distance, "K": b.k}


def opt_json(res: OptResult, loss: str) -> dict:
    return {
        "loss": loss,
        "partition": res.partition.tolist(),
        "epl": res.epl,
        "K": res.k,
        "trace": list(res.trace),
        "restarts_agreeing": res.restarts_agreeing,
    }


def hpd_json(region: HPDRegion) -> dict:
    return {
        "mode": region.mode,
        "threshold": region.threshold,
        "total_mass": region.total_mass,
        "degenerate": region.degenerate,
        "members": [
            {"labels": m.partition.tolist(), "prob": m.prob, "distance": m.distance, "K": m.partition.k}
            for m in region.members
        ],
    }


def ball_json(ball: CredibleBall, hpd: HPDRegion | None = None) -> dict:
    return {
        "center": ball.center.tolist(),
        "metric": ball.metric.value,
        "level": ball.level,
        "radius": ball.radius,
        "coverage": ball.coverage,
        "n_members": len(ball.members),
        "bounds": {
            "horizontal": [bound_json(b) for b in ball.horizontal_bounds],
            "vertical_upper": [bound_json(b) for b in ball.vertical_upper_bounds],
            "vertical_lower": [bound_json(b) for b in ball.vertical_lower_bounds],
        },
        "hpd": None if hpd is None else hpd_json(hpd),
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"
