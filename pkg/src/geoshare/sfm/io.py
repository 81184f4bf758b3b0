"""Track and intrinsics CSV ingestion (the pipeline's input boundary)."""
from __future__ import annotations

import csv
import os

from .model import CameraIntrinsics, FeatureTrack, SfmError


def load_tracks(path: str | os.PathLike) -> list:
    """CSV with header track_id,image_id,u,v."""
    tracks: dict = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"track_id", "image_id", "u", "v"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise SfmError(f"track file needs columns {sorted(expected)}")
        for lineno, row in enumerate(reader, 2):
            try:
                tracks.setdefault(row["track_id"], []).append(
                    (row["image_id"], float(row["u"]), float(row["v"]))
                )
            except (TypeError, ValueError) as e:
                raise SfmError(f"{path}:{lineno}: bad track row: {e}") from None
    return [
        FeatureTrack(track_id=tid, observations=tuple(obs))
        for tid, obs in sorted(tracks.items())
    ]


def save_tracks(tracks, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["track_id", "image_id", "u", "v"])
        for track in tracks:
            for image_id, u, v in track.observations:
                writer.writerow([track.track_id, image_id,
                                 format(u, ".17g"), format(v, ".17g")])


def load_intrinsics(path: str | os.PathLike) -> dict:
    """CSV with header image_id,fx,fy,cx,cy,width,height."""
    out: dict = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"image_id", "fx", "fy", "cx", "cy", "width", "height"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise SfmError(f"intrinsics file needs columns {sorted(expected)}")
        for lineno, row in enumerate(reader, 2):
            try:
                out[row["image_id"]] = CameraIntrinsics(
                    fx=float(row["fx"]), fy=float(row["fy"]),
                    cx=float(row["cx"]), cy=float(row["cy"]),
                    width=int(row["width"]), height=int(row["height"]),
                )
            except (TypeError, ValueError) as e:
                raise SfmError(f"{path}:{lineno}: bad intrinsics row: {e}") from None
    return out


def save_intrinsics(intrinsics: dict, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_id", "fx", "fy", "cx", "cy", "width", "height"])
        for image_id in sorted(intrinsics):
            k = intrinsics[image_id]
            writer.writerow([image_id, format(k.fx, ".17g"), format(k.fy, ".17g"),
                             format(k.cx, ".17g"), format(k.cy, ".17g"),
                             k.width, k.height])
