"""Trajectory CSV and JSON helpers shared by the CLI."""

from __future__ import annotations

import csv
import json
import re

import numpy as np

from .simulation import Trajectory

CSV_COMMENT = "# u sampled at grid points from the pre-step state; xi_norm is ||xi|| or ||zeta||"
PARTIAL_MARK = "# partial: run aborted before t_final"
_FMT = "%.17g"
_X = re.compile(r"x\[(\d+)\]\[(\d+)\]$")
_U = re.compile(r"u\[(\d+)\]\[(\d+)\]$")


def csv_header(N, n, p, *, leader=False, d_bar=False, e_bar=False):
    cols = ["t"] + [f"x[{i}][{k}]" for i in range(N) for k in range(n)]
    if leader:
        cols += [f"x0[{k}]" for k in range(n)]
    cols += [f"u[{i}][{k}]" for i in range(N) for k in range(p)]
    if d_bar:
        cols += [f"dbar[{i}]" for i in range(N)]
    if e_bar:
        cols += [f"ebar[{i}]" for i in range(N)]
    return cols + ["xi_norm"]


def trajectory_table(traj: Trajectory) -> np.ndarray:
    T = len(traj.times)
    parts = [traj.times[:, None], traj.states.reshape(T, -1)]
    if traj.leader is not None:
        parts.append(traj.leader)
    parts.append(traj.controls.reshape(T, -1))
    if traj.d_bar is not None:
        parts.append(traj.d_bar)
    if traj.e_bar is not None:
        parts.append(traj.e_bar)
    parts.append(traj.error_norm[:, None])
    return np.hstack(parts)


def write_trajectory_csv(path, traj: Trajectory):
    _, N, n = traj.states.shape
    header = csv_header(N, n, traj.controls.shape[2], leader=traj.leader is not None,
                        d_bar=traj.d_bar is not None, e_bar=traj.e_bar is not None)
    table = trajectory_table(traj)
    with open(path, "w", newline="") as fh:
        fh.write(CSV_COMMENT + "\n")
        if not traj.completed:
            fh.write(PARTIAL_MARK + "\n")
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, table, fmt=_FMT, delimiter=",")


def read_trajectory_csv(path) -> Trajectory:
    """Inverse of :func:`write_trajectory_csv`.  Raises ``ValueError`` on a malformed header."""
    with open(path, newline="") as fh:
        lines = fh.readlines()
    partial = any(line.startswith(PARTIAL_MARK) for line in lines)
    rows = list(csv.reader(line for line in lines if not line.startswith("#")))
    if not rows:
        raise ValueError("empty trajectory file")
    header, body = rows[0], rows[1:]
    if header[0] != "t" or header[-1] != "xi_norm":
        raise ValueError("trajectory header must start with 't' and end with 'xi_norm'")
    xs = [tuple(map(int, m.groups())) for m in map(_X.match, header) if m]
    us = [tuple(map(int, m.groups())) for m in map(_U.match, header) if m]
    if not xs or not us:
        raise ValueError("trajectory header has no state or control columns")
    N, n = max(i for i, _ in xs) + 1, max(k for _, k in xs) + 1
    p = max(k for _, k in us) + 1
    has_leader = any(h.startswith("x0[") for h in header)
    has_d = any(h.startswith("dbar[") for h in header)
    has_e = any(h.startswith("ebar[") for h in header)
    if header != csv_header(N, n, p, leader=has_leader, d_bar=has_d, e_bar=has_e):
        raise ValueError("trajectory header columns are not in the expected layout")
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    T = data.shape[0]
    col = 1
    states = data[:, col: col + N * n].reshape(T, N, n)
    col += N * n
    leader = None
    if has_leader:
        leader = data[:, col: col + n]
        col += n
    controls = data[:, col: col + N * p].reshape(T, N, p)
    col += N * p
    d_bar = e_bar = None
    if has_d:
        d_bar = data[:, col: col + N]
        col += N
    if has_e:
        e_bar = data[:, col: col + N]
        col += N
    err = states - leader[:, None, :] if leader is not None else states - states.mean(axis=1, keepdims=True)
    return Trajectory(times=data[:, 0], states=states, controls=controls, error=err, leader=leader,
                      d_bar=d_bar, e_bar=e_bar, monitors=[], completed=not partial)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default)


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
