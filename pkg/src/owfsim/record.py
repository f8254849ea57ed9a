"""Run records: the sampled time series of every labeled signal, plus CSV I/O.

The CSV layout is fixed and documented in the README: comment lines starting
with '#' carry a JSON header that fully reconstructs the run (resolved
scenario, simulation config, status), followed by a column-name row and
RFC-4180-style rows with dot-decimal floats.  Writing is deterministic, so
identical runs produce bit-identical files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

STATUS_CONVERGED = "converged"
STATUS_DIVERGED = "diverged"

# Per-string columns, in order; '{k}' is the 1-based string index.
STRING_COLUMNS = (
    "vpcc_mag_{k}", "p_{k}", "q_{k}", "p_virt_{k}", "q_virt_{k}",
    "i_mag_{k}", "i_ref0_mag_{k}", "omega_{k}", "v_ref_{k}", "phi_rel_{k}",
    "lim_p_{k}", "lim_i_{k}",
)
DC_COLUMNS = ("v_on", "v_dc_off", "i_dc")


def column_names(n_strings: int) -> list[str]:
    names = ["t"]
    for k in range(1, n_strings + 1):
        names += [c.format(k=k) for c in STRING_COLUMNS]
    names += list(DC_COLUMNS)
    return names


@dataclass
class RunRecord:
    header: dict
    columns: dict[str, np.ndarray]
    status: str = STATUS_CONVERGED
    diverged_at: float | None = None

    @property
    def n_strings(self) -> int:
        return self.header["scenario"]["n_strings"]

    @property
    def t(self) -> np.ndarray:
        return self.columns["t"]

    def col(self, name: str, k: int | None = None) -> np.ndarray:
        return self.columns[name if k is None else f"{name}_{k}"]

    def to_csv(self, path) -> None:
        names = column_names(self.n_strings)
        meta = {
            "header": self.header,
            "status": self.status,
            "diverged_at": self.diverged_at,
        }
        cols = [self.columns[n] for n in names]
        rows = len(cols[0])
        with open(path, "w", newline="") as f:
            f.write("# " + json.dumps(meta, sort_keys=True) + "\n")
            f.write(",".join(names) + "\n")
            for i in range(rows):
                f.write(",".join(repr(float(c[i])) for c in cols) + "\n")

    @classmethod
    def from_csv(cls, path) -> "RunRecord":
        with open(path) as f:
            first = f.readline()
            if not first.startswith("# "):
                raise ValueError(f"{path}: missing JSON header line")
            meta = json.loads(first[2:])
            names = f.readline().strip().split(",")
            data = np.loadtxt(f, delimiter=",", ndmin=2)
        if data.size == 0:
            data = np.empty((0, len(names)))
        columns = {n: data[:, i] for i, n in enumerate(names)}
        return cls(header=meta["header"], columns=columns,
                   status=meta["status"], diverged_at=meta["diverged_at"])
