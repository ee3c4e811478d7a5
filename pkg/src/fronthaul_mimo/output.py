"""CSV emission and run manifests.

Floats are written with ``repr`` so that every value round-trips exactly.
Files are UTF-8 with LF line endings on every platform.
"""
import csv
import io
import json
import numbers
from dataclasses import dataclass, field
from datetime import datetime, timezone

__all__ = [
    "SWEEP_HEADER",
    "MSE_HEADER",
    "RunManifest",
    "format_value",
    "sweep_csv",
    "mse_csv",
    "write_text",
    "manifest_path",
    "read_sweep_csv",
]

SWEEP_HEADER = ["q", "b", "csi_mode", "rho_ul_db", "rho_dl_db", "ul_rate", "dl_rate",
                "bidir_rate", "trials", "seed"]
MSE_HEADER = ["mode", "q", "n_p", "rho_db", "mse_analytic", "mse_empirical"]


def format_value(v):
    if v is None:
        return ""
    if isinstance(v, numbers.Integral):
        return str(int(v))
    if isinstance(v, numbers.Real):
        return repr(float(v))
    return str(v)


def _table(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format_value(x) for x in r])
    return buf.getvalue()


def sweep_csv(rows):
    """Text of the sweep CSV for a list of :class:`~fronthaul_mimo.engine.SweepRow`."""
    return _table(SWEEP_HEADER, ([getattr(r, k) for k in SWEEP_HEADER] for r in rows))


def mse_csv(rows):
    return _table(MSE_HEADER, ([getattr(r, k) for k in MSE_HEADER] for r in rows))


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def read_sweep_csv(path):
    """Parse a sweep CSV back into dicts with typed columns."""
    with open(path, encoding="utf-8", newline="") as fh:
        out = []
        for rec in csv.DictReader(fh):
            rec["q"], rec["b"] = int(rec["q"]), int(rec["b"])
            rec["trials"], rec["seed"] = int(rec["trials"]), int(rec["seed"])
            for k in ("rho_ul_db", "rho_dl_db", "ul_rate", "dl_rate", "bidir_rate"):
                rec[k] = float(rec[k])
            out.append(rec)
    return out


def manifest_path(out_path):
    return f"{out_path}.manifest.json"


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Provenance written next to every output file."""

    command: str
    config: dict
    config_digest: str
    seed: int
    version: str
    outputs: list = field(default_factory=list)
    started: str = field(default_factory=_now)
    finished: str | None = None

    def finish(self):
        self.finished = _now()

    def to_json(self):
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"

    def write(self, out_path):
        path = manifest_path(out_path)
        write_text(path, self.to_json())
        return path
