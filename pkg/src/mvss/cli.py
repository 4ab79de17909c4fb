"""Batch pipeline: point cloud CSV in, page tables and barcodes out.

Exit codes: 0 ok, 2 config error, 3 cover violation, 4 oracle mismatch,
5 internal-consistency failure.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass

from .barcode import INF, is_prime
from .complexes import cubical_cover, read_points_csv, vietoris_rips
from .errors import ConfigError, CoverViolationError, InternalConsistencyError, UsageError
from .oracle import as_multiset, standard_reduction_ph
from .runtime import TaskError, default_workers
from .spectral import persistent_homology

EXIT_OK, EXIT_CONFIG, EXIT_COVER, EXIT_MISMATCH, EXIT_INTERNAL = 0, 2, 3, 4, 5


@dataclass(frozen=True)
class RunConfig:
    input: str
    max_dim: int = 1
    max_filt: float = INF
    p: int = 5
    divisions: tuple | None = None
    overlap: float | None = None
    workers: int = 1
    out: str = "mvss_out"
    check_oracle: bool = False

    def validate(self) -> None:
        if not is_prime(self.p):
            raise ConfigError(f"prime must be prime, got {self.p}")
        if self.max_dim < 0:
            raise ConfigError("max-dim must be >= 0")
        if not (self.max_filt >= 0):
            raise ConfigError("max-filt must be >= 0")
        if self.divisions is not None and any(d < 1 for d in self.divisions):
            raise ConfigError("divisions must be >= 1")
        if self.overlap is not None and not (self.overlap >= 0):
            raise ConfigError("overlap must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


def fmt_value(x: float) -> str:
    if x == INF:
        return "inf"
    return repr(float(x))


def fmt_positions(positions) -> str:
    return "+".join(f"({a},{b})" for a, b in positions)


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _divisions(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad divisions {text!r}, expected e.g. 2,1") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mvss", description="Persistent homology of a covered Vietoris-Rips complex "
                                 "through the Mayer-Vietoris spectral sequence.")
    ap.add_argument("input", help="CSV of point coordinates, one point per row")
    ap.add_argument("--max-dim", type=int, default=1, help="highest homology degree reported (default 1)")
    ap.add_argument("--max-filt", type=_float, default=INF, help="Rips scale cutoff (default inf)")
    ap.add_argument("--prime", type=int, default=5, help="field characteristic (default 5)")
    ap.add_argument("--divisions", type=_divisions, default=None, help="cover boxes per axis, e.g. 2,1 (default 1 per axis)")
    ap.add_argument("--overlap", type=_float, default=None,
                    help="box enlargement; default 2*max-filt, which always covers every simplex")
    ap.add_argument("--workers", type=int, default=None, help="worker processes (default $MVSS_WORKERS or 1)")
    ap.add_argument("--check-oracle", action="store_true", help="compare with direct reduction, exit 4 on mismatch")
    ap.add_argument("--out", default="mvss_out", help="output directory")
    return ap


def config_from_args(ns) -> RunConfig:
    workers = default_workers() if ns.workers is None else ns.workers
    return RunConfig(ns.input, ns.max_dim, ns.max_filt, ns.prime, ns.divisions, ns.overlap,
                     workers, ns.out, ns.check_oracle)


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def run_pipeline(cfg: RunConfig) -> int:
    """Run the whole pipeline, write outputs into cfg.out, return the exit status."""
    cfg.validate()
    pts = read_points_csv(cfg.input)
    if pts.ndim != 2 or not len(pts):
        raise ConfigError(f"{cfg.input} holds no points")
    dim = pts.shape[1]
    divisions = cfg.divisions if cfg.divisions is not None else (1,) * dim
    if len(divisions) != dim:
        raise ConfigError(f"--divisions needs {dim} entries, got {len(divisions)}")
    if cfg.overlap is not None:
        overlap = cfg.overlap
    else:
        overlap = 2 * cfg.max_filt if math.isfinite(cfg.max_filt) else 0.0
    K = vietoris_rips(pts, cfg.max_dim + 1, cfg.max_filt)
    cover = cubical_cover(pts, divisions, overlap, K=K)
    ss, ext = persistent_homology(cover, cfg.max_dim, cfg.p, cfg.workers)

    os.makedirs(cfg.out, exist_ok=True)
    rows = []
    for r in sorted(ss.pages):
        for pos in sorted(ss.pages[r]):
            for bar in ss.pages[r][pos].bars:
                rows.append((r, pos[0], pos[1], fmt_value(bar.birth), fmt_value(bar.death)))
    _write_csv(os.path.join(cfg.out, "pages.csv"), ("page", "p", "q", "birth", "death"), rows)
    for n in range(cfg.max_dim + 1):
        rows = [(fmt_value(bar.birth), fmt_value(bar.death), fmt_positions(src)) for bar, src in ext[n].bars]
        _write_csv(os.path.join(cfg.out, f"PH_{n}.csv"), ("birth", "death", "source_page_positions"), rows)

    status = EXIT_OK
    if cfg.check_oracle:
        oracle = standard_reduction_ph(K, cfg.max_dim, cfg.p)
        lines = []
        for n in range(cfg.max_dim + 1):
            ours = as_multiset((b.birth, b.death) for b, _ in ext[n].bars)
            ok = ours == as_multiset(oracle[n])
            lines.append(f"PH_{n} {'PASS' if ok else 'FAIL'} bars={sum(ours.values())} oracle={len(oracle[n])}")
            if not ok:
                status = EXIT_MISMATCH
        lines.append("PASS" if status == EXIT_OK else "FAIL")
        with open(os.path.join(cfg.out, "verdict.txt"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return status


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return run_pipeline(config_from_args(ns))
    except (ConfigError, UsageError) as exc:
        print(f"mvss: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CoverViolationError as exc:
        print(f"mvss: cover violation: {exc}", file=sys.stderr)
        return EXIT_COVER
    except (InternalConsistencyError, TaskError) as exc:
        print(f"mvss: internal consistency failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
