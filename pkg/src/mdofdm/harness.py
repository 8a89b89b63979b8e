"""Experiment orchestration and CSV/manifest I/O."""
from __future__ import annotations

import csv
import hashlib
import io
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from . import __version__
from .config import SimConfig, parse_config
from .metrics import (
    SCHEME_CODE,
    BerPoint,
    CcdfCurve,
    EeRecord,
    collect_papr_samples,
    effective_se,
    energy_efficiency,
    estimate_ccdf,
    run_ber_point,
    total_power,
)
from .numerics import RandomStream

log = logging.getLogger(__name__)

__all__ = [
    "run_ber_sweep",
    "run_ee_sweep",
    "ee_from_ber",
    "run_papr",
    "write_outputs",
    "read_ber_csv",
    "read_ee_csv",
    "read_ccdf_csv",
    "read_manifest",
    "verify_manifest",
    "BER_HEADER",
    "EE_HEADER",
    "CCDF_HEADER",
]

BER_HEADER = ("scheme", "snr_db", "bits_sent", "bit_errors", "ber")
EE_HEADER = ("scheme", "snr_db", "ber", "se_ideal_bps_hz", "se_eff_bps_hz",
             "p_total_mw", "bandwidth_hz", "ee_bits_per_joule")
CCDF_HEADER = ("scheme", "papr0_db", "ccdf")
MANIFEST_NAME = "manifest.txt"

# top-level stream label separating experiment families
_BER_DOMAIN = 0
_PAPR_DOMAIN = 1


def run_ber_sweep(cfg: SimConfig, workers: int = 1) -> list[BerPoint]:
    points = []
    for scheme in cfg.schemes:
        for i, snr in enumerate(cfg.snr_grid_db):
            stream = RandomStream(cfg.seed, [_BER_DOMAIN, SCHEME_CODE[scheme], i])
            pt = run_ber_point(scheme, cfg, snr, cfg.n_symbols_per_point, stream,
                               workers=workers, early_stop=cfg.early_stop)
            log.info("%s %5.1f dB  ber=%.3e  (%d/%d)", scheme, snr, pt.ber, pt.bit_errors, pt.bits_sent)
            points.append(pt)
    return points


def ee_from_ber(cfg: SimConfig, points: Iterable[BerPoint]) -> list[EeRecord]:
    records = []
    for pt in points:
        p_total = total_power(pt.scheme, cfg.power_model, cfg.n_tx, cfg.n_rx_for(pt.scheme), cfg.n_sc)
        se_ideal, se_eff = effective_se(pt.scheme, cfg.modulation_order, pt.ber, cfg.n_tx)
        ee = energy_efficiency(se_eff, cfg.bandwidth_hz, p_total)
        records.append(EeRecord(pt.scheme, pt.snr_db, pt.ber, se_ideal, se_eff,
                                cfg.bandwidth_hz, p_total, ee))
    return records


def run_ee_sweep(cfg: SimConfig, workers: int = 1) -> list[EeRecord]:
    return ee_from_ber(cfg, run_ber_sweep(cfg, workers))


def run_papr(cfg: SimConfig, workers: int = 1) -> dict[str, CcdfCurve]:
    curves = {}
    for scheme in cfg.schemes:
        stream = RandomStream(cfg.seed, [_PAPR_DOMAIN, SCHEME_CODE[scheme]])
        samples = collect_papr_samples(scheme, cfg, cfg.papr_n_symbols, stream, workers=workers)
        log.info("%s: %d PAPR samples", scheme, samples.size)
        curves[scheme] = estimate_ccdf(samples, cfg.papr_thresholds_db)
    return curves


# ---------------------------------------------------------------------------
# CSV and manifest
# ---------------------------------------------------------------------------
def _fmt(value) -> str:
    # repr gives the shortest string that round-trips a float
    return repr(float(value)) if isinstance(value, float) else str(value)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def ber_csv(points: Iterable[BerPoint]) -> str:
    return _csv_text(BER_HEADER, ((p.scheme, p.snr_db, p.bits_sent, p.bit_errors, p.ber) for p in points))


def ee_csv(records: Iterable[EeRecord]) -> str:
    return _csv_text(EE_HEADER, ((r.scheme, r.snr_db, r.ber, r.se_ideal, r.se_eff, r.p_total_mw,
                                  r.bandwidth_hz, r.ee_bits_per_joule) for r in records))


def ccdf_csv(curves: dict[str, CcdfCurve]) -> str:
    rows = ((scheme, t, p) for scheme, c in curves.items()
            for t, p in zip(c.thresholds_db, c.probabilities))
    return _csv_text(CCDF_HEADER, rows)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_outputs(out_dir, cfg: SimConfig, *, ber: list[BerPoint] | None = None,
                  ee: list[EeRecord] | None = None,
                  ccdf: dict[str, CcdfCurve] | None = None,
                  timestamp: str | None = None) -> dict[str, Path]:
    """Write whichever result sets are given plus ``manifest.txt``.

    Returns a name -> path map. I/O failures are re-raised as ``OSError``
    naming the path.
    """
    out = Path(out_dir)
    files: dict[str, str] = {}
    if ber is not None:
        files["ber.csv"] = ber_csv(ber)
    if ee is not None:
        files["ee.csv"] = ee_csv(ee)
    if ccdf is not None:
        files["papr_ccdf.csv"] = ccdf_csv(ccdf)

    written: dict[str, Path] = {}
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out / name
            path.write_bytes(text.encode())
            written[name] = path
        stamp = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
        lines = ["# mdofdm run manifest", f"tool_version: {__version__}", f"timestamp: {stamp}"]
        lines += [f"sha256 {name}: {_sha256(text.encode())}" for name, text in files.items()]
        lines += [f"config {line}" for line in cfg.to_text().splitlines()]
        manifest = out / MANIFEST_NAME
        manifest.write_text("\n".join(lines) + "\n")
        written[MANIFEST_NAME] = manifest
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write outputs: {exc.strerror}", exc.filename or str(out)) from exc
    return written


def read_manifest(path) -> tuple[dict[str, str], dict[str, str], SimConfig]:
    """Parse a manifest into (metadata, checksums by file, config)."""
    meta: dict[str, str] = {}
    sums: dict[str, str] = {}
    cfg_lines = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        if line.startswith("config "):
            cfg_lines.append(line[len("config "):])
        elif line.startswith("sha256 "):
            name, digest = line[len("sha256 "):].rsplit(": ", 1)
            sums[name] = digest
        else:
            key, value = line.split(": ", 1)
            meta[key] = value
    return meta, sums, parse_config("\n".join(cfg_lines), source=str(path), env={})


def verify_manifest(out_dir) -> bool:
    out = Path(out_dir)
    _, sums, _ = read_manifest(out / MANIFEST_NAME)
    return all(_sha256((out / name).read_bytes()) == digest for name, digest in sums.items())


def _read_rows(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        got = tuple(next(reader))
        if got != header:
            raise ValueError(f"{path}: unexpected header {got}")
        return list(reader)


def read_ber_csv(path) -> list[BerPoint]:
    return [BerPoint(s, float(snr), int(n), int(e)) for s, snr, n, e, _ in _read_rows(path, BER_HEADER)]


def read_ee_csv(path) -> list[EeRecord]:
    out = []
    for scheme, snr, ber, se_i, se_e, p_mw, bw, ee in _read_rows(path, EE_HEADER):
        out.append(EeRecord(scheme, float(snr), float(ber), float(se_i), float(se_e),
                            float(bw), float(p_mw), float(ee)))
    return out


def read_ccdf_csv(path) -> dict[str, CcdfCurve]:
    acc: dict[str, tuple[list, list]] = {}
    for scheme, t, p in _read_rows(path, CCDF_HEADER):
        ts, ps = acc.setdefault(scheme, ([], []))
        ts.append(float(t))
        ps.append(float(p))
    return {s: CcdfCurve(tuple(ts), tuple(ps)) for s, (ts, ps) in acc.items()}
