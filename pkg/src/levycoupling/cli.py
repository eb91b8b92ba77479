"""Command-line runner: config ingestion, orchestration, CSV emission.

Verbs:

* ``certify <config>``   compute contraction certificates -> certificates.csv
* ``simulate <config>``  run coupled ensembles -> curves.csv, fits.csv
* ``oracle <config>``    exact lattice survival -> oracle.csv
* ``compare <dir>``      check fits and curves against certificates

Config files are flat ``section.key = value`` text; '#' starts a comment.
Outputs are deterministic for a fixed (config, seed) and independent of the
worker count.  Exit codes: 0 all bounds hold or are inconclusive by design,
1 a certified bound is violated, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .certificates import (build_sigma, strong_ergodic_certificate,
                           certificate_record, tv_certificate,
                           w1_certificate)
from .coupling import SimConfig, run_coupling_ensemble
from .estimators import (ctmc_oracle, fit_exponential_rate,
                         tv_curve_from_coupling, w1_curve_from_coupling)
from .measures import tabulated_j
from .models import ScenarioSpec, catalog_drift, catalog_noise
from .scenarios import CatalogEntry, catalog_entry, catalog_names

CURVE_COLS = ["scenario", "kind", "t", "value", "stderr", "n_paths"]
CERT_COLS = ["scenario", "kind", "c1", "c2", "C", "lambda", "kappa", "a",
             "J_kappa", "status", "provenance"]
FIT_COLS = ["scenario", "kind", "lambda_hat", "c_hat", "ci_lo", "ci_hi",
            "window_lo", "window_hi"]


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict:
    cfg = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value'")
        key, val = line.split("=", 1)
        key, val = key.strip(), val.strip()
        if not key:
            raise ConfigError(f"line {ln}: empty key")
        cfg[key] = val
    return cfg


def config_hash(cfg: dict) -> str:
    canon = "\n".join(f"{k} = {cfg[k]}" for k in sorted(cfg))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _get(cfg, key, default=None, cast=str):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing config key {key}")
        return default
    try:
        return cast(cfg[key])
    except ValueError as e:
        raise ConfigError(f"bad value for {key}: {e}") from e


def _vector(text):
    return np.array([float(v) for v in text.split(",")])


def _atoms(text):
    out = []
    for part in text.split(","):
        pos, rate = part.split(":")
        out.append((float(pos), float(rate)))
    return out


def _entries_from_config(cfg) -> list:
    """Resolve (name, CatalogEntry) pairs, applying sim.* overrides."""
    entries = []
    if "scenario.catalog" in cfg:
        for name in [v.strip() for v in cfg["scenario.catalog"].split(",")]:
            try:
                entries.append((name, catalog_entry(name)))
            except KeyError as e:
                raise ConfigError(str(e)) from e
    else:
        kind = _get(cfg, "drift.kind")
        try:
            drift = catalog_drift(
                kind, d=_get(cfg, "noise.d", 1, int),
                K1=_get(cfg, "drift.K1", 0.0, float),
                K2=_get(cfg, "drift.K2", 1.0, float),
                l0=_get(cfg, "drift.l0", 1.0, float),
                theta=_get(cfg, "drift.theta", 1.0, float))
            noise = catalog_noise(
                _get(cfg, "noise.kind"), d=_get(cfg, "noise.d", 1, int),
                alpha=_get(cfg, "noise.alpha", 1.0, float),
                intensity=_get(cfg, "noise.intensity", 1.0, float),
                R=_get(cfg, "noise.R", 1.0, float),
                atoms=_atoms(cfg["noise.atoms"])
                if "noise.atoms" in cfg else None)
        except (ValueError, KeyError) as e:
            raise ConfigError(f"scenario: {e}") from e
        name = _get(cfg, "scenario.name", "custom")
        sc = ScenarioSpec(name, drift, noise, _vector(_get(cfg, "init.x0")),
                          _vector(_get(cfg, "init.y0")))
        kappa = min(drift.l0, 1.0) if drift.l0 > 0 else 0.0
        entries.append((name, CatalogEntry(
            sc, kappa=kappa, eps=0.05, h=0.005, t_max=5.0, record_every=10,
            cert_kinds=("w1",) if drift.l0 == 0 else ("w1", "tv"))))
    out = []
    for name, e in entries:
        kap = cfg.get("sim.kappa", "auto")
        kappa = e.kappa if kap == "auto" else float(kap)
        out.append((name, CatalogEntry(
            scenario=e.scenario, kappa=kappa,
            eps=_get(cfg, "sim.eps", e.eps, float),
            h=_get(cfg, "sim.h", e.h, float),
            t_max=_get(cfg, "sim.t_max", e.t_max, float),
            record_every=_get(cfg, "sim.record_every", e.record_every, int),
            cert_kinds=tuple(
                v.strip() for v in cfg["certify.kinds"].split(","))
            if "certify.kinds" in cfg else e.cert_kinds,
            sigma_alpha=_get(cfg, "sigma.alpha", e.sigma_alpha, float),
            sigma_theta=_get(cfg, "sigma.theta", e.sigma_theta, float),
            small_jump_mode=_get(cfg, "sim.small_jump_mode",
                                 e.small_jump_mode))))
    return out


def _sim_config(cfg, entry, seed) -> SimConfig:
    return SimConfig(kappa=entry.kappa, eps=entry.eps, h=entry.h,
                     t_max=entry.t_max,
                     n_paths=_get(cfg, "sim.n_paths", 1000, int),
                     master_seed=seed, record_every=entry.record_every,
                     small_jump_mode=entry.small_jump_mode)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "nan"
        return repr(float(v))
    return str(v)


def _write_csv(path, cols, rows):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in cols])
    os.replace(tmp, path)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _write_manifest(out_dir, cfg, seed, files):
    path = os.path.join(out_dir, "manifest.txt")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(f"config_hash = {config_hash(cfg)}\n")
        fh.write(f"version = {__version__}\n")
        fh.write(f"master_seed = {seed}\n")
        fh.write(f"wall_clock_utc = {time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime())}\n")
        for f in files:
            fh.write(f"file = {f}\n")
    os.replace(tmp, path)


def _memo_j(noise, l0, kappa):
    # span every grid the certificate machinery queries, down to the
    # verification grid floor of 1e-6 * l0
    lo = max(1e-9, 5e-7 * max(min(l0, kappa if kappa > 0 else l0), 1e-3))
    hi = max(2.0 * l0, kappa, 1.0)
    return tabulated_j(noise, lo, hi, n=96)


def emit_certificates(name, entry: CatalogEntry):
    """All certificate rows for one scenario."""
    drift = entry.scenario.drift
    rows = []
    if not entry.cert_kinds:
        return rows
    r0 = float(np.linalg.norm(entry.scenario.x0 - entry.scenario.y0))
    # l0 = 0 certificates never consult the overlap profile, so skip the
    # (expensive) tabulation in that case
    J = None
    sg = None
    if drift.l0 > 0:
        J = _memo_j(entry.scenario.noise, drift.l0, entry.kappa)
        sg = build_sigma(J, entry.kappa, drift.l0, entry.sigma_alpha,
                         entry.sigma_theta, phi1=drift.phi1)
    for kind in entry.cert_kinds:
        if kind == "w1":
            cert, _ = w1_certificate(drift, sg, J=J, kappa=entry.kappa)
        elif kind == "tv":
            cert, tf = tv_certificate(drift, sg, entry.kappa, J=J)
            cert.C = 2.0 * (1.0 + tf.psi(r0) / cert.a)
        elif kind == "strong":
            cert, _ = strong_ergodic_certificate(drift, sg, entry.kappa,
                                                 J=J)
        else:
            raise ConfigError(f"unknown certificate kind {kind!r}")
        rows.append(certificate_record(cert, scenario=name))
    return rows


def cmd_certify(cfg, out_dir, seed):
    rows, failures = [], []
    for name, entry in _entries_from_config(cfg):
        try:
            rows.extend(emit_certificates(name, entry))
        except Exception as e:           # isolate per-scenario failures
            failures.append((name, e))
            print(f"certify: {name} failed: {e}", file=sys.stderr)
    path = os.path.join(out_dir, "certificates.csv")
    _write_csv(path, CERT_COLS, rows)
    _write_manifest(out_dir, cfg, seed, ["certificates.csv"])
    print(f"wrote {path} ({len(rows)} rows, {len(failures)} scenario "
          "failures)")
    return 0


def cmd_simulate(cfg, out_dir, seed, workers):
    curve_rows, fit_rows, files = [], [], []
    strong_kinds = {}
    for name, entry in _entries_from_config(cfg):
        sim = _sim_config(cfg, entry, seed)
        res = run_coupling_ensemble(entry.scenario, sim, workers=workers)
        w1c = w1_curve_from_coupling(res.times, res.distances)
        tvc = tv_curve_from_coupling(res.coupling_times, res.times,
                                     t_max=sim.t_max)
        for c in (w1c, tvc):
            kind = c.kind
            if kind == "tv" and "strong" in entry.cert_kinds:
                strong_kinds[name] = True
            for i, t in enumerate(c.times):
                curve_rows.append({"scenario": name, "kind": kind,
                                   "t": float(t),
                                   "value": float(c.values[i]),
                                   "stderr": float(c.stderr[i]),
                                   "n_paths": c.n_paths})
            try:
                paths = res.distances if kind == "w1" \
                    else res.coupling_times
                fit = fit_exponential_rate(
                    c, paths=paths,
                    rng=np.random.default_rng([seed, 0xF17]))
                fit_rows.append({
                    "scenario": name, "kind": kind,
                    "lambda_hat": fit.lambda_hat, "c_hat": fit.c_hat,
                    "ci_lo": fit.ci[0], "ci_hi": fit.ci[1],
                    "window_lo": fit.window[0], "window_hi": fit.window[1]})
            except ValueError as e:
                print(f"simulate: {name}/{kind} fit skipped: {e}",
                      file=sys.stderr)
    for fname, cols, rows in (("curves.csv", CURVE_COLS, curve_rows),
                              ("fits.csv", FIT_COLS, fit_rows)):
        _write_csv(os.path.join(out_dir, fname), cols, rows)
        files.append(fname)
    if cfg.get("out.emit_plots", "false").lower() in ("true", "1", "yes"):
        _emit_plot_script(out_dir)
        files.append("plot_curves.py")
    _write_manifest(out_dir, cfg, seed, files)
    print(f"wrote curves.csv ({len(curve_rows)} rows) and fits.csv "
          f"({len(fit_rows)} rows) in {out_dir}")
    return 0


def cmd_oracle(cfg, out_dir, seed):
    rows = []
    for name, entry in _entries_from_config(cfg):
        sim = _sim_config(cfg, entry, seed)
        n_rec = sim.n_steps // sim.record_every + 1
        grid = np.arange(n_rec) * (sim.h * sim.record_every)
        res = ctmc_oracle(entry.scenario, entry.kappa, grid)
        for t, s in zip(res.times, res.survival):
            rows.append({"scenario": name, "kind": "oracle_tv",
                         "t": float(t), "value": 2.0 * float(s),
                         "stderr": res.truncation_error, "n_paths": 0})
    path = os.path.join(out_dir, "oracle.csv")
    _write_csv(path, CURVE_COLS, rows)
    _write_manifest(cfg=cfg, out_dir=out_dir, seed=seed,
                    files=["oracle.csv"])
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


def cmd_compare(run_dir):
    need = ["certificates.csv", "fits.csv", "curves.csv", "manifest.txt"]
    for f in need:
        if not os.path.exists(os.path.join(run_dir, f)):
            raise ConfigError(f"{run_dir} is missing {f}")
    certs = _read_csv(os.path.join(run_dir, "certificates.csv"))
    fits = {(r["scenario"], r["kind"]): r
            for r in _read_csv(os.path.join(run_dir, "fits.csv"))}
    curves = {}
    for r in _read_csv(os.path.join(run_dir, "curves.csv")):
        curves.setdefault((r["scenario"], r["kind"]), []).append(
            (float(r["t"]), float(r["value"]), float(r["stderr"])))
    verdict_rows = []
    worst_code = 0
    for cert in certs:
        name, kind = cert["scenario"], cert["kind"]
        curve_kind = "w1" if kind == "w1" else "tv"
        key = (name, curve_kind)
        if key not in curves or not cert["status"].startswith(
                ("grid-verified", "exact")):
            verdict_rows.append({"scenario": name, "kind": kind,
                                 "verdict": "inconclusive", "margin": "nan"})
            continue
        C, lam = float(cert["C"]), float(cert["lambda"])
        pts = sorted(curves[key])
        r0 = pts[0][1]
        margin = math.inf
        for t, v, se in pts:
            scale = r0 if kind == "w1" else 1.0
            margin = min(margin, C * math.exp(-lam * t) * scale
                         + 3.0 * se - v)
        rate_note = ""
        fit = fits.get(key)
        if fit is not None:
            ci_hi = float(fit["ci_hi"])
            lam_hat = float(fit["lambda_hat"])
            if max(lam_hat, ci_hi if not math.isnan(ci_hi) else lam_hat) \
                    < lam:
                rate_note = "rate-below-certificate"
        if margin < 0:
            verdict = "bound_violated"
            worst_code = 1
        elif rate_note:
            verdict = "inconclusive"
        else:
            verdict = "bound_holds"
        verdict_rows.append({"scenario": name, "kind": kind,
                             "verdict": verdict, "margin": margin})
    _write_csv(os.path.join(run_dir, "verdicts.csv"),
               ["scenario", "kind", "verdict", "margin"], verdict_rows)
    for row in verdict_rows:
        print(f"{row['scenario']:<18} {row['kind']:<14} {row['verdict']}"
              f"  margin={row['margin']}")
    return worst_code


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
# Generated helper: plots curves.csv (and certificates.csv envelopes when
# present) from the directory it lives in.  Requires matplotlib.
import csv, math, os, sys
here = os.path.dirname(os.path.abspath(__file__))
import matplotlib.pyplot as plt
curves = {}
with open(os.path.join(here, "curves.csv")) as fh:
    for r in csv.DictReader(fh):
        curves.setdefault((r["scenario"], r["kind"]), []).append(
            (float(r["t"]), float(r["value"])))
certs = []
cpath = os.path.join(here, "certificates.csv")
if os.path.exists(cpath):
    with open(cpath) as fh:
        certs = list(csv.DictReader(fh))
fig, ax = plt.subplots()
for (name, kind), pts in sorted(curves.items()):
    pts.sort()
    ax.plot([p[0] for p in pts], [p[1] for p in pts],
            label=f"{name}/{kind}")
for c in certs:
    key = (c["scenario"], "w1" if c["kind"] == "w1" else "tv")
    if key in curves:
        pts = sorted(curves[key])
        r0 = pts[0][1] if c["kind"] == "w1" else 1.0
        C, lam = float(c["C"]), float(c["lambda"])
        ax.plot([p[0] for p in pts],
                [C * math.exp(-lam * p[0]) * r0 for p in pts],
                "--", label=f"{c['scenario']}/{c['kind']} certificate")
ax.set_yscale("log")
ax.set_xlabel("t")
ax.legend(fontsize=7)
fig.savefig(os.path.join(here, "curves.png"), dpi=150)
print("wrote curves.png")
"""


def _emit_plot_script(out_dir):
    path = os.path.join(out_dir, "plot_curves.py")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(_PLOT_SCRIPT)
    os.replace(tmp, path)


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="levycoupling",
        description="coupling simulation and contraction certificates")
    ap.add_argument("verb", choices=["certify", "simulate", "compare",
                                     "oracle"])
    ap.add_argument("target", help="config file (or run directory for "
                                   "compare)")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None)
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0,) else 0
    try:
        if ns.verb == "compare":
            return cmd_compare(ns.target)
        if not os.path.exists(ns.target):
            raise ConfigError(f"no such config file: {ns.target}")
        with open(ns.target) as fh:
            cfg = parse_config(fh.read())
        out_dir = ns.out or cfg.get("out.dir", ".")
        os.makedirs(out_dir, exist_ok=True)
        seed = ns.seed if ns.seed is not None \
            else _get(cfg, "sim.master_seed", 12345, int)
        if ns.verb == "certify":
            return cmd_certify(cfg, out_dir, seed)
        if ns.verb == "simulate":
            return cmd_simulate(cfg, out_dir, seed, ns.workers)
        if ns.verb == "oracle":
            return cmd_oracle(cfg, out_dir, seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
