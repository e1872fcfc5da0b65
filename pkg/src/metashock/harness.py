"""Configuration loading, experiment dispatch and CSV/JSON output.

A run is described by a JSON document, for example::

    {"mode": "reduced", "eps": [0.07], "xi0": -0.4}

Missing fields take defaults (a = 1, ell = 1, u_minus = 1, u_plus = -1,
cfl = 0.45, n = 800).  Each mode expands into independent sub-runs, one per
eps value (and per xi where relevant), which may execute on a thread pool.
Every output file is written under a ``.partial`` name and renamed once its
sub-run has finished, so a crashed sub-run leaves only ``.partial`` files.
"""

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .dynamics import (
    ThetaModel,
    evolve,
    perturbation_norm,
    reduced_ode_solve,
    reference_initial_datum,
    theta_asymptotic,
    theta_eval,
    track_shock_vmin,
    track_shock_zero,
)
from .errors import ConfigParseError, ConfigValidationError, MetashockError, TrackingError
from .model import Params, get_flux
from .numerics import Grid1D, eig_general
from .spectral import (
    assemble,
    classify,
    lambda1_asymptotic_burgers,
    lambda1_asymptotic_general,
    tail_constants,
)
from .steady import matched_family, omega1_asymptotic, residuals

MODES = ("steady", "spectrum", "evolve", "reduced", "table-repro", "asymptotics")

# Shock positions xi(t) for u0(x) = x^2/2 - x - 1/2 and Burgers' flux, as
# published in the reference study (columns eps, rows t).
REFERENCE_TABLE_VERSION = "1"
REFERENCE_TABLE = {
    0.1: {0.2: -0.4008, 1: -0.3314, 10: -0.3070, 1e3: -0.0103, 1e4: -1.9725e-12, 5e5: -1.9725e-12},
    0.07: {0.2: -0.4020, 1: -0.3345, 10: -0.3263, 1e3: -0.1600, 1e4: -0.0084, 5e5: -2.2102e-11},
    0.055: {0.2: -0.4029, 1: -0.3360, 10: -0.3304, 1e3: -0.2562, 1e4: -0.1115, 5e5: -1.5057e-10},
    0.04: {0.2: -0.4040, 1: -0.3374, 10: -0.3320, 1e3: -0.3181, 1e4: -0.2531, 5e5: -0.0379},
    0.02: {0.2: -0.4059, 1: -0.3389, 10: -0.3326, 1e3: -0.3325, 1e4: -0.3320, 5e5: -0.3099},
}
TABLE_EPS = tuple(REFERENCE_TABLE)
TABLE_TIMES = (0.2, 1.0, 10.0, 1e3, 1e4, 5e5)

_DEFAULTS = {
    "flux": "burgers",
    "eps": [0.1],
    "a": 1.0,
    "ell": 1.0,
    "u_minus": 1.0,
    "u_plus": -1.0,
    "n": 800,
    "cfl": 0.45,
    "u0": "table",
    "sample_times": None,
    "tmax": None,
    "xi": [0.0],
    "xi0": None,
    "theta": "projection",
    "snapshots": False,
    "allow_long": False,
    "output_dir": "metashock_out",
    "threads": 1,
}


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    flux: str
    eps: tuple
    a: float
    ell: float
    u_minus: float
    u_plus: float
    n: int
    cfl: float
    u0: object
    sample_times: tuple
    tmax: float
    xi: tuple
    xi0: object
    theta: str
    snapshots: bool
    allow_long: bool
    output_dir: str
    threads: int

    def params(self, eps):
        return Params(eps=eps, a=self.a, ell=self.ell, u_minus=self.u_minus, u_plus=self.u_plus)

    def to_dict(self):
        d = asdict(self)
        d["eps"], d["xi"], d["sample_times"] = list(self.eps), list(self.xi), list(self.sample_times)
        return d

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _as_float_list(name, value):
    values = value if isinstance(value, (list, tuple)) else [value]
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigValidationError(name, "must be a number or a list of numbers") from None


def config_from_dict(data):
    """Validate a configuration mapping and fill defaults."""
    if not isinstance(data, dict):
        raise ConfigValidationError("config", "must be a JSON object")
    unknown = set(data) - set(_DEFAULTS) - {"mode"}
    if unknown:
        raise ConfigValidationError(sorted(unknown)[0], "is not a known field")
    mode = data.get("mode")
    if mode not in MODES:
        raise ConfigValidationError("mode", f"must be one of {', '.join(MODES)}")
    cfg = dict(_DEFAULTS)
    cfg.update(data)

    if mode == "table-repro" and "eps" not in data:
        cfg["eps"] = list(TABLE_EPS)
    eps = _as_float_list("eps", cfg["eps"])
    if not eps or any(not (e > 0 and math.isfinite(e)) for e in eps):
        raise ConfigValidationError("eps", "must be positive")
    for name in ("a", "ell", "cfl"):
        try:
            cfg[name] = float(cfg[name])
        except (TypeError, ValueError):
            raise ConfigValidationError(name, "must be a number") from None
        if not cfg[name] > 0:
            raise ConfigValidationError(name, "must be positive")
    if not isinstance(cfg["n"], int) or cfg["n"] < 3:
        raise ConfigValidationError("n", "must be an integer >= 3")
    if not isinstance(cfg["threads"], int) or cfg["threads"] < 1:
        raise ConfigValidationError("threads", "must be a positive integer")
    try:
        get_flux(cfg["flux"])
    except MetashockError:
        raise ConfigValidationError("flux", "must be 'burgers' or 'quartic'") from None
    if cfg["theta"] not in ("projection", "asymptotic"):
        raise ConfigValidationError("theta", "must be 'projection' or 'asymptotic'")
    u0 = cfg["u0"]
    if isinstance(u0, str):
        if u0 not in ("table", "linear"):
            raise ConfigValidationError("u0", "named profiles are 'table' and 'linear'")
    else:
        u0 = _as_float_list("u0", u0)

    tmax = cfg["tmax"]
    times = cfg["sample_times"]
    if mode == "table-repro":
        times = TABLE_TIMES if times is None else times
    elif mode == "evolve":
        times = (0.0, 0.2, 1.0, 10.0) if times is None else times
    elif times is None:
        times = ()
    times = _as_float_list("sample_times", times)
    if list(times) != sorted(times) or len(set(times)) != len(times):
        raise ConfigValidationError("sample_times", "must be sorted and distinct")
    if any(t < 0 for t in times):
        raise ConfigValidationError("sample_times", "must be non-negative")
    if tmax is None:
        tmax = max(times) if times else 1e4
    tmax = float(tmax)
    if times and max(times) > tmax and mode != "table-repro":
        raise ConfigValidationError("sample_times", "must not exceed tmax")

    xi0 = cfg["xi0"]
    if mode == "reduced":
        if xi0 is None:
            raise ConfigValidationError("xi0", "is required in reduced mode")
        xi0 = float(xi0)
        if not -cfg["ell"] < xi0 < cfg["ell"]:
            raise ConfigValidationError("xi0", "must lie inside (-ell, ell)")

    xi = _as_float_list("xi", cfg["xi"])
    if any(not -cfg["ell"] < x < cfg["ell"] for x in xi):
        raise ConfigValidationError("xi", "must lie inside (-ell, ell)")
    try:
        for e in eps:
            Params(eps=e, a=cfg["a"], ell=cfg["ell"], u_minus=float(cfg["u_minus"]),
                   u_plus=float(cfg["u_plus"]))
    except MetashockError as exc:
        raise ConfigValidationError("u_minus", str(exc)) from None

    return ExperimentConfig(
        mode=mode, flux=cfg["flux"], eps=eps, a=cfg["a"], ell=cfg["ell"],
        u_minus=float(cfg["u_minus"]), u_plus=float(cfg["u_plus"]), n=cfg["n"],
        cfl=cfg["cfl"], u0=u0, sample_times=times, tmax=tmax, xi=xi, xi0=xi0,
        theta=cfg["theta"], snapshots=bool(cfg["snapshots"]),
        allow_long=bool(cfg["allow_long"]), output_dir=str(cfg["output_dir"]),
        threads=cfg["threads"])


def load_config(path):
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(exc.msg, exc.lineno, exc.colno) from None
    return config_from_dict(data)


def initial_profile(config):
    """Callable u0(x) described by the configuration."""
    if config.u0 == "table":
        return reference_initial_datum
    if config.u0 == "linear":
        um, up, ell = config.u_minus, config.u_plus, config.ell
        return lambda x: um + (up - um) * (np.asarray(x) + ell) / (2 * ell)
    poly = np.polynomial.Polynomial(config.u0)
    return lambda x: poly(np.asarray(x, float))


# ----------------------------------------------------------------------------- output


def format_number(x):
    """Twelve significant digits; scientific notation below 1e-4 in magnitude."""
    if isinstance(x, str):
        return x
    x = float(x)
    if x == 0:
        return "0"
    return format(x, ".12g")


def csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return buf.getvalue()


class _Staging:
    """Collects the files of one sub-run under .partial names."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.pending = []

    def write(self, name, text):
        final = self.directory / name
        tmp = final.with_name(final.name + ".partial")
        tmp.write_text(text)
        self.pending.append((tmp, final))

    def csv(self, name, header, rows):
        self.write(name, csv_text(header, rows))

    def json(self, name, obj):
        self.write(name, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")

    def commit(self):
        for tmp, final in self.pending:
            os.replace(tmp, final)
        return [str(final) for _, final in self.pending]


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _tag(value):
    return format(value, "g")


# ----------------------------------------------------------------------------- sub-runs


def _run_steady(config, eps, stage):
    flux = get_flux(config.flux)
    params = config.params(eps)
    grid = Grid1D(config.ell, config.n)
    for xi in config.xi:
        fam = matched_family(xi, params, flux)
        res = residuals(fam, grid)
        x = grid.full_nodes
        stage.csv(f"steady_eps{_tag(eps)}_xi{_tag(xi)}.csv", ["x", "U", "V", "P1_smooth", "P2"],
                  zip(x, fam.U(x), fam.V(x), res.P1_smooth, res.P2))
        summary = {"xi": xi, "eps": eps, "k_minus": fam.k_minus, "k_plus": fam.k_plus,
                   "jump": res.jump, "p1_mass": res.p1_mass, "construction": fam.mode,
                   "under_resolved": res.under_resolved}
        if flux.kind == "burgers" and params.symmetric:
            summary["omega1"] = omega1_asymptotic(xi, params)
        stage.json(f"steady_eps{_tag(eps)}_xi{_tag(xi)}.json", summary)


def spectrum_summary(params, flux, xi, n):
    """Eigenvalues of the relaxation operator and the summary record."""
    fam = matched_family(xi, params, flux)
    asm = assemble(fam, Grid1D(params.ell, n))
    spec = eig_general(asm.L_jx)
    structure = classify(spec, params.eps)
    summary = {"xi": xi, "eps": params.eps, "n": n,
               "lambda1_numeric": structure.lambda1,
               "k_count": structure.k,
               "complex_band_re": structure.complex_band_re,
               "under_resolved": asm.under_resolved}
    if params.a == 1.0 and params.symmetric:
        tails = tail_constants(flux, params.u_star)
        general = lambda1_asymptotic_general(xi, params, flux, tails)
        if flux.kind == "burgers":
            asym = lambda1_asymptotic_burgers(xi, params)
        else:
            asym = general
        summary.update(lambda1_asymptotic=asym, lambda1_asymptotic_general=general,
                       ratio=structure.lambda1 / asym, a_convention=tails.a_convention)
    return spec, structure, summary


def _run_spectrum(config, eps, stage):
    flux = get_flux(config.flux)
    for xi in config.xi:
        spec, structure, summary = spectrum_summary(config.params(eps), flux, xi, config.n)
        labels = []
        for lam in spec.values:
            if lam.real == structure.lambda1 and lam.imag == 0:
                labels.append("lambda1")
            elif abs(lam.imag) <= 1e-8 * max(1.0, abs(lam)):
                labels.append("real")
            else:
                labels.append("complex")
        stem = f"spectrum_eps{_tag(eps)}_xi{_tag(xi)}"
        stage.csv(stem + ".csv", ["re", "im", "class"],
                  zip(spec.values.real, spec.values.imag, labels))
        stage.json(stem + ".json", summary)


def _run_evolve(config, eps, stage):
    flux = get_flux(config.flux)
    params = config.params(eps)
    grid = Grid1D(config.ell, config.n)
    rows = []

    def record(state):
        xz = track_shock_zero(state.u, state.x)
        try:
            xv = track_shock_vmin(state.v, state.x)
        except TrackingError:
            xv = float("nan")
        ynorm = perturbation_norm(state, matched_family(xz, params, flux))
        rows.append((state.time, xz, xv, ynorm))
        if config.snapshots:
            stage.csv(f"state_eps{_tag(eps)}_t{_tag(state.time)}.csv", ["x", "u", "v"],
                      zip(state.x, state.u, state.v))

    evolve(params, flux, initial_profile(config), config.tmax, grid, config.sample_times,
           cfl=config.cfl, allow_long=config.allow_long, keep_states=False, on_sample=record)
    stage.csv(f"evolve_eps{_tag(eps)}.csv", ["t", "xi_zero", "xi_vmin", "Ynorm"], rows)


def _run_reduced(config, eps, stage):
    flux = get_flux(config.flux)
    times = config.sample_times or tuple(np.linspace(0.0, config.tmax, 101))
    trace = reduced_ode_solve(config.xi0, config.tmax, ThetaModel(config.theta),
                              config.params(eps), flux, t0=0.0, sample_times=times)
    stage.csv(f"reduced_eps{_tag(eps)}.csv", ["t", "xi"], zip(trace.times, trace.xi))


TABLE_COLUMNS = ["eps", "t", "xi_paper", "xi_ours", "log10_abs_xi_ours", "abs_diff", "method"]


def _log10_abs(x):
    return math.log10(abs(x)) if x != 0 else -math.inf


def table_reproduction(params, flux, n, times, cfl=0.45, u0=reference_initial_datum):
    """Shock positions at ``times``: full PDE up to 1e4, reduced equation beyond.

    The reduced equation starts from the last full-PDE sample.  Each row is
    (t, xi, log10|xi|, method); the logarithm survives when xi underflows.
    """
    pde_times = [t for t in times if t <= 1e4]
    later = [t for t in times if t > 1e4]
    rows = []
    if pde_times:
        run = evolve(params, flux, u0, max(pde_times), Grid1D(params.ell, n), pde_times,
                     cfl=cfl, keep_states=False)
        rows += [(t, x, _log10_abs(x), "pde") for t, x in zip(run.trace.times, run.trace.xi)]
    if later:
        if rows:
            t0, x0 = rows[-1][0], rows[-1][1]
        else:
            x = np.linspace(-params.ell, params.ell, 20001)
            t0, x0 = 0.0, track_shock_zero(u0(x), x)
        trace = reduced_ode_solve(x0, max(later), ThetaModel("projection"), params, flux,
                                  t0=t0, sample_times=[t0] + later)
        rows += [(t, x, lg / math.log(10.0), "reduced-ode")
                 for t, x, lg in zip(trace.times[1:], trace.xi[1:], trace.log_abs_xi[1:])]
    return rows


def _run_table(config, eps, stage):
    flux = get_flux(config.flux)
    rows = table_reproduction(config.params(eps), flux, config.n, config.sample_times,
                              config.cfl, initial_profile(config))
    out = []
    for t, x, log_abs, method in rows:
        ref = REFERENCE_TABLE.get(eps, {}).get(t)
        out.append((eps, t, "" if ref is None else ref, x, log_abs,
                    "" if ref is None else abs(x - ref), method))
    stage.csv(f"table_eps{_tag(eps)}.csv", TABLE_COLUMNS, out)


def _run_asymptotics(config, eps, stage):
    flux = get_flux(config.flux)
    params = config.params(eps)
    xis = config.xi if len(config.xi) > 1 else tuple(np.linspace(-0.6, 0.6, 13))
    tails = tail_constants(flux, params.u_star)
    model = ThetaModel("projection")
    rows = []
    burgers = flux.kind == "burgers"
    for xi in xis:
        rows.append((xi,
                     lambda1_asymptotic_burgers(xi, params) if burgers else "",
                     lambda1_asymptotic_general(xi, params, flux, tails),
                     omega1_asymptotic(xi, params) if burgers else "",
                     theta_asymptotic(xi, params) if burgers else "",
                     theta_eval(model, xi, params, flux)))
    stage.csv(f"asymptotics_eps{_tag(eps)}.csv",
              ["xi", "lambda1_burgers", "lambda1_general", "omega1", "theta_asymptotic",
               "theta_projection"], rows)
    stage.json(f"tails_eps{_tag(eps)}.json", asdict(tails))


_DISPATCH = {
    "steady": _run_steady,
    "spectrum": _run_spectrum,
    "evolve": _run_evolve,
    "reduced": _run_reduced,
    "table-repro": _run_table,
    "asymptotics": _run_asymptotics,
}


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    runs: list = field(default_factory=list)
    path: str = ""

    @property
    def ok(self):
        return all(r["status"] == "ok" for r in self.runs)

    @property
    def exit_code(self):
        return 0 if self.ok else 1

    @property
    def files(self):
        return [f for r in self.runs for f in r["files"]]


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def output_directory(config):
    return Path(os.environ.get("METASHOCK_OUT") or config.output_dir)


def run(config, threads=None):
    """Execute every sub-run of ``config`` and write the manifest."""
    outdir = output_directory(config)
    outdir.mkdir(parents=True, exist_ok=True)
    job = _DISPATCH[config.mode]

    def one(eps):
        stage = _Staging(outdir)
        start = time.perf_counter()
        record = {"name": f"{config.mode}:eps={_tag(eps)}", "files": [], "status": "ok"}
        try:
            job(config, eps, stage)
            record["files"] = stage.commit()
        except Exception as exc:  # sub-run failures are reported, not raised
            record["status"] = "failed"
            record["error"] = f"{type(exc).__name__}: {exc}"
            record["partial_files"] = [str(tmp) for tmp, _ in stage.pending]
        record["wall_seconds"] = time.perf_counter() - start
        return record

    workers = threads or config.threads
    if workers > 1 and len(config.eps) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, config.eps))
    else:
        records = [one(e) for e in config.eps]

    if config.mode == "table-repro":
        merged = [outdir / f"table_eps{_tag(e)}.csv" for e in config.eps]
        if all(r["status"] == "ok" for r in records):
            lines = [",".join(TABLE_COLUMNS) + "\n"]
            for p in merged:
                lines += p.read_text().splitlines(keepends=True)[1:]
            stage = _Staging(outdir)
            stage.write("table_comparison.csv", "".join(lines))
            records.append({"name": "table-repro:merge", "files": stage.commit(),
                            "status": "ok", "wall_seconds": 0.0})

    manifest = RunManifest(config_hash=config.digest(), tool_version=_version(), runs=records)
    stage = _Staging(outdir)
    stage.json("manifest.json", {"config_hash": manifest.config_hash,
                                 "tool_version": manifest.tool_version,
                                 "config": config.to_dict(),
                                 "reference_table_version": REFERENCE_TABLE_VERSION,
                                 "runs": records})
    manifest.path = stage.commit()[0]
    return manifest
