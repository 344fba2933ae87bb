"""Monte Carlo harness: simulation cells, power curves, tables and CSV I/O.

A cell draws ``reps`` samples from one correlation model and distribution,
runs the configured test on each and reports the rejection rate. Replication
``r`` uses the data stream ``(seed, 0, r)`` and bootstrap streams
``(seed, 1, r, b)``, so results do not depend on the number of threads.
"""

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from relind import datagen, testing
from relind.errors import DataError, UsageError
from relind.kernels import KernelId
from relind.ustat import DEFAULT_CAP

__all__ = [
    "SimConfig",
    "SimResult",
    "CSV_COLUMNS",
    "load_csv",
    "write_csv",
    "run_cell",
    "run_power_curve",
    "parse_tau_grid",
    "parse_table_spec",
    "run_table",
    "format_rows",
]

CSV_COLUMNS = (
    "n", "p", "model", "dist", "kernel", "variant", "direction", "method",
    "delta", "alpha", "tau", "reps", "boot", "reject_rate", "mc_stderr",
    "seed", "wall_time_s",
)


@dataclass(frozen=True)
class SimConfig:
    """One simulation cell.

    ``rho`` is the off-diagonal scale correlation of the model; the default
    gives Kendall tau 0.1 on every correlated pair.
    """

    n: int = 50
    p: int = 100
    model: str = "m1"
    rho: float = datagen.BOUNDARY_RHO
    pair: tuple = (1, 2)
    dist: str = "normal"
    kernel: str = "kendall"
    delta: float = 0.1
    alpha: float = 0.1
    variant: str = "normalized"
    direction: str = "relevant"
    method: str = "bootstrap"
    reps: int = 1000
    boot_reps: int = 100
    seed: int = 0
    threads: int | str = 1
    boot_threads: int = 1
    signed_truncation: bool = False
    studentize: bool = True
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "model", datagen.Model.parse(self.model))
        set_(self, "dist", datagen.Distribution.parse(self.dist))
        set_(self, "kernel", KernelId.parse(self.kernel))
        for name in ("n", "p", "reps"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise UsageError(f"{name} must be a positive integer, got {value}")
            set_(self, name, int(value))
        if self.p < 2:
            raise UsageError(f"need p >= 2, got {self.p}")
        self.test_config()  # validates the test settings
        self.worker_count()

    @property
    def correlation_model(self):
        return datagen.CorrelationModel(self.model, self.p, self.rho, self.pair)

    @property
    def tau(self):
        return datagen.tau_from_rho(self.rho)

    def test_config(self):
        return testing.TestConfig(
            delta=self.delta,
            alpha=self.alpha,
            variant=self.variant,
            direction=self.direction,
            method=self.method,
            boot_reps=self.boot_reps,
            seed=self.seed,
            signed_truncation=self.signed_truncation,
            studentize=self.studentize,
        )

    def worker_count(self):
        if self.threads in ("auto", 0, None):
            return os.cpu_count() or 1
        t = int(self.threads)
        if t < 1:
            raise UsageError(f"threads must be positive or 'auto', got {self.threads}")
        return t


@dataclass
class SimResult:
    """Rejection rate of one cell with its Monte Carlo standard error."""

    config: SimConfig
    rejected: int
    reject_rate: float
    mc_stderr: float
    wall_time_s: float
    statistics: list = field(default_factory=list, repr=False)

    def row(self, timing=False):
        cfg = self.config
        tcfg = cfg.test_config()
        return {
            "n": str(cfg.n),
            "p": str(cfg.p),
            "model": cfg.model.value,
            "dist": cfg.dist.label,
            "kernel": cfg.kernel.value,
            "variant": tcfg.variant.value,
            "direction": tcfg.direction.value,
            "method": tcfg.method.value,
            "delta": f"{tcfg.delta:.10g}",
            "alpha": f"{tcfg.alpha:.10g}",
            "tau": f"{cfg.tau:.10g}",
            "reps": str(cfg.reps),
            "boot": str(tcfg.boot_reps) if tcfg.method is testing.Method.BOOTSTRAP else "",
            "reject_rate": f"{self.reject_rate:.4f}",
            "mc_stderr": f"{self.mc_stderr:.4f}",
            "seed": str(cfg.seed),
            "wall_time_s": f"{self.wall_time_s:.3f}" if timing else "",
        }


# ------------------------------------------------------------------ CSV I/O


def load_csv(path, has_header=False):
    """Read a numeric comma-separated sample.

    Blank lines are skipped. Errors name the offending line.
    """
    try:
        fh = open(path, newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None
    rows = []
    width = None
    with fh:
        reader = csv.reader(fh)
        try:
            for row in reader:
                line = reader.line_num
                if not row or all(not cell.strip() for cell in row):
                    continue
                if has_header:
                    has_header = False
                    width = len(row)
                    continue
                if width is None:
                    width = len(row)
                elif len(row) != width:
                    raise DataError(f"line {line}: expected {width} fields, got {len(row)}")
                vals = []
                for col, cell in enumerate(row, 1):
                    try:
                        val = float(cell)
                    except ValueError:
                        raise DataError(
                            f"line {line}, column {col}: {cell.strip()!r} is not a number"
                        ) from None
                    if not math.isfinite(val):
                        raise DataError(f"line {line}, column {col}: non-finite value {cell!r}")
                    vals.append(val)
                rows.append(vals)
        except csv.Error as exc:
            raise DataError(f"line {reader.line_num}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def write_csv(path, x, header=None):
    """Write a sample with 17 significant digits so it reloads exactly."""
    x = np.asarray(x, dtype=np.float64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in x:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def format_rows(results, timing=False):
    """CSV text (header plus one line per result)."""
    lines = [",".join(CSV_COLUMNS)]
    for res in results:
        row = res.row(timing)
        lines.append(",".join(row[c] for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- simulation


def run_cell(cfg, keep_statistics=False):
    """Run ``cfg.reps`` independent replications of one cell."""
    tcfg = cfg.test_config()
    sigma = cfg.correlation_model.matrix()
    chol = datagen.cholesky(sigma)
    start = time.perf_counter()

    def one(rep):
        x = datagen.sample(cfg.dist, sigma, cfg.n, datagen.data_rng(cfg.seed, rep), chol=chol)
        report = testing.run_full_test(
            x, cfg.kernel, tcfg, rep=rep, threads=cfg.boot_threads, cap=cfg.cap
        )
        return report.reject, report.statistic

    workers = cfg.worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, range(cfg.reps)))
    else:
        outcomes = [one(rep) for rep in range(cfg.reps)]
    rejected = sum(1 for rej, _ in outcomes if rej)
    rate = rejected / cfg.reps
    return SimResult(
        config=cfg,
        rejected=rejected,
        reject_rate=rate,
        mc_stderr=math.sqrt(rate * (1.0 - rate) / cfg.reps),
        wall_time_s=time.perf_counter() - start,
        statistics=[s for _, s in outcomes] if keep_statistics else [],
    )


def parse_tau_grid(text):
    """Parse ``a:b:step`` (inclusive) or a comma-separated list of taus."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [float(t) for t in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            a, b, step = parts
            if step <= 0 or b < a:
                raise UsageError(f"tau grid {text!r} needs a <= b and step > 0")
            count = int(math.floor((b - a) / step + 1e-9)) + 1
            grid = [round(a + k * step, 12) for k in range(count)]
        else:
            grid = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"cannot parse tau grid {text!r}; use a:b:step or a,b,c") from None
    for tau in grid:
        if not 0.0 <= tau < 1.0:
            raise UsageError(f"tau values must lie in [0, 1), got {tau}")
    if not grid:
        raise UsageError("empty tau grid")
    return grid


def run_power_curve(cfg, tau_grid):
    """One cell per tau, with the model correlation set to ``rho_from_tau(tau)``."""
    return [run_cell(replace(cfg, rho=datagen.rho_from_tau(tau))) for tau in tau_grid]


# ------------------------------------------------------------------ tables

_TABLE_KEYS = {
    "n_p", "models", "dists", "kernel", "variant", "direction", "method",
    "delta", "alpha", "tau", "rho", "reps", "boot", "seed", "threads", "pair",
    "signed_truncation", "studentize", "timing", "boot_threads",
}


def _parse_bool(key, value):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise DataError(f"key {key!r}: expected true or false, got {value!r}")


def _parse_np(value):
    out = []
    for item in value.replace(";", ",").split(","):
        item = item.strip().strip("()")
        if not item:
            continue
        sep = "x" if "x" in item.lower() else ":"
        parts = item.lower().split(sep)
        if len(parts) != 2:
            raise DataError(f"key 'n_p': cannot read {item!r}; use entries like 50x100")
        try:
            out.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise DataError(f"key 'n_p': cannot read {item!r}; use entries like 50x100") from None
    if not out:
        raise DataError("key 'n_p': no (n, p) entries")
    return out


def parse_table_spec(path):
    """Read a table spec of ``key = value`` lines.

    Returns
    -------
    grid : dict
        ``n_p``, ``models`` and ``dists`` lists.
    base : dict
        Keyword arguments shared by every :class:`SimConfig`.
    timing : bool
        Fill the ``wall_time_s`` column.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None
    raw = {}
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise DataError(f"{path}, line {lineno}: expected 'key = value'")
        key, value = (t.strip() for t in text.split("=", 1))
        if key not in _TABLE_KEYS:
            raise DataError(f"{path}, line {lineno}: unknown key {key!r}")
        if key in raw:
            raise DataError(f"{path}, line {lineno}: duplicate key {key!r}")
        raw[key] = value
    if "n_p" not in raw:
        raise DataError(f"{path}: missing key 'n_p'")

    def listed(key, default):
        items = [t.strip() for t in raw.get(key, default).split(",") if t.strip()]
        if not items:
            raise DataError(f"key {key!r}: empty list")
        return items

    grid = {
        "n_p": _parse_np(raw["n_p"]),
        "models": listed("models", "m1,m2,m3"),
        "dists": listed("dists", "normal,t3"),
    }
    base = {"reps": 1000, "boot_reps": 100}
    conv = {
        "reps": ("reps", int), "boot": ("boot_reps", int), "seed": ("seed", int),
        "delta": ("delta", float), "alpha": ("alpha", float), "rho": ("rho", float),
        "boot_threads": ("boot_threads", int),
        "kernel": ("kernel", str), "variant": ("variant", str),
        "direction": ("direction", str), "method": ("method", str),
    }
    for key, value in raw.items():
        if key in conv:
            name, fn = conv[key]
            try:
                base[name] = fn(value)
            except ValueError:
                raise DataError(f"key {key!r}: cannot read {value!r}") from None
        elif key == "tau":
            try:
                base["rho"] = datagen.rho_from_tau(float(value))
            except ValueError:
                raise DataError(f"key 'tau': cannot read {value!r}") from None
        elif key == "threads":
            base["threads"] = value if value == "auto" else _int(key, value)
        elif key == "pair":
            parts = value.strip("()").split(",")
            if len(parts) != 2:
                raise DataError(f"key 'pair': expected i,j, got {value!r}")
            base["pair"] = (_int(key, parts[0]), _int(key, parts[1]))
        elif key in ("signed_truncation", "studentize"):
            base[key] = _parse_bool(key, value)
    if "tau" in raw and "rho" in raw:
        raise DataError("give either 'tau' or 'rho', not both")
    timing = _parse_bool("timing", raw["timing"]) if "timing" in raw else False
    for key, parse in (("models", datagen.Model.parse), ("dists", datagen.Distribution.parse)):
        for item in grid[key]:
            try:
                parse(item)
            except UsageError as exc:
                raise DataError(f"key {key!r}: {exc}") from None
    n, p = grid["n_p"][0]
    try:
        SimConfig(n=n, p=p, model=grid["models"][0], dist=grid["dists"][0], **base)
    except UsageError as exc:
        raise DataError(f"{path}: {exc}") from None
    return grid, base, timing


def _int(key, value):
    try:
        return int(str(value).strip())
    except ValueError:
        raise DataError(f"key {key!r}: cannot read {value!r}") from None


def run_table(spec_path, out_path, threads=None, timing=None):
    """Run every cell of a table spec and write one CSV row per cell.

    Rows follow the order ``(n, p)`` then model then distribution.
    Returns the list of :class:`SimResult`.
    """
    grid, base, spec_timing = parse_table_spec(spec_path)
    if threads is not None:
        base["threads"] = threads
    timing = spec_timing if timing is None else timing
    results = []
    for n, p in grid["n_p"]:
        for model in grid["models"]:
            for dist in grid["dists"]:
                cfg = SimConfig(n=n, p=p, model=model, dist=dist, **base)
                results.append(run_cell(cfg))
    text = format_rows(results, timing)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    return results
