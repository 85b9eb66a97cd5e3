"""Experiment harness: random instances, certified bounds at scale, CSV output."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import random
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from fractions import Fraction

from .endred import (
    EndRingDesc,
    RingElem,
    is_symmetric_positive,
    matrix_ring_constant,
    norm,
    real_quadratic_bound,
    reduce_symmetric,
    fundamental_unit,
)
from .errors import CertificateViolation
from .exact import ExactMatrix, height
from .isogeny import bounded_rep_pipeline, generate_polarized_isogeny
from .siegel import SiegelPoint, default_precision_bits, fundamental_preimage
from .symplectic import random_perfect_form, symplectic_basis

EXPERIMENTS = ("sympl-bound", "isogeny-pipeline", "endred", "siegel-reduce")
CSV_HEADER = ["experiment", "g", "seed", "size", "observed_height", "certified_bound",
              "ratio", "wall_time_ms"]
WORD_LEN = 6


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    g: int = 1
    trials: int = 1
    seed: int = 0
    size_schedule: list = field(default_factory=lambda: [10])
    precision_bits: int = 0
    out_path: str | None = None
    ring: EndRingDesc | None = None
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.g < 1:
            raise ConfigError("g must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        sizes = list(self.size_schedule)
        if not sizes:
            raise ConfigError("size schedule is empty")
        if any(not isinstance(s, int) or s < 1 for s in sizes):
            raise ConfigError("sizes must be positive integers")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("size schedule must be strictly increasing")
        self.size_schedule = sizes
        if not self.precision_bits:
            self.precision_bits = default_precision_bits()
        if self.precision_bits < 53:
            raise ConfigError("precision_bits must be >= 53")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.experiment == "endred" and self.ring is None:
            self.ring = EndRingDesc.matrix(2)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        if "sizes" in d:
            d["size_schedule"] = d.pop("sizes")
        if "out" in d:
            d["out_path"] = d.pop("out")
        if isinstance(d.get("size_schedule"), str):
            d["size_schedule"] = parse_sizes(d["size_schedule"])
        if d.get("ring") is not None and not isinstance(d["ring"], EndRingDesc):
            try:
                d["ring"] = EndRingDesc.from_json(d["ring"])
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"bad ring descriptor: {exc}") from exc
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def parse_sizes(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad size list {text!r}") from exc


@dataclass
class TrialRecord:
    experiment: str
    g: int
    seed: int
    size: int
    observed_height: int
    certified_bound: int
    ratio: float
    wall_time_ms: float | None = None
    index: int = 0

    def row(self) -> list[str]:
        wt = "" if self.wall_time_ms is None else f"{self.wall_time_ms:.3f}"
        return [self.experiment, str(self.g), str(self.seed), str(self.size),
                str(self.observed_height), str(self.certified_bound),
                f"{self.ratio:.6e}", wt]


# -- instance generators --------------------------------------------------------------

def _chain(g: int, n: int, rng: random.Random) -> list[int]:
    """Random d_1 | d_2 | ... | d_g | n."""
    out = []
    d = 1
    for _ in range(g):
        choices = [k for k in range(d, n + 1, d) if n % k == 0]
        d = rng.choice(choices)
        out.append(d)
    return out


def _random_unimodular(n: int, rng: random.Random, steps: int) -> list[list[int]]:
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    if n == 1:
        return U
    for _ in range(steps):
        i, j = rng.sample(range(n), 2)
        t = rng.choice((-1, 1))
        for r in U:
            r[i] += t * r[j]
    return U


def random_spd_matrix(n: int, det_bound: int, rng: random.Random, steps: int = 8) -> RingElem:
    """Integral positive definite q = U^T L^T diag(d) L U with prod(d) <= det_bound."""
    d = []
    rem = det_bound
    for k in range(n - 1, -1, -1):
        # leave room for the remaining factors so the split is not lopsided
        cap = rem if k == 0 else max(1, round(rem ** (1 / (k + 1))))
        x = rng.randint(1, cap)
        d.append(x)
        rem //= x
    L = [[1 if i == j else (rng.randint(-2, 2) if j > i else 0) for j in range(n)] for i in range(n)]
    U = _random_unimodular(n, rng, steps)
    M = ExactMatrix.from_ints(L) @ ExactMatrix.from_ints(U)
    q = M.T @ ExactMatrix.diag(d) @ M
    return RingElem(EndRingDesc.matrix(n), tuple(q.entries()))


def random_totally_positive(D: int, norm_bound: int, rng: random.Random, max_shift: int = 4) -> RingElem:
    """Totally positive element of norm <= norm_bound, pushed off balance by a unit square."""
    ring = EndRingDesc.quadratic(D)
    eps2 = fundamental_unit(D) ** 2
    while True:
        a = rng.randint(1, norm_bound)
        b = rng.randint(-a, a)
        q = RingElem(ring, (a, b))
        if is_symmetric_positive(q) and norm(q) <= norm_bound:
            break
    return q * eps2 ** rng.randint(-max_shift, max_shift)


def base_point(g: int, bits: int) -> SiegelPoint:
    """Fixed generic base point s used by siegel-reduce."""
    rows = [["0.1+1.1j" if i == j else "0.05+0.3j" for j in range(g)] for i in range(g)]
    return SiegelPoint.from_rows(rows, bits)


# -- trials --------------------------------------------------------------------------

def _ratio(obs: int, bound: int) -> float:
    return float(Fraction(obs, bound)) if bound else math.inf


def _trial_sympl(cfg, size, seed):
    form, _ = random_perfect_form(cfg.g, size, seed)
    b, cert = symplectic_basis(form)
    return cert.final_height, cert.final_bound


def _trial_isogeny(cfg, size, seed):
    rng = random.Random(seed)
    divisors = _chain(cfg.g, size, rng)
    f = generate_polarized_isogeny(cfg.g, divisors, size, WORD_LEN, rng.getrandbits(64))
    res = bounded_rep_pipeline(f)
    return res.final_height, res.certified_bound


def _trial_endred(cfg, size, seed):
    rng = random.Random(seed)
    ring = cfg.ring
    if ring.kind == "matrix":
        q = random_spd_matrix(ring.n, size, rng)
        bound = math.floor(matrix_ring_constant(ring.n) * norm(q))
    elif ring.D > 0:
        q = random_totally_positive(ring.D, size, rng)
        bound = real_quadratic_bound(norm(q), ring.D)
    else:
        q = RingElem(ring, (rng.randint(1, size), 0))
        bound = q.coords[0]
    _, qr = reduce_symmetric(q)
    return qr.height(), bound


def _trial_siegel(cfg, size, seed):
    rng = random.Random(seed)
    divisors = _chain(cfg.g, size, rng)
    f = generate_polarized_isogeny(cfg.g, divisors, size, WORD_LEN, rng.getrandbits(64))
    gamma1 = bounded_rep_pipeline(f).rep_in_new_bases
    s = base_point(cfg.g, cfg.precision_bits)
    gamma, _, gamma2 = fundamental_preimage(gamma1, s)
    return height(gamma), 2 * cfg.g * height(gamma1) * height(gamma2)


_TRIALS = {
    "sympl-bound": _trial_sympl,
    "isogeny-pipeline": _trial_isogeny,
    "endred": _trial_endred,
    "siegel-reduce": _trial_siegel,
}


def run_trial(cfg: ExperimentConfig, size: int, index: int) -> TrialRecord:
    seed = cfg.seed + index
    t0 = time.perf_counter()
    try:
        obs, bound = _TRIALS[cfg.experiment](cfg, size, seed)
    except CertificateViolation as exc:
        raise CertificateViolation(f"{exc} [reproduce: {reproduction_line(cfg, size, index)}]") from exc
    elapsed = (time.perf_counter() - t0) * 1000 if cfg.timing else None
    if obs > bound:
        raise CertificateViolation(
            f"observed {obs} > certified {bound} [reproduce: {reproduction_line(cfg, size, index)}]")
    return TrialRecord(cfg.experiment, cfg.g, seed, size, obs, bound, _ratio(obs, bound),
                       elapsed, index)


def reproduction_line(cfg: ExperimentConfig, size: int, index: int) -> str:
    extra = f" --ring '{cfg.ring.to_json()}'" if cfg.experiment == "endred" else ""
    return (f"isoheight {cfg.experiment} --g {cfg.g} --seed {cfg.seed + index} --trials 1 "
            f"--sizes {size}{extra} (index {index})")


def run_experiment(cfg: ExperimentConfig) -> list[TrialRecord]:
    """Run every (size, trial) pair; trial i uses seed + i. Writes CSV if out_path is set."""
    jobs = [(size, i) for size in cfg.size_schedule for i in range(cfg.trials)]
    if cfg.workers == 1:
        records = [run_trial(cfg, s, i) for s, i in jobs]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(lambda job: run_trial(cfg, *job), jobs))
    records.sort(key=lambda r: (r.size, r.index))
    if cfg.out_path:
        write_csv(records, cfg.out_path)
    return records


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def write_csv(records, path: str) -> None:
    text = records_to_csv(records)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_csv(path: str) -> list[TrialRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        out = []
        for i, row in enumerate(reader):
            wt = row["wall_time_ms"]
            out.append(TrialRecord(row["experiment"], int(row["g"]), int(row["seed"]),
                                   int(row["size"]), int(row["observed_height"]),
                                   int(row["certified_bound"]), float(row["ratio"]),
                                   float(wt) if wt else None, i))
        return out


def fit_exponent(records) -> tuple[float, float]:
    """OLS of log(max observed height per size) on log(size): (slope, intercept).

    Accepts TrialRecords or plain (size, observed) pairs.
    """
    best: dict[int, int] = {}
    for r in records:
        size, obs = (r.size, r.observed_height) if isinstance(r, TrialRecord) else r
        best[size] = max(best.get(size, 0), obs)
    if len(best) < 2:
        raise ValueError("need at least two distinct sizes to fit an exponent")
    sizes = sorted(best)
    if any(best[s] <= 0 for s in sizes):
        raise ValueError("observed heights must be positive")
    xs = [math.log(s) for s in sizes]
    ys = [math.log(best[s]) for s in sizes]
    slope, intercept = statistics.linear_regression(xs, ys)
    return slope, intercept


def load_config_file(path: str) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data
