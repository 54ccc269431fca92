"""Random-ensemble experiments and their serialisation.

Every trial draws from its own generator keyed by (seed, trial, stream tag),
so results do not depend on how trials are spread over workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .cyclic_walk import (
    DEFAULT_EPS,
    GenSet,
    fourier_profile,
    is_prime,
    mixing_report,
    mixing_time,
    relaxation_time,
    spectral_gap,
    window_report,
)
from .errors import ValidationError
from .lattice import geometric_diameter, lattice_of, sample_genset, shortest_dual, unit_ball_radius
from .theta import tau0

TAU0 = tau0()
TYPICAL_BAND = 0.3

TRIAL_FIELDS = (
    "trial", "A", "ell", "gap", "t_rel", "t_mix", "diam_geom",
    "ratio_rel", "ratio_target",
)


def _tag(name: str) -> int:
    return zlib.crc32(name.encode())


def trial_rng(seed: int, trial: int, tag: str) -> np.random.Generator:
    """Counter-based generator for one (seed, trial, stream) triple."""
    ss = np.random.SeedSequence(seed, spawn_key=(trial, _tag(tag)))
    return np.random.Generator(np.random.Philox(ss))


def resolve_k(p: int, k) -> int:
    """An integer k, or the rule 'logp_over_loglogp' = floor(ln p / ln ln p)."""
    if isinstance(k, str):
        if k == "logp_over_loglogp":
            return max(1, int(math.log(p) / math.log(math.log(p))))
        try:
            k = int(k)
        except ValueError:
            raise ValidationError(f"unknown k rule {k!r}") from None
    return int(k)


def target_tmix(p: int, k: int) -> float:
    """(k / 2 pi e) p^{2/k}."""
    return k / (2 * math.pi * math.e) * p ** (2.0 / k)


@dataclass(frozen=True)
class ExperimentConfig:
    command: str = "random"
    p: int = 10007
    k: int | str = 3
    trials: int = 1
    seed: int = 0
    eps: tuple[float, ...] = (DEFAULT_EPS,)
    mc_samples: int = 10_000
    rho: tuple[float, ...] = (1.0, 2.0)
    geometry: bool = True
    out: str | None = None
    fmt: str = "json"

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValidationError(f"p = {self.p} is not prime")
        k = resolve_k(self.p, self.k)
        if k < 1 or 2 * k + 1 > self.p:
            raise ValidationError(f"need k >= 1 and 2k+1 <= p (p={self.p}, k={k})")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if not self.eps or any(not 0 < e < 1 for e in self.eps):
            raise ValidationError("every eps must lie in (0, 1)")
        if self.fmt not in ("json", "csv"):
            raise ValidationError("format must be json or csv")

    @property
    def k_value(self) -> int:
        return resolve_k(self.p, self.k)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["k"] = self.k_value
        d["k_rule"] = self.k if self.k == "logp_over_loglogp" else None
        d.pop("out")  # where the output goes must not change its bytes
        d["eps"] = list(self.eps)
        d["rho"] = list(self.rho)
        return d


@dataclass
class TrialRecord:
    trial: int
    A: tuple[int, ...]
    ell: float
    gap: float
    t_rel: float
    t_mix: dict[float, int]
    diam_geom: float | None
    ratio_rel: float
    ratio_target: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = {name: getattr(self, name) for name in TRIAL_FIELDS}
        d["A"] = list(self.A)
        d["t_mix"] = {repr(e): n for e, n in self.t_mix.items()}
        return d


def run_trial(cfg: ExperimentConfig, trial: int) -> TrialRecord:
    p, k = cfg.p, cfg.k_value
    A = sample_genset(p, k, trial_rng(cfg.seed, trial, "genset"))
    prof = fourier_profile(A)
    gap = spectral_gap(prof)
    t_rel = relaxation_time(gap)
    tmix = {float(e): mixing_time(prof, e, prof) for e in cfg.eps}
    L = lattice_of(A)
    _, ell = shortest_dual(L)
    diam = geometric_diameter(A) if cfg.geometry else None
    main = tmix.get(DEFAULT_EPS, tmix[cfg.eps[0]])
    return TrialRecord(
        trial=trial,
        A=L.a,
        ell=ell,
        gap=gap,
        t_rel=t_rel,
        t_mix=tmix,
        diam_geom=diam,
        ratio_rel=main / t_rel,
        ratio_target=main / target_tmix(p, k),
    )


def _run_chunk(args) -> list[TrialRecord]:
    cfg, trials = args
    return [run_trial(cfg, t) for t in trials]


def run_trials(cfg: ExperimentConfig, jobs: int = 1) -> list[TrialRecord]:
    idx = list(range(cfg.trials))
    if jobs <= 1 or cfg.trials == 1:
        return [run_trial(cfg, t) for t in idx]
    chunks = [idx[i::jobs] for i in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_run_chunk, [(cfg, c) for c in chunks if c]))
    records = [r for part in parts for r in part]
    records.sort(key=lambda r: r.trial)
    return records


def nearest_rank(values, q: float) -> float:
    """The ceil(q N)-th smallest value (q = 0 gives the minimum)."""
    xs = sorted(values)
    if not xs:
        raise ValidationError("no values")
    return xs[max(0, math.ceil(q * len(xs)) - 1)]


def summarize(cfg: ExperimentConfig, records: list[TrialRecord]) -> dict:
    p, k = cfg.p, cfg.k_value
    n = len(records)
    eps0 = DEFAULT_EPS if DEFAULT_EPS in cfg.eps else cfg.eps[0]
    tm = [r.t_mix[eps0] for r in records]
    rel = [r.ratio_rel for r in records]
    tgt = [r.ratio_target for r in records]
    Rk = unit_ball_radius(k)
    tail = {}
    for rho in cfg.rho:
        short = sum(r.ell <= Rk / (rho * p ** (1.0 / k)) for r in records) / n
        slow = sum(r.t_rel >= math.e / math.pi * rho ** 2 * p ** (2.0 / k) for r in records) / n
        tail[repr(float(rho))] = {
            "short_vector_fraction": short,
            "slow_relaxation_fraction": slow,
            "predicted": 1.0 / (2 * rho ** k),
            "binomial_stderr": math.sqrt(short * (1 - short) / n),
        }
    return {
        "trials": n,
        "k": k,
        "eps": eps0,
        "target_tmix": target_tmix(p, k),
        "t_mix_quantiles": {q: nearest_rank(tm, float(q)) for q in ("0.1", "0.5", "0.9")},
        "median_ratio_target": nearest_rank(tgt, 0.5),
        "typical_fraction": sum(abs(x - 1) <= TYPICAL_BAND for x in tgt) / n,
        "min_ratio_rel": min(rel),
        "max_ratio_rel": max(rel),
        "tau0": TAU0,
        "below_tau0_fraction": sum(x < TAU0 - 0.05 for x in rel) / n,
        "tails": tail,
    }


def run_random(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    records = run_trials(cfg, jobs)
    return {"config": cfg.as_dict(), "records": records, "summary": summarize(cfg, records)}


def analyze(A: GenSet, eps_list=(DEFAULT_EPS,), window_eps: float = 0.25) -> dict:
    """Full report for one generating set, with lattice-based predictions."""
    rep = mixing_report(A, eps_list)
    L = lattice_of(A)
    _, ell = shortest_dual(L)
    k = A.k
    predicted_trel = (2 * k + 1) / (4 * math.pi ** 2 * ell * ell)
    win = window_report(A, window_eps) if window_eps else None
    return {
        "p": A.p,
        "half": list(A.half),
        "canonical": list(L.a),
        "gap": rep.gap,
        "t_rel": rep.t_rel,
        "t_mix": {repr(e): n for e, n in rep.t_mix.items()},
        "tv_profile": [[n, tv] for n, tv in rep.tv_profile],
        "predicted": {
            "ell": ell,
            "t_rel_from_ell": predicted_trel,
            "tau0_t_rel": TAU0 * rep.t_rel,
            "target_tmix": target_tmix(A.p, k),
        },
        "window": win,
    }


# --- serialisation ------------------------------------------------------------

def _plain(x):
    if isinstance(x, TrialRecord):
        return x.to_json()
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        x = float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def to_json(payload: dict, timestamp: str | None = None) -> str:
    body = _plain(payload)
    if timestamp is not None:
        body["timestamp"] = timestamp
    return json.dumps(body, indent=2, sort_keys=False) + "\n"


def csv_columns(eps) -> list[str]:
    cols = [f for f in TRIAL_FIELDS if f != "t_mix"]
    cols[cols.index("gap") + 2:cols.index("gap") + 2] = [f"t_mix_{e!r}" for e in eps]
    return cols


def records_to_csv(records: list[TrialRecord], eps) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_columns(eps))
    for r in records:
        row = [r.trial, ";".join(map(str, r.A)), repr(r.ell), repr(r.gap), repr(r.t_rel)]
        row += [r.t_mix[float(e)] for e in eps]
        row += ["" if r.diam_geom is None else repr(r.diam_geom), repr(r.ratio_rel), repr(r.ratio_target)]
        w.writerow(row)
    return buf.getvalue()


def rows_to_csv(rows: list[dict]) -> str:
    """Generic CSV for lists of flat dicts (shortest round-trip floats)."""
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.writer(buf, lineterminator="\n")
    cols = list(rows[0])
    w.writerow(cols)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in (r[c] for c in cols)])
    return buf.getvalue()
