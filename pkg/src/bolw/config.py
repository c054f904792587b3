"""Pipeline configuration: an INI file with one section per stage.

Example::

    [corpus]
    cutoff = 1e-5
    blacklist = massachusetts department of transportation

    [weighting]
    mode = per-camera-tf-idf

    [lda]
    k = 10
    beta = 0.1
    passes = 5

    [timeseries]
    bin_width_minutes = 15

Multi-valued keys (``inputs``, ``blacklist``) take one value per line.
Command-line flags override file values.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, fields, replace
from datetime import timedelta

from .corpus import DEFAULT_BLACKLIST, DEFAULT_CUTOFF
from .errors import UserError
from .lda.config import GibbsSettings, LdaConfig, VbSettings
from .weighting import WeightingMode

_VB_KEYS = {f.name: f.type for f in fields(VbSettings)}
_GIBBS_KEYS = {"gibbs_iterations": "iterations", "gibbs_burn_in": "burn_in"}


@dataclass(frozen=True)
class PipelineConfig:
    inputs: tuple[str, ...] = ()
    blacklist: tuple[str, ...] = DEFAULT_BLACKLIST
    cutoff: float = DEFAULT_CUTOFF
    strict: bool = False
    weighting: WeightingMode = WeightingMode.PER_CAMERA_TFIDF
    lda: LdaConfig = field(default_factory=LdaConfig)
    bin_width: timedelta = timedelta(minutes=15)
    utc_offset_hours: float = 0.0
    out: str = "out"
    seed: int = 0

    def with_seed(self, seed: int) -> PipelineConfig:
        return replace(self, seed=seed, lda=replace(self.lda, seed=seed))


def _lines(value: str) -> tuple[str, ...]:
    return tuple(line.strip() for line in value.splitlines() if line.strip())


def load_config(path=None) -> PipelineConfig:
    """Read an INI file; every missing key takes its default."""
    if path is None:
        return PipelineConfig()
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise UserError(f"{path}: {exc}") from None
    known = {"pipeline", "corpus", "weighting", "lda", "timeseries", "inputs"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise UserError(f"{path}: unknown sections {sorted(unknown)}")
    try:
        return _from_parser(parser)
    except ValueError as exc:
        raise UserError(f"{path}: {exc}") from None


def _from_parser(parser: configparser.ConfigParser) -> PipelineConfig:
    cfg = PipelineConfig()
    kw = {}
    if parser.has_section("pipeline"):
        sec = parser["pipeline"]
        if "seed" in sec:
            kw["seed"] = sec.getint("seed")
        if "out" in sec:
            kw["out"] = sec["out"]
        if "inputs" in sec:
            kw["inputs"] = _lines(sec["inputs"])
    if parser.has_section("corpus"):
        sec = parser["corpus"]
        if "cutoff" in sec:
            kw["cutoff"] = sec.getfloat("cutoff")
        if "blacklist" in sec:
            kw["blacklist"] = _lines(sec["blacklist"])
        if "strict" in sec:
            kw["strict"] = sec.getboolean("strict")
    if parser.has_section("weighting") and "mode" in parser["weighting"]:
        kw["weighting"] = WeightingMode(parser["weighting"]["mode"])
    if parser.has_section("timeseries"):
        sec = parser["timeseries"]
        if "bin_width_minutes" in sec:
            kw["bin_width"] = timedelta(minutes=sec.getfloat("bin_width_minutes"))
        if "utc_offset_hours" in sec:
            kw["utc_offset_hours"] = sec.getfloat("utc_offset_hours")
    lda_kw, vb_kw, gibbs_kw = {}, {}, {}
    if parser.has_section("lda"):
        sec = parser["lda"]
        for key in sec:
            if key == "k":
                lda_kw["k"] = sec.getint(key)
            elif key in ("alpha", "beta"):
                lda_kw[key] = sec.getfloat(key)
            elif key in _VB_KEYS:
                vb_kw[key] = sec.getint(key) if key in ("batch_size", "passes", "doc_update_iters") else sec.getfloat(key)
            elif key in _GIBBS_KEYS:
                gibbs_kw[_GIBBS_KEYS[key]] = sec.getint(key)
            else:
                raise ValueError(f"unknown [lda] key {key!r}")
    seed = kw.get("seed", cfg.seed)
    kw["lda"] = LdaConfig(seed=seed, vb=VbSettings(**vb_kw), gibbs=GibbsSettings(**gibbs_kw), **lda_kw)
    return replace(cfg, **kw)


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_resolved(cfg: PipelineConfig, path, inputs=()) -> None:
    """Echo every resolved setting (and hashes of the input files) as INI."""
    lda = cfg.lda
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser["pipeline"] = {"seed": str(cfg.seed), "out": cfg.out, "inputs": "\n".join(cfg.inputs)}
    parser["corpus"] = {"cutoff": repr(cfg.cutoff), "blacklist": "\n".join(cfg.blacklist), "strict": str(cfg.strict).lower()}
    parser["weighting"] = {"mode": cfg.weighting.value}
    lda_section = {"k": str(lda.k), "alpha": repr(lda.alpha), "beta": repr(lda.beta)}
    for f in fields(VbSettings):
        lda_section[f.name] = repr(getattr(lda.vb, f.name))
    lda_section["gibbs_iterations"] = str(lda.gibbs.iterations)
    lda_section["gibbs_burn_in"] = str(lda.gibbs.burn_in)
    parser["lda"] = lda_section
    parser["timeseries"] = {
        "bin_width_minutes": repr(cfg.bin_width.total_seconds() / 60),
        "utc_offset_hours": repr(cfg.utc_offset_hours),
    }
    if inputs:
        parser["inputs"] = {str(p): file_sha256(p) for p in inputs}
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
