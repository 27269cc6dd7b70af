"""Decision-level fusion of text and image scores, and per-query ranking.

Each document carries two unimodal relevance scores in [0, 1]. With
modality weights w_text + w_image = 1, write the weighted joints

    p_t = w_text  * s_text
    p_v = w_image * s_image

The classical fused score is the total-probability combination
``p_t + p_v``. The interference-aware score adds a cross term,

    score = p_t + p_v + 2 * sqrt(p_t * p_v) * cos_theta

where cos_theta in {-1, 0, +1} is decided by a four-rule table over a
lower threshold T_L and an upper threshold T_U:

    R1:  p_t > T_U  and  p_v > T_L   ->  +1  (both channels strong: reinforce)
    R2:  p_t > T_U  and  p_v < T_L   ->  -1  (conflict: text strong, image dead)
    R3:  p_t < T_L  and  p_v > T_U   ->  -1  (conflict: image strong, text dead)
    R4:  p_t < T_U  and  p_v < T_L   ->  -1  (image dead, text unconvincing)

Any other combination leaves cos_theta = 0, where the score reduces
exactly to the classical combination. Comparisons are strict, so
boundary equality falls through to 0. With T_L <= T_U at most one rule
can fire. T_U is either a fixed constant or, in the ``dynamic_text_sim``
mode, the document's own raw text cosine.

The fused value is a ranking score, not a calibrated probability: under
constructive interference it equals (sqrt(p_t) + sqrt(p_v))^2 and may
exceed 1; under destructive interference it is (sqrt(p_t) - sqrt(p_v))^2,
never negative.
"""

from __future__ import annotations

import configparser
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import ValidationError
from .ingest import MODALITIES, ScoreTable

log = logging.getLogger(__name__)

RULES = ("R1", "R2", "R3", "R4")
RULE_NONE = "none"

WEIGHT_TOL = 1e-12

_UPPER_MODES = ("static", "dynamic_text_sim")
_FUSE_MODES = ("classical", "quantum")
_RULE_OPERANDS = ("weighted", "raw")
_MISSING_POLICIES = ("zero", "error")


@dataclass(frozen=True)
class FusionConfig:
    """Weights, thresholds, and mode switches for the fusion stage.

    ``t_upper`` must be given for ``upper_mode="static"``; in
    ``dynamic_text_sim`` mode the effective upper threshold is each
    document's raw text cosine and ``t_upper`` stays None.
    ``rule_operands`` selects what the thresholds gate: the weighted
    joints p_t/p_v (default) or the raw similarities.
    """

    w_text: float = 0.5
    w_image: float = 0.5
    t_lower: float = 0.01
    t_upper: float | None = None
    upper_mode: str = "dynamic_text_sim"
    mode: str = "quantum"
    rule_operands: str = "weighted"
    missing_policy: str = "zero"

    def __post_init__(self):
        if not (0.0 <= self.w_text <= 1.0 and 0.0 <= self.w_image <= 1.0):
            raise ValidationError("modality weights must lie in [0, 1]")
        if abs(self.w_text + self.w_image - 1.0) > WEIGHT_TOL:
            raise ValidationError(
                f"w_text + w_image must equal 1, got {self.w_text + self.w_image!r}"
            )
        if self.t_lower < 0.0:
            raise ValidationError("t_lower must be non-negative")
        if self.upper_mode not in _UPPER_MODES:
            raise ValidationError(f"unknown upper_mode {self.upper_mode!r}")
        if self.mode not in _FUSE_MODES:
            raise ValidationError(f"unknown fusion mode {self.mode!r}")
        if self.rule_operands not in _RULE_OPERANDS:
            raise ValidationError(f"unknown rule_operands {self.rule_operands!r}")
        if self.missing_policy not in _MISSING_POLICIES:
            raise ValidationError(f"unknown missing_policy {self.missing_policy!r}")
        if self.upper_mode == "static":
            if self.t_upper is None:
                raise ValidationError("static upper_mode requires t_upper")
            if self.t_upper < 0.0:
                raise ValidationError("t_upper must be non-negative")
            if self.t_lower > self.t_upper:
                raise ValidationError(
                    f"t_lower={self.t_lower} exceeds t_upper={self.t_upper}"
                )
        elif self.t_upper is not None:
            raise ValidationError("t_upper is ignored outside static mode; unset it")

    @classmethod
    def bow_preset(cls, **overrides) -> "FusionConfig":
        """Equal weights, T_L = 0.01, dynamic per-document upper threshold."""
        base = dict(w_text=0.5, w_image=0.5, t_lower=0.01,
                    upper_mode="dynamic_text_sim")
        base.update(overrides)
        return cls(**base)

    @classmethod
    def enhanced_preset(cls, t_upper: float | None = None,
                        **overrides) -> "FusionConfig":
        """Text 0.2 / image 0.8, T_L = 0.001; the static upper threshold
        has no published value and must be supplied explicitly."""
        if t_upper is None:
            raise ValidationError(
                "the enhanced preset needs an explicit t_upper; "
                "no default exists for it"
            )
        base = dict(w_text=0.2, w_image=0.8, t_lower=0.001,
                    t_upper=float(t_upper), upper_mode="static")
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "FusionConfig":
        """Read a ``[fusion]`` INI section; keyword overrides win per key."""
        parser = configparser.ConfigParser()
        if not parser.read(path, encoding="utf-8"):
            raise ValidationError(f"cannot read config file {path}")
        if not parser.has_section("fusion"):
            raise ValidationError(f"{path}: missing [fusion] section")
        section = parser["fusion"]
        kwargs: dict = {}
        for key in ("w_text", "w_image", "t_lower", "t_upper"):
            if key in section:
                kwargs[key] = section.getfloat(key)
        for key in ("upper_mode", "mode", "rule_operands", "missing_policy"):
            if key in section:
                kwargs[key] = section[key]
        unknown = set(section) - {
            "w_text", "w_image", "t_lower", "t_upper", "upper_mode", "mode",
            "rule_operands", "missing_policy",
        }
        if unknown:
            raise ValidationError(f"{path}: unknown config keys {sorted(unknown)}")
        kwargs.update(overrides)
        return cls(**kwargs)

    def override(self, **changes) -> "FusionConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class FusionInput:
    """One document's unimodal scores for one query.

    ``raw_text_sim`` is the unweighted text cosine used by the dynamic
    upper threshold; omitted, it defaults to ``s_text`` (they coincide
    whenever the score table holds raw cosines, the normal case).
    """

    s_text: float
    s_image: float
    raw_text_sim: float | None = None

    def __post_init__(self):
        for name, value in (("s_text", self.s_text), ("s_image", self.s_image)):
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {value!r}")
        if self.raw_text_sim is None:
            object.__setattr__(self, "raw_text_sim", self.s_text)
        elif not math.isfinite(self.raw_text_sim) or not 0.0 <= self.raw_text_sim <= 1.0:
            raise ValidationError(
                f"raw_text_sim must be in [0, 1], got {self.raw_text_sim!r}"
            )


class InterferenceDecision(NamedTuple):
    """Which rule fired and the resulting phase term for one document."""

    cos_theta: int
    fired_rule: str
    p_text: float
    p_image: float


@dataclass(frozen=True)
class FusedScore:
    doc_id: str
    score: float
    decision: InterferenceDecision


class DiagnosticsRow(NamedTuple):
    query_id: str
    doc_id: str
    p_text: float
    p_image: float
    fired_rule: str
    cos_theta: int
    score: float


def interference_rule(p_text: float, p_image: float,
                      t_lower: float, t_upper: float) -> tuple[str, int]:
    """Apply the four-rule table; first match wins, default is no effect."""
    if p_text > t_upper and p_image > t_lower:
        return "R1", +1
    if p_text > t_upper and p_image < t_lower:
        return "R2", -1
    if p_text < t_lower and p_image > t_upper:
        return "R3", -1
    if p_text < t_upper and p_image < t_lower:
        return "R4", -1
    return RULE_NONE, 0


def classical_fuse(inp: FusionInput, cfg: FusionConfig) -> float:
    """Total-probability combination: w_text*s_text + w_image*s_image."""
    return cfg.w_text * inp.s_text + cfg.w_image * inp.s_image


def decide_interference(inp: FusionInput, cfg: FusionConfig) -> InterferenceDecision:
    """Resolve the effective upper threshold and run the rule table."""
    p_text = cfg.w_text * inp.s_text
    p_image = cfg.w_image * inp.s_image
    if cfg.upper_mode == "static":
        t_upper = cfg.t_upper
        if t_upper is None:  # unreachable after config validation
            raise ValidationError("static upper threshold left unresolved")
    else:
        t_upper = inp.raw_text_sim
    if cfg.rule_operands == "weighted":
        rule, cos_theta = interference_rule(p_text, p_image, cfg.t_lower, t_upper)
    else:
        rule, cos_theta = interference_rule(inp.s_text, inp.s_image,
                                            cfg.t_lower, t_upper)
    return InterferenceDecision(cos_theta, rule, p_text, p_image)


def interference_score(p_text: float, p_image: float, cos_theta: int) -> float:
    """p_t + p_v + 2*sqrt(p_t*p_v)*cos_theta, floored at 0 against roundoff."""
    radicand = p_text * p_image
    if radicand < 0.0:
        raise ValidationError(
            f"negative radicand {radicand!r}: weighted joints must be >= 0"
        )
    score = p_text + p_image + 2.0 * math.sqrt(radicand) * cos_theta
    return max(score, 0.0)


def quantum_fuse(inp: FusionInput, cfg: FusionConfig, doc_id: str = "") -> FusedScore:
    """Interference-aware fused score; equals the classical one when no
    rule fires."""
    decision = decide_interference(inp, cfg)
    score = interference_score(decision.p_text, decision.p_image,
                               decision.cos_theta)
    return FusedScore(doc_id=doc_id, score=score, decision=decision)


def rank(fused: Iterable[FusedScore]) -> list[FusedScore]:
    """Order one query's documents: score descending, doc_id ascending."""
    return sorted(fused, key=lambda f: (-f.score, f.doc_id))


def fuse_query(doc_scores: Sequence[tuple[str, FusionInput]],
               cfg: FusionConfig) -> list[FusedScore]:
    """Fuse and rank one query's candidate documents."""
    fused = []
    for doc_id, inp in doc_scores:
        decision = decide_interference(inp, cfg)
        if cfg.mode == "quantum":
            score = interference_score(decision.p_text, decision.p_image,
                                       decision.cos_theta)
        else:
            score = classical_fuse(inp, cfg)
        fused.append(FusedScore(doc_id=doc_id, score=score, decision=decision))
    return rank(fused)


def inputs_from_table(table: ScoreTable, query_id: str,
                      cfg: FusionConfig) -> list[tuple[str, FusionInput]]:
    """Pull one query's (doc_id, FusionInput) pairs out of a score table.

    A document missing one modality gets 0.0 for it under the default
    ``missing_policy="zero"`` (with a warning), or raises under
    ``"error"``.
    """
    pairs = []
    for doc_id in table.docs_for(query_id):
        scores = {}
        for modality in MODALITIES:
            value = table.get(query_id, doc_id, modality)
            if value is None:
                if cfg.missing_policy == "error":
                    raise ValidationError(
                        f"({query_id}, {doc_id}) lacks a {modality} score"
                    )
                log.warning("(%s, %s): missing %s score, treating as 0.0",
                            query_id, doc_id, modality)
                value = 0.0
            scores[modality] = value
        pairs.append((doc_id, FusionInput(s_text=scores["text"],
                                          s_image=scores["image"])))
    return pairs


def fuse_table(table: ScoreTable, cfg: FusionConfig,
               ) -> tuple[dict[str, list[FusedScore]], list[DiagnosticsRow]]:
    """Fuse every query in a score table; returns rankings and diagnostics.

    Diagnostics carry the rule decision for every (query, doc) pair even
    in classical mode, which makes threshold choices auditable (for
    instance, a dynamic upper threshold that never lets R1 fire shows up
    immediately in the rule column).
    """
    rankings: dict[str, list[FusedScore]] = {}
    diagnostics: list[DiagnosticsRow] = []
    for query_id in table.queries():
        ranked = fuse_query(inputs_from_table(table, query_id, cfg), cfg)
        rankings[query_id] = ranked
        for f in ranked:
            diagnostics.append(DiagnosticsRow(
                query_id=query_id, doc_id=f.doc_id,
                p_text=f.decision.p_text, p_image=f.decision.p_image,
                fired_rule=f.decision.fired_rule,
                cos_theta=f.decision.cos_theta, score=f.score,
            ))
    return rankings, diagnostics


def write_diagnostics(rows: Sequence[DiagnosticsRow], path: str | Path) -> None:
    """Per-document TSV: joints, fired rule, phase term, fused score."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("query_id\tdoc_id\tp_text\tp_image\tfired_rule\tcos_theta\tscore\n")
        for r in rows:
            fh.write(f"{r.query_id}\t{r.doc_id}\t{r.p_text:.9g}\t{r.p_image:.9g}"
                     f"\t{r.fired_rule}\t{r.cos_theta:+d}\t{r.score:.9g}\n")


def rule_counts(rows: Iterable[DiagnosticsRow]) -> dict[str, int]:
    """How often each rule fired; handy for sanity-checking thresholds."""
    counts = {rule: 0 for rule in RULES + (RULE_NONE,)}
    for r in rows:
        counts[r.fired_rule] += 1
    return counts
