"""Scenario orchestration: end-to-end extraction, channel-aware simulation,
robustness sweeps, and allocator comparisons, all reproducible from one
scenario file plus a seed."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import add as add_mod
from .add import AddHyper, AllocState, TableAllocEnv, make_state
from .bundle import (AttentionMap, BinaryAttentionMap, RawScoreStack, SemComBundle,
                     aggregate_attention, binarize, load_bundle)
from .channel import ChannelConfig, UserLink, sample_rayleigh, token_budget
from .metrics import JpsqParams, ProxyScorer, ScoreTable, jpsq, user_utility
from .packing import SemanticInfo, pack, reduction_ratio, truncate
from .prompt_analysis import (ImportanceVector, build_dependency_matrices,
                              build_level_matrix, filter_words, importance)
from .segmentation import CleanSegment, clean_segment

DEFAULT_XI_SCHEME = {"PROPN": 0.9, "NN": 0.8, "default": 0.5}

ARTIFACT_VERSION = "0.1.0"


class ConfigError(ValueError):
    pass


@dataclass
class DbscanParams:
    eps: float = 2.0
    min_neighbors: int = 5
    min_cluster_size: int = 30


@dataclass
class UserSpec:
    bundle: int  # index into the corpus
    distance_m: float
    latency_s: float
    interference_w: float = 0.0


@dataclass
class Scenario:
    corpus: list[str]
    users: list[UserSpec]
    channel: ChannelConfig
    channel_seed: int
    jpsq: JpsqParams
    xi_scheme: dict[str, float]
    dbscan: DbscanParams
    scorer: dict
    add: AddHyper
    seed: int
    raw: dict = field(default_factory=dict, repr=False)

    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_scenario(path: str, seed_override: int | None = None) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}")
    return parse_scenario(raw, base_dir=os.path.dirname(os.path.abspath(path)),
                          seed_override=seed_override)


def parse_scenario(raw: dict, base_dir: str = ".",
                   seed_override: int | None = None) -> Scenario:
    try:
        corpus = [p if os.path.isabs(p) else os.path.join(base_dir, p)
                  for p in raw["corpus"]]
        ch = raw["channel"]
        channel = ChannelConfig(W_hz=float(ch["W_hz"]), P_w=float(ch["P_w"]),
                                N0_w_per_hz=float(ch["N0_w_per_hz"]),
                                bits_per_token=int(ch.get("bits_per_token", 88)),
                                O=float(ch.get("O", 1.0)))
        channel_seed = int(ch.get("seed", raw.get("seed", 0)))
        users = [UserSpec(bundle=int(u["bundle"]), distance_m=float(u["distance_m"]),
                          latency_s=float(u["latency_s"]),
                          interference_w=float(u.get("interference_w", 0.0)))
                 for u in raw["users"]]
        jp = raw.get("jpsq", {})
        params = JpsqParams(t_max=float(jp.get("t_max", 1.0)),
                            omega0=float(jp.get("omega0", 1.25)),
                            omega1=float(jp.get("omega1", 500.0)),
                            omega2=float(jp.get("omega2", 0.05)),
                            q_th=float(jp.get("q_th", 4.9827)),
                            penalty=float(jp.get("penalty", -500.0)))
        xi_scheme = dict(DEFAULT_XI_SCHEME)
        xi_scheme.update({k: float(v) for k, v in raw.get("xi_scheme", {}).items()})
        db = raw.get("dbscan", {})
        dbscan = DbscanParams(eps=float(db.get("eps", 2.0)),
                              min_neighbors=int(db.get("min_neighbors", 5)),
                              min_cluster_size=int(db.get("min_cluster_size", 30)))
        scorer = raw.get("scorer", {"kind": "proxy"})
        if scorer.get("kind") not in ("proxy", "table"):
            raise ConfigError(f"unknown scorer kind {scorer.get('kind')!r}")
        if scorer.get("kind") == "table":
            p = scorer.get("path")
            if not p:
                raise ConfigError("table scorer needs a path")
            scorer = dict(scorer)
            scorer["path"] = p if os.path.isabs(p) else os.path.join(base_dir, p)
        ad = raw.get("add", {})
        hyper = AddHyper(T=int(ad.get("T", 5)), gamma=float(ad.get("gamma", 0.95)),
                         lr=float(ad.get("lr", 1e-4)),
                         batch_size=int(ad.get("batch_size", 64)),
                         episodes=int(ad.get("episodes", 2000)),
                         hidden=int(ad.get("hidden", 256)),
                         explore_start=float(ad.get("explore_start", 0.1)),
                         explore_end=float(ad.get("explore_end", 0.01)),
                         sync_period=int(ad.get("sync_period", 100)),
                         buffer_capacity=int(ad.get("buffer_capacity", 10_000)),
                         seed=int(ad.get("seed", raw.get("seed", 0))),
                         policy_lr=(float(ad["policy_lr"])
                                    if ad.get("policy_lr") is not None else None),
                         warmup=int(ad.get("warmup", 0)))
        seed = int(raw.get("seed", 0))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad scenario: {exc}")
    if seed_override is not None:
        seed = seed_override
        hyper.seed = seed_override
    for u in users:
        if not 0 <= u.bundle < len(corpus):
            raise ConfigError(f"user references bundle {u.bundle}, corpus has {len(corpus)}")
    for k, v in xi_scheme.items():
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"xi for {k} out of [0, 1]: {v}")
    return Scenario(corpus=corpus, users=users, channel=channel, channel_seed=channel_seed,
                    jpsq=params, xi_scheme=xi_scheme, dbscan=dbscan, scorer=scorer,
                    add=hyper, seed=seed, raw=raw)


def xi_for(pos: str, scheme: dict[str, float]) -> float:
    return scheme.get(pos, scheme.get("default", 0.5))


@dataclass
class PipelineResult:
    info: SemanticInfo
    segments: dict[int, CleanSegment]
    importance: ImportanceVector
    binary_maps: dict[int, BinaryAttentionMap]


def run_pipeline(bundle: SemComBundle, xi_scheme: dict[str, float] | None = None,
                 dbscan: DbscanParams | None = None) -> PipelineResult:
    """Binarize (per-POS threshold), clean, rank, and pack one bundle."""
    xi_scheme = xi_scheme or DEFAULT_XI_SCHEME
    dbscan = dbscan or DbscanParams()
    words = sorted(bundle.words, key=lambda w: w.index)
    retained, _ = filter_words(words)
    target = (bundle.image_width, bundle.image_height)

    binary_maps: dict[int, BinaryAttentionMap] = {}
    for idx in retained:
        mp = bundle.maps[idx]
        if isinstance(mp, RawScoreStack):
            mp = aggregate_attention(mp, target)
        if isinstance(mp, AttentionMap):
            mp = binarize(mp, xi_for(words[idx].pos, xi_scheme))
        binary_maps[idx] = mp

    segments = {idx: clean_segment(binary_maps[idx], eps=dbscan.eps,
                                   min_neighbors=dbscan.min_neighbors,
                                   min_cluster_size=dbscan.min_cluster_size)
                for idx in retained}

    _, c_star = build_dependency_matrices(words, retained)
    d_star = build_level_matrix([binary_maps[i] for i in retained], order=retained)
    s = importance(c_star, d_star)
    info = pack(segments, s)
    return PipelineResult(info=info, segments=segments, importance=s,
                          binary_maps=binary_maps)


def _proxy_for(result: PipelineResult, scorer_cfg: dict, params: JpsqParams) -> ProxyScorer:
    return ProxyScorer(result.importance, t_max=params.t_max,
                       q_src=float(scorer_cfg.get("q_src", 5.2651)),
                       q_lb=float(scorer_cfg.get("q_lb", 4.9827)))


def run_robustness_sweep(scenario: Scenario, token_grid: list[int]) -> list[tuple[int, float]]:
    """Mean recovered quality across users at each token budget."""
    bundles = [load_bundle(p) for p in scenario.corpus]
    results = {i: run_pipeline(b, scenario.xi_scheme, scenario.dbscan)
               for i, b in enumerate(bundles)}
    table = _score_table(scenario, bundles, results)
    curve = []
    for budget in token_grid:
        qs = []
        for u in scenario.users:
            image_id = _image_id(bundles[u.bundle], u.bundle)
            _, q = table.score(image_id, budget)
            qs.append(q)
        curve.append((budget, float(np.mean(qs))))
    return curve


def _image_id(bundle: SemComBundle, index: int) -> str:
    return bundle.source_image_id or f"bundle{index}"


def _score_table(scenario: Scenario, bundles, results, breakpoints: int = 33) -> ScoreTable:
    """Table scorer from config, or the proxy scorer tabulated over budgets."""
    if scenario.scorer.get("kind") == "table":
        return ScoreTable.from_csv(scenario.scorer["path"])
    rows: dict[str, list[tuple[int, float, float]]] = {}
    for i, bundle in enumerate(bundles):
        result = results[i]
        proxy = _proxy_for(result, scenario.scorer, scenario.jpsq)
        total = result.info.total_tokens
        budgets = sorted({int(round(t)) for t in np.linspace(0, total, breakpoints)})
        pts = []
        for budget in budgets:
            d, q = proxy.score(truncate(result.info, budget))
            pts.append((budget, d, q))
        rows[_image_id(bundle, i)] = pts
    return ScoreTable(rows)


@dataclass
class ExperimentReport:
    rows: list[dict]
    aggregates: dict[str, float]
    provenance: dict[str, str]

    def to_csv(self, path: str) -> None:
        columns = list(self.rows[0].keys()) if self.rows else []
        lines = [",".join(columns)]
        for row in self.rows:
            lines.append(",".join(_fmt(row[c]) for c in columns))
        for name in sorted(self.aggregates):
            lines.append(f"# {name}={_fmt(self.aggregates[name])}")
        for name in sorted(self.provenance):
            lines.append(f"# {name}={self.provenance[name]}")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_simulation(scenario: Scenario) -> ExperimentReport:
    """Channel-limited transmission of each user's packed stream, scored by
    the configured oracle."""
    bundles = [load_bundle(p) for p in scenario.corpus]
    results = {i: run_pipeline(b, scenario.xi_scheme, scenario.dbscan)
               for i, b in enumerate(bundles)}
    gammas = sample_rayleigh(scenario.channel_seed, len(scenario.users))
    table = _score_table(scenario, bundles, results) \
        if scenario.scorer.get("kind") == "table" else None

    rows = []
    for k, u in enumerate(scenario.users):
        bundle = bundles[u.bundle]
        result = results[u.bundle]
        link = UserLink(distance_m=u.distance_m, rayleigh=float(gammas[k]),
                        latency_s=u.latency_s, interference_w=u.interference_w)
        budget = token_budget(scenario.channel, link, result.info.total_tokens)
        prefix = truncate(result.info, budget)
        if table is not None:
            d, q = table.score(_image_id(bundle, u.bundle), budget)
        else:
            d, q = _proxy_for(result, scenario.scorer, scenario.jpsq).score(prefix)
        j = jpsq(d, q, scenario.jpsq)
        util = user_utility(j, q, budget, scenario.jpsq, cap=result.info.total_tokens)
        rows.append({
            "user": k,
            "tokens_sent": budget,
            "reduction_ratio": reduction_ratio(result.info,
                                               (bundle.image_width, bundle.image_height)),
            "D": d, "Q": q, "jpsq": j, "utility": util,
        })

    aggregates = {
        "mean_reduction": float(np.mean([r["reduction_ratio"] for r in rows])),
        "mean_Q": float(np.mean([r["Q"] for r in rows])),
        "total_utility": float(sum(r["utility"] for r in rows)),
    }
    provenance = {"seed": str(scenario.seed), "config_hash": scenario.config_hash(),
                  "artifact_version": ARTIFACT_VERSION}
    return ExperimentReport(rows=rows, aggregates=aggregates, provenance=provenance)


def build_alloc_env(scenario: Scenario, n_users: int | None = None) -> TableAllocEnv:
    """Allocation environment over the scenario corpus: per-image semantic
    grids, caps from the packed stream sizes, and tabulated (D, Q) scores."""
    bundles = [load_bundle(p) for p in scenario.corpus]
    results = {i: run_pipeline(b, scenario.xi_scheme, scenario.dbscan)
               for i, b in enumerate(bundles)}
    table = _score_table(scenario, bundles, results)
    grids = {}
    caps = {}
    for i, bundle in enumerate(bundles):
        result = results[i]
        union = np.zeros((bundle.image_height, bundle.image_width), dtype=bool)
        for seg in result.segments.values():
            for x, y in seg.pixels:
                union[y, x] = True
        image_id = _image_id(bundle, i)
        grids[image_id] = add_mod.or_pool(union)
        caps[image_id] = float(result.info.total_tokens)
    return TableAllocEnv(table=table, params=scenario.jpsq,
                         n_users=n_users or len(scenario.users),
                         grids=grids, caps=caps)


def run_allocation_experiment(scenario: Scenario, policies: dict[str, object],
                              n_states: int = 50) -> ExperimentReport:
    """Evaluate named policies on identical seeded states.

    ``policies`` maps a label to either a baseline kind string or a trained
    DiffusionPolicy.
    """
    env = build_alloc_env(scenario)
    rows = []
    totals: dict[str, float] = {}
    for label, policy in policies.items():
        rng = np.random.Generator(np.random.Philox(scenario.seed))
        total = 0.0
        for state_idx in range(n_states):
            state = env.sample_state(rng)
            action = _apply_policy(policy, state, env, rng)
            u = env.utility(state, action.b)
            total += u
            rows.append({"policy": label, "state": state_idx, "utility": u,
                         "allocation": "|".join(repr(float(b)) for b in action.b)})
        totals[label] = total
    aggregates = {f"total_utility_{label}": total for label, total in totals.items()}
    provenance = {"seed": str(scenario.seed), "config_hash": scenario.config_hash(),
                  "artifact_version": ARTIFACT_VERSION}
    return ExperimentReport(rows=rows, aggregates=aggregates, provenance=provenance)


def _apply_policy(policy, state: AllocState, env: TableAllocEnv,
                  rng: np.random.Generator):
    if isinstance(policy, str):
        return add_mod.baseline_allocate(policy, state, rng=rng, env=env)
    return add_mod.allocate(policy, state)


def export_matrices_csv(bundle: SemComBundle, result: PipelineResult, out_dir: str) -> None:
    """Debug dumps: dependency/level matrices and importances as CSV."""
    os.makedirs(out_dir, exist_ok=True)
    words = sorted(bundle.words, key=lambda w: w.index)
    retained, _ = filter_words(words)
    _, c_star = build_dependency_matrices(words, retained)
    d_star = build_level_matrix([result.binary_maps[i] for i in retained], order=retained)
    labels = [words[i].text for i in retained]
    header = "," + ",".join(labels)
    with open(os.path.join(out_dir, "dependency.csv"), "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for lab, row in zip(labels, c_star.booleans):
            fh.write(lab + "," + ",".join(str(int(v)) for v in row) + "\n")
    with open(os.path.join(out_dir, "levels.csv"), "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for lab, row in zip(labels, d_star.levels):
            fh.write(lab + "," + ",".join(repr(float(v)) for v in row) + "\n")
    with open(os.path.join(out_dir, "importance.csv"), "w", encoding="utf-8") as fh:
        fh.write("word,importance\n")
        for lab, s in zip(labels, result.importance.s):
            fh.write(f"{lab},{float(s)!r}\n")
