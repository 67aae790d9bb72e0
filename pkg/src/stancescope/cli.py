"""Pipeline command line.

One YAML config feeds every stage; stages exchange data only through files
in the output directory, so any stage can be rerun alone once its upstream
artifacts exist. All randomness flows from the config's master seed (one
derived seed per stage), and reruns with an identical config are
byte-identical except for manifest timestamps.

Subcommands: synth, ingest, seed, featurize, train, predict, associate,
anomaly, nullmodel, botflag, network, report, evaluate, and `run` which
executes several stages in dependency order (`--stages a,b,c`).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path

import yaml

from . import anomaly as anomaly_mod
from . import botcrit as botcrit_mod
from . import classifier as clf_mod
from . import netcomm as net_mod
from . import nullmodel as null_mod
from . import synth as synth_mod
from .corpus import (corpus_stats, filter_corpus, ingest_jsonl,
                     serialize_jsonl)
from .features import build_feature_matrix, load_features, save_features
from .seeding import (SCOPES, SeedLexicon, SeedTerm, apply_seeds,
                      default_lexicon, extract_profile_hashtags)

logger = logging.getLogger(__name__)

STAGES = ("synth", "ingest", "seed", "featurize", "train", "predict",
          "associate", "anomaly", "nullmodel", "botflag", "network",
          "report", "evaluate")


class PipelineError(Exception):
    """Configuration or stage-dependency failure."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------
# configuration


@dataclass
class PipelineConfig:
    seed: int
    corpus_path: Path
    output_dir: Path
    window: tuple[date, date]
    truth_path: Path | None = None
    lexicon: SeedLexicon = field(default_factory=default_lexicon)
    overrides: list[tuple[int, str]] = field(default_factory=list)
    min_term_df: int = 5
    min_target_count: int = 2
    classifier: clf_mod.GBTParams = field(default_factory=clf_mod.GBTParams)
    threshold: float = 0.55
    log_odds_alpha: float = 0.5
    forest_trees: int = 100
    forest_subsample: int = 256
    anomaly_fraction: float = 0.075
    cutoff_date: date = botcrit_mod.DEFAULT_CUTOFF
    digit_threshold: int = 4
    permutations: int = 100
    b_range: tuple[int, int] = (1, 20)
    min_community_size: int = 10
    synth: dict | None = None
    raw: dict = field(default_factory=dict)

    def stage_seed(self, stage: str) -> int:
        digest = hashlib.sha256(f"{self.seed}:{stage}".encode()).digest()
        return int.from_bytes(digest[:8], "big") % (2 ** 63)


def _parse_date(value, name: str) -> date:
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError as exc:
        raise ConfigError(f"{name}: not a date: {value!r}") from exc


def _parse_lexicon(raw) -> SeedLexicon:
    if raw is None:
        return default_lexicon()
    scopes = frozenset(raw.get("scopes", SCOPES))
    terms = []
    for stance in ("apruebo", "rechazo"):
        for item in raw.get(stance, []):
            if isinstance(item, str):
                terms.append(SeedTerm(item, stance, scopes))
            else:
                terms.append(SeedTerm(item["term"], stance,
                                      frozenset(item.get("scopes", scopes))))
    return SeedLexicon(terms)


def load_config(path, seed_override: int | None = None) -> PipelineConfig:
    """Parse and validate the YAML config; any problem raises before work."""
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if seed_override is not None:
        raw["seed"] = seed_override
    if "seed" not in raw:
        raise ConfigError("config must set an explicit integer seed "
                          "(no wall-clock default)")
    if not isinstance(raw["seed"], int):
        raise ConfigError(f"seed must be an integer, got {raw['seed']!r}")
    paths = raw.get("paths") or {}
    for key in ("corpus", "output"):
        if key not in paths:
            raise ConfigError(f"paths.{key} is required")
    window_raw = raw.get("window") or {}
    if "start" not in window_raw or "end" not in window_raw:
        raise ConfigError("window.start and window.end are required")
    window = (_parse_date(window_raw["start"], "window.start"),
              _parse_date(window_raw["end"], "window.end"))
    if window[0] > window[1]:
        raise ConfigError(f"window inverted: {window[0]} > {window[1]}")

    clf_raw = raw.get("classifier") or {}
    params = clf_mod.GBTParams(
        rounds=int(clf_raw.get("rounds", 200)),
        max_depth=int(clf_raw.get("max_depth", 6)),
        learning_rate=float(clf_raw.get("learning_rate", 0.1)),
        l2=float(clf_raw.get("l2", 1.0)),
        max_bins=int(clf_raw.get("max_bins", 256)),
    )
    threshold = float(clf_raw.get("threshold", 0.55))
    if not threshold > 0.5:
        raise ConfigError("classifier.threshold must exceed 0.5")

    feat_raw = raw.get("features") or {}
    an_raw = raw.get("anomaly") or {}
    bot_raw = raw.get("botcrit") or {}
    null_raw = raw.get("nullmodel") or {}
    net_raw = raw.get("network") or {}

    overrides = []
    for item in raw.get("overrides") or []:
        overrides.append((int(item["account_id"]), str(item["stance"])))

    cfg = PipelineConfig(
        seed=raw["seed"],
        corpus_path=Path(paths["corpus"]),
        output_dir=Path(paths["output"]),
        truth_path=Path(paths["truth"]) if paths.get("truth") else None,
        window=window,
        lexicon=_parse_lexicon(raw.get("lexicon")),
        overrides=overrides,
        min_term_df=int(feat_raw.get("min_term_df", 5)),
        min_target_count=int(feat_raw.get("min_target_count", 2)),
        classifier=params,
        threshold=threshold,
        log_odds_alpha=float(clf_raw.get("alpha", 0.5)),
        forest_trees=int(an_raw.get("trees", 100)),
        forest_subsample=int(an_raw.get("subsample", 256)),
        anomaly_fraction=float(bot_raw.get("anomaly_fraction", 0.075)),
        cutoff_date=_parse_date(bot_raw.get("cutoff_date", botcrit_mod.DEFAULT_CUTOFF),
                                "botcrit.cutoff_date"),
        digit_threshold=int(bot_raw.get("digit_threshold", 4)),
        permutations=int(null_raw.get("permutations", 100)),
        b_range=(int(net_raw.get("b_min", 1)), int(net_raw.get("b_max", 20))),
        min_community_size=int(net_raw.get("min_community_size", 10)),
        synth=raw.get("synth"),
        raw=raw,
    )
    return cfg


def config_hash(cfg: PipelineConfig) -> str:
    """Identity of the run configuration (output location excluded, so the
    same analysis into two directories compares equal)."""

    def canon(obj):
        if isinstance(obj, dict):
            return {str(k): canon(v) for k, v in sorted(obj.items())}
        if isinstance(obj, (list, tuple)):
            return [canon(v) for v in obj]
        if isinstance(obj, (datetime, date)):
            return obj.isoformat()
        return obj

    payload = canon(cfg.raw)
    if isinstance(payload.get("paths"), dict):
        payload["paths"].pop("output", None)
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --------------------------------------------------------------------------
# artifact plumbing


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else v for v in row])


def _read_csv(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


class Runner:
    """Executes stages against one config; caches corpus loads in-process."""

    ARTIFACTS = {
        "ingest": ("corpus_clean.jsonl", "corpus_stats.csv", "weekly_volume.csv"),
        "seed": ("labels.csv", "profile_hashtags.csv"),
        "featurize": ("features.triplets",),
        "train": ("model.txt", "train_log.csv"),
        "predict": ("predictions.csv",),
        "associate": ("associations.csv",),
        "anomaly": ("anomaly.csv", "anomaly_curves.csv"),
        "nullmodel": ("stance_curve.csv",),
        "botflag": ("groups.csv", "verdicts.csv", "registrations_week_group.csv",
                    "registrations_week_stance.csv", "digit_quantiles.csv"),
        "network": ("retweet_edges.csv", "partition.csv", "communities.csv"),
        "report": ("content_distribution.csv", "summary.csv"),
        "evaluate": ("metrics.csv",),
    }

    # artifact -> producing stage, for dependency errors
    PRODUCERS = {
        "corpus_clean.jsonl": "ingest",
        "corpus_stats.csv": "ingest",
        "labels.csv": "seed",
        "features.triplets": "featurize",
        "model.txt": "train",
        "predictions.csv": "predict",
        "anomaly.csv": "anomaly",
        "verdicts.csv": "botflag",
        "groups.csv": "botflag",
        "partition.csv": "network",
    }

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = cfg.output_dir
        self.hash = config_hash(cfg)
        self._corpus_cache: dict[Path, object] = {}

    # -- helpers ---------------------------------------------------------

    def _check_output_dir(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        for manifest in sorted(self.out.glob("manifest_*.json")):
            with open(manifest, encoding="utf-8") as fh:
                data = json.load(fh)
            if data.get("config_hash") != self.hash:
                raise ConfigError(
                    f"output dir {self.out} holds artifacts from another "
                    f"config ({manifest.name}); refusing to mix")

    def _require(self, stage: str, *names: str) -> None:
        for name in names:
            if not (self.out / name).exists():
                producer = self.PRODUCERS.get(name, "?")
                raise PipelineError(
                    stage, f"missing artifact {name}; run stage "
                    f"'{producer}' first")

    def _manifest(self, stage: str, artifacts: list[str], seed: int) -> None:
        payload = {
            "stage": stage,
            "config_hash": self.hash,
            "seed": seed,
            "artifacts": artifacts,
            "written_at": datetime.now(timezone.utc).isoformat(),
        }
        with open(self.out / f"manifest_{stage}.json", "w",
                  encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def _load_corpus(self, path: Path):
        if path not in self._corpus_cache:
            self._corpus_cache[path] = ingest_jsonl(path)
        return self._corpus_cache[path]

    def _clean_corpus(self):
        corpus = self._load_corpus(self.out / "corpus_clean.jsonl")
        if corpus.window is None or corpus.window != self.cfg.window:
            from .corpus import clone_with_window
            corpus = clone_with_window(corpus, self.cfg.window)
        return corpus

    def _load_labels(self):
        from .seeding import StanceLabel
        labels = {}
        for row in _read_csv(self.out / "labels.csv"):
            labels[int(row["account_id"])] = StanceLabel(row["stance"],
                                                         row["source"])
        return labels

    def _load_predictions(self):
        preds = []
        effective = {}
        for row in _read_csv(self.out / "predictions.csv"):
            aid = int(row["account_id"])
            preds.append(clf_mod.StancePrediction(
                aid, float(row["p_apruebo"]), row["label"]))
            effective[aid] = row["effective"]
        return preds, effective

    def _load_anomaly_records(self):
        records = []
        for row in _read_csv(self.out / "anomaly.csv"):
            records.append(anomaly_mod.AnomalyRecord(
                account_id=int(row["account_id"]), features=None,
                score=float(row["score"]), rank=int(row["rank"])))
        records.sort(key=lambda r: r.rank)
        return records

    def _load_verdicts(self):
        verdicts = []
        for row in _read_csv(self.out / "verdicts.csv"):
            reasons = frozenset(r for r in row["reasons"].split("|") if r)
            verdicts.append(botcrit_mod.BotVerdict(
                int(row["account_id"]), row["is_bot"] == "True", reasons))
        return verdicts

    # -- stages ----------------------------------------------------------

    def stage_synth(self) -> list[str]:
        if not self.cfg.synth:
            raise PipelineError("synth", "config has no synth section")
        seed = self.cfg.stage_seed("synth")
        raw = dict(self.cfg.synth)
        spec = synth_mod.default_spec(
            n_accounts=int(raw.get("n_accounts", 1000)),
            bot_fraction=float(raw.get("bot_fraction", 0.01)),
            apruebo_share=float(raw.get("apruebo_share", 0.8)),
            seed_term_prob=float(raw.get("seed_term_prob", 0.1)),
            window=self.cfg.window,
            seed=seed,
        )
        corpus, truth = synth_mod.generate_corpus(spec)
        self.cfg.corpus_path.parent.mkdir(parents=True, exist_ok=True)
        serialize_jsonl(corpus, self.cfg.corpus_path)
        truth_path = self.cfg.truth_path or (self.out / "truth.csv")
        _write_csv(truth_path, ["account_id", "stance", "is_bot", "squad"],
                   [(aid, truth.stance[aid], truth.is_bot[aid],
                     truth.squad[aid] if truth.squad[aid] is not None else "")
                    for aid in sorted(truth.stance)])
        return [str(self.cfg.corpus_path), str(truth_path)]

    def stage_ingest(self) -> list[str]:
        if not self.cfg.corpus_path.exists():
            raise PipelineError(
                "ingest", f"corpus file {self.cfg.corpus_path} not found; "
                "provide an input corpus or run stage 'synth' first")
        corpus = ingest_jsonl(self.cfg.corpus_path)
        corpus = filter_corpus(corpus, self.cfg.window)
        serialize_jsonl(corpus, self.out / "corpus_clean.jsonl")
        self._corpus_cache[self.out / "corpus_clean.jsonl"] = corpus
        stats = corpus_stats(corpus)
        rows = [("n_tweets", stats.n_tweets), ("n_accounts", stats.n_accounts)]
        rows += [(f"fraction_{k}", v) for k, v in sorted(stats.kind_fractions.items())]
        _write_csv(self.out / "corpus_stats.csv", ["metric", "value"], rows)
        _write_csv(self.out / "weekly_volume.csv", ["week", "tweets"],
                   stats.weekly_volume)
        return list(self.ARTIFACTS["ingest"])

    def stage_seed(self) -> list[str]:
        self._require("seed", "corpus_clean.jsonl")
        corpus = self._clean_corpus()
        labels = apply_seeds(corpus, self.cfg.lexicon, self.cfg.overrides)
        _write_csv(self.out / "labels.csv", ["account_id", "stance", "source"],
                   [(aid, lab.stance, lab.source)
                    for aid, lab in sorted(labels.items())])
        _write_csv(self.out / "profile_hashtags.csv", ["hashtag", "accounts"],
                   extract_profile_hashtags(corpus))
        return list(self.ARTIFACTS["seed"])

    def stage_featurize(self) -> list[str]:
        self._require("featurize", "corpus_clean.jsonl", "labels.csv")
        corpus = self._clean_corpus()
        labels = self._load_labels()
        fm = build_feature_matrix(
            corpus, labels, self.cfg.lexicon.all_terms(),
            min_term_df=self.cfg.min_term_df,
            min_target_count=self.cfg.min_target_count)
        save_features(fm, self.out / "features.triplets")
        return list(self.ARTIFACTS["featurize"])

    def stage_train(self) -> list[str]:
        self._require("train", "features.triplets", "labels.csv")
        import numpy as np
        fm = load_features(self.out / "features.triplets")
        labels = self._load_labels()
        rows, y = [], []
        for r, aid in enumerate(fm.account_ids):
            lab = labels.get(aid)
            if lab is not None:
                rows.append(r)
                y.append(1.0 if lab.stance == "apruebo" else 0.0)
        if not rows:
            raise PipelineError("train", "no seed-labeled accounts to train on")
        model = clf_mod.train_gbt(fm.matrix[rows], np.array(y),
                                  self.cfg.classifier,
                                  seed=self.cfg.stage_seed("train"))
        clf_mod.save_model(model, self.out / "model.txt")
        _write_csv(self.out / "train_log.csv", ["round", "logloss"],
                   [(r, repr(v)) for r, v in enumerate(model.train_loss)])
        return list(self.ARTIFACTS["train"])

    def stage_predict(self) -> list[str]:
        self._require("predict", "model.txt", "features.triplets", "labels.csv")
        fm = load_features(self.out / "features.triplets")
        model = clf_mod.load_model(self.out / "model.txt")
        labels = self._load_labels()
        preds = clf_mod.predict_stances(model, fm.matrix, fm.account_ids,
                                        self.cfg.threshold)
        effective = clf_mod.effective_stances(preds, labels)
        rows = []
        for p in preds:
            seed_label = labels.get(p.account_id)
            rows.append((p.account_id, repr(p.p_apruebo), p.label,
                         seed_label.stance if seed_label else "",
                         effective[p.account_id]))
        _write_csv(self.out / "predictions.csv",
                   ["account_id", "p_apruebo", "label", "seed_label",
                    "effective"], rows)
        return list(self.ARTIFACTS["predict"])

    def stage_associate(self) -> list[str]:
        self._require("associate", "features.triplets", "predictions.csv")
        import numpy as np
        fm = load_features(self.out / "features.triplets")
        _, effective = self._load_predictions()
        rows_a = [r for r, aid in enumerate(fm.account_ids)
                  if effective.get(aid) == "apruebo"]
        rows_r = [r for r, aid in enumerate(fm.account_ids)
                  if effective.get(aid) == "rechazo"]
        if not rows_a or not rows_r:
            raise PipelineError("associate",
                                "one of the stance groups is empty")
        counts_a = np.asarray(fm.matrix[rows_a].sum(axis=0)).ravel()
        counts_r = np.asarray(fm.matrix[rows_r].sum(axis=0)).ravel()
        names = [f"{b}:{t}" for t, b in zip(fm.col_tokens, fm.col_blocks)]
        ranked = clf_mod.log_odds_terms(counts_a, counts_r,
                                        self.cfg.log_odds_alpha, names)
        _write_csv(self.out / "associations.csv",
                   ["rank", "feature", "score"],
                   [(i + 1, name, repr(score))
                    for i, (name, score) in enumerate(ranked)])
        return list(self.ARTIFACTS["associate"])

    def stage_anomaly(self) -> list[str]:
        self._require("anomaly", "corpus_clean.jsonl")
        corpus = self._clean_corpus()
        feats = anomaly_mod.behavior_features(corpus)
        ids, X = anomaly_mod.features_matrix(feats)
        model = anomaly_mod.fit_iforest(X, t=self.cfg.forest_trees,
                                        psi=self.cfg.forest_subsample,
                                        seed=self.cfg.stage_seed("anomaly"))
        records = anomaly_mod.score_accounts(model, X, ids, feats)
        header = ["account_id"] + list(anomaly_mod.FEATURE_NAMES) + \
            ["score", "rank"]
        rows = []
        for r in records:
            vec = r.features.as_vector()
            rows.append((r.account_id,
                         *[repr(float(v)) for v in vec],
                         repr(r.score), r.rank))
        _write_csv(self.out / "anomaly.csv", header, rows)
        curves = anomaly_mod.anomaly_curves(records, corpus)
        _write_csv(self.out / "anomaly_curves.csv",
                   ["rank", "account_id", "score", "cum_tweet_fraction"],
                   [(int(k), rec.account_id, repr(float(s)), repr(float(c)))
                    for k, rec, s, c in zip(curves["rank"], records,
                                            curves["score"],
                                            curves["cum_tweet_fraction"])])
        return list(self.ARTIFACTS["anomaly"])

    def stage_nullmodel(self) -> list[str]:
        self._require("nullmodel", "anomaly.csv", "predictions.csv")
        records = self._load_anomaly_records()
        _, effective = self._load_predictions()
        env = null_mod.permutation_envelope(
            records, effective, M=self.cfg.permutations,
            seed=self.cfg.stage_seed("nullmodel"))
        _write_csv(self.out / "stance_curve.csv",
                   ["k", "account_id", "observed", "lo", "hi", "outside"],
                   [(int(k), aid, repr(float(o)), repr(float(lo)),
                     repr(float(hi)), bool(f))
                    for k, aid, o, lo, hi, f in zip(
                        env["k"], env["account_ids"], env["observed"],
                        env["lo"], env["hi"], env["outside"])])
        return list(self.ARTIFACTS["nullmodel"])

    def stage_botflag(self) -> list[str]:
        self._require("botflag", "anomaly.csv", "corpus_clean.jsonl",
                      "predictions.csv")
        corpus = self._clean_corpus()
        records = self._load_anomaly_records()
        _, effective = self._load_predictions()
        groups = botcrit_mod.assign_anomaly_groups(records,
                                                   self.cfg.anomaly_fraction)
        verdicts = botcrit_mod.flag_bots(groups, corpus.accounts,
                                         self.cfg.cutoff_date,
                                         self.cfg.digit_threshold)
        _write_csv(self.out / "groups.csv", ["account_id", "group"],
                   sorted(groups.items()))
        _write_csv(self.out / "verdicts.csv",
                   ["account_id", "is_bot", "reasons"],
                   [(v.account_id, v.is_bot, "|".join(sorted(v.reasons)))
                    for v in verdicts])
        group_table, stance_table = botcrit_mod.registrations_by_week(
            corpus.accounts, groups, effective)
        grows = []
        for g in sorted(group_table):
            for week in sorted(group_table[g]):
                grows.append((g, week, group_table[g][week]))
        _write_csv(self.out / "registrations_week_group.csv",
                   ["group", "week", "registrations"], grows)
        srows = []
        for stance in sorted(stance_table):
            for week in sorted(stance_table[stance]):
                srows.append((stance, week, repr(stance_table[stance][week])))
        _write_csv(self.out / "registrations_week_stance.csv",
                   ["stance", "week", "fraction"], srows)
        _write_csv(self.out / "digit_quantiles.csv",
                   ["digits", "min", "q25", "q50", "q75", "max", "accounts"],
                   [(d, repr(a), repr(b), repr(c), repr(e), repr(f), n)
                    for d, a, b, c, e, f, n in
                    botcrit_mod.digit_score_quantiles(records, corpus.accounts)])
        return list(self.ARTIFACTS["botflag"])

    def stage_network(self) -> list[str]:
        self._require("network", "corpus_clean.jsonl", "verdicts.csv")
        corpus = self._clean_corpus()
        verdicts = self._load_verdicts()
        graph = net_mod.build_retweet_graph(corpus)
        _write_csv(self.out / "retweet_edges.csv",
                   ["source", "target", "weight"],
                   [(graph.nodes[int(s)], graph.nodes[int(d)], int(w))
                    for s, d, w in zip(graph.src, graph.dst, graph.weight)])
        if graph.n_nodes == 0:
            raise PipelineError("network", "no retweet edges in corpus")
        lcc = net_mod.extract_lcc(graph)
        partition = net_mod.fit_dcsbm(lcc, self.cfg.b_range,
                                      seed=self.cfg.stage_seed("network"))
        _write_csv(self.out / "partition.csv", ["account_id", "community"],
                   sorted(partition.assignment.items()))
        profiles = net_mod.community_bot_profile(partition, verdicts, lcc,
                                                 self.cfg.min_community_size)
        _write_csv(self.out / "communities.csv",
                   ["community", "size", "bots", "bot_fraction", "z_score",
                    "class", "intra_weight", "inter_out_weight",
                    "inter_in_weight"],
                   [(p.community, p.size, p.bot_count, repr(p.bot_fraction),
                     repr(p.z_score), p.group_class, p.intra_weight,
                     p.inter_out_weight, p.inter_in_weight)
                    for p in profiles])
        return list(self.ARTIFACTS["network"])

    def stage_report(self) -> list[str]:
        self._require("report", "corpus_clean.jsonl", "predictions.csv",
                      "verdicts.csv")
        corpus = self._clean_corpus()
        preds, effective = self._load_predictions()
        verdicts = self._load_verdicts()
        cells = botcrit_mod.content_distribution(effective, verdicts, corpus)
        _write_csv(self.out / "content_distribution.csv",
                   ["stance", "is_bot", "accounts", "tweets"],
                   [(stance, is_bot, cell["accounts"], cell["tweets"])
                    for (stance, is_bot), cell in sorted(cells.items())])
        stats = corpus_stats(corpus)
        model_shares = clf_mod.stance_shares(preds)
        eff_shares = clf_mod.stance_shares(list(effective.values()))
        n_bots = sum(1 for v in verdicts if v.is_bot)
        rows = [
            ("n_tweets", stats.n_tweets),
            ("n_accounts", stats.n_accounts),
            ("share_model_apruebo_pct", repr(model_shares["apruebo"])),
            ("share_model_rechazo_pct", repr(model_shares["rechazo"])),
            ("share_model_undisclosed_pct", repr(model_shares["undisclosed"])),
            ("share_effective_apruebo_pct", repr(eff_shares["apruebo"])),
            ("share_effective_rechazo_pct", repr(eff_shares["rechazo"])),
            ("share_effective_undisclosed_pct", repr(eff_shares["undisclosed"])),
            ("bot_accounts", n_bots),
            ("bot_share_pct", repr(100.0 * n_bots / len(verdicts) if verdicts else 0.0)),
        ]
        _write_csv(self.out / "summary.csv", ["metric", "value"], rows)
        return list(self.ARTIFACTS["report"])

    def stage_evaluate(self) -> list[str]:
        self._require("evaluate", "predictions.csv", "verdicts.csv",
                      "partition.csv")
        truth_path = self.cfg.truth_path or (self.out / "truth.csv")
        if not truth_path.exists():
            raise PipelineError(
                "evaluate", f"truth file {truth_path} not found; run stage "
                "'synth' or set paths.truth")
        truth = synth_mod.GroundTruth(stance={}, is_bot={}, squad={})
        for row in _read_csv(truth_path):
            aid = int(row["account_id"])
            truth.stance[aid] = row["stance"]
            truth.is_bot[aid] = row["is_bot"] == "True"
            truth.squad[aid] = int(row["squad"]) if row["squad"] else None
        _, effective = self._load_predictions()
        verdicts = self._load_verdicts()
        assignment = {int(r["account_id"]): int(r["community"])
                      for r in _read_csv(self.out / "partition.csv")}
        partition = net_mod.Partition(assignment=assignment,
                                      n_blocks=len(set(assignment.values())),
                                      objective=0.0, description_length=0.0)
        # the cleaned corpus may have dropped accounts outside the window
        truth_known = {aid: s for aid, s in truth.stance.items()
                       if aid in effective}
        truth = synth_mod.GroundTruth(
            stance=truth_known,
            is_bot={aid: truth.is_bot[aid] for aid in truth_known},
            squad={aid: truth.squad[aid] for aid in truth_known})
        metrics = synth_mod.evaluate_against_truth(effective, verdicts, truth,
                                                   partition)
        _write_csv(self.out / "metrics.csv", ["metric", "value"],
                   [(k, repr(v)) for k, v in sorted(metrics.items())])
        return list(self.ARTIFACTS["evaluate"])

    # -- driver ----------------------------------------------------------

    def run(self, stages: list[str]) -> None:
        self._check_output_dir()
        for stage in STAGES:
            if stage not in stages:
                continue
            func = getattr(self, f"stage_{stage}")
            logger.info("running stage %s", stage)
            artifacts = func()
            self._manifest(stage, artifacts, self.cfg.stage_seed(stage))

    def default_stages(self) -> list[str]:
        stages = [s for s in STAGES if s not in ("synth", "evaluate")]
        if self.cfg.synth:
            stages.insert(0, "synth")
        truth_path = self.cfg.truth_path or (self.out / "truth.csv")
        if self.cfg.synth or (self.cfg.truth_path and truth_path.exists()):
            stages.append("evaluate")
        return stages


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stancescope",
        description="Stance, anomaly and bot analysis pipeline")
    parser.add_argument("command", choices=STAGES + ("run",),
                        help="stage to execute, or 'run' for several")
    parser.add_argument("--config", required=True, help="YAML config file")
    parser.add_argument("--stages",
                        help="comma-separated stage list for 'run' "
                        "(default: every applicable stage)")
    parser.add_argument("--seed-override", type=int, default=None,
                        help="replace the config seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")

    try:
        cfg = load_config(args.config, args.seed_override)
    except (ConfigError, OSError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2

    runner = Runner(cfg)
    if args.command == "run":
        if args.stages:
            requested = [s.strip() for s in args.stages.split(",") if s.strip()]
            unknown = set(requested) - set(STAGES)
            if unknown:
                print(f"error: unknown stages: {sorted(unknown)}",
                      file=sys.stderr)
                return 2
            stages = requested
        else:
            stages = runner.default_stages()
    else:
        stages = [args.command]

    try:
        runner.run(stages)
    except PipelineError as exc:
        print(f"error in {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
