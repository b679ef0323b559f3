//! End-to-end orchestration: configuration, staged filtering, and the report
//! bundle written to disk.
//!
//! Every artifact is a pure function of the input files and the
//! configuration. Randomness only enters through [`simulate`].

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::attitude::{Overall, Polarity};
use crate::error::{Error, Result};
use crate::fusion::{apply_filters, tabulate, AttitudeTriple, CohortTable, FilterConfig, UserRecord, TABLE_ROWS};
use crate::ideology::{classify_group, estimate_x_with_support, Group, GroupCutoffs, SourceBiasTable};
use crate::ingest::{self, derive_signals, EventLog, Gender, SignalSummary, TopicLexicon, UserProfile};
use crate::logit::{self, fit_logit, response_of, wald_summary, LogitFit, RegressionRow};
use crate::numfmt::fixed3;
use crate::puretypes::{self, contour_grid, ContourGrid, FitOptions, FitResult, Observation};
use crate::synth::{self, CohortSpec, CovariateSpec, WorldSpec};

/// Coefficients (intercept, age, gender, friends, x) used as simulation truth
/// by default.
pub const DEFAULT_LOGIT_TRUTH: [f64; 5] = [0.309, -0.022, -0.751, 0.011, 3.431];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub events: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub bias_table: Option<PathBuf>,
    pub observations: Option<PathBuf>,
    pub regression_rows: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub post_lexicon: String,
    pub comment_lexicon: String,
    pub delta: f64,
    pub grid_resolution: usize,
    pub grid_exponent: f64,
    pub min_subscriptions: usize,
    pub max_age: Option<u32>,
    pub apply_age_to_puretypes: bool,
    pub min_support: usize,
    pub cutoff_low: f64,
    pub cutoff_high: f64,
    pub age_bin_width: f64,
    pub x_bin_width: f64,
    pub seed: u64,
    pub n: usize,
    pub p_true: f64,
    pub q_true: f64,
    pub logit_n: usize,
    pub logit_coefficients: [f64; 5],
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            events: None,
            profiles: None,
            bias_table: None,
            observations: None,
            regression_rows: None,
            output_dir: PathBuf::from("out"),
            post_lexicon: "builtin:covid".into(),
            comment_lexicon: "builtin:masks".into(),
            delta: puretypes::DEFAULT_DELTA,
            grid_resolution: 100,
            grid_exponent: 1.0 / 256.0,
            min_subscriptions: 10,
            max_age: Some(90),
            apply_age_to_puretypes: false,
            min_support: 1,
            cutoff_low: 0.33,
            cutoff_high: 0.66,
            age_bin_width: 5.0,
            x_bin_width: 0.05,
            seed: 42,
            n: 582,
            p_true: 0.95,
            q_true: 0.45,
            logit_n: 582,
            logit_coefficients: DEFAULT_LOGIT_TRUTH,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

/// Accepts plain decimals and simple fractions such as `1/256`.
fn parse_real(key: &str, value: &str) -> Result<f64> {
    if let Some((num, den)) = value.split_once('/') {
        let num: f64 = parse_num(key, num.trim())?;
        let den: f64 = parse_num(key, den.trim())?;
        return Ok(num / den);
    }
    parse_num(key, value)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

impl PipelineConfig {
    pub const KEYS: [&'static str; 25] = [
        "events",
        "profiles",
        "bias_table",
        "observations",
        "regression_rows",
        "output_dir",
        "post_lexicon",
        "comment_lexicon",
        "delta",
        "grid_resolution",
        "grid_exponent",
        "min_subscriptions",
        "max_age",
        "apply_age_to_puretypes",
        "min_support",
        "cutoff_low",
        "cutoff_high",
        "age_bin_width",
        "x_bin_width",
        "seed",
        "n",
        "p_true",
        "q_true",
        "logit_n",
        "logit_coefficients",
    ];

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "events" => self.events = Some(value.into()),
            "profiles" => self.profiles = Some(value.into()),
            "bias_table" => self.bias_table = Some(value.into()),
            "observations" => self.observations = Some(value.into()),
            "regression_rows" => self.regression_rows = Some(value.into()),
            "output_dir" => self.output_dir = value.into(),
            "post_lexicon" => self.post_lexicon = value.into(),
            "comment_lexicon" => self.comment_lexicon = value.into(),
            "delta" => self.delta = parse_real(key, value)?,
            "grid_resolution" => self.grid_resolution = parse_num(key, value)?,
            "grid_exponent" => self.grid_exponent = parse_real(key, value)?,
            "min_subscriptions" => self.min_subscriptions = parse_num(key, value)?,
            "max_age" => {
                self.max_age = match value.to_ascii_lowercase().as_str() {
                    "none" | "off" | "" => None,
                    _ => Some(parse_num(key, value)?),
                }
            }
            "apply_age_to_puretypes" => self.apply_age_to_puretypes = parse_bool(key, value)?,
            "min_support" => self.min_support = parse_num(key, value)?,
            "cutoff_low" => self.cutoff_low = parse_real(key, value)?,
            "cutoff_high" => self.cutoff_high = parse_real(key, value)?,
            "age_bin_width" => self.age_bin_width = parse_real(key, value)?,
            "x_bin_width" => self.x_bin_width = parse_real(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "n" => self.n = parse_num(key, value)?,
            "p_true" => self.p_true = parse_real(key, value)?,
            "q_true" => self.q_true = parse_real(key, value)?,
            "logit_n" => self.logit_n = parse_num(key, value)?,
            "logit_coefficients" => {
                let parts: Vec<f64> = value
                    .split(',')
                    .map(|s| parse_real(key, s.trim()))
                    .collect::<Result<_>>()?;
                self.logit_coefficients = parts.try_into().map_err(|v: Vec<f64>| {
                    Error::Config(format!("{key}: expected 5 values, got {}", v.len()))
                })?;
            }
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected key = value"))?;
            self.set(k.trim(), v).map_err(|e| Error::parse(origin, i + 1, e))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        GroupCutoffs::new(self.cutoff_low, self.cutoff_high)?;
        if !(self.age_bin_width > 0.0) || !(self.x_bin_width > 0.0) {
            return Err(Error::Config("histogram bin widths must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::Config(format!("delta must lie in (0, 0.5), got {}", self.delta)));
        }
        if self.grid_resolution < 2 {
            return Err(Error::Config("grid_resolution must be at least 2".into()));
        }
        if !(self.grid_exponent > 0.0 && self.grid_exponent.is_finite()) {
            return Err(Error::Config("grid_exponent must be positive".into()));
        }
        Ok(())
    }

    pub fn cutoffs(&self) -> GroupCutoffs {
        GroupCutoffs {
            low: self.cutoff_low,
            high: self.cutoff_high,
        }
    }

    fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::Config(format!("missing required input `{key}`")))
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn load_events(path: &Path) -> Result<EventLog> {
    ingest::read_event_log(open(path)?, &path.display().to_string())
}

pub fn load_profiles(path: &Path) -> Result<Vec<UserProfile>> {
    ingest::read_profiles(open(path)?, &path.display().to_string())
}

pub fn load_bias_table(path: &Path) -> Result<SourceBiasTable> {
    SourceBiasTable::from_csv(open(path)?, &path.display().to_string())
}

fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| Error::InvalidInput(format!("csv encoding failed: {e}")))?;
    Ok(buf)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("json encoding failed: {e}")))?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Users with at least one attitude signal, joined with their profiles and
/// ideology scores.
#[derive(Debug, Clone)]
pub struct Cohort {
    pub users: Vec<UserRecord>,
    pub table: CohortTable,
    pub signals: SignalSummary,
    pub events_read: usize,
    pub malformed_lines: usize,
    pub profiles_missing: usize,
}

pub fn build_cohort(
    log: &EventLog,
    profiles: &[UserProfile],
    biases: &SourceBiasTable,
    cfg: &PipelineConfig,
) -> Result<Cohort> {
    let post_lex = TopicLexicon::from_spec(&cfg.post_lexicon)?;
    let comment_lex = TopicLexicon::from_spec(&cfg.comment_lexicon)?;
    let signals = derive_signals(&log.events, &post_lex, &comment_lex);
    let by_user: HashMap<&ingest::Id, &UserProfile> = profiles.iter().map(|p| (&p.user_id, p)).collect();

    let mut users = Vec::new();
    let mut triples = Vec::new();
    let mut profiles_missing = 0;
    for (uid, s) in &signals.users {
        if s.comment.is_none() && s.like.is_none() {
            continue;
        }
        let triple = AttitudeTriple::new(s.comment, s.like)?;
        triples.push(triple);
        let profile = by_user.get(uid).copied();
        if profile.is_none() {
            profiles_missing += 1;
        }
        let mut rec = UserRecord::new(profile, uid.clone(), triple);
        rec.ideology = estimate_x_with_support(&rec.subscriptions, biases, cfg.min_support);
        users.push(rec);
    }
    Ok(Cohort {
        table: tabulate(&triples),
        users,
        signals: SignalSummary {
            users: BTreeMap::new(),
            ..signals
        },
        events_read: log.events.len(),
        malformed_lines: log.malformed.len(),
        profiles_missing,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageCount {
    pub stage: &'static str,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageCounts {
    /// Pure-types chain, non-increasing.
    pub puretypes: Vec<StageCount>,
    /// Regression chain, non-increasing; starts from the ideology stage.
    pub regression: Vec<StageCount>,
    pub ages_stated: usize,
    /// Stated ages above `max_age` among users with an ideology score.
    pub anomalous_ages: usize,
}

impl StageCounts {
    fn describe(&self) -> String {
        self.puretypes
            .iter()
            .chain(&self.regression)
            .map(|s| format!("{}={}", s.stage, s.count))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupShare {
    pub group: Group,
    pub n: usize,
    pub negative_share: Option<f64>,
    pub positive_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bin {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub table: CohortTable,
    pub stages: StageCounts,
    pub observations: Vec<Observation>,
    pub regression_rows: Vec<RegressionRow>,
    pub puretypes: FitResult,
    pub grid: ContourGrid,
    pub logit: LogitFit,
    pub groups: Vec<GroupShare>,
    pub attitude_hist: Vec<(i64, usize)>,
    pub gender_hist: Vec<(&'static str, usize)>,
    pub age_hist: Vec<Bin>,
    pub x_hist: Vec<Bin>,
}

fn observation_of(u: &UserRecord) -> Option<Observation> {
    let a = u.attitude.overall.polarity()?;
    let x = u.ideology?.x;
    Observation::new(x, a).ok()
}

fn regression_row_of(u: &UserRecord) -> Option<RegressionRow> {
    let a = u.attitude.overall.polarity()?;
    Some(RegressionRow {
        response: response_of(a),
        age: u.age? as f64,
        gender: u.gender?.code(),
        friend_count: u.friend_count,
        x: u.ideology?.x,
    })
}

/// Proportion of each attitude within each ideology group.
pub fn group_shares(obs: &[Observation], cutoffs: &GroupCutoffs) -> Result<Vec<GroupShare>> {
    let mut counts: BTreeMap<Group, (usize, usize)> = Group::ALL.iter().map(|g| (*g, (0, 0))).collect();
    for o in obs {
        let g = classify_group(o.x, cutoffs)?;
        let e = counts.get_mut(&g).expect("all groups present");
        match o.a {
            Polarity::Negative => e.0 += 1,
            Polarity::Positive => e.1 += 1,
        }
    }
    Ok(counts
        .into_iter()
        .map(|(group, (neg, pos))| {
            let n = neg + pos;
            let share = |k: usize| (n > 0).then(|| k as f64 / n as f64);
            GroupShare {
                group,
                n,
                negative_share: share(neg),
                positive_share: share(pos),
            }
        })
        .collect())
}

fn age_histogram(ages: &[u32], width: f64) -> Vec<Bin> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &a in ages {
        *counts.entry((a as f64 / width).floor() as i64).or_default() += 1;
    }
    let (Some(&lo), Some(&hi)) = (counts.keys().next(), counts.keys().next_back()) else {
        return Vec::new();
    };
    (lo..=hi)
        .map(|k| Bin {
            start: k as f64 * width,
            end: (k + 1) as f64 * width,
            count: counts.get(&k).copied().unwrap_or(0),
        })
        .collect()
}

fn unit_histogram(values: &[f64], width: f64) -> Vec<Bin> {
    let n_bins = ((1.0 / width) - 1e-9).ceil().max(1.0) as usize;
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        let idx = ((v / width) + 1e-9).floor().max(0.0) as usize;
        counts[idx.min(n_bins - 1)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| Bin {
            start: k as f64 * width,
            end: ((k + 1) as f64 * width).min(1.0),
            count,
        })
        .collect()
}

/// Runs filters and both fits on a built cohort.
pub fn analyze(cohort: &Cohort, cfg: &PipelineConfig) -> Result<Analysis> {
    cfg.validate()?;
    let cutoffs = cfg.cutoffs();
    let all = &cohort.users;
    let defined = all.iter().filter(|u| u.attitude.overall != Overall::Undefined).count();
    let signed = all.iter().filter(|u| u.attitude.overall.polarity().is_some()).count();

    let subs_ok = apply_filters(
        all,
        &FilterConfig {
            min_subscriptions: cfg.min_subscriptions,
            max_age: None,
            require_defined: true,
        },
    );
    let subs_count = subs_ok.len();
    let with_x: Vec<UserRecord> = subs_ok.into_iter().filter(|u| u.ideology.is_some()).collect();
    let age_cut = FilterConfig {
        min_subscriptions: cfg.min_subscriptions,
        max_age: cfg.max_age,
        require_defined: true,
    };
    let pure_sample = if cfg.apply_age_to_puretypes {
        apply_filters(&with_x, &age_cut)
    } else {
        with_x.clone()
    };
    let reg_sample = apply_filters(&with_x, &age_cut);
    let regression_rows: Vec<RegressionRow> = reg_sample.iter().filter_map(regression_row_of).collect();
    let observations: Vec<Observation> = pure_sample.iter().filter_map(observation_of).collect();

    let ages: Vec<u32> = with_x.iter().filter_map(|u| u.age).collect();
    let anomalous_ages = match cfg.max_age {
        Some(max) => ages.iter().filter(|&&a| a > max).count(),
        None => 0,
    };
    let stages = StageCounts {
        puretypes: vec![
            StageCount { stage: "users_with_signal", count: all.len() },
            StageCount { stage: "defined_attitude", count: defined },
            StageCount { stage: "signed_attitude", count: signed },
            StageCount { stage: "subscriptions_above_min", count: subs_count },
            StageCount { stage: "ideology_defined", count: with_x.len() },
            StageCount { stage: "puretypes_sample", count: observations.len() },
        ],
        regression: vec![
            StageCount { stage: "ideology_defined", count: with_x.len() },
            StageCount { stage: "age_at_most_max", count: reg_sample.len() },
            StageCount { stage: "complete_cases", count: regression_rows.len() },
        ],
        ages_stated: ages.len(),
        anomalous_ages,
    };

    if observations.is_empty() {
        return Err(Error::EmptySample {
            stage: "puretypes_sample".into(),
            counts: stages.describe(),
        });
    }
    if regression_rows.is_empty() {
        return Err(Error::EmptySample {
            stage: "complete_cases".into(),
            counts: stages.describe(),
        });
    }

    let puretypes = puretypes::fit(&observations, &FitOptions::with_delta(cfg.delta))?;
    let grid = contour_grid(&observations, cfg.delta, cfg.grid_resolution, cfg.grid_exponent)?;
    let mut logit = fit_logit(&regression_rows)?;
    logit.n_dropped = reg_sample.len() - regression_rows.len();

    let groups = group_shares(&observations, &cutoffs)?;
    let neg = observations.iter().filter(|o| o.a == Polarity::Negative).count();
    let attitude_hist = vec![(-1, neg), (1, observations.len() - neg)];
    let mut gender = [0usize; 3];
    for u in &pure_sample {
        gender[match u.gender {
            Some(Gender::Female) => 0,
            Some(Gender::Male) => 1,
            None => 2,
        }] += 1;
    }
    let gender_hist = vec![("female", gender[0]), ("male", gender[1]), ("unknown", gender[2])];
    let sample_ages: Vec<u32> = pure_sample.iter().filter_map(|u| u.age).collect();
    let xs: Vec<f64> = observations.iter().map(|o| o.x).collect();

    Ok(Analysis {
        table: cohort.table,
        stages,
        age_hist: age_histogram(&sample_ages, cfg.age_bin_width),
        x_hist: unit_histogram(&xs, cfg.x_bin_width),
        observations,
        regression_rows,
        puretypes,
        grid,
        logit,
        groups,
        attitude_hist,
        gender_hist,
    })
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    config: &'a PipelineConfig,
    events_read: usize,
    malformed_lines: usize,
    profiles_read: usize,
    profiles_missing: usize,
    bias_sources: usize,
    on_topic_posts: usize,
    on_topic_comments: usize,
    qualifying_likes: usize,
    tied_likers: usize,
    cohort_total: u64,
    comment_present: u64,
    like_present: u64,
    dual_signal: u64,
    undefined: u64,
    stages: &'a StageCounts,
    logit_n_used: usize,
    logit_n_dropped: usize,
    files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub analysis: Analysis,
    pub files: Vec<PathBuf>,
}

pub fn format_attitude_table(table: &CohortTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<18}{:<15}{:<17}{:>8}", "Comment-attitude", "Like-attitude", "Overall attitude", "Users");
    for ((c, l), n) in TABLE_ROWS.iter().zip(table.counts) {
        let overall = crate::fusion::fuse(*c, *l).expect("table rows are fusable");
        let overall = match overall {
            Overall::Undefined => "Not defined".to_string(),
            o => o.to_string(),
        };
        let _ = writeln!(
            out,
            "{:<18}{:<15}{:<17}{:>8}",
            c.map_or("None".to_string(), |s| s.to_string()),
            l.map_or("None".to_string(), |p| p.to_string()),
            overall,
            n
        );
    }
    let _ = writeln!(out, "{:<50}{:>8}", "Total number of users", table.total());
    out
}

fn format_summary(a: &Analysis, cohort: &Cohort) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Attitude fusion");
    out.push_str(&format_attitude_table(&a.table));
    let _ = writeln!(
        out,
        "comment-present {}, like-present {}, both {}, undefined {}",
        a.table.comment_present(),
        a.table.like_present(),
        a.table.dual_signal(),
        a.table.undefined()
    );
    let _ = writeln!(out, "malformed event lines skipped: {}", cohort.malformed_lines);
    let _ = writeln!(out, "\nSample filters");
    for s in a.stages.puretypes.iter() {
        let _ = writeln!(out, "  {:<26}{:>8}", s.stage, s.count);
    }
    let _ = writeln!(out, "  regression:");
    for s in a.stages.regression.iter() {
        let _ = writeln!(out, "  {:<26}{:>8}", s.stage, s.count);
    }
    let _ = writeln!(
        out,
        "  ages stated {}, anomalous (above max age) {}",
        a.stages.ages_stated, a.stages.anomalous_ages
    );
    let _ = writeln!(out, "\nAttitude by ideology group");
    for g in &a.groups {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), fixed3);
        let _ = writeln!(
            out,
            "  {:<14} n={:<6} negative {}  positive {}",
            g.group.name(),
            g.n,
            fmt(g.negative_share),
            fmt(g.positive_share)
        );
    }
    let _ = writeln!(out, "\nLogistic regression summary (n = {})", a.logit.n_used);
    out.push_str(&logit::format_summary(&wald_summary(&a.logit)));
    let r = &a.puretypes;
    let _ = writeln!(out, "\nPure-types model (n = {})", a.observations.len());
    let _ = writeln!(
        out,
        "  p = {}, q = {}, -ln L = {}, identifiable = {}",
        fixed3(r.params.p),
        fixed3(r.params.q),
        fixed3(r.nll),
        r.identifiable
    );
    out
}

/// Loads the inputs, runs every stage, and writes the report bundle into
/// `cfg.output_dir`.
pub fn run_report(cfg: &PipelineConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let log = load_events(cfg.require(&cfg.events, "events")?)?;
    let profiles = load_profiles(cfg.require(&cfg.profiles, "profiles")?)?;
    let biases = load_bias_table(cfg.require(&cfg.bias_table, "bias_table")?)?;
    let cohort = build_cohort(&log, &profiles, &biases, cfg)?;
    let analysis = analyze(&cohort, cfg)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let a = &analysis;
    let mut files = Vec::new();
    files.push(write_bytes(dir, "attitude_table.csv", &csv_bytes(|b| a.table.write_csv(b))?)?);
    files.push(write_bytes(
        dir,
        "hist_attitude.csv",
        &csv_bytes(|b| {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["attitude", "count"])?;
            for (k, n) in &a.attitude_hist {
                w.write_record([k.to_string(), n.to_string()])?;
            }
            w.flush().map_err(csv::Error::from)
        })?,
    )?);
    files.push(write_bytes(
        dir,
        "hist_gender.csv",
        &csv_bytes(|b| {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["gender", "count"])?;
            for (k, n) in &a.gender_hist {
                w.write_record([k.to_string(), n.to_string()])?;
            }
            w.flush().map_err(csv::Error::from)
        })?,
    )?);
    for (name, bins) in [("hist_age.csv", &a.age_hist), ("hist_x.csv", &a.x_hist)] {
        files.push(write_bytes(
            dir,
            name,
            &csv_bytes(|b| {
                let mut w = csv::Writer::from_writer(b);
                w.write_record(["bin_start", "bin_end", "count"])?;
                for bin in bins {
                    w.write_record([bin.start.to_string(), bin.end.to_string(), bin.count.to_string()])?;
                }
                w.flush().map_err(csv::Error::from)
            })?,
        )?);
    }
    files.push(write_bytes(
        dir,
        "group_proportions.csv",
        &csv_bytes(|b| {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["group", "n", "negative_share", "positive_share"])?;
            let s = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
            for g in &a.groups {
                w.write_record([g.group.name().to_string(), g.n.to_string(), s(g.negative_share), s(g.positive_share)])?;
            }
            w.flush().map_err(csv::Error::from)
        })?,
    )?);
    files.push(write_bytes(
        dir,
        "observations.csv",
        &csv_bytes(|b| puretypes::write_observations_csv(&a.observations, b))?,
    )?);
    files.push(write_bytes(
        dir,
        "regression_rows.csv",
        &csv_bytes(|b| logit::write_rows_csv(&a.regression_rows, b))?,
    )?);
    let wald = wald_summary(&a.logit);
    files.push(write_bytes(dir, "logit_summary.txt", logit::format_summary(&wald).as_bytes())?);
    files.push(write_bytes(
        dir,
        "logit_summary.csv",
        &csv_bytes(|b| logit::write_summary_csv(&wald, b))?,
    )?);
    files.push(write_bytes(dir, "logit_fit.json", &json_bytes(&a.logit)?)?);
    files.push(write_bytes(dir, "puretypes_fit.json", &json_bytes(&a.puretypes)?)?);
    files.push(write_bytes(dir, "contour_grid.csv", &csv_bytes(|b| a.grid.write_csv(b))?)?);
    files.push(write_bytes(dir, "summary.txt", format_summary(a, &cohort).as_bytes())?);

    let mut names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    names.push("manifest.json".into());
    let manifest = Manifest {
        config: cfg,
        events_read: cohort.events_read,
        malformed_lines: cohort.malformed_lines,
        profiles_read: profiles.len(),
        profiles_missing: cohort.profiles_missing,
        bias_sources: biases.len(),
        on_topic_posts: cohort.signals.on_topic_posts,
        on_topic_comments: cohort.signals.on_topic_comments,
        qualifying_likes: cohort.signals.qualifying_likes,
        tied_likers: cohort.signals.tied_likers,
        cohort_total: a.table.total(),
        comment_present: a.table.comment_present(),
        like_present: a.table.like_present(),
        dual_signal: a.table.dual_signal(),
        undefined: a.table.undefined(),
        stages: &a.stages,
        logit_n_used: a.logit.n_used,
        logit_n_dropped: a.logit.n_dropped,
        files: names,
    };
    files.push(write_bytes(dir, "manifest.json", &json_bytes(&manifest)?)?);

    Ok(ReportBundle { analysis, files })
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationTruth {
    pub cohort: CohortSpec,
    pub logit_seed: u64,
    pub logit_n: usize,
    pub logit_coefficients: [f64; 5],
    pub covariates: CovariateSpec,
    pub world: WorldSpec,
}

/// Writes `observations.csv`, `regression_rows.csv`, a synthetic interaction
/// log (`events.jsonl`, `profiles.jsonl`, `bias_table.csv`) and `truth.json`.
pub fn simulate(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let cohort = CohortSpec::new(cfg.n, cfg.p_true, cfg.q_true, cfg.seed);
    let covariates = CovariateSpec::default();
    let logit_seed = cfg.seed.wrapping_add(1);
    let world = WorldSpec::new(cfg.n, cfg.p_true, cfg.q_true, cfg.seed.wrapping_add(2));

    let obs = synth::gen_cohort(&cohort)?;
    let rows = synth::gen_logit_cohort(cfg.logit_n, &cfg.logit_coefficients, &covariates, logit_seed)?;
    let w = synth::gen_world(&world)?;

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = vec![
        write_bytes(dir, "observations.csv", &csv_bytes(|b| puretypes::write_observations_csv(&obs, b))?)?,
        write_bytes(dir, "regression_rows.csv", &csv_bytes(|b| logit::write_rows_csv(&rows, b))?)?,
    ];
    files.push(write_bytes(dir, "events.jsonl", &jsonl_bytes(&w.events)?)?);
    files.push(write_bytes(dir, "profiles.jsonl", &jsonl_bytes(&w.profiles)?)?);
    files.push(write_bytes(
        dir,
        "bias_table.csv",
        &csv_bytes(|b| {
            let mut wtr = csv::Writer::from_writer(b);
            wtr.write_record(["source_id", "bias"])?;
            for (id, bias) in &w.biases {
                wtr.write_record([id.clone(), bias.to_string()])?;
            }
            wtr.flush().map_err(csv::Error::from)
        })?,
    )?);
    let truth = SimulationTruth {
        cohort,
        logit_seed,
        logit_n: cfg.logit_n,
        logit_coefficients: cfg.logit_coefficients,
        covariates,
        world,
    };
    files.push(write_bytes(dir, "truth.json", &json_bytes(&truth)?)?);
    Ok(files)
}

fn jsonl_bytes<T: Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for it in items {
        serde_json::to_writer(&mut out, it)
            .map_err(|e| Error::InvalidInput(format!("json encoding failed: {e}")))?;
        out.push(b'\n');
    }
    Ok(out)
}

/// Files written by a single-stage run and a short human-readable summary.
#[derive(Debug, Clone)]
pub struct StageOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn opt_cell<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

/// Derives per-user comment and like attitudes; writes `signals.csv`.
pub fn run_ingest(cfg: &PipelineConfig) -> Result<StageOutput> {
    let log = load_events(cfg.require(&cfg.events, "events")?)?;
    let post_lex = TopicLexicon::from_spec(&cfg.post_lexicon)?;
    let comment_lex = TopicLexicon::from_spec(&cfg.comment_lexicon)?;
    let signals = derive_signals(&log.events, &post_lex, &comment_lex);
    ensure_dir(&cfg.output_dir)?;
    let bytes = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["user_id", "comment_attitude", "like_attitude", "on_topic_comments", "signed_likes"])?;
        for s in signals.users.values() {
            w.write_record([
                s.user_id.as_str().to_string(),
                opt_cell(s.comment),
                opt_cell(s.like),
                s.on_topic_comments.to_string(),
                s.signed_likes.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)
    })?;
    let files = vec![write_bytes(&cfg.output_dir, "signals.csv", &bytes)?];
    let summary = format!(
        "events {}, malformed lines {}, on-topic posts {}, on-topic comments {}, qualifying likes {}, users {}, tied likers {}",
        log.events.len(),
        log.malformed.len(),
        signals.on_topic_posts,
        signals.on_topic_comments,
        signals.qualifying_likes,
        signals.users.len(),
        signals.tied_likers
    );
    Ok(StageOutput { files, summary })
}

/// Fuses the two signals per user; writes `attitudes.csv` and `attitude_table.csv`.
pub fn run_fuse(cfg: &PipelineConfig) -> Result<StageOutput> {
    let log = load_events(cfg.require(&cfg.events, "events")?)?;
    let post_lex = TopicLexicon::from_spec(&cfg.post_lexicon)?;
    let comment_lex = TopicLexicon::from_spec(&cfg.comment_lexicon)?;
    let signals = derive_signals(&log.events, &post_lex, &comment_lex);
    let mut triples = Vec::new();
    let mut rows = Vec::new();
    for s in signals.users.values() {
        if s.comment.is_none() && s.like.is_none() {
            continue;
        }
        let t = AttitudeTriple::new(s.comment, s.like)?;
        triples.push(t);
        rows.push((s.user_id.as_str().to_string(), t));
    }
    let table = tabulate(&triples);
    ensure_dir(&cfg.output_dir)?;
    let attitudes = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["user_id", "comment_attitude", "like_attitude", "overall_attitude"])?;
        for (id, t) in &rows {
            w.write_record([id.clone(), opt_cell(t.comment), opt_cell(t.like), t.overall.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)
    })?;
    let files = vec![
        write_bytes(&cfg.output_dir, "attitudes.csv", &attitudes)?,
        write_bytes(&cfg.output_dir, "attitude_table.csv", &csv_bytes(|b| table.write_csv(b))?)?,
    ];
    Ok(StageOutput {
        files,
        summary: format_attitude_table(&table),
    })
}

/// Scores every profile against the bias table; writes `ideology.csv`.
pub fn run_ideology(cfg: &PipelineConfig) -> Result<StageOutput> {
    let profiles = load_profiles(cfg.require(&cfg.profiles, "profiles")?)?;
    let biases = load_bias_table(cfg.require(&cfg.bias_table, "bias_table")?)?;
    let cutoffs = GroupCutoffs::new(cfg.cutoff_low, cfg.cutoff_high)?;
    let mut scored = Vec::new();
    let mut counts = [0usize; 3];
    for p in &profiles {
        let score = estimate_x_with_support(&p.subscriptions, &biases, cfg.min_support);
        let group = match score {
            Some(s) => Some(classify_group(s.x, &cutoffs)?),
            None => None,
        };
        if let Some(g) = group {
            counts[Group::ALL.iter().position(|&h| h == g).expect("known group")] += 1;
        }
        scored.push((p.user_id.as_str().to_string(), score, group));
    }
    ensure_dir(&cfg.output_dir)?;
    let bytes = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["user_id", "x", "support", "group"])?;
        for (id, s, g) in &scored {
            w.write_record([
                id.clone(),
                s.map_or(String::new(), |s| s.x.to_string()),
                s.map_or("0".to_string(), |s| s.support.to_string()),
                g.map_or(String::new(), |g| g.name().to_string()),
            ])?;
        }
        w.flush().map_err(csv::Error::from)
    })?;
    let files = vec![write_bytes(&cfg.output_dir, "ideology.csv", &bytes)?];
    let scored_n: usize = counts.iter().sum();
    let summary = format!(
        "profiles {}, scored {}, {} {}, {} {}, {} {}",
        profiles.len(),
        scored_n,
        Group::ALL[0].name(),
        counts[0],
        Group::ALL[1].name(),
        counts[1],
        Group::ALL[2].name(),
        counts[2]
    );
    Ok(StageOutput { files, summary })
}

/// Fits the pure-types model to an observations file; writes
/// `puretypes_fit.json` and `contour_grid.csv`.
pub fn run_fit_puretypes(cfg: &PipelineConfig) -> Result<StageOutput> {
    cfg.validate()?;
    let path = cfg.require(&cfg.observations, "observations")?;
    let obs = puretypes::read_observations_csv(open(path)?, &path.display().to_string())?;
    if obs.is_empty() {
        return Err(Error::EmptySample {
            stage: "observations".into(),
            counts: format!("observations=0 in {}", path.display()),
        });
    }
    let fit = puretypes::fit(&obs, &FitOptions::with_delta(cfg.delta))?;
    let grid = contour_grid(&obs, cfg.delta, cfg.grid_resolution, cfg.grid_exponent)?;
    ensure_dir(&cfg.output_dir)?;
    let files = vec![
        write_bytes(&cfg.output_dir, "puretypes_fit.json", &json_bytes(&fit)?)?,
        write_bytes(&cfg.output_dir, "contour_grid.csv", &csv_bytes(|b| grid.write_csv(b))?)?,
    ];
    let summary = format!(
        "n = {}, p = {}, q = {}, -ln L = {}, identifiable = {}",
        obs.len(),
        fixed3(fit.params.p),
        fixed3(fit.params.q),
        fixed3(fit.nll),
        fit.identifiable
    );
    Ok(StageOutput { files, summary })
}

/// Fits the logistic regression to a regression-rows file; writes
/// `logit_summary.txt`, `logit_summary.csv` and `logit_fit.json`.
pub fn run_fit_logit(cfg: &PipelineConfig) -> Result<StageOutput> {
    let path = cfg.require(&cfg.regression_rows, "regression_rows")?;
    let rows = logit::read_rows_csv(open(path)?, &path.display().to_string())?;
    let fit = fit_logit(&rows)?;
    let wald = wald_summary(&fit);
    let text = logit::format_summary(&wald);
    ensure_dir(&cfg.output_dir)?;
    let files = vec![
        write_bytes(&cfg.output_dir, "logit_summary.txt", text.as_bytes())?,
        write_bytes(&cfg.output_dir, "logit_summary.csv", &csv_bytes(|b| logit::write_summary_csv(&wald, b))?)?,
        write_bytes(&cfg.output_dir, "logit_fit.json", &json_bytes(&fit)?)?,
    ];
    Ok(StageOutput { files, summary: text })
}
