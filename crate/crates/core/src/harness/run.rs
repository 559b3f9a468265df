use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{AnswerMechanism, ExperimentConfig, ExperimentKind};
use super::criteria::random_window;
use crate::bits::BitSet;
use crate::bracket::{bracket_thresholds, compose_brackets, verify_bracketing};
use crate::domain::{dist_to_text, is_sigma_smooth, query_value, Dataset, Domain, SmoothnessParam};
use crate::dp::{
    max_query_error, mwem, net_scores, projected_smooth_mwem, smooth_dataset, smooth_mwem, subsampled_net_mechanism,
    MechanismTranscript, SmoothMwemOptions,
};
use crate::error::{Error, Result};
use crate::hypothesis::{evenly_spaced_thresholds, threshold_grid, HypothesisClass, SetOp};
use crate::online::{
    coordinate_ranks, deviation_bound, disjoint_slabs, make_adversary, max_deviation_monte_carlo, play_game,
    smooth_online_play, threshold_hindsight, AdversaryKind, DeviationStrategy, HalvingLearner, PlayOptions,
    RegretRecord, REGRET_CSV_HEADER,
};
use crate::rng::stream;

/// An extra output written next to the CSV, at `<csv stem>.<suffix>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Attachment {
    pub suffix: &'static str,
    pub contents: String,
}

/// Result rows of one run. Everything but `elapsed` is reproducible from
/// the config.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub version: &'static str,
    pub config_hash: String,
    pub kind: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<(String, String)>,
    #[serde(skip)]
    pub attachments: Vec<Attachment>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl RunRecord {
    pub fn csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Writes the CSV to `path`, the record file next to it and any
    /// attachments. Returns every path written.
    pub fn write_outputs(&self, path: &Path) -> Result<Vec<PathBuf>> {
        let mut written = vec![path.to_path_buf()];
        write_file(path, &self.csv())?;
        let mut record = String::new();
        let head = serde_json::json!({
            "version": self.version,
            "config_hash": self.config_hash,
            "kind": self.kind,
            "summary": self.summary.iter().cloned().collect::<std::collections::BTreeMap<_, _>>(),
        });
        record.push_str(&head.to_string());
        record.push('\n');
        for row in &self.rows {
            let obj: serde_json::Map<String, serde_json::Value> = self
                .header
                .iter()
                .zip(row)
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect();
            record.push_str(&serde_json::Value::Object(obj).to_string());
            record.push('\n');
        }
        let rec_path = sibling(path, "record.jsonl");
        write_file(&rec_path, &record)?;
        written.push(rec_path);
        for a in &self.attachments {
            let p = sibling(path, a.suffix);
            write_file(&p, &a.contents)?;
            written.push(p);
        }
        Ok(written)
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    summary: Vec<(String, String)>,
    attachments: Vec<Attachment>,
}

impl Table {
    fn new(header: &str) -> Self {
        Self {
            header: header.split(',').map(String::from).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
            attachments: Vec::new(),
        }
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }
}

/// Validates `cfg`, runs it over its seeds and writes outputs when an output
/// path is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let table = match cfg.kind {
        ExperimentKind::Online => online(cfg)?,
        ExperimentKind::DpAnswer => dp_answer(cfg)?,
        ExperimentKind::DpRelease => dp_release(cfg)?,
        ExperimentKind::SmallDb => smalldb(cfg)?,
        ExperimentKind::Brackets => brackets(cfg)?,
        ExperimentKind::MaxDeviation => max_deviation(cfg)?,
    };
    let record = RunRecord {
        version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.hash(),
        kind: cfg.kind.name(),
        header: table.header,
        rows: table.rows,
        summary: table.summary,
        attachments: table.attachments,
        elapsed: start.elapsed(),
    };
    if let Some(path) = &cfg.output {
        record.write_outputs(path)?;
    }
    Ok(record)
}

fn grid(n: usize) -> Result<Arc<Domain>> {
    Ok(Arc::new(Domain::unit_grid(n)?))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    s / c.max(1) as f64
}

fn per_seed<T: Send>(cfg: &ExperimentConfig, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..cfg.seeds as u64).into_par_iter().map(f).collect()
}

fn online(cfg: &ExperimentConfig) -> Result<Table> {
    let d = grid(cfg.n)?;
    let class = HypothesisClass::parse(&cfg.class)?;
    let sigma = SmoothnessParam::new(cfg.sigma)?;
    let kind = AdversaryKind::parse(&cfg.adversary)?;
    let options = PlayOptions {
        gamma: cfg.gamma,
        sample_size: cfg.sample_size,
    };
    let records: Vec<RegretRecord> = per_seed(cfg, |seed| {
        let mut rng = stream(cfg.base_seed, seed);
        let mut adv = make_adversary(kind, d.clone(), sigma, &mut rng)?;
        if cfg.learner == "halving" {
            let mut learner = HalvingLearner::new(&d)?;
            let mut rounds = play_game(
                &mut learner,
                adv.as_mut(),
                &[BitSet::ones(cfg.n)],
                cfg.horizon,
                &mut rng,
            )?;
            threshold_hindsight(&coordinate_ranks(&d)?, &mut rounds);
            return Ok(RegretRecord {
                seed,
                rounds,
                best_exact: true,
                cover_size: cfg.n + 1,
                note: adv.note(),
            });
        }
        smooth_online_play(&class, &d, sigma, cfg.horizon, adv.as_mut(), options, seed, &mut rng)
    })?;
    let mut t = Table::new(REGRET_CSV_HEADER);
    for r in &records {
        let mut buf = Vec::new();
        r.write_csv_rows(&mut buf)?;
        for line in String::from_utf8_lossy(&buf).lines() {
            t.rows.push(line.split(',').map(String::from).collect());
        }
    }
    t.note("mean_regret", mean(records.iter().map(|r| r.regret() as f64)));
    t.note("mean_cum_loss", mean(records.iter().map(|r| r.cum_loss() as f64)));
    t.note("cover_size", records.iter().map(|r| r.cover_size).max().unwrap_or(0));
    t.note("best_exact", records.iter().all(|r| r.best_exact));
    if let Some(n) = records.iter().find_map(|r| r.note.clone()) {
        t.note("note", n);
    }
    Ok(t)
}

fn transcript_lines(seed: u64, tr: &MechanismTranscript) -> Result<String> {
    let mut buf = Vec::new();
    tr.write_jsonl(&mut buf)?;
    let mut out = String::new();
    for line in String::from_utf8_lossy(&buf).lines() {
        let mut v: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Io(e.to_string()))?;
        if let Some(obj) = v.as_object_mut() {
            obj.insert("seed".into(), seed.into());
        }
        out.push_str(&v.to_string());
        out.push('\n');
    }
    Ok(out)
}

fn smooth_options(cfg: &ExperimentConfig) -> SmoothMwemOptions {
    SmoothMwemOptions {
        gamma: cfg.gamma,
        sample_size: cfg.sample_size,
        witness: None,
    }
}

fn dp_answer(cfg: &ExperimentConfig) -> Result<Table> {
    let d = grid(cfg.n)?;
    let sigma = SmoothnessParam::new(cfg.sigma)?;
    let class = HypothesisClass::parse(&cfg.class)?;
    let qs: Vec<BitSet> = evenly_spaced_thresholds(&d, cfg.queries)?
        .iter()
        .map(|h| h.materialize(&d))
        .collect::<Result<_>>()?;
    let (n, t, eps) = (cfg.records as f64, cfg.horizon as f64, cfg.epsilon);
    let bound = match cfg.mechanism {
        AnswerMechanism::Mwem => 2.0 * ((cfg.n as f64).ln() / t).sqrt() + 10.0 * t * (qs.len() as f64).ln() / (eps * n),
        AnswerMechanism::Smooth => {
            1.0 / n
                + 2.0 * ((1.0 / cfg.sigma).ln() / t).sqrt()
                + 10.0 * t * class.vc_dim() as f64 * (2.0 * n / cfg.sigma).ln() / (eps * n)
        }
    };
    let runs: Vec<(f64, String)> = per_seed(cfg, |seed| {
        let mut rng = stream(cfg.base_seed, seed);
        let source = random_window(&d, cfg.window, &mut rng)?;
        match cfg.mechanism {
            AnswerMechanism::Mwem => {
                let data = Dataset::sample_iid(&source, cfg.records, &mut rng)?;
                let (out, tr) = mwem(&data, &qs, cfg.horizon, eps, &mut rng)?;
                Ok((
                    max_query_error(&qs, &out, &data.empirical()),
                    transcript_lines(seed, &tr)?,
                ))
            }
            AnswerMechanism::Smooth => {
                let data = smooth_dataset(&source, sigma, cfg.records, &mut rng)?;
                let rel = smooth_mwem(&data, &class, sigma, cfg.horizon, eps, &smooth_options(cfg), &mut rng)?;
                let emp = data.empirical();
                let mut worst: f64 = 0.0;
                for q in &qs {
                    worst = worst.max((rel.answer(q)? - query_value(q, &emp)?).abs());
                }
                Ok((worst, transcript_lines(seed, &rel.transcript)?))
            }
        }
    })?;
    let mut tab = Table::new("seed,max_error,bound");
    for (seed, (err, _)) in runs.iter().enumerate() {
        tab.rows
            .push(vec![seed.to_string(), err.to_string(), bound.to_string()]);
    }
    tab.note("mechanism", cfg.mechanism.name());
    tab.note("mean_max_error", mean(runs.iter().map(|r| r.0)));
    tab.note("within_bound", runs.iter().filter(|r| r.0 <= bound).count());
    tab.attachments.push(Attachment {
        suffix: "transcript.jsonl",
        contents: runs.into_iter().map(|r| r.1).collect(),
    });
    Ok(tab)
}

fn dp_release(cfg: &ExperimentConfig) -> Result<Table> {
    let d = grid(cfg.n)?;
    let sigma = SmoothnessParam::new(cfg.sigma)?;
    let class = HypothesisClass::parse(&cfg.class)?;
    let qs: Vec<BitSet> = evenly_spaced_thresholds(&d, cfg.queries)?
        .iter()
        .map(|h| h.materialize(&d))
        .collect::<Result<_>>()?;
    struct Out {
        row: Vec<String>,
        smooth: bool,
        error: f64,
        dist: String,
        transcript: String,
    }
    let runs: Vec<Out> = per_seed(cfg, |seed| {
        let mut rng = stream(cfg.base_seed, seed);
        let source = random_window(&d, cfg.window, &mut rng)?;
        let data = smooth_dataset(&source, sigma, cfg.records, &mut rng)?;
        let rel = projected_smooth_mwem(
            &data,
            &class,
            sigma,
            cfg.horizon,
            cfg.epsilon,
            &smooth_options(cfg),
            &mut rng,
        )?;
        let emp = data.empirical();
        let error = max_query_error(&qs, &rel.dist, &emp);
        let cover_error = max_query_error(rel.cover_queries(), &rel.dist, &emp);
        let smooth = is_sigma_smooth(&rel.dist, sigma);
        let tr = &rel.transcript;
        let slack = tr
            .rounds
            .iter()
            .filter_map(|r| r.pythagorean_slack())
            .fold(f64::INFINITY, f64::min);
        let psi0 = tr.initial_potential.map_or("none".into(), |p| p.to_string());
        Ok(Out {
            row: vec![
                seed.to_string(),
                error.to_string(),
                cover_error.to_string(),
                rel.dist.max_weight().to_string(),
                sigma.cap(cfg.n).to_string(),
                smooth.to_string(),
                psi0,
                slack.to_string(),
            ],
            smooth,
            error,
            dist: dist_to_text(&rel.dist),
            transcript: transcript_lines(seed, tr)?,
        })
    })?;
    let mut tab =
        Table::new("seed,max_error,cover_error,max_weight,cap,smooth,initial_potential,min_pythagorean_slack");
    tab.note("mean_max_error", mean(runs.iter().map(|r| r.error)));
    tab.note("all_smooth", runs.iter().all(|r| r.smooth));
    let mut transcript = String::new();
    let mut first_dist = None;
    for r in runs {
        tab.rows.push(r.row);
        transcript.push_str(&r.transcript);
        first_dist.get_or_insert(r.dist);
    }
    tab.attachments.push(Attachment {
        suffix: "transcript.jsonl",
        contents: transcript,
    });
    if let Some(dist) = first_dist {
        tab.attachments.push(Attachment {
            suffix: "dist.txt",
            contents: dist,
        });
    }
    Ok(tab)
}

fn smalldb(cfg: &ExperimentConfig) -> Result<Table> {
    let d = grid(cfg.n)?;
    let qs: Vec<BitSet> = evenly_spaced_thresholds(&d, cfg.queries)?
        .iter()
        .map(|h| h.materialize(&d))
        .collect::<Result<_>>()?;
    let runs: Vec<(f64, Vec<usize>)> = per_seed(cfg, |seed| {
        let mut rng = stream(cfg.base_seed, seed);
        let source = random_window(&d, cfg.window, &mut rng)?;
        let data = Dataset::sample_iid(&source, cfg.records, &mut rng)?;
        let out = subsampled_net_mechanism(&data, &qs, cfg.epsilon, cfg.net_draws, cfg.net_size, &mut rng)?;
        let s = net_scores(&data, &qs, &[out.records().to_vec()])?[0];
        Ok((s, out.records().to_vec()))
    })?;
    let mut tab = Table::new("seed,score,records");
    for (seed, (s, recs)) in runs.iter().enumerate() {
        let joined = recs.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ");
        tab.rows.push(vec![seed.to_string(), s.to_string(), joined]);
    }
    tab.note("mean_score", mean(runs.iter().map(|r| r.0)));
    Ok(tab)
}

fn brackets(cfg: &ExperimentConfig) -> Result<Table> {
    let d = grid(cfg.n)?;
    let mu = crate::domain::Dist::uniform(d.clone());
    let class: Vec<BitSet> = threshold_grid(&d, 0)?
        .iter()
        .map(|h| h.materialize(&d))
        .collect::<Result<_>>()?;
    let eps = cfg.epsilon;
    let b = bracket_thresholds(eps, &mu)?;
    let report = verify_bracketing(&b, &class);
    let c = compose_brackets(&[&b, &b], SetOp::Intersection)?;
    let mut tab = Table::new("bracketing,epsilon,count,max_gap,size_bound,containment");
    tab.rows.push(vec![
        "thresholds".into(),
        eps.to_string(),
        b.len().to_string(),
        b.max_gap().to_string(),
        ((1.0 / eps).ceil() as usize + 1).to_string(),
        report.pass.to_string(),
    ]);
    tab.rows.push(vec![
        "intersection2".into(),
        c.epsilon().to_string(),
        c.len().to_string(),
        c.max_gap().to_string(),
        (b.len() * b.len()).to_string(),
        "unchecked".into(),
    ]);
    tab.note("pass", report.pass);
    tab.attachments.push(Attachment {
        suffix: "brackets.txt",
        contents: crate::bracket::bracketing_to_text(&b),
    });
    Ok(tab)
}

fn max_deviation(cfg: &ExperimentConfig) -> Result<Table> {
    let sigma = SmoothnessParam::new(cfg.sigma)?;
    let width = (cfg.n as f64 * cfg.sigma / 4.0).floor() as usize;
    let slabs = disjoint_slabs(cfg.n, cfg.n / width)?;
    let family = &slabs[..cfg.family_size];
    let eps = width as f64 / cfg.n as f64;
    let stats = max_deviation_monte_carlo(
        family,
        eps,
        sigma,
        DeviationStrategy::ConcentrateOnLeader,
        cfg.horizon,
        cfg.trials,
        cfg.base_seed,
    )?;
    let bound = deviation_bound(cfg.horizon, eps, cfg.sigma, cfg.family_size);
    let mut tab = Table::new("family_size,eps,sigma,T,trials,mean_max,std_dev,bound,within");
    tab.rows.push(vec![
        cfg.family_size.to_string(),
        eps.to_string(),
        cfg.sigma.to_string(),
        cfg.horizon.to_string(),
        cfg.trials.to_string(),
        stats.mean.to_string(),
        stats.std_dev.to_string(),
        bound.to_string(),
        (stats.mean <= bound).to_string(),
    ]);
    tab.note("pass", stats.mean <= bound);
    Ok(tab)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn online_run_is_reproducible() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Online);
        cfg.n = 128;
        cfg.horizon = 50;
        cfg.seeds = 3;
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.csv(), b.csv());
        assert_eq!(a.rows.len(), 150);
        cfg.horizon = 0;
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn every_kind_runs_small() {
        for kind in ExperimentKind::ALL {
            let mut cfg = ExperimentConfig::new(kind);
            cfg.n = cfg.n.min(256);
            cfg.horizon = cfg.horizon.min(20);
            cfg.trials = 10;
            cfg.family_size = 4;
            cfg.queries = 8;
            if kind == ExperimentKind::SmallDb {
                cfg.n = 16;
                cfg.records = 20;
            }
            let r = run_experiment(&cfg).unwrap_or_else(|e| panic!("{kind:?}: {e}"));
            assert!(!r.rows.is_empty());
            assert!(r.rows.iter().all(|row| row.len() == r.header.len()));
        }
    }

    #[test]
    fn halving_learner_against_binary_search() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Online);
        cfg.n = 1 << 12;
        cfg.horizon = 12;
        cfg.learner = "halving".into();
        cfg.adversary = "binary_search".into();
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.summary_value("mean_cum_loss"), Some("12"));
    }
}
