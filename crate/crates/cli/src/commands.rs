use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fairfront_core::audit::{audit_decision_log, DEFAULT_PROFILE_BINS};
use fairfront_core::io;
use fairfront_core::{
    audit_point, build_empirical_frontier, build_frontier, empirical_evaluate, evaluate_policy,
    estimate_from_samples, AuditReport, FrontierSet, GroupPolicy, PopulationModel, Sample,
};
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::Serialize;

use crate::config::{PopulationSource, RunConfig};
use crate::error::{CliError, CliResult};
use crate::Flags;

fn load_config(flags: &Flags) -> CliResult<RunConfig> {
    let path = flags
        .config
        .as_deref()
        .ok_or_else(|| CliError::config_msg("this command needs --config"))?;
    RunConfig::load(path)
}

fn out_path(flags: &Flags, cfg: Option<&RunConfig>) -> Option<PathBuf> {
    flags
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out.as_ref().map(|p| c.resolve(p))))
}

fn io_failure(path: Option<&Path>, e: impl std::fmt::Display) -> CliError {
    let target = path.map_or("stdout".to_string(), |p| p.display().to_string());
    CliError::data(fairfront_core::Error::Io {
        path: target,
        reason: e.to_string(),
    })
}

/// Writes to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut f = io::create(p).map_err(CliError::data)?;
            write(&mut f).and_then(|_| f.flush()).map_err(|e| io_failure(path, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).and_then(|_| lock.flush()).map_err(|e| io_failure(path, e))
        }
    }
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    emit(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn synth(flags: &Flags, sample_count: Option<usize>, samples_out: Option<&Path>) -> CliResult<()> {
    let cfg = load_config(flags)?;
    let pop = cfg.population(flags.bins)?.model;
    emit_json(out_path(flags, Some(&cfg)).as_deref(), &pop)?;
    if let Some(count) = sample_count {
        let path = samples_out.ok_or_else(|| CliError::config_msg("--sample-count needs --samples-out"))?;
        let seed = flags.seed.or(cfg.seed).unwrap_or(0);
        let samples = draw_samples(&cfg, &pop, count, seed)?;
        emit(Some(path), |w| {
            io::write_samples(w, &samples).map_err(|e| std::io::Error::other(e.to_string()))
        })?;
        eprintln!("synth: {count} samples written to {}", path.display());
    }
    Ok(())
}

/// Draws `(p, group, y)` records: group by share, `p` from the configured
/// Beta (or uniformly within a bin drawn from the binned density), `y ~ Bernoulli(p)`.
fn draw_samples(cfg: &RunConfig, pop: &PopulationModel, count: usize, seed: u64) -> CliResult<Vec<Sample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = pop.groups();
    let pick_group = WeightedIndex::new(groups.iter().map(|g| g.share))
        .map_err(|e| CliError::config_msg(format!("group shares: {e}")))?;
    enum Scores {
        Beta(Beta<f64>),
        Bins(WeightedIndex<f64>),
    }
    let mut scores = Vec::with_capacity(groups.len());
    for g in groups {
        let s = match &cfg.population {
            Some(PopulationSource::Beta(params)) => {
                let b = &params[&g.label];
                Scores::Beta(Beta::new(b.alpha, b.beta).map_err(|e| CliError::config_msg(format!("{}: {e}", g.label)))?)
            }
            _ => Scores::Bins(
                WeightedIndex::new(g.weights.weights().iter().copied())
                    .map_err(|e| CliError::config_msg(format!("{}: {e}", g.label)))?,
            ),
        };
        scores.push(s);
    }
    let n = pop.n_bins() as f64;
    Ok((0..count)
        .map(|_| {
            let k = pick_group.sample(&mut rng);
            let p: f64 = match &scores[k] {
                Scores::Beta(b) => b.sample(&mut rng),
                Scores::Bins(w) => (w.sample(&mut rng) as f64 + rng.random::<f64>()) / n,
            };
            let p = p.clamp(0.0, 1.0);
            let y = u8::from(rng.random::<f64>() < p);
            Sample::new(p, groups[k].label.clone()).with_outcome(y)
        })
        .collect())
}

pub fn estimate(flags: &Flags, samples: Option<&Path>) -> CliResult<()> {
    let cfg = flags.config.as_deref().map(RunConfig::load).transpose()?;
    let path = match (samples, cfg.as_ref().and_then(|c| c.population.as_ref())) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(PopulationSource::Samples(p))) => cfg.as_ref().expect("config").resolve(p),
        _ => return Err(CliError::config_msg("estimate needs --samples or a config with population.samples")),
    };
    let n_bins = match &cfg {
        Some(c) => c.n_bins(flags.bins),
        None => flags.bins.unwrap_or(fairfront_core::DEFAULT_BINS),
    };
    let samples = io::load_samples(&path).map_err(CliError::data)?;
    let pop = estimate_from_samples(&samples, n_bins).map_err(CliError::data)?;
    eprintln!(
        "estimate: {} samples, {} groups, {n_bins} bins",
        samples.len(),
        pop.groups().len()
    );
    emit_json(out_path(flags, cfg.as_ref()).as_deref(), &pop)
}

pub fn frontier(flags: &Flags, empirical: bool) -> CliResult<()> {
    let cfg = load_config(flags)?;
    let dm = cfg.dm()?;
    let (ds, spec) = cfg.fairness()?;
    let pop = cfg.population(flags.bins)?;
    let n_bins = pop.model.n_bins();
    let grid = flags.grid.or(cfg.grid_m).unwrap_or(n_bins);
    if !empirical && n_bins % grid != 0 {
        eprintln!("warning: grid {grid} does not divide {n_bins} bins; rules are applied at bin centers");
    }
    let start = Instant::now();
    let mut fr = if empirical {
        let samples = pop
            .samples
            .as_deref()
            .ok_or_else(|| CliError::config_msg("--empirical needs population.samples in the config"))?;
        build_empirical_frontier(samples, &dm, &ds, &spec, grid)
    } else {
        build_frontier(&pop.model, &dm, &ds, &spec, grid)
    }
    .map_err(CliError::compute)?;
    let secs = start.elapsed().as_secs_f64();

    let with_subs = flags.subfrontiers || fr.meta.groups.len() == 2;
    if !with_subs {
        fr.sub_frontiers.clear();
    }
    let out = out_path(flags, Some(&cfg));
    match out.as_deref() {
        Some(p) if !is_csv(p) => emit_json(Some(p), &fr)?,
        _ => {
            write_csv(out.as_deref(), &fr.points)?;
            if let Some(p) = out.as_deref().filter(|_| with_subs) {
                for (kind, points) in &fr.sub_frontiers {
                    write_csv(Some(&sibling(p, kind)), points)?;
                }
            }
        }
    }
    eprintln!(
        "frontier: {} points, {} of {} policies skipped, {secs:.2} s",
        fr.len(),
        fr.meta.skipped,
        fr.meta.evaluated
    );
    Ok(())
}

fn write_csv(path: Option<&Path>, points: &[fairfront_core::FrontierPoint]) -> CliResult<()> {
    emit(path, |w| {
        io::write_frontier_csv(w, points).map_err(|e| std::io::Error::other(e.to_string()))
    })
}

/// `out.csv` -> `out.lb-ub.csv`
fn sibling(path: &Path, kind: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{kind}.csv"))
}

pub fn eval(flags: &Flags, policy: &Path, empirical: bool) -> CliResult<()> {
    let cfg = load_config(flags)?;
    let dm = cfg.dm()?;
    let (ds, spec) = cfg.fairness()?;
    let pop = cfg.population(flags.bins)?;
    let policy: GroupPolicy = io::load_json(policy).map_err(CliError::data)?;
    let outcome = if empirical {
        let samples = pop
            .samples
            .as_deref()
            .ok_or_else(|| CliError::config_msg("--empirical needs population.samples in the config"))?;
        empirical_evaluate(samples, &policy, &dm, &ds, &spec)
    } else {
        evaluate_policy(&policy, &pop.model, &dm, &ds, &spec)
    }
    .map_err(CliError::compute)?;
    emit_json(out_path(flags, Some(&cfg)).as_deref(), &outcome)
}

pub fn audit(
    flags: &Flags,
    frontier: &Path,
    observed: Option<&Path>,
    log: Option<&Path>,
    profile_bins: Option<usize>,
) -> CliResult<()> {
    let cfg = flags.config.as_deref().map(RunConfig::load).transpose()?;
    let direction = match &cfg {
        Some(c) if c.ds.is_some() => Some(c.fairness()?.1.direction),
        _ => None,
    };
    let fr: FrontierSet = io::load_frontier(frontier, direction).map_err(CliError::data)?;
    let reports: Vec<AuditReport> = match (observed, log) {
        (Some(path), None) => {
            let points = io::load_observed(path).map_err(CliError::data)?;
            points
                .iter()
                .map(|p| audit_point(&fr, p).map_err(CliError::compute))
                .collect::<CliResult<_>>()?
        }
        (None, Some(path)) => {
            let cfg = cfg
                .as_ref()
                .ok_or_else(|| CliError::config_msg("auditing a decision log needs --config"))?;
            let (ds, spec) = cfg.fairness()?;
            let records = io::load_decision_log(path).map_err(CliError::data)?;
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let bins = profile_bins.unwrap_or(DEFAULT_PROFILE_BINS);
            vec![audit_decision_log(&fr, &records, &cfg.dm()?, &ds, &spec, bins, &label).map_err(CliError::compute)?]
        }
        _ => return Err(CliError::config_msg("audit needs exactly one of --observed or --log")),
    };
    for r in &reports {
        eprint!("{r}");
    }
    emit_json(flags.out.as_deref(), &reports)
}
