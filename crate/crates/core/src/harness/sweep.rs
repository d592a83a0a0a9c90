use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{Cell, InstanceSpec, SweepConfig};
use super::records::{RecordWriter, TrialRecord};
use crate::domain::{derive_rng, PrivacyParams, RandomStream, SeedSpec, SplitDataset};
use crate::dp::DpSgdConfig;
use crate::error::{Error, Result};
use crate::instances::{
    FingerprintInstance, KnownMarginalGlmInstance, LinearScoInstance, LowRankGlmInstance, PopulationOracle,
    StronglyConvexInstance,
};
use crate::learners::{
    alg1_projected_glm, alg2_cover_expmech, baseline_all_private_dpsgd, baseline_public_only_erm, erm,
    excess_risk, mean_all_private, mean_public_only, LearnerOutput, Method,
};
use crate::losses::{GlmLoss, SampleLoss, StronglyConvexLoss};
use crate::vecops::{norm, sub};

/// What a trial measures, with the population quantities needed to score it.
enum Task {
    Mean { mu: Vec<f64>, radius: f64 },
    Glm { loss: GlmLoss, oracle: Box<dyn PopulationOracle> },
    StronglyConvex { loss: StronglyConvexLoss, oracle: StronglyConvexInstance },
}

struct Drawn {
    ds: SplitDataset,
    task: Task,
    hash: String,
}

fn short_hash<T: Serialize>(v: &T) -> String {
    let bytes = serde_json::to_vec(v).unwrap_or_default();
    Sha256::digest(&bytes)[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Splits `n_pub + n_priv` labeled examples into a dataset whose public
/// rows keep their labels (only `pub_erm` and `erm` read them).
fn split(d: usize, n_pub: usize, mut rows: Vec<(Vec<f64>, f64)>) -> Result<SplitDataset> {
    let private = rows.split_off(n_pub);
    let (public, labels): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    SplitDataset::new(d, public, Some(labels), private)
}

fn draw(spec: &InstanceSpec, cell: &Cell, rng: &mut RandomStream) -> Result<Drawn> {
    let (d, n) = (cell.d, cell.n());
    let m = spec.resolved_m(n);
    Ok(match *spec {
        InstanceSpec::Fingerprint { radius, fixed_mu, .. } => {
            let inst = match fixed_mu {
                Some(v) => FingerprintInstance::with_mu(v.abs(), radius, vec![v; d])?,
                None => FingerprintInstance::new(d, m.unwrap_or(1.0), radius, rng)?,
            };
            let rows = inst.sample(n, rng).into_iter().map(|x| (x, 0.0)).collect();
            Drawn {
                ds: split(d, cell.n_pub, rows)?,
                hash: short_hash(&inst),
                task: Task::Mean {
                    mu: inst.mu_scaled(),
                    radius,
                },
            }
        }
        InstanceSpec::LinearSco { g, radius, norm_x, .. } => {
            let fingerprint = FingerprintInstance::new(d, m.unwrap_or(1.0), norm_x, rng)?;
            let inst = LinearScoInstance { fingerprint, g, radius };
            let rows = inst.sample(n, rng);
            Drawn {
                ds: split(d, cell.n_pub, rows)?,
                hash: short_hash(&inst),
                task: Task::Glm {
                    loss: inst.loss()?,
                    oracle: Box::new(inst),
                },
            }
        }
        InstanceSpec::StronglyConvex {
            lambda, radius, norm_x, ..
        } => {
            let fingerprint = FingerprintInstance::new(d, m.unwrap_or(1.0), norm_x, rng)?;
            let inst = StronglyConvexInstance {
                fingerprint,
                lambda,
                radius,
            };
            let rows = inst.sample(n, rng);
            Drawn {
                ds: split(d, cell.n_pub, rows)?,
                hash: short_hash(&inst),
                task: Task::StronglyConvex {
                    loss: inst.loss()?,
                    oracle: inst,
                },
            }
        }
        InstanceSpec::KnownMarginal { radius, norm_x } => {
            let inst = KnownMarginalGlmInstance::new(d, cell.n_priv.max(1), cell.epsilon, radius, norm_x, rng)?;
            let rows = inst.sample(n, rng);
            Drawn {
                ds: split(d, cell.n_pub, rows)?,
                hash: short_hash(&inst),
                task: Task::Glm {
                    loss: inst.loss()?,
                    oracle: Box::new(inst),
                },
            }
        }
        InstanceSpec::LowRankGlm {
            rank,
            radius,
            norm_x,
            signal,
            noise,
        } => {
            let inst = LowRankGlmInstance::new(d, rank, radius, norm_x, signal, noise, rng)?;
            let rows = inst.sample(n, rng);
            Drawn {
                ds: split(d, cell.n_pub, rows)?,
                hash: short_hash(&inst),
                task: Task::Glm {
                    loss: inst.loss()?,
                    oracle: Box::new(inst),
                },
            }
        }
    })
}

fn sgd_config(cfg: &SweepConfig, privacy: PrivacyParams) -> DpSgdConfig {
    let l = &cfg.learner;
    DpSgdConfig {
        steps: l.steps,
        step_size: l.step_size,
        c0: l.c0,
        clip_norm: l.clip_norm,
        privacy,
    }
}

/// Baselines shared by every loss.
fn run_generic<L: SampleLoss + ?Sized>(
    cfg: &SweepConfig,
    cell: &Cell,
    ds: &SplitDataset,
    loss: &L,
    radius: f64,
    privacy: PrivacyParams,
    rng: &mut RandomStream,
) -> Result<LearnerOutput> {
    match cell.method {
        Method::PubErm => baseline_public_only_erm(ds, loss, radius),
        Method::Erm => erm(ds, loss, radius),
        Method::AllprivDpsgd => baseline_all_private_dpsgd(ds, loss, radius, &sgd_config(cfg, privacy), rng),
        m => Err(Error::Unsupported(format!("method {m} on this instance"))),
    }
}

/// `(metric, aux entries)` of one trial.
fn execute(cfg: &SweepConfig, cell: &Cell, rng: &mut RandomStream) -> Result<(f64, Vec<(String, String)>)> {
    let drawn = draw(&cfg.instance, cell, rng)?;
    let privacy = PrivacyParams::new(cell.epsilon, cfg.delta)?;
    let mut aux = vec![("mu_hash".to_string(), drawn.hash)];
    let ds = &drawn.ds;
    let out = match &drawn.task {
        Task::Mean { mu, radius } => {
            let est = match cell.method {
                Method::PubMean => mean_public_only(ds)?,
                Method::AllprivMean => mean_all_private(ds, *radius, privacy, rng)?,
                m => return Err(Error::Unsupported(format!("method {m} on a mean estimation instance"))),
            };
            return Ok((norm(&sub(&est, mu)), aux));
        }
        Task::Glm { loss, oracle } => {
            let radius = loss.geometry().radius();
            let out = match cell.method {
                Method::Alg1 => alg1_projected_glm(ds, loss, &sgd_config(cfg, privacy), rng)?,
                Method::Alg2 => alg2_cover_expmech(ds, loss, cell.epsilon, cfg.learner.alpha, &cfg.learner.cover, rng)?,
                _ => run_generic(cfg, cell, ds, loss, radius, privacy, rng)?,
            };
            (excess_risk(&out.w_hat, oracle.as_ref())?, out)
        }
        Task::StronglyConvex { loss, oracle } => {
            let out = run_generic(cfg, cell, ds, loss, oracle.radius, privacy, rng)?;
            (excess_risk(&out.w_hat, oracle)?, out)
        }
    };
    let (risk, learner) = out;
    if let Some(k) = learner.meta.k {
        aux.push(("k".into(), k.to_string()));
    }
    if let Some(size) = learner.meta.cover_size {
        aux.push(("cover_size".into(), format!("{size}")));
    }
    Ok((risk, aux))
}

/// Runs trial `t` of `cell`; a pure function of the config, cell and `t`
/// (apart from `runtime_ms` when timing is on).
pub fn run_trial(cfg: &SweepConfig, cell: &Cell, t: usize) -> TrialRecord {
    let global = (cell.index * cfg.trials + t) as u64;
    let spec = SeedSpec::new(cfg.base_seed, global);
    let mut rng = derive_rng(spec);
    let start = Instant::now();
    let result = execute(cfg, cell, &mut rng);
    let runtime_ms = if cfg.timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    let (excess_risk, aux, status) = match result {
        Ok((v, aux)) if v.is_finite() => (v, aux, "ok".to_string()),
        Ok((_, aux)) => (f64::NAN, aux, "error:NonFinite".to_string()),
        Err(e) => (f64::NAN, Vec::new(), format!("error:{}", e.kind())),
    };
    TrialRecord {
        trial: global,
        n_pub: cell.n_pub,
        n_priv: cell.n_priv,
        d: cell.d,
        epsilon: cell.epsilon,
        delta: cfg.delta,
        method: cell.method,
        instance: cfg.instance.name().to_string(),
        excess_risk,
        runtime_ms,
        seed: spec.fingerprint(),
        aux: aux.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";"),
        status,
    }
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn cell_records(cfg: &SweepConfig, cell: &Cell) -> Vec<TrialRecord> {
    (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, cell, t)).collect()
}

/// Every trial of every cell, in global trial order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let cells = cfg.cells();
    with_pool(cfg.threads, || cells.iter().flat_map(|c| cell_records(cfg, c)).collect())
}

/// Like [`run_sweep`], writing each cell's rows to `writer` as soon as the
/// cell finishes. Rows already written survive a later I/O failure.
pub fn run_sweep_to<W: Write + Send>(cfg: &SweepConfig, writer: W) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let cells = cfg.cells();
    with_pool(cfg.threads, || -> Result<Vec<TrialRecord>> {
        let mut out = RecordWriter::new(writer)?;
        let mut all = Vec::with_capacity(cfg.total_trials());
        for cell in &cells {
            let rows = cell_records(cfg, cell);
            for r in &rows {
                out.write(r)?;
            }
            out.flush()?;
            all.extend(rows);
        }
        Ok(all)
    })?
}
