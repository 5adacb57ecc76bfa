//! Monte Carlo participation sweeps.
//!
//! A trial draws a population, activates a fraction of it, builds the
//! delegation network, disseminates power and measures how far the network
//! decision lands from the full-participation mean. A sweep repeats trials
//! over a grid of participation fractions for several topologies.

use rayon::prelude::*;

use crate::aggregate::{
    decision_error, k0_decision, network_decision, perfect_decision, DecisionMode,
};
use crate::error::{Error, Result};
use crate::network::{
    build_network, generate_population, participant_count, set_activity, Member, NetworkModel,
    TopologyConfig,
};
use crate::power::disseminate;

pub const DEFAULT_POPULATION: usize = 1000;
pub const DEFAULT_TRIALS: usize = 100;

/// 5%, 10%, ..., 100%.
pub fn default_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 20.0).collect()
}

/// The four topologies compared by default.
pub fn default_topologies() -> Vec<TopologyConfig> {
    ["k0", "k1d1", "k3dinf", "full"]
        .iter()
        .map(|s| s.parse().expect("built-in topology label"))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub population: usize,
    /// Strictly increasing fractions in (0, 1].
    pub participation_grid: Vec<f64>,
    pub trials: usize,
    pub topologies: Vec<TopologyConfig>,
    pub master_seed: u64,
    pub decision_mode: DecisionMode,
    /// Reuse one population for every trial instead of redrawing opinions.
    pub fixed_population: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            population: DEFAULT_POPULATION,
            participation_grid: default_grid(),
            trials: DEFAULT_TRIALS,
            topologies: default_topologies(),
            master_seed: 0,
            decision_mode: DecisionMode::Literal,
            fixed_population: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::invalid("population must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.topologies.is_empty() {
            return Err(Error::invalid("no topologies given"));
        }
        if self.participation_grid.is_empty() {
            return Err(Error::invalid("empty participation grid"));
        }
        if self
            .participation_grid
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::invalid(
                "participation grid must be strictly increasing",
            ));
        }
        for &f in &self.participation_grid {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid(format!("participation {f} outside (0, 1]")));
            }
            if participant_count(f, self.population) == 0 {
                return Err(Error::invalid(format!(
                    "participation {f} leaves no active member in a population of {}",
                    self.population
                )));
            }
        }
        for t in &self.topologies {
            t.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub topology: String,
    pub participation: f64,
    pub mean_error: f64,
    pub std_error: f64,
    pub mean_stranded_fraction: f64,
    pub trials: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub error: f64,
    pub stranded_fraction: f64,
    pub decision: f64,
    pub perfect: f64,
}

/// SplitMix64 finalizer. A bijection on `u64`.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed for the `index`-th trial of a sweep. Distinct indices always give
/// distinct seeds.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    mix(master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

fn sub_seed(seed: u64, stream: u64) -> u64 {
    mix(seed ^ mix(stream))
}

const POPULATION_STREAM: u64 = 1;
const ACTIVITY_STREAM: u64 = 2;
const NETWORK_STREAM: u64 = 3;

/// One trial on a freshly drawn population of `population` members.
pub fn run_trial(
    population: usize,
    topology: &TopologyConfig,
    fraction: f64,
    seed: u64,
    mode: DecisionMode,
) -> Result<TrialOutcome> {
    let members = generate_population(population, sub_seed(seed, POPULATION_STREAM))?;
    run_trial_on(&members, topology, fraction, seed, mode)
}

/// One trial on a given population; activity and network randomness come
/// from `seed`.
pub fn run_trial_on(
    members: &[Member],
    topology: &TopologyConfig,
    fraction: f64,
    seed: u64,
    mode: DecisionMode,
) -> Result<TrialOutcome> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "participation {fraction} outside (0, 1]"
        )));
    }
    let members = set_activity(members, fraction, sub_seed(seed, ACTIVITY_STREAM))?;
    if !members.iter().any(|m| m.active) {
        return Err(Error::NoDecision(format!(
            "participation {fraction} leaves no active member"
        )));
    }
    let network = build_network(&members, topology, sub_seed(seed, NETWORK_STREAM))?;
    let power = disseminate(&network, topology.depth)?;
    let decision = match topology.model {
        NetworkModel::K0 => k0_decision(&members)?,
        _ => network_decision(&power, &members, mode)?,
    };
    let perfect = perfect_decision(&members)?;
    Ok(TrialOutcome {
        error: decision_error(decision.value, perfect),
        stranded_fraction: power.stranded / members.len() as f64,
        decision: decision.value,
        perfect,
    })
}

/// Mean and sample (n - 1) standard deviation; the deviation of a single
/// value is 0.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run every (topology, fraction, trial) cell. Records come out in
/// (topology, fraction) order regardless of scheduling.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let fractions = config.participation_grid.len();
    let trials = config.trials;
    let cells = config.topologies.len() * fractions * trials;
    let fixed = if config.fixed_population {
        Some(generate_population(
            config.population,
            sub_seed(config.master_seed, POPULATION_STREAM),
        )?)
    } else {
        None
    };

    let outcomes: Vec<TrialOutcome> = (0..cells)
        .into_par_iter()
        .map(|index| {
            let topology = &config.topologies[index / (fractions * trials)];
            let fraction = config.participation_grid[(index / trials) % fractions];
            let seed = trial_seed(config.master_seed, index as u64);
            match &fixed {
                Some(members) => {
                    run_trial_on(members, topology, fraction, seed, config.decision_mode)
                }
                None => run_trial(
                    config.population,
                    topology,
                    fraction,
                    seed,
                    config.decision_mode,
                ),
            }
        })
        .collect::<Result<_>>()?;

    Ok(outcomes
        .chunks(trials)
        .enumerate()
        .map(|(cell, chunk)| {
            let errors: Vec<f64> = chunk.iter().map(|o| o.error).collect();
            let (mean_error, std_error) = mean_and_std(&errors);
            SweepRecord {
                topology: config.topologies[cell / fractions].label(),
                participation: config.participation_grid[cell % fractions],
                mean_error,
                std_error,
                mean_stranded_fraction: chunk.iter().map(|o| o.stranded_fraction).sum::<f64>()
                    / trials as f64,
                trials,
            }
        })
        .collect())
}

/// Records of one topology, in grid order.
#[derive(Clone, Debug, PartialEq)]
pub struct TopologyCurve {
    pub topology: String,
    pub points: Vec<SweepRecord>,
}

impl TopologyCurve {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|r| r.participation).collect()
    }

    /// Trapezoidal area under the mean-error curve.
    pub fn auc(&self) -> f64 {
        trapezoid(
            &self.grid(),
            &self.points.iter().map(|r| r.mean_error).collect::<Vec<_>>(),
        )
    }

    /// Trapezoidal area under the standard-deviation curve, the half-width
    /// of the AUC's ±1 std band.
    pub fn auc_std(&self) -> f64 {
        trapezoid(
            &self.grid(),
            &self.points.iter().map(|r| r.std_error).collect::<Vec<_>>(),
        )
    }

    pub fn at(&self, participation: f64) -> Option<&SweepRecord> {
        self.points
            .iter()
            .find(|r| (r.participation - participation).abs() < 1e-9)
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}

/// Split records into per-topology curves, in order of first appearance.
pub fn curves(records: &[SweepRecord]) -> Vec<TopologyCurve> {
    let mut out: Vec<TopologyCurve> = Vec::new();
    for r in records {
        match out.iter_mut().find(|c| c.topology == r.topology) {
            Some(curve) => curve.points.push(r.clone()),
            None => out.push(TopologyCurve {
                topology: r.topology.clone(),
                points: vec![r.clone()],
            }),
        }
    }
    for curve in &mut out {
        curve
            .points
            .sort_by(|a, b| a.participation.total_cmp(&b.participation));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct FractionRanking {
    pub participation: f64,
    /// `(topology, mean_error)`, best first.
    pub ranking: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AucEntry {
    pub topology: String,
    pub auc: f64,
    pub auc_std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub per_fraction: Vec<FractionRanking>,
    /// Best (smallest area) first.
    pub by_auc: Vec<AucEntry>,
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
}

/// Rank topologies per participation level and by error AUC. Ties keep
/// label order.
pub fn compare_topologies(records: &[SweepRecord]) -> Result<Comparison> {
    let curves = curves(records);
    let Some(first) = curves.first() else {
        return Err(Error::invalid("no sweep records"));
    };
    let grid = first.grid();
    for c in &curves {
        if !same_grid(&grid, &c.grid()) {
            return Err(Error::invalid(format!(
                "topology '{}' was swept over a different grid than '{}'",
                c.topology, first.topology
            )));
        }
    }

    let by_error =
        |a: &(String, f64), b: &(String, f64)| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0));
    let per_fraction = grid
        .iter()
        .enumerate()
        .map(|(i, &participation)| {
            let mut ranking: Vec<(String, f64)> = curves
                .iter()
                .map(|c| (c.topology.clone(), c.points[i].mean_error))
                .collect();
            ranking.sort_by(by_error);
            FractionRanking {
                participation,
                ranking,
            }
        })
        .collect();

    let mut by_auc: Vec<AucEntry> = curves
        .iter()
        .map(|c| AucEntry {
            topology: c.topology.clone(),
            auc: c.auc(),
            auc_std: c.auc_std(),
        })
        .collect();
    by_auc.sort_by(|a, b| {
        a.auc
            .total_cmp(&b.auc)
            .then_with(|| a.topology.cmp(&b.topology))
    });
    Ok(Comparison {
        per_fraction,
        by_auc,
    })
}

/// Whether two topologies' mean errors sit inside each other's ±1 std band
/// at one participation level.
#[derive(Clone, Debug, PartialEq)]
pub struct BandCheck {
    pub participation: f64,
    pub mean_a: f64,
    pub std_a: f64,
    pub mean_b: f64,
    pub std_b: f64,
}

impl BandCheck {
    pub fn gap(&self) -> f64 {
        (self.mean_a - self.mean_b).abs()
    }

    pub fn agrees(&self) -> bool {
        self.gap() <= self.std_a && self.gap() <= self.std_b
    }
}

pub fn band_agreement(records: &[SweepRecord], a: &str, b: &str) -> Result<Vec<BandCheck>> {
    let curves = curves(records);
    let find = |label: &str| {
        curves
            .iter()
            .find(|c| c.topology == label)
            .ok_or_else(|| Error::invalid(format!("no records for topology '{label}'")))
    };
    let (ca, cb) = (find(a)?, find(b)?);
    if !same_grid(&ca.grid(), &cb.grid()) {
        return Err(Error::invalid(format!(
            "'{a}' and '{b}' use different grids"
        )));
    }
    Ok(ca
        .points
        .iter()
        .zip(&cb.points)
        .map(|(ra, rb)| BandCheck {
            participation: ra.participation,
            mean_a: ra.mean_error,
            std_a: ra.std_error,
            mean_b: rb.mean_error,
            std_b: rb.std_error,
        })
        .collect())
}
