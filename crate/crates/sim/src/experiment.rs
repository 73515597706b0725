//! Monte-Carlo orchestration: local filtering, network fusion and scoring.

use std::fmt;
use std::str::FromStr;

use gcilsm_core::filter::{
    adaptive_birth, extract_estimates, lmb_predict, lmb_update, prior_birth, Measurement,
    MotionModel, Region, SensorModel, UpdateParams,
};
use gcilsm_core::fusion::{fuse_network, with_local_leftovers, NetworkTopology};
use gcilsm_core::matching::{LabelIdentityMatcher, LabelMatcher, RenyiMatcher};
use gcilsm_core::ospa::{ospa, OspaParams};
use gcilsm_core::{LmbDensity, ReductionParams};
use log::debug;
use rayon::prelude::*;

use crate::config::{BirthModel, Feedback, ScenarioConfig};
use crate::error::Result;
use crate::measure::{sensor_rng, simulate_scan};
use crate::truth::{alive_states, cardinality, generate_truth, TruthTrajectory};

/// Where a set of estimates comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// One sensor's own filter.
    Local(usize),
    /// Fusion after divergence-based label matching.
    Lsm,
    /// Fusion pairing equal label names only.
    Naive,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Local(i) => write!(f, "local_{i}"),
            Method::Lsm => f.write_str("lsm"),
            Method::Naive => f.write_str("naive"),
        }
    }
}

/// Which result tables to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodSelection {
    Lsm,
    Naive,
    Local,
    #[default]
    All,
}

impl MethodSelection {
    fn wants_lsm(self) -> bool {
        matches!(self, MethodSelection::Lsm | MethodSelection::All)
    }

    fn wants_naive(self) -> bool {
        matches!(self, MethodSelection::Naive | MethodSelection::All)
    }

    fn wants_local(self) -> bool {
        matches!(self, MethodSelection::Local | MethodSelection::All)
    }
}

impl FromStr for MethodSelection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lsm" => Ok(Self::Lsm),
            "naive" => Ok(Self::Naive),
            "local" => Ok(Self::Local),
            "all" => Ok(Self::All),
            other => Err(format!(
                "unknown method `{other}` (expected lsm, naive, local or all)"
            )),
        }
    }
}

/// Score of one method at one scan of one run. Fused methods average over nodes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScanStat {
    pub ospa: f64,
    pub cardinality: f64,
    pub abs_cardinality_error: f64,
}

/// Per-scan statistics of one run, per method.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub run: u32,
    pub methods: Vec<(Method, Vec<ScanStat>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub scan: u32,
    pub ospa_mean: f64,
    pub ospa_std: f64,
    pub card_mean: f64,
    pub card_truth: usize,
    pub card_abs_err_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodTable {
    pub method: Method,
    pub rows: Vec<ScanRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub runs: u32,
    pub truth_cardinality: Vec<usize>,
    pub tables: Vec<MethodTable>,
}

impl ExperimentResult {
    pub fn table(&self, method: Method) -> Option<&MethodTable> {
        self.tables.iter().find(|t| t.method == method)
    }
}

/// Everything a run needs that does not change between runs.
struct Setup {
    motion: MotionModel,
    sensors: Vec<SensorModel>,
    fovs: Vec<Option<Region>>,
    birth: BirthModel,
    update: UpdateParams,
    reduction: ReductionParams,
    existence_threshold: f64,
    topology: NetworkTopology,
    lsm: RenyiMatcher,
    ospa: OspaParams,
    feedback: Feedback,
    selection: MethodSelection,
    duration: u32,
    seed: u64,
}

#[derive(Debug, Clone, Default)]
struct LocalFilter {
    posterior: LmbDensity,
    /// Adaptive births for the next scan.
    pending_births: LmbDensity,
}

impl LocalFilter {
    fn step(
        &mut self,
        setup: &Setup,
        sensor: usize,
        scan: u32,
        measurements: &[Measurement],
    ) -> Result<()> {
        let model = &setup.sensors[sensor];
        let births = match &setup.birth {
            BirthModel::Adaptive(_) => std::mem::take(&mut self.pending_births),
            BirthModel::Prior(p) => prior_birth(p, scan)?,
        };
        let predicted = lmb_predict(&self.posterior, &setup.motion, &births)?;
        let outcome = lmb_update(&predicted, measurements, model, &setup.update)?;
        self.posterior = outcome.posterior.pruned(setup.existence_threshold);
        if let BirthModel::Adaptive(p) = &setup.birth {
            self.pending_births =
                adaptive_birth(measurements, &outcome.assoc_prob, p, model, scan + 1)?;
        }
        Ok(())
    }
}

fn score(density: &LmbDensity, truth_positions: &[[f64; 2]], params: &OspaParams) -> (f64, usize) {
    let estimates: Vec<[f64; 2]> = extract_estimates(density)
        .iter()
        .map(|e| [e.state[0], e.state[2]])
        .collect();
    (ospa(&estimates, truth_positions, params), estimates.len())
}

fn score_nodes(
    densities: &[LmbDensity],
    truth_positions: &[[f64; 2]],
    params: &OspaParams,
) -> ScanStat {
    let n = densities.len() as f64;
    let mut stat = ScanStat::default();
    for d in densities {
        let (o, c) = score(d, truth_positions, params);
        stat.ospa += o / n;
        stat.cardinality += c as f64 / n;
        stat.abs_cardinality_error += (c as f64 - truth_positions.len() as f64).abs() / n;
    }
    stat
}

/// A bank of local filters whose posteriors are fused with one matcher.
struct FusionBank<M> {
    matcher: M,
    /// Own filters when fused results feed back; `None` fuses the plain local posteriors.
    filters: Option<Vec<LocalFilter>>,
    trace: Vec<ScanStat>,
}

impl<M: LabelMatcher> FusionBank<M> {
    fn new(matcher: M, setup: &Setup) -> Self {
        let filters = (setup.feedback == Feedback::Fused)
            .then(|| vec![LocalFilter::default(); setup.sensors.len()]);
        Self {
            matcher,
            filters,
            trace: Vec::with_capacity(setup.duration as usize),
        }
    }

    fn step(
        &mut self,
        setup: &Setup,
        scan: u32,
        measurements: &[Vec<Measurement>],
        local: &[LocalFilter],
        truth_positions: &[[f64; 2]],
    ) -> Result<()> {
        let posteriors: Vec<LmbDensity> = match &mut self.filters {
            Some(filters) => {
                for (s, f) in filters.iter_mut().enumerate() {
                    f.step(setup, s, scan, &measurements[s])?;
                }
                filters.iter().map(|f| f.posterior.clone()).collect()
            }
            None => local.iter().map(|f| f.posterior.clone()).collect(),
        };
        let fused = fuse_network(
            &posteriors,
            &setup.topology,
            &self.matcher,
            &setup.reduction,
        )?;
        self.trace
            .push(score_nodes(&fused, truth_positions, &setup.ospa));
        if let Some(filters) = &mut self.filters {
            for (f, g) in filters.iter_mut().zip(&fused) {
                f.posterior =
                    with_local_leftovers(g, &f.posterior).pruned(setup.existence_threshold);
            }
        }
        Ok(())
    }
}

fn run_once(setup: &Setup, truth: &[TruthTrajectory], run: u32) -> Result<RunTrace> {
    let n_sensors = setup.sensors.len();
    let mut rngs: Vec<_> = (0..n_sensors)
        .map(|s| sensor_rng(setup.seed, run, s))
        .collect();
    let mut local = vec![LocalFilter::default(); n_sensors];
    let mut local_trace = vec![Vec::with_capacity(setup.duration as usize); n_sensors];
    let mut lsm = setup
        .selection
        .wants_lsm()
        .then(|| FusionBank::new(setup.lsm, setup));
    let mut naive = setup
        .selection
        .wants_naive()
        .then(|| FusionBank::new(LabelIdentityMatcher, setup));

    for scan in 0..setup.duration {
        let states = alive_states(truth, scan);
        let truth_positions: Vec<[f64; 2]> = states.iter().map(|x| [x[0], x[2]]).collect();
        let measurements: Vec<Vec<Measurement>> = (0..n_sensors)
            .map(|s| {
                simulate_scan(
                    &states,
                    &setup.sensors[s],
                    setup.fovs[s].as_ref(),
                    scan,
                    s,
                    &mut rngs[s],
                )
            })
            .collect();

        for (s, f) in local.iter_mut().enumerate() {
            f.step(setup, s, scan, &measurements[s])?;
            local_trace[s].push(score_nodes(
                std::slice::from_ref(&f.posterior),
                &truth_positions,
                &setup.ospa,
            ));
        }
        if let Some(bank) = &mut lsm {
            bank.step(setup, scan, &measurements, &local, &truth_positions)?;
        }
        if let Some(bank) = &mut naive {
            bank.step(setup, scan, &measurements, &local, &truth_positions)?;
        }
    }
    debug!("run {run} finished");

    let mut methods = Vec::new();
    if setup.selection.wants_local() {
        methods.extend(
            local_trace
                .into_iter()
                .enumerate()
                .map(|(s, t)| (Method::Local(s), t)),
        );
    }
    if let Some(bank) = lsm {
        methods.push((Method::Lsm, bank.trace));
    }
    if let Some(bank) = naive {
        methods.push((Method::Naive, bank.trace));
    }
    Ok(RunTrace { run, methods })
}

fn setup(config: &ScenarioConfig, selection: MethodSelection) -> Result<Setup> {
    let sensors: Vec<SensorModel> = config.sensors.iter().map(|s| s.model()).collect();
    for s in &sensors {
        s.validate()?;
    }
    let motion = config.motion_model();
    motion.validate()?;
    let ospa = config.ospa_params();
    ospa.validate()?;
    Ok(Setup {
        motion,
        fovs: config
            .sensors
            .iter()
            .map(|s| s.field_of_view.map(|r| r.to_region()))
            .collect(),
        sensors,
        birth: config.birth.model(),
        update: config.update_params(),
        reduction: config.reduction(),
        existence_threshold: config.filter.existence_threshold,
        topology: config.topology()?,
        lsm: RenyiMatcher(config.match_params()),
        ospa,
        feedback: config.fusion.feedback,
        selection,
        duration: config.duration,
        seed: config.seed,
    })
}

/// Runs every Monte-Carlo run (in parallel) and returns the per-run traces in run order.
pub fn run_traces(config: &ScenarioConfig, selection: MethodSelection) -> Result<Vec<RunTrace>> {
    config.validate()?;
    let setup = setup(config, selection)?;
    let truth = generate_truth(config);
    (0..config.mc_runs)
        .into_par_iter()
        .map(|run| run_once(&setup, &truth, run))
        .collect()
}

/// Monte-Carlo averages per scan and method.
pub fn run_experiment(
    config: &ScenarioConfig,
    selection: MethodSelection,
) -> Result<ExperimentResult> {
    let traces = run_traces(config, selection)?;
    let truth = generate_truth(config);
    Ok(aggregate(&traces, &truth, config.duration))
}

/// Reduces run traces in run-index order.
pub fn aggregate(
    traces: &[RunTrace],
    truth: &[TruthTrajectory],
    duration: u32,
) -> ExperimentResult {
    let truth_cardinality: Vec<usize> = (0..duration).map(|k| cardinality(truth, k)).collect();
    let n = traces.len() as f64;
    let tables = match traces.first() {
        None => Vec::new(),
        Some(first) => first
            .methods
            .iter()
            .enumerate()
            .map(|(m, (method, _))| {
                let rows = (0..duration as usize)
                    .map(|k| {
                        let stats: Vec<&ScanStat> =
                            traces.iter().map(|t| &t.methods[m].1[k]).collect();
                        let ospa_mean = stats.iter().map(|s| s.ospa).sum::<f64>() / n;
                        let var = stats
                            .iter()
                            .map(|s| (s.ospa - ospa_mean).powi(2))
                            .sum::<f64>()
                            / n;
                        ScanRow {
                            scan: k as u32,
                            ospa_mean,
                            ospa_std: var.sqrt(),
                            card_mean: stats.iter().map(|s| s.cardinality).sum::<f64>() / n,
                            card_truth: truth_cardinality[k],
                            card_abs_err_mean: stats
                                .iter()
                                .map(|s| s.abs_cardinality_error)
                                .sum::<f64>()
                                / n,
                        }
                    })
                    .collect();
                MethodTable {
                    method: *method,
                    rows,
                }
            })
            .collect(),
    };
    ExperimentResult {
        runs: traces.len() as u32,
        truth_cardinality,
        tables,
    }
}
