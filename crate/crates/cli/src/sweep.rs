//! Visibility sweeps over the standard Werner scenario.

use qrand_core::moment::{
    di_guessing_from_functional, guessing_with_statistics, known_algebra, HierarchyOptions, MomentMatrixStructure,
    MomentMode,
};
use qrand_core::quantum::{
    standard_alice, standard_bob, standard_werner_statistics, werner_state, BellFunctional, Characterization,
    Scenario,
};
use qrand_core::sdp::{SdpStatus, SolverOptions};
use qrand_core::tomographic::guessing_probability_single;
use qrand_core::{Error, Result};
use rayon::prelude::*;
use std::f64::consts::SQRT_2;

use crate::config::{FunctionalMode, Level, SweepConfig};
use crate::table::{parse_csv, to_csv, Record, TableError};

pub const SWEEP_HEADER: [&str; 8] = ["V", "G_tomo", "Hmin_tomo", "G_1sdi", "Hmin_1sdi", "G_di", "Hmin_di", "status"];
pub const FUNCTIONAL_HEADER: [&str; 5] = ["V", "functional", "G_di", "Hmin_di", "status"];
/// Slack allowed in the ordering `G_DI >= G_1SDI >= G_tomo`.
pub const ORDER_TOL: f64 = 1e-6;

/// Certified value at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelValue {
    pub guessing_probability: f64,
    pub min_entropy: f64,
    pub duality_gap: f64,
    pub status: SdpStatus,
}

impl LevelValue {
    fn new(g: f64, gap: f64, status: SdpStatus) -> Self {
        let g = g.min(1.0);
        Self { guessing_probability: g, min_entropy: -g.log2(), duality_gap: gap, status }
    }

    pub fn is_certified(&self, gap_tol: f64) -> bool {
        self.status == SdpStatus::Optimal && self.duality_gap <= gap_tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    NotRun,
    Done(LevelValue),
    Failed(String),
}

impl Outcome {
    fn from_result(r: Result<LevelValue>) -> Self {
        match r {
            Ok(v) => Outcome::Done(v),
            Err(e) => Outcome::Failed(e.to_string()),
        }
    }

    pub fn value(&self) -> Option<&LevelValue> {
        match self {
            Outcome::Done(v) => Some(v),
            _ => None,
        }
    }

    pub fn guessing(&self) -> Option<f64> {
        self.value().map(|v| v.guessing_probability)
    }

    /// Problem with this entry, if any.
    fn issue(&self, gap_tol: f64) -> Option<String> {
        match self {
            Outcome::NotRun => None,
            Outcome::Failed(_) => Some("failed".into()),
            Outcome::Done(v) if v.is_certified(gap_tol) => None,
            Outcome::Done(v) => Some(format!("{:?}", v.status).to_lowercase()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub v: f64,
    pub tomographic: Outcome,
    pub one_sided: Outcome,
    pub device_independent: Outcome,
}

impl SweepRow {
    fn entries(&self) -> [(&'static str, &Outcome); 3] {
        [("tomo", &self.tomographic), ("1sdi", &self.one_sided), ("di", &self.device_independent)]
    }

    /// Broken links of `G_DI >= G_1SDI >= G_tomo`, each with slack `tol`.
    pub fn ordering_violations(&self, tol: f64) -> Vec<String> {
        let (t, o, d) = (self.tomographic.guessing(), self.one_sided.guessing(), self.device_independent.guessing());
        let mut out = Vec::new();
        let mut link = |hi: Option<f64>, lo: Option<f64>, name: &str| {
            if let (Some(hi), Some(lo)) = (hi, lo) {
                if hi < lo - tol {
                    out.push(name.to_string());
                }
            }
        };
        link(d, o, "di<1sdi");
        link(o, t, "1sdi<tomo");
        if o.is_none() {
            link(d, t, "di<tomo");
        }
        out
    }

    /// `ok`, or the problems found, `;`-separated.
    pub fn status(&self, gap_tol: f64) -> String {
        let mut issues: Vec<String> =
            self.entries().iter().filter_map(|(name, e)| e.issue(gap_tol).map(|i| format!("{name}={i}"))).collect();
        issues.extend(self.ordering_violations(ORDER_TOL).into_iter().map(|v| format!("order={v}")));
        if issues.is_empty() {
            "ok".into()
        } else {
            issues.join(";")
        }
    }

    pub fn record(&self, gap_tol: f64) -> Record {
        let mut values = vec![Some(self.v)];
        for (_, e) in self.entries() {
            let v = e.value();
            values.push(v.map(|v| v.guessing_probability));
            values.push(v.map(|v| v.min_entropy));
        }
        Record::rounded(values, self.status(gap_tol))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalRow {
    pub v: f64,
    pub functional_value: f64,
    pub outcome: Outcome,
}

impl FunctionalRow {
    pub fn status(&self, gap_tol: f64) -> String {
        self.outcome.issue(gap_tol).map_or_else(|| "ok".into(), |i| format!("di={i}"))
    }

    pub fn record(&self, gap_tol: f64) -> Record {
        let v = self.outcome.value();
        Record::rounded(
            vec![Some(self.v), Some(self.functional_value), v.map(|v| v.guessing_probability), v.map(|v| v.min_entropy)],
            self.status(gap_tol),
        )
    }
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j.max(1));
    }
    b.build().map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

fn hierarchy(config: &SweepConfig) -> HierarchyOptions {
    HierarchyOptions { level: config.level, mode: MomentMode::Real, solver: config.solver }
}

/// Tomographic guessing probability of the target pair on the Werner state.
pub fn tomographic_point(v: f64, target: (usize, usize), solver: &SolverOptions) -> Result<LevelValue> {
    let m = standard_alice()[target.0].product(&standard_bob()[target.1]);
    let r = guessing_probability_single(&werner_state(v)?, &m, solver)?;
    Ok(LevelValue::new(r.guessing_probability, r.duality_gap, r.status))
}

/// Structures reused across the grid.
struct Structures {
    one_sided: Option<MomentMatrixStructure>,
    device_independent: Option<MomentMatrixStructure>,
}

fn structures(config: &SweepConfig) -> Result<Structures> {
    let one_sided = if config.levels.contains(&Level::OneSided) {
        let scenario = Scenario::new(standard_werner_statistics(1.0)?, Characterization::OneSided, Some(standard_bob()))?;
        let alg = known_algebra(&scenario)?;
        Some(MomentMatrixStructure::new(2, 4, config.level, Some(&alg), MomentMode::Real)?)
    } else {
        None
    };
    let device_independent = if config.levels.contains(&Level::DeviceIndependent) {
        Some(MomentMatrixStructure::new(2, 4, config.level, None, MomentMode::Real)?)
    } else {
        None
    };
    Ok(Structures { one_sided, device_independent })
}

fn moment_point(
    structure: &Option<MomentMatrixStructure>,
    v: f64,
    config: &SweepConfig,
) -> Outcome {
    let Some(st) = structure else { return Outcome::NotRun };
    Outcome::from_result((|| {
        let stats = standard_werner_statistics(v)?;
        let b = guessing_with_statistics(st, &stats, config.target, &config.solver)?;
        Ok(LevelValue::new(b.guessing_probability, b.duality_gap, b.status))
    })())
}

/// Full-statistics sweep at every selected level. Points are independent;
/// failures are recorded in the row and the sweep continues.
pub fn run_sweep(config: &SweepConfig, jobs: Option<usize>) -> Result<Vec<SweepRow>> {
    config.validate().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    if config.functional != FunctionalMode::FullStatistics {
        return Err(Error::InvalidArgument("functional modes run through run_functional_sweep".into()));
    }
    let st = structures(config)?;
    let rows = pool(jobs)?.install(|| {
        config
            .grid
            .values()
            .par_iter()
            .map(|&v| SweepRow {
                v,
                tomographic: if config.levels.contains(&Level::Tomographic) {
                    Outcome::from_result(tomographic_point(v, config.target, &config.solver))
                } else {
                    Outcome::NotRun
                },
                one_sided: moment_point(&st.one_sided, v, config),
                device_independent: moment_point(&st.device_independent, v, config),
            })
            .collect()
    });
    Ok(rows)
}

/// The functional of a mode and its Werner value `scale * V`.
pub fn functional_of(mode: FunctionalMode) -> Option<(BellFunctional, f64)> {
    match mode {
        FunctionalMode::FullStatistics => None,
        FunctionalMode::Chsh => Some((BellFunctional::standard_chsh(), 2.0 * SQRT_2)),
        FunctionalMode::Chsh3 => Some((BellFunctional::standard_chsh3(), 2.0 * SQRT_2 + 1.0)),
    }
}

/// Device-independent bound from the functional value alone, at each `V`.
pub fn run_functional_sweep(config: &SweepConfig, jobs: Option<usize>) -> Result<Vec<FunctionalRow>> {
    config.validate().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let (f, scale) = functional_of(config.functional)
        .ok_or_else(|| Error::InvalidArgument("functional sweep needs mode chsh or chsh3".into()))?;
    let opts = hierarchy(config);
    let rows = pool(jobs)?.install(|| {
        config
            .grid
            .values()
            .par_iter()
            .map(|&v| {
                let value = scale * v;
                let outcome = Outcome::from_result(
                    di_guessing_from_functional(&f, value, config.target, &opts)
                        .map(|b| LevelValue::new(b.guessing_probability, b.duality_gap, b.status)),
                );
                FunctionalRow { v, functional_value: value, outcome }
            })
            .collect()
    });
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow], gap_tol: f64) -> String {
    to_csv(&SWEEP_HEADER, &rows.iter().map(|r| r.record(gap_tol)).collect::<Vec<_>>())
}

pub fn functional_csv(rows: &[FunctionalRow], gap_tol: f64) -> String {
    to_csv(&FUNCTIONAL_HEADER, &rows.iter().map(|r| r.record(gap_tol)).collect::<Vec<_>>())
}

pub fn parse_sweep_csv(text: &str) -> std::result::Result<Vec<Record>, TableError> {
    parse_csv(&SWEEP_HEADER, text)
}

pub fn parse_functional_csv(text: &str) -> std::result::Result<Vec<Record>, TableError> {
    parse_csv(&FUNCTIONAL_HEADER, text)
}

/// First grid value with `H_min > threshold`, scanning upward.
pub fn onset(rows: &[FunctionalRow], threshold: f64) -> Option<f64> {
    rows.iter().find(|r| r.outcome.value().is_some_and(|v| v.min_entropy > threshold)).map(|r| r.v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Grid;

    fn config(grid: Vec<f64>, levels: Vec<Level>) -> SweepConfig {
        SweepConfig { grid: Grid::new(grid).unwrap(), levels, ..Default::default() }
    }

    #[test]
    fn anchors_at_both_ends() {
        let all = vec![Level::Tomographic, Level::OneSided, Level::DeviceIndependent];
        let rows = run_sweep(&config(vec![0.0, 0.5, 1.0], all), Some(1)).unwrap();
        let gap = SolverOptions::default().gap_tol;
        for r in &rows {
            assert_eq!(r.status(gap), "ok", "V = {}: {:?}", r.v, r);
        }
        assert!((rows[0].one_sided.value().unwrap().min_entropy).abs() < 1e-6);
        assert!((rows[1].device_independent.value().unwrap().min_entropy).abs() < 1e-6);
        for e in [&rows[2].tomographic, &rows[2].one_sided, &rows[2].device_independent] {
            assert!((e.value().unwrap().min_entropy - 2.0).abs() < 0.01);
        }
    }

    #[test]
    fn skipped_levels_leave_empty_fields() {
        let rows = run_sweep(&config(vec![0.8], vec![Level::Tomographic]), Some(1)).unwrap();
        let csv = sweep_csv(&rows, 1e-7);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.ends_with(",,,,ok"), "{line}");
        let parsed = parse_sweep_csv(&csv).unwrap();
        assert_eq!(parsed[0], rows[0].record(1e-7));
    }

    #[test]
    fn failures_are_reported_per_entry() {
        let row = SweepRow {
            v: 0.5,
            tomographic: Outcome::Failed("boom".into()),
            one_sided: Outcome::Done(LevelValue::new(0.9, 1e-3, SdpStatus::MaxIterations)),
            device_independent: Outcome::Done(LevelValue::new(0.8, 0.0, SdpStatus::Optimal)),
        };
        assert_eq!(row.status(1e-7), "tomo=failed;1sdi=maxiterations;order=di<1sdi");
    }

    #[test]
    fn functional_mode_is_required() {
        let c = config(vec![0.5], vec![Level::DeviceIndependent]);
        assert!(run_functional_sweep(&c, Some(1)).is_err());
        let f = SweepConfig { functional: FunctionalMode::Chsh, ..c.clone() };
        assert!(run_sweep(&f, Some(1)).is_err());
        let rows = run_functional_sweep(&SweepConfig { target: (1, 2), ..f }, Some(1)).unwrap();
        assert!((rows[0].functional_value - SQRT_2).abs() < 1e-15);
        assert!(rows[0].outcome.value().unwrap().min_entropy < 1e-6);
    }
}
