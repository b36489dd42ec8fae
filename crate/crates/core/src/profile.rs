//! Benchmark records and performance profiles.
//!
//! For problems `p`, solvers `s` and solve times `t_{p,s}` (failures count
//! as `+∞`), the relative ratio is `r_{p,s} = t_{p,s} / min_s t_{p,s}` and
//! the profiles are the step functions
//! `ρʳ_s(τ) = |{p : r_{p,s} ≤ τ}| / N_P` and `ρᵃ_s(τ) = |{p : t_{p,s} ≤ τ}| / N_P`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ipm::Status;

/// Status string of a run that raised an error before finishing.
pub const FAILED: &str = "FAIL";

/// One benchmark run. CSV columns: `problem,config,time_s,status,objective,iterations`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub problem: String,
    pub config: String,
    /// Wall-clock solve time in seconds.
    pub time_s: f64,
    /// `OPT`, `PINF`, `DINF`, `MAXITER`, `NUMERR` or [`FAILED`].
    pub status: String,
    pub objective: f64,
    pub iterations: usize,
}

impl BenchRecord {
    /// Runs ending in a definite answer count as solved.
    pub fn solved(&self) -> bool {
        matches!(
            self.status.parse::<Status>(),
            Ok(Status::Optimal | Status::PrimalInfeasible | Status::DualInfeasible)
        )
    }

    /// Time entering the profiles: `+∞` for failures.
    pub fn profile_time(&self) -> f64 {
        if self.solved() {
            self.time_s
        } else {
            f64::INFINITY
        }
    }
}

/// A profile curve kept as the sorted per-problem values, so it can be
/// evaluated exactly at any `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub solver: String,
    values: Vec<f64>,
}

impl ProfileCurve {
    fn new(solver: String, mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        ProfileCurve { solver, values }
    }

    /// `ρ(τ)`.
    pub fn eval(&self, tau: f64) -> f64 {
        self.values.partition_point(|&v| v <= tau) as f64 / self.values.len() as f64
    }

    /// `(τ, ρ(τ))` at every finite breakpoint.
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &v in self.values.iter().filter(|v| v.is_finite()) {
            if out.last().map(|&(t, _)| t) != Some(v) {
                out.push((v, self.eval(v)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profiles {
    pub problems: Vec<String>,
    pub relative: Vec<ProfileCurve>,
    pub absolute: Vec<ProfileCurve>,
}

/// Relative and absolute performance profiles. Repeated runs of one
/// (problem, config) pair keep the fastest solved time.
pub fn perf_profiles(records: &[BenchRecord]) -> Result<Profiles> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let problems: BTreeSet<&str> = records.iter().map(|r| r.problem.as_str()).collect();
    let solvers: BTreeSet<&str> = records.iter().map(|r| r.config.as_str()).collect();
    let mut t: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for r in records {
        let e = t.entry((r.problem.as_str(), r.config.as_str())).or_insert(f64::INFINITY);
        *e = e.min(r.profile_time());
    }
    for p in &problems {
        for s in &solvers {
            if !t.contains_key(&(*p, *s)) {
                return Err(Error::InvalidParameters(format!("no record for problem {p} with config {s}")));
            }
        }
    }
    let best: BTreeMap<&str, f64> = problems
        .iter()
        .map(|&p| (p, solvers.iter().map(|&s| t[&(p, s)]).fold(f64::INFINITY, f64::min)))
        .collect();
    let mut relative = Vec::new();
    let mut absolute = Vec::new();
    for &s in &solvers {
        let times: Vec<f64> = problems.iter().map(|&p| t[&(p, s)]).collect();
        let ratios = problems
            .iter()
            .zip(&times)
            .map(|(&p, &tp)| if tp.is_finite() { tp / best[p] } else { f64::INFINITY })
            .collect();
        relative.push(ProfileCurve::new(s.to_owned(), ratios));
        absolute.push(ProfileCurve::new(s.to_owned(), times));
    }
    Ok(Profiles { problems: problems.into_iter().map(str::to_owned).collect(), relative, absolute })
}

pub fn write_records<W: Write>(w: W, records: &[BenchRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(r).deserialize().map(|r| r.map_err(csv_err)).collect()
}

#[derive(Serialize)]
struct CurveRow<'a> {
    kind: &'a str,
    solver: &'a str,
    tau: f64,
    rho: f64,
}

/// Curve breakpoints as CSV: `kind,solver,tau,rho` with `kind` one of
/// `relative` or `absolute`.
pub fn write_profiles<W: Write>(w: W, profiles: &Profiles) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for (kind, curves) in [("relative", &profiles.relative), ("absolute", &profiles.absolute)] {
        for c in curves {
            for (tau, rho) in c.breakpoints() {
                wr.serialize(CurveRow { kind, solver: &c.solver, tau, rho }).map_err(csv_err)?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Malformed(format!("csv: {e}"))
}
