//! Analysis pipeline, reports and the interpreter dump.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::lang::{load, LangError, Program};
use crate::phi::{entry_label, PhiTable};
use crate::race::{build_disproof, disprove_all, emit_smtlib, race_candidates, DisproveConfig, RaceKind, Verdict};
use crate::semantics::{dynamic_races, explore, Limits};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug)]
pub struct AnalyzeConfig {
    pub solver_cmd: Option<String>,
    pub bound: i64,
    pub solver_timeout: Duration,
    /// Sample budget for phase function validation.
    pub phi_samples: usize,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        let d = DisproveConfig::default();
        AnalyzeConfig { solver_cmd: None, bound: d.bound, solver_timeout: d.solver_timeout, phi_samples: 40 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    RaceFree,
    PotentialRaces(usize),
    Unknown(usize),
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::RaceFree => 0,
            Status::PotentialRaces(_) => 2,
            Status::Unknown(_) => 3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiReport {
    pub statement: String,
    pub clock: String,
    pub phi: Option<String>,
    pub validated: bool,
    pub samples: usize,
    pub vacuous: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateReport {
    pub index: usize,
    pub kind: RaceKind,
    pub array: String,
    pub first: String,
    pub second: String,
    pub description: String,
    pub phi_first: Option<String>,
    pub phi_second: Option<String>,
    pub verdict: Verdict,
    pub log: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub parse_ms: f64,
    pub phi_ms: f64,
    pub candidates_ms: f64,
    pub disproof_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub file: String,
    pub status: Status,
    pub phi: Vec<PhiReport>,
    pub candidates: Vec<CandidateReport>,
    pub timings: Timings,
    #[serde(skip)]
    pub smt: Vec<String>,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn analyze_source(name: &str, src: &str, config: &AnalyzeConfig) -> Result<Report, DriverError> {
    let start = Instant::now();
    let p = load(src)?;
    let parsed = Instant::now();
    Ok(analyze_program(name, &p, config, start, parsed))
}

pub fn analyze_file(path: &Path, config: &AnalyzeConfig) -> Result<Report, DriverError> {
    let src = std::fs::read_to_string(path)?;
    analyze_source(&path.display().to_string(), &src, config)
}

fn analyze_program(name: &str, p: &Program, config: &AnalyzeConfig, start: Instant, parsed: Instant) -> Report {
    let t = p.table();
    let phi = PhiTable::build(p, config.phi_samples);
    let phi_done = Instant::now();
    let candidates = race_candidates(p);
    let cand_done = Instant::now();
    let problems: Vec<_> = candidates.iter().map(|c| build_disproof(p, c, &phi)).collect();
    let dc = DisproveConfig { solver_cmd: config.solver_cmd.clone(), bound: config.bound, solver_timeout: config.solver_timeout };
    let outcomes = disprove_all(p, &problems, &dc);
    let end = Instant::now();

    let phi_reports = phi
        .entries
        .values()
        .map(|e| PhiReport {
            statement: entry_label(&t, e.node),
            clock: format!("F{}", e.clock),
            phi: e.poly.as_ref().map(|q| q.to_string()),
            validated: e.validation.passed,
            samples: e.validation.samples,
            vacuous: e.validation.vacuous,
            error: e.error.clone().or_else(|| e.validation.mismatch.clone()),
        })
        .collect();
    let reports: Vec<CandidateReport> = problems
        .iter()
        .zip(outcomes)
        .map(|(d, o)| {
            let c = &d.candidate;
            CandidateReport {
                index: c.index,
                kind: c.kind,
                array: c.a.access.array.clone(),
                first: c.a.label.clone(),
                second: c.b.label.clone(),
                description: c.description.clone(),
                phi_first: d.phi_a.as_ref().map(|q| q.to_string()),
                phi_second: d.phi_b.as_ref().map(|q| q.to_string()),
                verdict: o.verdict,
                log: o.log,
            }
        })
        .collect();
    let witnesses = reports.iter().filter(|r| matches!(r.verdict, Verdict::RaceWitness { .. })).count();
    let open = reports.iter().filter(|r| !r.verdict.is_race_free()).count();
    let status = if witnesses > 0 {
        Status::PotentialRaces(witnesses)
    } else if open > 0 {
        Status::Unknown(open)
    } else {
        Status::RaceFree
    };
    Report {
        file: name.to_string(),
        status,
        phi: phi_reports,
        candidates: reports,
        timings: Timings {
            parse_ms: ms(parsed - start),
            phi_ms: ms(phi_done - parsed),
            candidates_ms: ms(cand_done - phi_done),
            disproof_ms: ms(end - cand_done),
            total_ms: ms(end - start),
        },
        smt: problems.iter().map(emit_smtlib).collect(),
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with timings zeroed, for comparing runs.
    pub fn to_json_stable(&self) -> String {
        let mut r = self.clone();
        r.timings = Timings::default();
        r.to_json()
    }

    /// Write `race_<k>.smt2` for every candidate.
    pub fn write_smt(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (k, s) in self.smt.iter().enumerate() {
            std::fs::write(dir.join(format!("race_{k}.smt2")), s)?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}: {:?}", self.file, self.status);
        for e in &self.phi {
            let shown = e.phi.as_deref().unwrap_or("?");
            let mark = if e.validated { "validated" } else { "unvalidated" };
            let _ = writeln!(s, "  phi {} under {} = {} ({mark}, {} samples)", e.statement, e.clock, shown, e.samples);
        }
        let _ = writeln!(s, "  {} candidate(s)", self.candidates.len());
        for c in &self.candidates {
            let _ = writeln!(s, "  [{}] {}", c.index, c.description);
            let _ = writeln!(s, "      {}", c.verdict);
        }
        let _ = writeln!(s, "  {:.1} ms", self.timings.total_ms);
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InstanceDump {
    pub instance: String,
    /// Clock instance to phase.
    pub phases: BTreeMap<String, u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InterpretDump {
    pub params: BTreeMap<String, i64>,
    pub status: String,
    pub error: Option<String>,
    pub terminated: bool,
    pub instances: Vec<InstanceDump>,
    pub hb_pairs: usize,
    pub clock_steps: BTreeMap<String, u32>,
    pub races: Vec<String>,
    pub traces: String,
    pub states: usize,
    pub advances: u64,
}

impl InterpretDump {
    pub fn is_complete(&self) -> bool {
        self.status == "Complete"
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_complete() {
            0
        } else {
            4
        }
    }
}

pub fn interpret_source(src: &str, params: &BTreeMap<String, i64>, limits: Limits) -> Result<InterpretDump, DriverError> {
    let p = load(src)?;
    let mut dump = InterpretDump {
        params: params.clone(),
        status: "Complete".into(),
        error: None,
        terminated: false,
        instances: Vec::new(),
        hb_pairs: 0,
        clock_steps: BTreeMap::new(),
        races: Vec::new(),
        traces: "0".into(),
        states: 0,
        advances: 0,
    };
    let facts = match explore(&p, params, limits) {
        Ok(f) => f,
        Err(e) => {
            dump.status = if e.is_incomplete() { "Incomplete" } else { "Error" }.into();
            dump.error = Some(e.to_string());
            return Ok(dump);
        }
    };
    dump.terminated = facts.terminated;
    dump.instances = facts
        .instances
        .iter()
        .enumerate()
        .map(|(u, id)| InstanceDump {
            instance: id.to_string(),
            phases: facts
                .phase
                .iter()
                .filter(|((w, _), _)| *w == u)
                .map(|((_, c), ph)| (c.to_string(), *ph))
                .collect(),
        })
        .collect();
    dump.hb_pairs = facts.hb_pair_count();
    dump.clock_steps = facts.clock_steps.iter().map(|(c, n)| (c.to_string(), *n)).collect();
    dump.races = dynamic_races(&p, params, &facts).iter().map(|r| r.to_string()).collect();
    dump.traces = facts.trace_count.to_string();
    dump.states = facts.states;
    dump.advances = facts.advances;
    Ok(dump)
}
