//! Parameter sweeps over SNR or link budget, CSV output, and the
//! self-verification suite.

mod verify;

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::numerics::SolverSettings;
use crate::{mmse, qci, tci, upper_bound};

pub use verify::{verify, CheckOutcome, VerifyHooks, VerifyReport};

/// A bound that can be evaluated at a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    UpperBound,
    /// Quantized channel inversion with the given number of levels.
    Qci(usize),
    Tci,
    Mmse,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::UpperBound,
        Scheme::Qci(2),
        Scheme::Qci(4),
        Scheme::Qci(8),
        Scheme::Tci,
        Scheme::Mmse,
    ];

    /// Name of the diagnostic column that follows the rate columns.
    pub fn diagnostic_name(self) -> String {
        match self {
            Scheme::UpperBound => "ub_residual".into(),
            Scheme::Qci(j) => format!("qci_J{j}_slack"),
            Scheme::Tci => "tci_threshold".into(),
            Scheme::Mmse => "mmse_halfwidth".into(),
        }
    }

    /// Evaluates the scheme at one configuration.
    pub fn evaluate(self, config: &SystemConfig, settings: &SolverSettings) -> Result<BoundResult> {
        let (rate, diagnostic, note) = match self {
            Scheme::UpperBound => {
                let ub = upper_bound::upper_bound(config, settings)?;
                (ub.rate, ub.constraint_residual, None)
            }
            Scheme::Qci(levels) => {
                let grid = qci::build_grid(levels, config)?;
                let alloc = qci::optimize_allocation(&grid, config, settings)?;
                let slack = config
                    .budgets()
                    .iter()
                    .zip(&alloc.c)
                    .map(|(c, row)| {
                        let spent: f64 = row.iter().zip(&grid.probs).map(|(x, p)| x * p).sum();
                        c - grid.header_bits - spent
                    })
                    .fold(f64::INFINITY, f64::min);
                (alloc.lower_bound, slack, alloc.diagnostic)
            }
            Scheme::Tci => {
                let best = tci::tci_best(config, settings)?;
                (best.rate, best.threshold(), None)
            }
            Scheme::Mmse => {
                let result = mmse::mmse_rate(config, settings)?;
                (result.rate, result.mc_halfwidth, result.diagnostic)
            }
        };
        Ok(BoundResult {
            scheme: self,
            rate,
            diagnostic,
            note,
        })
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::UpperBound => f.write_str("ub"),
            Scheme::Qci(j) => write!(f, "qci_J{j}"),
            Scheme::Tci => f.write_str("tci"),
            Scheme::Mmse => f.write_str("mmse"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let name = s.trim().to_ascii_lowercase();
        match name.as_str() {
            "ub" => Ok(Scheme::UpperBound),
            "tci" => Ok(Scheme::Tci),
            "mmse" => Ok(Scheme::Mmse),
            _ => name
                .strip_prefix("qci_j")
                .and_then(|j| j.parse().ok())
                .filter(|&j: &usize| j >= 2)
                .map(Scheme::Qci)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Parses a comma-separated scheme list; `all` selects every scheme.
pub fn parse_schemes(list: &str) -> Result<Vec<Scheme>> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(Scheme::ALL.to_vec());
    }
    let mut schemes = Vec::new();
    for item in list.split(',').filter(|s| !s.trim().is_empty()) {
        let scheme: Scheme = item.parse()?;
        if !schemes.contains(&scheme) {
            schemes.push(scheme);
        }
    }
    if schemes.is_empty() {
        return Err(Error::InvalidArgument("no schemes selected".into()));
    }
    Ok(schemes)
}

/// One scheme's value at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub scheme: Scheme,
    pub rate: f64,
    /// Water-level residual, allocation slack, chosen threshold or MC
    /// half-width, depending on the scheme.
    pub diagnostic: f64,
    pub note: Option<String>,
}

/// Inclusive arithmetic range `start, start + step, …, <= stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let range = Range { start, stop, step };
        range.validate()?;
        Ok(range)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidArgument("range bounds must be finite".into()));
        }
        if !(self.step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "range step must be positive, got {}",
                self.step
            )));
        }
        if self.start > self.stop {
            return Err(Error::InvalidArgument(format!(
                "range start {} exceeds stop {}",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Range {
    type Err = Error;

    /// `start:stop:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad range component '{p}' in '{s}'")))
        };
        match parts.as_slice() {
            [a, b, c] => Range::new(parse(a)?, parse(b)?, parse(c)?),
            _ => Err(Error::InvalidArgument(format!(
                "range must look like start:stop:step, got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Snr,
    Budget,
    Single,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub mode: SweepMode,
    pub snr_db_range: Range,
    pub budget_range: Range,
    /// Budget of relay 1, and of both relays unless `fixed_c2` is set.
    pub fixed_c: f64,
    pub fixed_c2: Option<f64>,
    pub fixed_snr_db: f64,
    pub schemes: Vec<Scheme>,
    pub settings: SolverSettings,
    pub output_path: Option<PathBuf>,
}

/// A configuration in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub budgets: [f64; 2],
}

impl SweepPoint {
    pub fn config(&self) -> Result<SystemConfig> {
        SystemConfig::from_snr_db(self.snr_db, self.budgets[0], self.budgets[1])
    }
}

impl SweepSpec {
    /// Rate versus SNR from 0 to 60 dB in 2 dB steps with `C = 10`.
    pub fn fig2(settings: SolverSettings) -> Self {
        SweepSpec {
            mode: SweepMode::Snr,
            snr_db_range: Range {
                start: 0.0,
                stop: 60.0,
                step: 2.0,
            },
            budget_range: Range {
                start: 10.0,
                stop: 10.0,
                step: 1.0,
            },
            fixed_c: 10.0,
            fixed_c2: None,
            fixed_snr_db: 40.0,
            schemes: Scheme::ALL.to_vec(),
            settings,
            output_path: None,
        }
    }

    /// Rate versus `C` from 0 to 25 bits at 40 dB.
    pub fn fig3(settings: SolverSettings) -> Self {
        SweepSpec {
            mode: SweepMode::Budget,
            snr_db_range: Range {
                start: 40.0,
                stop: 40.0,
                step: 1.0,
            },
            budget_range: Range {
                start: 0.0,
                stop: 25.0,
                step: 1.0,
            },
            fixed_c: 10.0,
            fixed_c2: None,
            fixed_snr_db: 40.0,
            schemes: Scheme::ALL.to_vec(),
            settings,
            output_path: None,
        }
    }

    pub fn preset(name: &str, settings: SolverSettings) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "fig2" => Ok(Self::fig2(settings)),
            "fig3" => Ok(Self::fig3(settings)),
            _ => Err(Error::InvalidArgument(format!(
                "unknown preset '{name}', expected fig2 or fig3"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.settings.validate()?;
        if self.schemes.is_empty() {
            return Err(Error::InvalidArgument("no schemes selected".into()));
        }
        match self.mode {
            SweepMode::Snr => self.snr_db_range.validate()?,
            SweepMode::Budget => self.budget_range.validate()?,
            SweepMode::Single => {}
        }
        for point in self.points() {
            point.config()?;
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let fixed = [self.fixed_c, self.fixed_c2.unwrap_or(self.fixed_c)];
        match self.mode {
            SweepMode::Snr => self
                .snr_db_range
                .values()
                .into_iter()
                .map(|snr_db| SweepPoint {
                    snr_db,
                    budgets: fixed,
                })
                .collect(),
            SweepMode::Budget => self
                .budget_range
                .values()
                .into_iter()
                .map(|c| SweepPoint {
                    snr_db: self.fixed_snr_db,
                    budgets: [c, c],
                })
                .collect(),
            SweepMode::Single => vec![SweepPoint {
                snr_db: self.fixed_snr_db,
                budgets: fixed,
            }],
        }
    }
}

/// One row of a sweep: the point and each scheme's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    /// Same order as the spec's schemes; `Err` holds the error message.
    pub results: Vec<std::result::Result<BoundResult, String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub schemes: Vec<Scheme>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    fn asymmetric(&self) -> bool {
        self.rows.iter().any(|r| r.point.budgets[0] != r.point.budgets[1])
    }

    pub fn header(&self) -> Vec<String> {
        let mut header = vec!["rho_db".to_string()];
        if self.asymmetric() {
            header.extend(["c1_bits".to_string(), "c2_bits".to_string()]);
        } else {
            header.push("c_bits".into());
        }
        header.extend(self.schemes.iter().map(|s| s.to_string()));
        header.extend(self.schemes.iter().map(|s| s.diagnostic_name()));
        header
    }

    /// Rates of one scheme down the sweep; `None` where it failed.
    pub fn rates(&self, scheme: Scheme) -> Option<Vec<Option<f64>>> {
        self.column(scheme, |r| r.rate)
    }

    pub fn diagnostics(&self, scheme: Scheme) -> Option<Vec<Option<f64>>> {
        self.column(scheme, |r| r.diagnostic)
    }

    fn column(&self, scheme: Scheme, pick: fn(&BoundResult) -> f64) -> Option<Vec<Option<f64>>> {
        let col = self.schemes.iter().position(|&s| s == scheme)?;
        Some(
            self.rows
                .iter()
                .map(|row| row.results[col].as_ref().ok().map(pick))
                .collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let asymmetric = self.asymmetric();
        writeln!(out, "{}", self.header().join(","))?;
        for row in &self.rows {
            let mut cells = vec![format_sig(row.point.snr_db)];
            cells.push(format_sig(row.point.budgets[0]));
            if asymmetric {
                cells.push(format_sig(row.point.budgets[1]));
            }
            let cell = |r: &std::result::Result<BoundResult, String>, pick: fn(&BoundResult) -> f64| {
                r.as_ref().map(|b| format_sig(pick(b))).unwrap_or_default()
            };
            cells.extend(row.results.iter().map(|r| cell(r, |b| b.rate)));
            cells.extend(row.results.iter().map(|r| cell(r, |b| b.diagnostic)));
            writeln!(out, "{}", cells.join(","))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Renders `x` with 9 significant digits, dropping trailing zeros.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&magnitude) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - magnitude).max(0) as usize;
    let text = format!("{x:.decimals$}");
    if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        text
    }
}

/// Evaluates every scheme at every point. Points run in parallel and rows
/// come back in sweep order.
pub fn sweep_table(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let rows = spec
        .points()
        .into_par_iter()
        .map(|point| {
            let config = point.config();
            let results = spec
                .schemes
                .iter()
                .map(|&scheme| match &config {
                    Ok(config) => scheme
                        .evaluate(config, &spec.settings)
                        .map_err(|e| e.to_string()),
                    Err(e) => Err(e.to_string()),
                })
                .collect();
            SweepRow { point, results }
        })
        .collect();
    Ok(SweepTable {
        schemes: spec.schemes.clone(),
        rows,
    })
}

/// Runs the sweep and writes the CSV to the spec's output path, or to
/// stdout when there is none. Scheme failures leave an empty cell and are
/// reported on stderr.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    let table = sweep_table(spec)?;
    for row in &table.rows {
        for (scheme, result) in table.schemes.iter().zip(&row.results) {
            let point = row.point;
            match result {
                Err(message) => eprintln!(
                    "{scheme} failed at {} dB, C = {:?}: {message}",
                    point.snr_db, point.budgets
                ),
                Ok(BoundResult {
                    note: Some(note), ..
                }) => eprintln!("{scheme} at {} dB, C = {:?}: {note}", point.snr_db, point.budgets),
                Ok(_) => {}
            }
        }
    }
    match &spec.output_path {
        Some(path) => table.write_csv(BufWriter::new(File::create(path)?))?,
        None => table.write_csv(std::io::stdout().lock())?,
    }
    Ok(table)
}
