//! Deadline sweeps, surface export and the seeded verification campaign.
//!
//! CSV output starts with `#`-prefixed metadata lines (task size, `D_m`,
//! gains, tool version) followed by a header row. Numbers keep at least 15
//! significant digits and infinities are written as `inf`.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::closed_form::{
    hybrid_energy, hybrid_powers, kkt_log_vars, oma_energy_n, pure_noma_energy,
};
use crate::model::{OffloadScenario, StrategyKind};
use crate::oracle::{energy_surface, oracle_fixed_t, DEFAULT_TOL};
use crate::strategy::{hybrid_lower_bound, select_strategy};
use crate::{Error, Result};

pub const TOOL_VERSION: &str = concat!("noma-mec ", env!("CARGO_PKG_VERSION"));

pub const SWEEP_HEADER: [&str; 8] = [
    "d_n", "e_hybrid", "e_pure", "e_oma", "p1_star", "p2_star", "t_n_star", "selected",
];
pub const SURFACE_HEADER: [&str; 5] = ["record", "p1", "p2", "energy", "feasible"];

/// Acceptance thresholds shared by the campaign and the test suites.
pub mod tolerance {
    /// Closed form vs. oracle, relative.
    pub const ORACLE_REL: f64 = 1e-5;
    /// Strategy dominance, additive.
    pub const DOMINANCE_ABS: f64 = 1e-9;
    /// OMA advantage over pure NOMA by at least `D_m (e^{N/D_m} - 1)^2`, additive.
    pub const OMA_MARGIN_ABS: f64 = 1e-6;
    /// Active rate constraint, relative to `N`.
    pub const KKT_REL: f64 = 1e-9;
}

/// Scenario fields shared by every row of a deadline sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioBase {
    pub nats: f64,
    pub d_m: f64,
    pub h_m_sq: f64,
    pub h_n_sq: f64,
}

impl ScenarioBase {
    pub fn with_d_n(&self, d_n: f64) -> Result<OffloadScenario> {
        OffloadScenario::new(self.nats, self.d_m, d_n, self.h_m_sq, self.h_n_sq)
    }

    fn metadata(&self) -> [(&'static str, f64); 4] {
        [
            ("n", self.nats),
            ("dm", self.d_m),
            ("hm2", self.h_m_sq),
            ("hn2", self.h_n_sq),
        ]
    }
}

impl From<&OffloadScenario> for ScenarioBase {
    fn from(s: &OffloadScenario) -> Self {
        Self {
            nats: s.nats(),
            d_m: s.d_m(),
            h_m_sq: s.h_m_sq(),
            h_n_sq: s.h_n_sq(),
        }
    }
}

/// One deadline of a sweep. The power and time columns describe the
/// selected strategy's allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub d_n: f64,
    pub e_hybrid: f64,
    pub e_pure: f64,
    pub e_oma: f64,
    pub p1_star: f64,
    pub p2_star: f64,
    pub t_n_star: f64,
    pub selected: StrategyKind,
}

/// Evaluates every strategy on `steps` evenly spaced deadlines
/// `D_n in [d_n_from, d_n_to]`.
pub fn deadline_sweep(
    base: &ScenarioBase,
    d_n_from: f64,
    d_n_to: f64,
    steps: usize,
) -> Result<Vec<SweepRow>> {
    if steps < 2 {
        return Err(Error::InvalidArgument {
            name: "steps",
            reason: format!("need at least 2 rows, got {steps}"),
        });
    }
    if d_n_from.partial_cmp(&d_n_to) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidArgument {
            name: "to",
            reason: format!("sweep end {d_n_to} must exceed start {d_n_from}"),
        });
    }
    crate::numeric::linspace(d_n_from, d_n_to, steps)
        .into_iter()
        .map(|d_n| {
            let s = base.with_d_n(d_n)?;
            let table = select_strategy(&s);
            let schedule = table
                .selected_report()
                .schedule
                .expect("selected strategy is feasible");
            Ok(SweepRow {
                d_n,
                e_hybrid: table.hybrid.energy,
                e_pure: table.pure_noma.energy,
                e_oma: table.oma.energy,
                p1_star: schedule.p_n1,
                p2_star: schedule.p_n2,
                t_n_star: schedule.t_n,
                selected: table.selected,
            })
        })
        .collect()
}

/// Formats a value for CSV: at least 15 significant digits, `inf` for
/// infinities.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_owned();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_owned();
    }
    if v == 0.0 {
        return "0".to_owned();
    }
    let magnitude = v.abs().log10().floor();
    if (-5.0..15.0).contains(&magnitude) {
        let decimals = (14.0 - magnitude) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.14e}")
    }
}

fn csv_error(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

fn write_metadata<W: Write>(w: &mut W, fields: &[(&str, f64)]) -> io::Result<()> {
    writeln!(w, "# tool: {TOOL_VERSION}")?;
    for (key, value) in fields {
        writeln!(w, "# {key}: {}", format_value(*value))?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(
    mut w: W,
    base: &ScenarioBase,
    rows: &[SweepRow],
) -> io::Result<()> {
    write_metadata(&mut w, &base.metadata())?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER).map_err(csv_error)?;
    for r in rows {
        out.write_record([
            format_value(r.d_n),
            format_value(r.e_hybrid),
            format_value(r.e_pure),
            format_value(r.e_oma),
            format_value(r.p1_star),
            format_value(r.p2_star),
            format_value(r.t_n_star),
            r.selected.as_str().to_owned(),
        ])
        .map_err(csv_error)?;
    }
    out.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceRecordKind {
    Grid,
    /// The closed-form optimum, appended after the grid.
    ClosedForm,
}

impl SurfaceRecordKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Grid => "grid",
            Self::ClosedForm => "closed_form",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRecord {
    pub kind: SurfaceRecordKind,
    pub p1: f64,
    pub p2: f64,
    pub energy: f64,
    pub feasible: bool,
}

/// Long-form surface records, `resolution^2` grid points followed by the
/// closed-form optimum at `t_n`.
pub fn surface_export(
    s: &OffloadScenario,
    t_n: f64,
    p1_max: f64,
    p2_max: f64,
    resolution: usize,
) -> Result<Vec<SurfaceRecord>> {
    let grid = energy_surface(s, t_n, p1_max, p2_max, resolution)?;
    let (p1, p2) = hybrid_powers(s, t_n)?;
    let mut records = Vec::with_capacity(resolution * resolution + 1);
    for (i, &a) in grid.p1_axis.iter().enumerate() {
        for (j, &b) in grid.p2_axis.iter().enumerate() {
            records.push(SurfaceRecord {
                kind: SurfaceRecordKind::Grid,
                p1: a,
                p2: b,
                energy: grid.energy_at(i, j),
                feasible: grid.is_feasible(i, j),
            });
        }
    }
    records.push(SurfaceRecord {
        kind: SurfaceRecordKind::ClosedForm,
        p1,
        p2,
        energy: hybrid_energy(s, t_n)?,
        feasible: true,
    });
    Ok(records)
}

pub fn write_surface_csv<W: Write>(
    mut w: W,
    s: &OffloadScenario,
    t_n: f64,
    records: &[SurfaceRecord],
) -> io::Result<()> {
    let base = ScenarioBase::from(s);
    let mut meta = base.metadata().to_vec();
    meta.push(("dn", s.d_n()));
    meta.push(("tn", t_n));
    write_metadata(&mut w, &meta)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SURFACE_HEADER).map_err(csv_error)?;
    for r in records {
        out.write_record([
            r.kind.as_str().to_owned(),
            format_value(r.p1),
            format_value(r.p2),
            format_value(r.energy),
            r.feasible.to_string(),
        ])
        .map_err(csv_error)?;
    }
    out.flush()
}

/// Seeded scenario generator for randomized checks.
///
/// Ranges: `N in [1, 40]`, `D_m in [1, 50]`, gains in `[0.1, 10]`.
#[derive(Debug, Clone)]
pub struct ScenarioSampler {
    rng: ChaCha8Rng,
}

impl ScenarioSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn draw(&mut self, d_n_factor: impl FnOnce(&mut ChaCha8Rng) -> f64) -> OffloadScenario {
        let nats = self.rng.random_range(1.0..=40.0);
        let d_m = self.rng.random_range(1.0..=50.0);
        let h_m_sq = self.rng.random_range(0.1..=10.0);
        let h_n_sq = self.rng.random_range(0.1..=10.0);
        let d_n = d_m * d_n_factor(&mut self.rng);
        OffloadScenario::new(nats, d_m, d_n, h_m_sq, h_n_sq).expect("sampled ranges are valid")
    }

    /// `D_n` strictly inside `(D_m, 2 D_m)`.
    pub fn hybrid(&mut self) -> OffloadScenario {
        loop {
            let s = self.draw(|r| 1.0 + r.random::<f64>());
            if s.d_n() > s.d_m() && s.d_n() < 2.0 * s.d_m() {
                return s;
            }
        }
    }

    /// `D_n in [2 D_m, 4 D_m]`.
    pub fn oma_regime(&mut self) -> OffloadScenario {
        self.draw(|r| r.random_range(2.0..=4.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignSummary {
    pub seed: u64,
    pub count: usize,
    /// Worst `|oracle - closed form| / closed form` on hybrid scenarios.
    pub max_rel_err: f64,
    /// Worst `max(E_hybrid - E_pure, E_hybrid - E_oma)` on hybrid scenarios.
    pub max_dominance_violation: f64,
    /// Worst `max(E_oma - E_pure, E_oma - lower bound)` in the OMA regime.
    pub max_oma_violation: f64,
    /// Worst excess of `E_oma - E_pure` over `-D_m (e^{N/D_m} - 1)^2 / |h_n|^2`.
    pub max_oma_margin_violation: f64,
    /// Worst `|D_m y_1 + T_n y_2 - N| / N` over hybrid solutions.
    pub max_kkt_residual: f64,
    pub pass: bool,
}

/// Runs oracle agreement, dominance and KKT checks on `count` hybrid-regime
/// scenarios and the OMA-regime checks on `count` more.
pub fn verification_campaign(seed: u64, count: usize) -> Result<CampaignSummary> {
    verification_campaign_with_tol(seed, count, DEFAULT_TOL)
}

pub fn verification_campaign_with_tol(
    seed: u64,
    count: usize,
    tol: f64,
) -> Result<CampaignSummary> {
    if count == 0 {
        return Err(Error::InvalidArgument {
            name: "count",
            reason: "need at least one scenario".to_owned(),
        });
    }
    let mut sampler = ScenarioSampler::new(seed);
    let mut max_rel_err = 0.0_f64;
    let mut max_dominance_violation = f64::NEG_INFINITY;
    let mut max_kkt_residual = 0.0_f64;
    for _ in 0..count {
        let s = sampler.hybrid();
        let t_n = s.own_slot();
        let closed = hybrid_energy(&s, t_n)?;
        let oracle = oracle_fixed_t(&s, t_n, tol)?;
        max_rel_err = max_rel_err.max(((oracle.energy - closed) / closed).abs());

        let e_pure = pure_noma_energy(&s);
        let e_oma = oma_energy_n(&s, t_n);
        max_dominance_violation =
            max_dominance_violation.max((closed - e_pure).max(closed - e_oma));

        let y = kkt_log_vars(&s, t_n)?;
        max_kkt_residual = max_kkt_residual.max((y.constraint_residual(&s, t_n) / s.nats()).abs());
    }

    let mut max_oma_violation = f64::NEG_INFINITY;
    let mut max_oma_margin_violation = f64::NEG_INFINITY;
    for _ in 0..count {
        let s = sampler.oma_regime();
        let e_oma = oma_energy_n(&s, s.own_slot());
        let e_pure = pure_noma_energy(&s);
        max_oma_violation =
            max_oma_violation.max((e_oma - e_pure).max(e_oma - hybrid_lower_bound(&s)));
        let margin = -s.d_m() * (s.nats() / s.d_m()).exp_m1().powi(2) / s.h_n_sq();
        max_oma_margin_violation = max_oma_margin_violation.max((e_oma - e_pure) - margin);
    }

    let pass = max_rel_err <= tolerance::ORACLE_REL
        && max_dominance_violation <= tolerance::DOMINANCE_ABS
        && max_oma_violation <= tolerance::DOMINANCE_ABS
        && max_oma_margin_violation <= tolerance::OMA_MARGIN_ABS
        && max_kkt_residual <= tolerance::KKT_REL;
    Ok(CampaignSummary {
        seed,
        count,
        max_rel_err,
        max_dominance_violation,
        max_oma_violation,
        max_oma_margin_violation,
        max_kkt_residual,
        pass,
    })
}
