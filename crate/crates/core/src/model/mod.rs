//! Deterministic-equivalent LP of the two-stage planning problem.
//!
//! [`build`] turns a [`PlanningInstance`] plus risk and flexibility settings
//! into one [`LinearProgram`]:
//!
//! * first-stage columns: cumulative investment in generation capacity
//!   (`x`), transfer capacity (`y`) and pumped storage (`z`), charged with
//!   discounted annuities in every modeled year;
//! * second-stage columns per scenario: generation, flows, pumping, storage
//!   levels, load shedding, the per-scenario operating cost `oc_s` and the
//!   CVaR auxiliaries (threshold, excesses, `cvar`);
//! * rows: operating-cost definitions, CVaR coupling, hourly energy
//!   balances, capacity and flow limits, storage balances and caps, monthly
//!   hydro budgets, and investment irreversibility across years.
//!
//! The objective is `IC + (1 - omega) * E[oc] + omega * cvar`. Hour weights
//! extrapolate representative-hour energy terms to annual quantities in the
//! cost and budget rows; capacity limits stay per-hour.

mod catalog;
mod lp;

pub use catalog::{VarKey, VariableCatalog};
pub use lp::{LinearProgram, LpError, Row, INF, NEG_INF};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::demand::{self, DemandError, SheddingMeritOrder};
use crate::domain::{
    DemandResponse, DomainError, Expansion, FlexibilitySettings, HourId, MonthId, NodeId,
    PlanningInstance, RiskSettings, ScenarioId, SectorId, TechId, TechKind, ValidationIssue, Year,
};
use crate::finance::{self, FinanceError};
use crate::solve::{SolveReport, SolveStatus};

/// Relative tolerance for solution integrity checks.
pub const INTEGRITY_TOL: f64 = 1e-6;

/// A built model: the LP plus everything needed to interpret solutions.
#[derive(Clone, Debug)]
pub struct PlanModel {
    pub lp: LinearProgram,
    pub catalog: VariableCatalog,
    pub risk: RiskSettings,
    pub flex: FlexibilitySettings,
    /// Whether the CVaR variables and rows are part of the LP.
    pub risk_rows: bool,
}

/// Errors from model construction and solution extraction.
#[derive(Debug)]
pub enum ModelError {
    InvalidInstance(Vec<ValidationIssue>),
    InvalidSettings(DomainError),
    Demand(DemandError),
    Finance(FinanceError),
    Lp(LpError),
    NotOptimal(SolveStatus),
    Integrity(String),
    UnknownKey(String),
    NotAnInvestment(String),
    PinOutsideBounds(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidInstance(issues) => {
                write!(f, "instance failed validation with {} issue(s)", issues.len())
            }
            ModelError::InvalidSettings(e) => write!(f, "invalid settings: {e}"),
            ModelError::Demand(e) => write!(f, "demand response: {e}"),
            ModelError::Finance(e) => write!(f, "finance: {e}"),
            ModelError::Lp(e) => write!(f, "linear program: {e}"),
            ModelError::NotOptimal(s) => write!(f, "solver finished with status {s:?}"),
            ModelError::Integrity(msg) => write!(f, "solution integrity: {msg}"),
            ModelError::UnknownKey(k) => write!(f, "unknown variable key {k}"),
            ModelError::NotAnInvestment(k) => write!(f, "{k} is not a first-stage variable"),
            ModelError::PinOutsideBounds(k) => write!(f, "pinned value for {k} outside bounds"),
        }
    }
}

impl core::error::Error for ModelError {}

impl From<DemandError> for ModelError {
    fn from(e: DemandError) -> Self {
        ModelError::Demand(e)
    }
}

impl From<FinanceError> for ModelError {
    fn from(e: FinanceError) -> Self {
        ModelError::Finance(e)
    }
}

impl From<LpError> for ModelError {
    fn from(e: LpError) -> Self {
        ModelError::Lp(e)
    }
}

/// Builds the full risk-averse deterministic equivalent.
pub fn build(
    instance: &PlanningInstance,
    risk: &RiskSettings,
    flex: &FlexibilitySettings,
) -> Result<PlanModel, ModelError> {
    Builder::new(instance, *risk, *flex, true)?.run()
}

/// Builds the risk-neutral counterpart: same dispatch model, but without
/// the CVaR variables and rows; scenario costs enter the objective with
/// their plain probabilities. `risk.alpha` is still recorded for reporting.
pub fn build_risk_neutral(
    instance: &PlanningInstance,
    risk: &RiskSettings,
    flex: &FlexibilitySettings,
) -> Result<PlanModel, ModelError> {
    Builder::new(instance, *risk, *flex, false)?.run()
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

struct Builder<'a> {
    inst: &'a PlanningInstance,
    risk: RiskSettings,
    flex: FlexibilitySettings,
    risk_rows: bool,
    merit: SheddingMeritOrder,
    lp: LinearProgram,
    catalog: VariableCatalog,
    df: Vec<f64>,
    // Marginal cost per (tech, year, scenario).
    vc: Vec<f64>,
    months: Vec<(MonthId, Vec<HourId>)>,
    gen_invest_annuity: Vec<f64>,
    ntc_scale: Option<f64>,
    psp_scale: Option<f64>,
}

impl<'a> Builder<'a> {
    fn new(
        inst: &'a PlanningInstance,
        risk: RiskSettings,
        flex: FlexibilitySettings,
        risk_rows: bool,
    ) -> Result<Self, ModelError> {
        RiskSettings::new(risk.omega, risk.alpha).map_err(ModelError::InvalidSettings)?;
        flex.validate().map_err(ModelError::InvalidSettings)?;
        inst.validate().map_err(ModelError::InvalidInstance)?;

        let merit = demand::build_merit_order(&inst.nodes, &flex)?;
        let df = inst
            .years
            .iter()
            .map(|y| finance::discount_factor(*y, &inst.finance))
            .collect::<Result<Vec<_>, _>>()?;

        let (nt, ny, ns) = (inst.technologies.len(), inst.years.len(), inst.scenarios.len());
        let mut vc = alloc::vec![0.0; nt * ny * ns];
        for (i, tech) in inst.technologies.iter().enumerate() {
            for (y, _) in inst.years.iter().enumerate() {
                for (s, sc) in inst.scenarios.scenarios().iter().enumerate() {
                    let fuel_price = tech.fuel.map(|f| sc.fuel_prices.get(f.0, y)).unwrap_or(0.0);
                    let cost = finance::marginal_cost(tech, fuel_price, sc.co2_price[y])?;
                    vc[(i * ny + y) * ns + s] = cost;
                }
            }
        }

        let mut months: Vec<(MonthId, Vec<HourId>)> = Vec::new();
        for (t, hour) in inst.hours.iter().enumerate() {
            match months.iter_mut().find(|(m, _)| *m == hour.month) {
                Some((_, hours)) => hours.push(HourId(t)),
                None => months.push((hour.month, alloc::vec![HourId(t)])),
            }
        }
        months.sort_by_key(|(m, _)| *m);

        let gen_invest_annuity = inst
            .technologies
            .iter()
            .map(|t| finance::annuity(t.capex, inst.finance.interest_rate, t.lifetime))
            .collect::<Result<Vec<_>, _>>()?;

        let ntc_scale = match flex.ntc {
            Expansion::On { capex_scale } => Some(capex_scale),
            Expansion::Off => None,
        };
        let psp_scale = match flex.psp {
            Expansion::On { capex_scale } => Some(capex_scale),
            Expansion::Off => None,
        };

        Ok(Self {
            inst,
            risk,
            flex,
            risk_rows,
            merit,
            lp: LinearProgram::new(inst.name.clone()),
            catalog: VariableCatalog::new(),
            df,
            vc,
            months,
            gen_invest_annuity,
            ntc_scale,
            psp_scale,
        })
    }

    fn vc(&self, tech: usize, year: usize, scenario: usize) -> f64 {
        let (ny, ns) = (self.inst.years.len(), self.inst.scenarios.len());
        self.vc[(tech * ny + year) * ns + scenario]
    }

    fn add_var(&mut self, key: VarKey, lower: f64, upper: f64, obj: f64) -> Result<usize, ModelError> {
        use alloc::string::ToString;
        let col = self.lp.add_col(key.to_string(), lower, upper, obj)?;
        self.catalog.insert(key, col);
        Ok(col)
    }

    fn col(&self, key: &VarKey) -> Option<usize> {
        self.catalog.col(key)
    }

    /// Whether endogenous generation investment variables exist for (i, n).
    fn has_gen_invest(&self, i: usize, n: usize) -> bool {
        let tech = &self.inst.technologies[i];
        let node = &self.inst.nodes[n];
        tech.investable
            && (0..self.inst.years.len()).any(|y| node.invest_cap.get(i, y) > 0.0)
    }

    /// Whether pumped-storage expansion variables exist for (psp tech, n).
    fn has_psp_invest(&self, i: usize, n: usize) -> bool {
        self.psp_scale.is_some()
            && self.inst.technologies[i].kind == TechKind::Psp
            && self.inst.nodes[n].psp_invest_cap > 0.0
    }

    /// Whether transfer expansion variables exist for link l.
    fn has_ntc_invest(&self, l: usize) -> bool {
        self.ntc_scale.is_some() && self.inst.links[l].expandable
    }

    /// A technology/node pair participates in year y if it can have any
    /// capacity there: existing, investable, or scenario renewable capacity.
    fn pair_active_in_year(&self, i: usize, n: usize, y: usize) -> bool {
        let tech = &self.inst.technologies[i];
        let node = &self.inst.nodes[n];
        match tech.kind {
            TechKind::IntermittentRes => self
                .inst
                .scenarios
                .scenarios()
                .iter()
                .any(|sc| sc.res_capacity.get(i, n, y) > 0.0),
            TechKind::Psp => {
                node.existing_capacity.get(i, y) > 0.0
                    || (self.has_gen_invest(i, n) && node.invest_cap.get(i, y) > 0.0)
                    || self.has_psp_invest(i, n)
            }
            _ => {
                node.existing_capacity.get(i, y) > 0.0
                    || (self.has_gen_invest(i, n) && node.invest_cap.get(i, y) > 0.0)
            }
        }
    }

    fn run(mut self) -> Result<PlanModel, ModelError> {
        self.add_investment_vars()?;
        self.add_dispatch_vars()?;
        self.add_cost_vars()?;
        self.add_opcost_rows()?;
        self.add_cvar_rows()?;
        self.add_balance_rows()?;
        self.add_capacity_rows()?;
        self.add_storage_rows()?;
        self.add_hydro_rows()?;
        self.add_flow_rows()?;
        self.add_irreversibility_rows()?;
        self.add_symmetry_rows()?;
        self.lp.check()?;
        Ok(PlanModel {
            lp: self.lp,
            catalog: self.catalog,
            risk: self.risk,
            flex: self.flex,
            risk_rows: self.risk_rows,
        })
    }

    fn add_investment_vars(&mut self) -> Result<(), ModelError> {
        let years: Vec<Year> = self.inst.years.clone();
        // Generation investment x.
        for i in 0..self.inst.technologies.len() {
            for n in 0..self.inst.nodes.len() {
                if !self.has_gen_invest(i, n) {
                    continue;
                }
                let annuity = self.gen_invest_annuity[i];
                for (yi, year) in years.iter().enumerate() {
                    let cap = self.inst.nodes[n].invest_cap.get(i, yi);
                    let obj = self.df[yi] * annuity;
                    self.add_var(
                        VarKey::GenInvest { tech: TechId(i), node: NodeId(n), year: *year },
                        0.0,
                        cap,
                        obj,
                    )?;
                }
            }
        }
        // Transfer capacity investment y.
        if let Some(scale) = self.ntc_scale {
            for (l, link) in self.inst.links.iter().enumerate() {
                if !self.has_ntc_invest(l) {
                    continue;
                }
                let annuity = finance::annuity(
                    link.expansion_capex * scale,
                    self.inst.finance.interest_rate,
                    link.lifetime,
                )?;
                for (yi, year) in years.iter().enumerate() {
                    let obj = self.df[yi] * annuity;
                    self.add_var(
                        VarKey::NtcInvest { from: link.from, to: link.to, year: *year },
                        0.0,
                        INF,
                        obj,
                    )?;
                }
            }
        }
        // Pumped-storage investment z.
        if let Some(scale) = self.psp_scale {
            for i in 0..self.inst.technologies.len() {
                if self.inst.technologies[i].kind != TechKind::Psp {
                    continue;
                }
                let annuity = finance::annuity(
                    self.inst.technologies[i].capex * scale,
                    self.inst.finance.interest_rate,
                    self.inst.technologies[i].lifetime,
                )?;
                for n in 0..self.inst.nodes.len() {
                    if !self.has_psp_invest(i, n) {
                        continue;
                    }
                    for (yi, year) in years.iter().enumerate() {
                        let obj = self.df[yi] * annuity;
                        self.add_var(
                            VarKey::PspInvest { tech: TechId(i), node: NodeId(n), year: *year },
                            0.0,
                            self.inst.nodes[n].psp_invest_cap,
                            obj,
                        )?;
                    }
                }
            }
        }
        Ok(())
    }

    fn add_dispatch_vars(&mut self) -> Result<(), ModelError> {
        let inst = self.inst;
        let (nn, ny, nh, ns) =
            (inst.nodes.len(), inst.years.len(), inst.hours.len(), inst.scenarios.len());

        // Generation g.
        for s in 0..ns {
            for y in 0..ny {
                for t in 0..nh {
                    for n in 0..nn {
                        for i in 0..inst.technologies.len() {
                            if !self.pair_active_in_year(i, n, y) {
                                continue;
                            }
                            let tech = &inst.technologies[i];
                            let af = inst.availability(TechId(i), NodeId(n), HourId(t));
                            let key = VarKey::Generation {
                                tech: TechId(i),
                                node: NodeId(n),
                                hour: HourId(t),
                                year: inst.years[y],
                                scenario: ScenarioId(s),
                            };
                            let has_x = self.has_gen_invest(i, n);
                            let cap = match tech.kind {
                                TechKind::IntermittentRes => {
                                    inst.scenarios.scenarios()[s].res_capacity.get(i, n, y)
                                }
                                _ => inst.nodes[n].existing_capacity.get(i, y),
                            };
                            if has_x && af > 0.0 {
                                // Capacity handled by a gencap row below.
                                self.add_var(key, 0.0, INF, 0.0)?;
                            } else {
                                let ub = cap * af;
                                if ub > 0.0 {
                                    self.add_var(key, 0.0, ub, 0.0)?;
                                }
                            }
                        }
                    }
                }
            }
        }

        // Flows.
        for s in 0..ns {
            for y in 0..ny {
                for t in 0..nh {
                    for (l, link) in inst.links.iter().enumerate() {
                        let key = VarKey::Flow {
                            from: link.from,
                            to: link.to,
                            hour: HourId(t),
                            year: inst.years[y],
                            scenario: ScenarioId(s),
                        };
                        if self.has_ntc_invest(l) {
                            self.add_var(key, 0.0, INF, 0.0)?;
                        } else if link.ntc[y] > 0.0 {
                            self.add_var(key, 0.0, link.ntc[y], 0.0)?;
                        }
                    }
                }
            }
        }

        // Pumping and storage levels.
        for s in 0..ns {
            for y in 0..ny {
                for t in 0..nh {
                    for n in 0..nn {
                        for i in 0..inst.technologies.len() {
                            if inst.technologies[i].kind != TechKind::Psp
                                || !self.pair_active_in_year(i, n, y)
                            {
                                continue;
                            }
                            let af = inst.availability(TechId(i), NodeId(n), HourId(t));
                            let cap = inst.nodes[n].existing_capacity.get(i, y);
                            let has_z = self.has_psp_invest(i, n);
                            let pump_key = VarKey::Pump {
                                tech: TechId(i),
                                node: NodeId(n),
                                hour: HourId(t),
                                year: inst.years[y],
                                scenario: ScenarioId(s),
                            };
                            if has_z && af > 0.0 {
                                self.add_var(pump_key, 0.0, INF, 0.0)?;
                            } else if cap * af > 0.0 {
                                self.add_var(pump_key, 0.0, cap * af, 0.0)?;
                            }
                            let sl_key = VarKey::StorageLevel {
                                tech: TechId(i),
                                node: NodeId(n),
                                hour: HourId(t),
                                year: inst.years[y],
                                scenario: ScenarioId(s),
                            };
                            if has_z {
                                self.add_var(sl_key, 0.0, INF, 0.0)?;
                            } else if cap > 0.0 {
                                self.add_var(sl_key, 0.0, cap * inst.capacity_power_factor, 0.0)?;
                            }
                        }
                    }
                }
            }
        }

        // Load shedding, bounded by the sectoral share of hourly demand.
        if !self.merit.is_off() {
            for s in 0..ns {
                let sc = &inst.scenarios.scenarios()[s];
                for y in 0..ny {
                    for t in 0..nh {
                        for n in 0..nn {
                            let demand = sc.demand.get(n, y, t);
                            if demand <= 0.0 {
                                continue;
                            }
                            let steps = self.merit.node_steps(NodeId(n))?.to_vec();
                            for step in steps {
                                self.add_var(
                                    VarKey::Shed {
                                        sector: step.sector,
                                        node: NodeId(n),
                                        hour: HourId(t),
                                        year: inst.years[y],
                                        scenario: ScenarioId(s),
                                    },
                                    0.0,
                                    demand * step.share,
                                    0.0,
                                )?;
                            }
                        }
                    }
                }
            }
        }

        // Lost-load slack when demand response is off.
        if self.merit.is_off() && inst.lost_load_penalty.is_some() {
            for s in 0..ns {
                let sc = &inst.scenarios.scenarios()[s];
                for y in 0..ny {
                    for t in 0..nh {
                        for n in 0..nn {
                            let demand = sc.demand.get(n, y, t);
                            if demand <= 0.0 {
                                continue;
                            }
                            self.add_var(
                                VarKey::LostLoad {
                                    node: NodeId(n),
                                    hour: HourId(t),
                                    year: inst.years[y],
                                    scenario: ScenarioId(s),
                                },
                                0.0,
                                demand,
                                0.0,
                            )?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn add_cost_vars(&mut self) -> Result<(), ModelError> {
        let ns = self.inst.scenarios.len();
        let probs = self.inst.scenarios.probabilities();
        for s in 0..ns {
            let weight = if self.risk_rows { (1.0 - self.risk.omega) * probs[s] } else { probs[s] };
            self.add_var(VarKey::OpCost { scenario: ScenarioId(s) }, 0.0, INF, weight)?;
        }
        if self.risk_rows {
            for s in 0..ns {
                self.add_var(VarKey::Excess { scenario: ScenarioId(s) }, 0.0, INF, 0.0)?;
            }
            self.add_var(VarKey::Threshold, NEG_INF, INF, 0.0)?;
            self.add_var(VarKey::Cvar, 0.0, INF, self.risk.omega)?;
        }
        Ok(())
    }

    /// oc_s = sum_y DF_y * sum_t w_t * (VC * g + VoLA * shed + penalty * lost).
    fn add_opcost_rows(&mut self) -> Result<(), ModelError> {
        let inst = self.inst;
        let ns = inst.scenarios.len();
        for s in 0..ns {
            let mut coeffs: Vec<(usize, f64)> = Vec::new();
            let oc = self
                .col(&VarKey::OpCost { scenario: ScenarioId(s) })
                .expect("opcost column exists");
            coeffs.push((oc, -1.0));
            for (yi, year) in inst.years.iter().enumerate() {
                let df = self.df[yi];
                for (t, hour) in inst.hours.iter().enumerate() {
                    let w = hour.weight;
                    for n in 0..inst.nodes.len() {
                        for i in 0..inst.technologies.len() {
                            let key = VarKey::Generation {
                                tech: TechId(i),
                                node: NodeId(n),
                                hour: HourId(t),
                                year: *year,
                                scenario: ScenarioId(s),
                            };
                            if let Some(j) = self.col(&key) {
                                let c = df * w * self.vc(i, yi, s);
                                if c != 0.0 {
                                    coeffs.push((j, c));
                                }
                            }
                        }
                        if !self.merit.is_off() {
                            let steps = self.merit.node_steps(NodeId(n))?.to_vec();
                            for step in steps {
                                let key = VarKey::Shed {
                                    sector: step.sector,
                                    node: NodeId(n),
                                    hour: HourId(t),
                                    year: *year,
                                    scenario: ScenarioId(s),
                                };
                                if let Some(j) = self.col(&key) {
                                    coeffs.push((j, df * w * step.vola));
                                }
                            }
                        }
                        if let Some(penalty) = inst.lost_load_penalty {
                            let key = VarKey::LostLoad {
                                node: NodeId(n),
                                hour: HourId(t),
                                year: *year,
                                scenario: ScenarioId(s),
                            };
                            if let Some(j) = self.col(&key) {
                                coeffs.push((j, df * w * penalty));
                            }
                        }
                    }
                }
            }
            self.lp.add_row(format!("opcost_{}", ScenarioId(s)), coeffs, 0.0, 0.0)?;
        }
        Ok(())
    }

    /// a_s >= oc_s - zeta and cvar >= zeta + sum_s rho_s a_s / (1 - alpha).
    fn add_cvar_rows(&mut self) -> Result<(), ModelError> {
        if !self.risk_rows {
            return Ok(());
        }
        let ns = self.inst.scenarios.len();
        let probs = self.inst.scenarios.probabilities();
        let zeta = self.col(&VarKey::Threshold).expect("threshold exists");
        let cvar = self.col(&VarKey::Cvar).expect("cvar exists");
        for s in 0..ns {
            let a = self.col(&VarKey::Excess { scenario: ScenarioId(s) }).unwrap();
            let oc = self.col(&VarKey::OpCost { scenario: ScenarioId(s) }).unwrap();
            self.lp.add_row(
                format!("excess_{}", ScenarioId(s)),
                alloc::vec![(a, 1.0), (oc, -1.0), (zeta, 1.0)],
                0.0,
                INF,
            )?;
        }
        let mut coeffs = alloc::vec![(cvar, 1.0), (zeta, -1.0)];
        let tail = 1.0 / (1.0 - self.risk.alpha);
        for s in 0..ns {
            let a = self.col(&VarKey::Excess { scenario: ScenarioId(s) }).unwrap();
            coeffs.push((a, -probs[s] * tail));
        }
        self.lp.add_row("cvar_def", coeffs, 0.0, INF)?;
        Ok(())
    }

    /// D = sum_i g - sum_psp pump + imports - exports + sum_sec shed + lost.
    fn add_balance_rows(&mut self) -> Result<(), ModelError> {
        let inst = self.inst;
        for s in 0..inst.scenarios.len() {
            let sc = &inst.scenarios.scenarios()[s];
            for (yi, year) in inst.years.iter().enumerate() {
                for t in 0..inst.hours.len() {
                    for n in 0..inst.nodes.len() {
                        let mut coeffs: Vec<(usize, f64)> = Vec::new();
                        for i in 0..inst.technologies.len() {
                            let gen = VarKey::Generation {
                                tech: TechId(i),
                                node: NodeId(n),
                                hour: HourId(t),
                                year: *year,
                                scenario: ScenarioId(s),
                            };
                            if let Some(j) = self.col(&gen) {
                                coeffs.push((j, 1.0));
                            }
                            let pump = VarKey::Pump {
                                tech: TechId(i),
                                node: NodeId(n),
                                hour: HourId(t),
                                year: *year,
                                scenario: ScenarioId(s),
                            };
                            if let Some(j) = self.col(&pump) {
                                coeffs.push((j, -1.0));
                            }
                        }
                        for link in &inst.links {
                            let key = VarKey::Flow {
                                from: link.from,
                                to: link.to,
                                hour: HourId(t),
                                year: *year,
                                scenario: ScenarioId(s),
                            };
                            if let Some(j) = self.col(&key) {
                                if link.to == NodeId(n) {
                                    coeffs.push((j, 1.0));
                                } else if link.from == NodeId(n) {
                                    coeffs.push((j, -1.0));
                                }
                            }
                        }
                        for sec in 0..inst.sectors.len() {
                            let key = VarKey::Shed {
                                sector: SectorId(sec),
                                node: NodeId(n),
                                hour: HourId(t),
                                year: *year,
                                scenario: ScenarioId(s),
                            };
                            if let Some(j) = self.col(&key) {
                                coeffs.push((j, 1.0));
                            }
                        }
                        let lost = VarKey::LostLoad {
                            node: NodeId(n),
                            hour: HourId(t),
                            year: *year,
                            scenario: ScenarioId(s),
                        };
                        if let Some(j) = self.col(&lost) {
                            coeffs.push((j, 1.0));
                        }
                        let demand = sc.demand.get(n, yi, t);
                        self.lp.add_row(
                            format!(
                                "bal_{}_{}_y{}_{}",
                                NodeId(n),
                                HourId(t),
                                year,
                                ScenarioId(s)
                            ),
                            coeffs,
                            demand,
                            demand,
                        )?;
                    }
                }
            }
        }
        Ok(())
    }

    /// g <= (CAP + x) * AF for pairs with investment; pump <= (CAP + z) * AF.
    fn add_capacity_rows(&mut self) -> Result<(), ModelError> {
        let inst = self.inst;
        for s in 0..inst.scenarios.len() {
            for (yi, year) in inst.years.iter().enumerate() {
                for t in 0..inst.hours.len() {
                    for n in 0..inst.nodes.len() {
                        for i in 0..inst.technologies.len() {
                            let af = inst.availability(TechId(i), NodeId(n), HourId(t));
                            if af <= 0.0 {
                                continue;
                            }
                            let cap = inst.nodes[n].existing_capacity.get(i, yi);
                            let gen = VarKey::Generation {
                                tech: TechId(i),
                                node: NodeId(n),
                                hour: HourId(t),
                                year: *year,
                                scenario: ScenarioId(s),
                            };
                            let x_key =
                                VarKey::GenInvest { tech: TechId(i), node: NodeId(n), year: *year };
                            if let (Some(g), Some(x)) = (self.col(&gen), self.col(&x_key)) {
                                self.lp.add_row(
                                    format!(
                                        "gcap_{}_{}_{}_y{}_{}",
                                        TechId(i),
                                        NodeId(n),
                                        HourId(t),
                                        year,
                                        ScenarioId(s)
                                    ),
                                    alloc::vec![(g, 1.0), (x, -af)],
                                    NEG_INF,
                                    cap * af,
                                )?;
                            }
                            let pump = VarKey::Pump {
                                tech: TechId(i),
                                node: NodeId(n),
                                hour: HourId(t),
                                year: *year,
                                scenario: ScenarioId(s),
                            };
                            let z_key =
                                VarKey::PspInvest { tech: TechId(i), node: NodeId(n), year: *year };
                            if let (Some(p), Some(z)) = (self.col(&pump), self.col(&z_key)) {
                                self.lp.add_row(
                                    format!(
                                        "pcap_{}_{}_{}_y{}_{}",
                                        TechId(i),
                                        NodeId(n),
                                        HourId(t),
                                        year,
                                        ScenarioId(s)
                                    ),
                                    alloc::vec![(p, 1.0), (z, -af)],
                                    NEG_INF,
                                    cap * af,
                                )?;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// sl_t = sl_{t-1} + eta * pump_t - g_t, plus the basin size cap.
    fn add_storage_rows(&mut self) -> Result<(), ModelError> {
        let inst = self.inst;
        let nh = inst.hours.len();
        for s in 0..inst.scenarios.len() {
            for (yi, year) in inst.years.iter().enumerate() {
                for n in 0..inst.nodes.len() {
                    for i in 0..inst.technologies.len() {
                        if inst.technologies[i].kind != TechKind::Psp {
                            continue;
                        }
                        let eta = inst.technologies[i].efficiency;
                        let first_sl = VarKey::StorageLevel {
                            tech: TechId(i),
                            node: NodeId(n),
                            hour: HourId(0),
                            year: *year,
                            scenario: ScenarioId(s),
                        };
                        if self.col(&first_sl).is_none() {
                            continue;
                        }
                        for t in 0..nh {
                            let sl = self
                                .col(&VarKey::StorageLevel {
                                    tech: TechId(i),
                                    node: NodeId(n),
                                    hour: HourId(t),
                                    year: *year,
                                    scenario: ScenarioId(s),
                                })
                                .expect("storage level column");
                            let mut coeffs: Vec<(usize, f64)> = alloc::vec![(sl, 1.0)];
                            if t > 0 {
                                let prev = self
                                    .col(&VarKey::StorageLevel {
                                        tech: TechId(i),
                                        node: NodeId(n),
                                        hour: HourId(t - 1),
                                        year: *year,
                                        scenario: ScenarioId(s),
                                    })
                                    .expect("previous storage level");
                                coeffs.push((prev, -1.0));
                            } else if inst.cyclic_storage && nh > 1 {
                                let last = self
                                    .col(&VarKey::StorageLevel {
                                        tech: TechId(i),
                                        node: NodeId(n),
                                        hour: HourId(nh - 1),
                                        year: *year,
                                        scenario: ScenarioId(s),
                                    })
                                    .expect("last storage level");
                                coeffs.push((last, -1.0));
                            }
                            if let Some(p) = self.col(&VarKey::Pump {
                                tech: TechId(i),
                                node: NodeId(n),
                                hour: HourId(t),
                                year: *year,
                                scenario: ScenarioId(s),
                            }) {
                                coeffs.push((p, -eta));
                            }
                            if let Some(g) = self.col(&VarKey::Generation {
                                tech: TechId(i),
                                node: NodeId(n),
                                hour: HourId(t),
                                year: *year,
                                scenario: ScenarioId(s),
                            }) {
                                coeffs.push((g, 1.0));
                            }
                            self.lp.add_row(
                                format!(
                                    "sbal_{}_{}_{}_y{}_{}",
                                    TechId(i),
                                    NodeId(n),
                                    HourId(t),
                                    year,
                                    ScenarioId(s)
                                ),
                                coeffs,
                                0.0,
                                0.0,
                            )?;

                            // Basin cap row only needed with expansion.
                            let z_key =
                                VarKey::PspInvest { tech: TechId(i), node: NodeId(n), year: *year };
                            if let Some(z) = self.col(&z_key) {
                                let cap = inst.nodes[n].existing_capacity.get(i, yi);
                                let cpf = inst.capacity_power_factor;
                                self.lp.add_row(
                                    format!(
                                        "scap_{}_{}_{}_y{}_{}",
                                        TechId(i),
                                        NodeId(n),
                                        HourId(t),
                                        year,
                                        ScenarioId(s)
                                    ),
                                    alloc::vec![(sl, 1.0), (z, -cpf)],
                                    NEG_INF,
                                    cap * cpf,
                                )?;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Monthly water budgets: weighted reservoir generation per month is
    /// bounded by capacity times full-load hours.
    fn add_hydro_rows(&mut self) -> Result<(), ModelError> {
        let inst = self.inst;
        for ((tech, node, month), budget) in &inst.hydro_budget {
            let Some(hours) = self.months.iter().find(|(m, _)| m == month).map(|(_, h)| h.clone())
            else {
                continue;
            };
            for s in 0..inst.scenarios.len() {
                for (yi, year) in inst.years.iter().enumerate() {
                    let mut coeffs: Vec<(usize, f64)> = Vec::new();
                    for t in &hours {
                        if let Some(g) = self.col(&VarKey::Generation {
                            tech: *tech,
                            node: *node,
                            hour: *t,
                            year: *year,
                            scenario: ScenarioId(s),
                        }) {
                            coeffs.push((g, inst.hours[t.0].weight));
                        }
                    }
                    if coeffs.is_empty() {
                        continue;
                    }
                    let cap = inst.nodes[node.0].existing_capacity.get(tech.0, yi);
                    self.lp.add_row(
                        format!("hydro_{}_{}_{}_y{}_{}", tech, node, month, year, ScenarioId(s)),
                        coeffs,
                        NEG_INF,
                        cap * budget,
                    )?;
                }
            }
        }
        Ok(())
    }

    /// flow <= NTC + y on expandable corridors.
    fn add_flow_rows(&mut self) -> Result<(), ModelError> {
        let inst = self.inst;
        for (l, link) in inst.links.iter().enumerate() {
            if !self.has_ntc_invest(l) {
                continue;
            }
            for s in 0..inst.scenarios.len() {
                for (yi, year) in inst.years.iter().enumerate() {
                    let y_col = self
                        .col(&VarKey::NtcInvest { from: link.from, to: link.to, year: *year })
                        .expect("ntc invest column");
                    for t in 0..inst.hours.len() {
                        let Some(f) = self.col(&VarKey::Flow {
                            from: link.from,
                            to: link.to,
                            hour: HourId(t),
                            year: *year,
                            scenario: ScenarioId(s),
                        }) else {
                            continue;
                        };
                        self.lp.add_row(
                            format!(
                                "fcap_{}_{}_{}_y{}_{}",
                                link.from,
                                link.to,
                                HourId(t),
                                year,
                                ScenarioId(s)
                            ),
                            alloc::vec![(f, 1.0), (y_col, -1.0)],
                            NEG_INF,
                            link.ntc[yi],
                        )?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Investment is cumulative and irreversible: value_y <= value_{y+1}.
    fn add_irreversibility_rows(&mut self) -> Result<(), ModelError> {
        use alloc::string::ToString;
        let years = self.inst.years.clone();
        if years.len() < 2 {
            return Ok(());
        }
        let invests: Vec<VarKey> =
            self.catalog.keys().iter().filter(|k| k.is_investment()).copied().collect();
        for key in invests {
            let (year, successor): (Year, VarKey) = match key {
                VarKey::GenInvest { tech, node, year } => {
                    let Some(next) = next_year(&years, year) else { continue };
                    (year, VarKey::GenInvest { tech, node, year: next })
                }
                VarKey::NtcInvest { from, to, year } => {
                    let Some(next) = next_year(&years, year) else { continue };
                    (year, VarKey::NtcInvest { from, to, year: next })
                }
                VarKey::PspInvest { tech, node, year } => {
                    let Some(next) = next_year(&years, year) else { continue };
                    (year, VarKey::PspInvest { tech, node, year: next })
                }
                _ => continue,
            };
            let _ = year;
            let (Some(cur), Some(next)) = (self.col(&key), self.col(&successor)) else {
                continue;
            };
            self.lp.add_row(
                format!("irr_{}", key.to_string()),
                alloc::vec![(cur, 1.0), (next, -1.0)],
                NEG_INF,
                0.0,
            )?;
        }
        Ok(())
    }

    /// Optional equality linking both directions of a corridor's expansion.
    fn add_symmetry_rows(&mut self) -> Result<(), ModelError> {
        if !self.inst.symmetric_ntc_expansion || self.ntc_scale.is_none() {
            return Ok(());
        }
        let inst = self.inst;
        for (l, link) in inst.links.iter().enumerate() {
            if !self.has_ntc_invest(l) || link.from >= link.to {
                continue;
            }
            // Find the reverse corridor, if it is also expandable.
            let reverse_exists = inst
                .links
                .iter()
                .enumerate()
                .any(|(k, other)| self.has_ntc_invest(k) && other.from == link.to && other.to == link.from);
            if !reverse_exists {
                continue;
            }
            for year in &inst.years {
                let fwd = self.col(&VarKey::NtcInvest { from: link.from, to: link.to, year: *year });
                let bwd = self.col(&VarKey::NtcInvest { from: link.to, to: link.from, year: *year });
                if let (Some(a), Some(b)) = (fwd, bwd) {
                    self.lp.add_row(
                        format!("sym_{}_{}_y{}", link.from, link.to, year),
                        alloc::vec![(a, 1.0), (b, -1.0)],
                        0.0,
                        0.0,
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// The modeled year immediately after `year`, if any.
fn next_year(years: &[Year], year: Year) -> Option<Year> {
    let pos = years.iter().position(|y| *y == year)?;
    years.get(pos + 1).copied()
}

// ---------------------------------------------------------------------------
// First-stage pinning and solution extraction
// ---------------------------------------------------------------------------

/// Returns a copy of the model with the listed first-stage variables fixed.
///
/// Keys must name investment variables present in the catalog, and values
/// must lie within the variables' original bounds. Pinning everything from a
/// previous solution turns the model into a pure dispatch problem.
pub fn fix_first_stage(
    model: &PlanModel,
    investments: &BTreeMap<VarKey, f64>,
) -> Result<PlanModel, ModelError> {
    use alloc::string::ToString;
    let mut out = model.clone();
    for (key, value) in investments {
        if !key.is_investment() {
            return Err(ModelError::NotAnInvestment(key.to_string()));
        }
        let col = out.catalog.col(key).ok_or_else(|| ModelError::UnknownKey(key.to_string()))?;
        out.lp
            .fix_col(col, *value)
            .map_err(|_| ModelError::PinOutsideBounds(key.to_string()))?;
    }
    Ok(out)
}

/// A solved plan: first-stage investments, dispatch, costs and risk figures.
#[derive(Clone, Debug)]
pub struct PlanSolution {
    pub status: SolveStatus,
    /// Optimal objective value TC.
    pub objective: f64,
    /// Discounted annualised investment cost IC, recomputed from the primal.
    pub invest_cost: f64,
    pub investments: BTreeMap<VarKey, f64>,
    pub dispatch: BTreeMap<VarKey, f64>,
    /// Discounted operating cost per scenario.
    pub op_cost: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// Canonical CVaR threshold (smallest minimiser).
    pub threshold: f64,
    /// Canonical per-scenario excess above the threshold.
    pub excess: Vec<f64>,
    /// CVaR of the operating cost at the model's alpha.
    pub cvar: f64,
    pub omega: f64,
    pub alpha: f64,
    /// Expected weighted lost-load energy, MWh.
    pub lost_load: f64,
    /// Dual value per LP row, in row order.
    pub row_duals: Vec<f64>,
    pub iterations: usize,
}

impl PlanSolution {
    /// Expected operating cost over scenarios.
    pub fn expected_op_cost(&self) -> f64 {
        self.op_cost.iter().zip(&self.probabilities).map(|(c, p)| c * p).sum()
    }
}

/// Interprets a solver report, verifying feasibility and cost identities.
///
/// Operating costs are recomputed from the primal dispatch with the
/// instance's price data and must match the LP's `oc_s` columns within
/// [`INTEGRITY_TOL`]. The CVaR block is canonicalised: threshold and
/// excesses are recomputed from the operating costs, which pins down values
/// the LP leaves indeterminate (for example the whole block at omega = 0).
pub fn extract(
    model: &PlanModel,
    instance: &PlanningInstance,
    report: &SolveReport,
) -> Result<PlanSolution, ModelError> {
    use alloc::string::ToString;
    if report.status != SolveStatus::Optimal {
        return Err(ModelError::NotOptimal(report.status));
    }
    let v = &report.primal;
    let violation = model.lp.max_violation(v);
    if violation > INTEGRITY_TOL {
        return Err(ModelError::Integrity(format!(
            "primal violates constraints by {violation:e} (tolerance {INTEGRITY_TOL:e})"
        )));
    }

    let ns = instance.scenarios.len();
    let probs = instance.scenarios.probabilities();
    let merit = demand::build_merit_order(&instance.nodes, &model.flex)?;

    let mut investments = BTreeMap::new();
    let mut dispatch = BTreeMap::new();
    let mut oc_recomputed = alloc::vec![0.0; ns];
    let mut lost_load = 0.0;

    for (key, col) in model.catalog.iter() {
        let value = v[col];
        if key.is_investment() {
            investments.insert(*key, value);
        } else if key.is_dispatch() {
            dispatch.insert(*key, value);
        }
        // Recompute scenario operating costs from dispatch quantities.
        match key {
            VarKey::Generation { tech, node: _, hour, year, scenario } => {
                let yi = instance.year_index(*year).expect("year in instance");
                let df = finance::discount_factor(*year, &instance.finance)?;
                let w = instance.hours[hour.0].weight;
                let sc = &instance.scenarios.scenarios()[scenario.0];
                let t = &instance.technologies[tech.0];
                let fuel_price = t.fuel.map(|f| sc.fuel_prices.get(f.0, yi)).unwrap_or(0.0);
                let vc = finance::marginal_cost(t, fuel_price, sc.co2_price[yi])?;
                oc_recomputed[scenario.0] += df * w * vc * value;
            }
            VarKey::Shed { sector, node, hour, year, scenario } => {
                let df = finance::discount_factor(*year, &instance.finance)?;
                let w = instance.hours[hour.0].weight;
                let step = merit
                    .node_steps(*node)?
                    .iter()
                    .find(|s| s.sector == *sector)
                    .copied()
                    .ok_or_else(|| ModelError::UnknownKey(key.to_string()))?;
                oc_recomputed[scenario.0] += df * w * step.vola * value;
            }
            VarKey::LostLoad { node: _, hour, year, scenario } => {
                let df = finance::discount_factor(*year, &instance.finance)?;
                let w = instance.hours[hour.0].weight;
                let penalty = instance.lost_load_penalty.unwrap_or(0.0);
                oc_recomputed[scenario.0] += df * w * penalty * value;
                lost_load += probs[scenario.0] * w * value;
            }
            _ => {}
        }
    }

    let mut op_cost = alloc::vec![0.0; ns];
    for s in 0..ns {
        let col = model
            .catalog
            .col(&VarKey::OpCost { scenario: ScenarioId(s) })
            .expect("opcost column");
        op_cost[s] = v[col];
        let denom = 1.0f64.max(op_cost[s].abs());
        if (op_cost[s] - oc_recomputed[s]).abs() > INTEGRITY_TOL * denom {
            return Err(ModelError::Integrity(format!(
                "operating cost of scenario {s} disagrees with dispatch: {} vs {}",
                op_cost[s], oc_recomputed[s]
            )));
        }
    }

    // Investment cost from the primal investment levels.
    let mut invest_cost = 0.0;
    for (key, value) in &investments {
        let (annuity, year) = match key {
            VarKey::GenInvest { tech, node: _, year } => {
                let t = &instance.technologies[tech.0];
                (finance::annuity(t.capex, instance.finance.interest_rate, t.lifetime)?, *year)
            }
            VarKey::NtcInvest { from, to, year } => {
                let link = instance
                    .links
                    .iter()
                    .find(|l| l.from == *from && l.to == *to)
                    .ok_or_else(|| ModelError::UnknownKey(key.to_string()))?;
                let scale = match model.flex.ntc {
                    Expansion::On { capex_scale } => capex_scale,
                    Expansion::Off => 1.0,
                };
                (
                    finance::annuity(
                        link.expansion_capex * scale,
                        instance.finance.interest_rate,
                        link.lifetime,
                    )?,
                    *year,
                )
            }
            VarKey::PspInvest { tech, node: _, year } => {
                let t = &instance.technologies[tech.0];
                let scale = match model.flex.psp {
                    Expansion::On { capex_scale } => capex_scale,
                    Expansion::Off => 1.0,
                };
                (
                    finance::annuity(
                        t.capex * scale,
                        instance.finance.interest_rate,
                        t.lifetime,
                    )?,
                    *year,
                )
            }
            _ => unreachable!("investments map only holds investment keys"),
        };
        let df = finance::discount_factor(year, &instance.finance)?;
        invest_cost += df * annuity * value;
    }

    // Canonical CVaR block from the operating-cost vector.
    let alpha = model.risk.alpha;
    let omega = if model.risk_rows { model.risk.omega } else { 0.0 };
    let (cvar, threshold) = crate::report::cvar_discrete(&op_cost, &probs, alpha);
    let excess: Vec<f64> = op_cost.iter().map(|c| (c - threshold).max(0.0)).collect();

    if model.risk_rows && omega > 0.0 {
        let lp_cvar = v[model.catalog.col(&VarKey::Cvar).expect("cvar column")];
        let denom = 1.0f64.max(cvar.abs());
        if (lp_cvar - cvar).abs() > INTEGRITY_TOL * denom {
            return Err(ModelError::Integrity(format!(
                "LP cvar {lp_cvar} disagrees with the closed form {cvar}"
            )));
        }
    }

    // Objective decomposition must reproduce the solver's objective.
    let expected: f64 = op_cost.iter().zip(&probs).map(|(c, p)| c * p).sum();
    let tc = invest_cost + (1.0 - omega) * expected + omega * cvar;
    let denom = 1.0f64.max(report.objective.abs());
    if (tc - report.objective).abs() > INTEGRITY_TOL * denom {
        return Err(ModelError::Integrity(format!(
            "objective decomposition {tc} disagrees with solver objective {}",
            report.objective
        )));
    }

    Ok(PlanSolution {
        status: report.status,
        objective: report.objective,
        invest_cost,
        investments,
        dispatch,
        op_cost,
        probabilities: probs,
        threshold,
        excess,
        cvar,
        omega,
        alpha,
        lost_load,
        row_duals: report.row_duals.clone(),
        iterations: report.iterations,
    })
}
