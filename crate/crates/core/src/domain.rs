//! Problem data for the planning model.
//!
//! A [`PlanningInstance`] is a complete, immutable description of one
//! planning problem: the sets (technologies, nodes, sectors, years,
//! representative hours, interconnectors), the scenario set for the
//! uncertain stage, and global settings. All quantities use plain SI-ish
//! market units: MW for capacity, MWh for energy, EUR/MWh for prices and
//! EUR/MW for capital expenditure. Instances declare a single currency
//! basis; no deflation between currency years is performed.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

macro_rules! index_id {
    ($(#[$doc:meta])* $name:ident, $prefix:literal) => {
        $(#[$doc])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub usize);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

index_id!(
    /// Index of a technology in [`PlanningInstance::technologies`].
    TechId, "i"
);
index_id!(
    /// Index of a market node in [`PlanningInstance::nodes`].
    NodeId, "n"
);
index_id!(
    /// Index of a demand sector in [`PlanningInstance::sectors`].
    SectorId, "sec"
);
index_id!(
    /// Index of a fuel in [`PlanningInstance::fuels`].
    FuelId, "f"
);
index_id!(
    /// Index of a representative hour in [`PlanningInstance::hours`].
    HourId, "t"
);
index_id!(
    /// Position of a scenario in its [`crate::scenario::ScenarioSet`].
    ScenarioId, "s"
);

/// A modeled calendar year.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Year(pub u32);

impl fmt::Display for Year {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Calendar month, 1..=12. Maps representative hours to hydro budgets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthId(pub u8);

impl fmt::Display for MonthId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

// ---------------------------------------------------------------------------
// Dense index grids
// ---------------------------------------------------------------------------

/// Dense row-major 2-d table of f64, used for per-(a, b) parameter data.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2 {
    d0: usize,
    d1: usize,
    data: Vec<f64>,
}

impl Grid2 {
    pub fn zeros(d0: usize, d1: usize) -> Self {
        Self { d0, d1, data: alloc::vec![0.0; d0 * d1] }
    }

    pub fn from_vec(d0: usize, d1: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), d0 * d1, "grid data length mismatch");
        Self { d0, d1, data }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d0, self.d1)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.d0 && j < self.d1);
        self.data[i * self.d1 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.d0 && j < self.d1);
        self.data[i * self.d1 + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Dense row-major 3-d table of f64.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid3 {
    d0: usize,
    d1: usize,
    d2: usize,
    data: Vec<f64>,
}

impl Grid3 {
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Self { d0, d1, d2, data: alloc::vec![0.0; d0 * d1 * d2] }
    }

    pub fn from_vec(d0: usize, d1: usize, d2: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), d0 * d1 * d2, "grid data length mismatch");
        Self { d0, d1, d2, data }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.d0, self.d1, self.d2)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        debug_assert!(i < self.d0 && j < self.d1 && k < self.d2);
        self.data[(i * self.d1 + j) * self.d2 + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        debug_assert!(i < self.d0 && j < self.d1 && k < self.d2);
        self.data[(i * self.d1 + j) * self.d2 + k] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

// ---------------------------------------------------------------------------
// Technologies
// ---------------------------------------------------------------------------

/// Broad technology class; drives which constraints apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TechKind {
    /// Dispatchable fuel-burning plant (gas, coal, nuclear, ...).
    Thermal,
    /// Pumped-storage plant: turbine generation, pumping and a basin.
    Psp,
    /// Hydro reservoir, constrained by a monthly water budget.
    HydroReservoir,
    /// Intermittent renewable (wind, solar); capacity is scenario data.
    IntermittentRes,
    /// Other renewables on a fixed expansion path (run-of-river, biomass).
    OtherRes,
}

impl TechKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TechKind::Thermal => "thermal",
            TechKind::Psp => "psp",
            TechKind::HydroReservoir => "hydro_reservoir",
            TechKind::IntermittentRes => "intermittent_res",
            TechKind::OtherRes => "other_res",
        }
    }
}

/// Hourly availability of a technology.
#[derive(Clone, Debug, PartialEq)]
pub enum Availability {
    /// Same factor in every node and hour, in (0, 1].
    Constant(f64),
    /// Per (node, hour) feed-in profile in [0, 1], year-independent.
    Profile(Grid2),
}

/// A generation or storage technology.
#[derive(Clone, Debug, PartialEq)]
pub struct Technology {
    pub label: String,
    pub kind: TechKind,
    /// Fuel burned per MWh of electricity; `None` means no fuel cost.
    pub fuel: Option<FuelId>,
    /// Conversion efficiency eta in (0, 1]. For PSP this is the round-trip
    /// pumping efficiency applied when charging the basin.
    pub efficiency: f64,
    /// tCO2 per MWh of fuel burned.
    pub emission_factor: f64,
    /// Additive variable O&M cost, EUR per MWh electric.
    pub vom: f64,
    /// Overnight capital expenditure, EUR per MW.
    pub capex: f64,
    /// Economic lifetime in years, >= 1.
    pub lifetime: u32,
    /// Whether endogenous investment in this technology is allowed at all.
    pub investable: bool,
    /// Marker used by reports to separate clean from emitting capacity.
    pub emission_free: bool,
    pub availability: Availability,
}

impl Technology {
    /// Availability factor for (node, hour); constant kinds ignore both.
    pub fn availability_at(&self, node: NodeId, hour: HourId) -> f64 {
        match &self.availability {
            Availability::Constant(a) => *a,
            Availability::Profile(grid) => grid.get(node.0, hour.0),
        }
    }
}

/// A fuel; prices are scenario data.
#[derive(Clone, Debug, PartialEq)]
pub struct Fuel {
    pub label: String,
}

/// A demand sector (industry branch, households, ...).
#[derive(Clone, Debug, PartialEq)]
pub struct Sector {
    pub label: String,
}

// ---------------------------------------------------------------------------
// Nodes and interconnectors
// ---------------------------------------------------------------------------

/// A market node (bidding zone); holds capacities and sectoral demand split.
#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub label: String,
    /// Existing capacity CAP per (tech, year), MW. For intermittent
    /// renewables the scenario-specific capacity overrides this.
    pub existing_capacity: Grid2,
    /// Upper bound on cumulative investment per (tech, year), MW. Zero
    /// forbids investment; per-year values express phased restrictions
    /// such as allowing only fast-build technologies early on.
    pub invest_cap: Grid2,
    /// Upper bound on cumulative pumped-storage investment, MW.
    pub psp_invest_cap: f64,
    /// Share of hourly demand attributable to each sector; sums to 1.
    pub sector_shares: Vec<f64>,
    /// Value of lack of adequacy per sector, EUR/MWh, strictly positive
    /// wherever the sector share is positive.
    pub sector_vola: Vec<f64>,
}

/// A directed cross-border transfer corridor.
#[derive(Clone, Debug, PartialEq)]
pub struct Interconnector {
    pub from: NodeId,
    pub to: NodeId,
    /// Existing net transfer capacity per year, MW.
    pub ntc: Vec<f64>,
    /// Capital expenditure of endogenous expansion, EUR per MW.
    pub expansion_capex: f64,
    /// Whether endogenous expansion of this corridor is allowed.
    pub expandable: bool,
    /// Lifetime used to annuitise the expansion capex.
    pub lifetime: u32,
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// One realisation of the uncertain parameters with its probability.
///
/// The four uncertain parameter groups are demand, installed intermittent
/// renewable capacity, fuel prices and the CO2 price. Values for years
/// before the uncertainty onset are identical in every scenario of a set.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub label: String,
    pub probability: f64,
    /// Demand per (node, year, hour), MWh.
    pub demand: Grid3,
    /// Installed intermittent renewable capacity per (tech, node, year), MW.
    pub res_capacity: Grid3,
    /// Fuel price per (fuel, year), EUR per MWh of fuel.
    pub fuel_prices: Grid2,
    /// CO2 certificate price per year, EUR per tCO2.
    pub co2_price: Vec<f64>,
    /// Number of values clamped to zero when this scenario was produced by
    /// extrapolation. Zero for anchor data.
    pub clamp_count: u64,
}

impl Scenario {
    /// Checks that two scenarios cover identical index spaces.
    pub fn index_compatible(&self, other: &Scenario) -> bool {
        self.demand.dims() == other.demand.dims()
            && self.res_capacity.dims() == other.res_capacity.dims()
            && self.fuel_prices.dims() == other.fuel_prices.dims()
            && self.co2_price.len() == other.co2_price.len()
    }
}

// ---------------------------------------------------------------------------
// Settings
// ---------------------------------------------------------------------------

/// Risk preference of the planner.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiskSettings {
    /// Weight on the CVaR term in the objective; 0 is risk-neutral,
    /// values close to 1 are strongly risk-averse.
    pub omega: f64,
    /// CVaR tail level in (0, 1): the (1 - alpha) worst outcomes count.
    pub alpha: f64,
}

impl RiskSettings {
    pub fn new(omega: f64, alpha: f64) -> Result<Self, DomainError> {
        if !(0.0..=1.0).contains(&omega) || !omega.is_finite() {
            return Err(DomainError::OmegaOutOfRange(omega));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(DomainError::AlphaOutOfRange(alpha));
        }
        Ok(Self { omega, alpha })
    }
}

/// Interest and discounting assumptions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FinanceSettings {
    /// Interest rate per year used to annuitise capital expenditure.
    pub interest_rate: f64,
    /// Discount rate per year applied to future cost terms.
    pub discount_rate: f64,
    /// Year with discount factor 1.
    pub base_year: Year,
}

impl Default for FinanceSettings {
    fn default() -> Self {
        Self { interest_rate: 0.06, discount_rate: 0.06, base_year: Year(2020) }
    }
}

/// Demand response availability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DemandResponse {
    /// Demand is inelastic; shedding variables are not created. A lost-load
    /// slack keeps the model feasible unless the instance disables it.
    Off,
    /// Shedding is available; every VoLA is multiplied by the factor
    /// (5 = expensive, 1 = as estimated, 0.5 = cheap).
    Scaled(f64),
}

/// Whether endogenous capacity expansion of an asset class is allowed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Expansion {
    Off,
    /// Allowed, with capex multiplied by the scale factor.
    On { capex_scale: f64 },
}

/// Which flexibility options the planner may use.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlexibilitySettings {
    pub demand: DemandResponse,
    pub ntc: Expansion,
    pub psp: Expansion,
    /// Replace node-specific VoLAs by their cross-node sector average.
    pub european_merit_order: bool,
}

impl Default for FlexibilitySettings {
    fn default() -> Self {
        Self {
            demand: DemandResponse::Off,
            ntc: Expansion::Off,
            psp: Expansion::Off,
            european_merit_order: false,
        }
    }
}

impl FlexibilitySettings {
    pub fn validate(&self) -> Result<(), DomainError> {
        if let DemandResponse::Scaled(f) = self.demand {
            if !(f > 0.0) || !f.is_finite() {
                return Err(DomainError::NonpositiveScale(f));
            }
        }
        for mode in [self.ntc, self.psp] {
            if let Expansion::On { capex_scale } = mode {
                if !(capex_scale > 0.0) || !capex_scale.is_finite() {
                    return Err(DomainError::NonpositiveScale(capex_scale));
                }
            }
        }
        Ok(())
    }
}

/// A representative operational hour.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HourSpec {
    /// Weight extrapolating this hour to annual energy; with `|T|` hours the
    /// natural default is 8760 / |T|.
    pub weight: f64,
    /// Month this hour belongs to, for monthly hydro budgets.
    pub month: MonthId,
}

// ---------------------------------------------------------------------------
// The instance
// ---------------------------------------------------------------------------

/// A complete, validated planning problem.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanningInstance {
    pub name: String,
    /// Currency basis declared by the instance, e.g. "EUR2020".
    pub currency: String,
    pub technologies: Vec<Technology>,
    pub fuels: Vec<Fuel>,
    pub sectors: Vec<Sector>,
    pub nodes: Vec<Node>,
    pub links: Vec<Interconnector>,
    /// Modeled years, strictly ascending.
    pub years: Vec<Year>,
    /// First year from which parameters are uncertain; years before it carry
    /// identical data in every scenario.
    pub uncertain_from: Year,
    pub hours: Vec<HourSpec>,
    pub scenarios: crate::scenario::ScenarioSet,
    pub finance: FinanceSettings,
    /// Full-load hours a fully charged storage basin can generate.
    pub capacity_power_factor: f64,
    /// Penalty for the lost-load slack used when demand response is off;
    /// `None` removes the slack so infeasible instances are reported as such.
    pub lost_load_penalty: Option<f64>,
    /// Wrap the storage balance around the hour horizon instead of starting
    /// from an empty basin.
    pub cyclic_storage: bool,
    /// Force equal expansion in both directions of each corridor pair.
    pub symmetric_ntc_expansion: bool,
    /// Monthly generation budget for hydro reservoirs in full-load hours per
    /// (tech, node, month).
    pub hydro_budget: BTreeMap<(TechId, NodeId, MonthId), f64>,
}

impl PlanningInstance {
    /// Number of leading years that are certain (identical across scenarios).
    pub fn certain_year_count(&self) -> usize {
        self.years.iter().take_while(|y| **y < self.uncertain_from).count()
    }

    pub fn year_index(&self, year: Year) -> Option<usize> {
        self.years.iter().position(|y| *y == year)
    }

    /// Effective availability factor AF for (tech, node, hour).
    pub fn availability(&self, tech: TechId, node: NodeId, hour: HourId) -> f64 {
        self.technologies[tech.0].availability_at(node, hour)
    }

    /// Validates every structural invariant, collecting all violations.
    pub fn validate(&self) -> Result<(), Vec<ValidationIssue>> {
        let mut issues = Vec::new();
        validate_instance(self, &mut issues);
        if issues.iter().any(|i| i.severity == Severity::Error) {
            Err(issues)
        } else {
            Ok(())
        }
    }

    /// Like [`Self::validate`] but returns warnings as well.
    pub fn validate_verbose(&self) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        validate_instance(self, &mut issues);
        issues
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Machine-readable validation codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IssueCode {
    ShareSum,
    UnresolvedRef,
    BadRange,
    HourWeight,
    ProbabilitySum,
    FirstStageMismatch,
    IndexMismatch,
    DuplicateLabel,
    EmptySet,
    NotInvestable,
    LostLoadPenalty,
}

impl IssueCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            IssueCode::ShareSum => "SHARE_SUM",
            IssueCode::UnresolvedRef => "UNRESOLVED_REF",
            IssueCode::BadRange => "BAD_RANGE",
            IssueCode::HourWeight => "HOUR_WEIGHT",
            IssueCode::ProbabilitySum => "PROBABILITY_SUM",
            IssueCode::FirstStageMismatch => "FIRST_STAGE_MISMATCH",
            IssueCode::IndexMismatch => "INDEX_MISMATCH",
            IssueCode::DuplicateLabel => "DUPLICATE_LABEL",
            IssueCode::EmptySet => "EMPTY_SET",
            IssueCode::NotInvestable => "NOT_INVESTABLE",
            IssueCode::LostLoadPenalty => "LOST_LOAD_PENALTY",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// One validation finding with its location spelled out.
#[derive(Clone, Debug)]
pub struct ValidationIssue {
    pub code: IssueCode,
    pub severity: Severity,
    pub message: String,
}

impl ValidationIssue {
    fn error(code: IssueCode, message: String) -> Self {
        Self { code, severity: Severity::Error, message }
    }

    fn warning(code: IssueCode, message: String) -> Self {
        Self { code, severity: Severity::Warning, message }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{} [{}]: {}", sev, self.code, self.message)
    }
}

const SHARE_SUM_TOL: f64 = 1e-9;
const PROB_SUM_TOL: f64 = 1e-12;

fn validate_instance(inst: &PlanningInstance, issues: &mut Vec<ValidationIssue>) {
    use alloc::format;

    let nt = inst.technologies.len();
    let nn = inst.nodes.len();
    let ny = inst.years.len();
    let nh = inst.hours.len();
    let nf = inst.fuels.len();
    let ns = inst.sectors.len();

    if nn == 0 || nt == 0 || ny == 0 || nh == 0 {
        issues.push(ValidationIssue::error(
            IssueCode::EmptySet,
            format!("instance needs at least one node, technology, year and hour (got {nn}/{nt}/{ny}/{nh})"),
        ));
        return;
    }
    if inst.scenarios.scenarios().is_empty() {
        issues.push(ValidationIssue::error(
            IssueCode::EmptySet,
            String::from("scenario set is empty"),
        ));
        return;
    }

    // Years strictly ascending.
    for w in inst.years.windows(2) {
        if w[0] >= w[1] {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("years must be strictly ascending, got {} before {}", w[0], w[1]),
            ));
        }
    }

    // Duplicate labels.
    for (what, labels) in [
        ("technology", inst.technologies.iter().map(|t| t.label.as_str()).collect::<Vec<_>>()),
        ("node", inst.nodes.iter().map(|n| n.label.as_str()).collect()),
        ("fuel", inst.fuels.iter().map(|x| x.label.as_str()).collect()),
        ("sector", inst.sectors.iter().map(|x| x.label.as_str()).collect()),
    ] {
        let mut seen = alloc::collections::BTreeSet::new();
        for l in labels {
            if !seen.insert(l) {
                issues.push(ValidationIssue::error(
                    IssueCode::DuplicateLabel,
                    format!("duplicate {what} label '{l}'"),
                ));
            }
        }
    }

    // Technologies.
    for (i, tech) in inst.technologies.iter().enumerate() {
        if !(tech.efficiency > 0.0 && tech.efficiency <= 1.0) {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("technology '{}': efficiency {} outside (0, 1]", tech.label, tech.efficiency),
            ));
        }
        if tech.capex < 0.0 || !tech.capex.is_finite() {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("technology '{}': capex {} must be >= 0", tech.label, tech.capex),
            ));
        }
        if tech.lifetime < 1 {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("technology '{}': lifetime must be >= 1 year", tech.label),
            ));
        }
        if tech.emission_factor < 0.0 {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("technology '{}': emission factor must be >= 0", tech.label),
            ));
        }
        if matches!(tech.kind, TechKind::IntermittentRes | TechKind::HydroReservoir) && tech.investable {
            issues.push(ValidationIssue::error(
                IssueCode::NotInvestable,
                format!(
                    "technology '{}' of kind {} follows an exogenous expansion path and cannot be investable",
                    tech.label,
                    tech.kind.as_str()
                ),
            ));
        }
        if let Some(fuel) = tech.fuel {
            if fuel.0 >= nf {
                issues.push(ValidationIssue::error(
                    IssueCode::UnresolvedRef,
                    format!("technology '{}' references unknown fuel {}", tech.label, fuel),
                ));
            }
        }
        match &tech.availability {
            Availability::Constant(a) => {
                if !(*a > 0.0 && *a <= 1.0) {
                    issues.push(ValidationIssue::error(
                        IssueCode::BadRange,
                        format!("technology '{}': availability {} outside (0, 1]", tech.label, a),
                    ));
                }
            }
            Availability::Profile(grid) => {
                if grid.dims() != (nn, nh) {
                    issues.push(ValidationIssue::error(
                        IssueCode::IndexMismatch,
                        format!(
                            "technology '{}': availability profile is {:?}, expected ({nn}, {nh})",
                            tech.label,
                            grid.dims()
                        ),
                    ));
                } else if grid.data().iter().any(|a| !(0.0..=1.0).contains(a)) {
                    issues.push(ValidationIssue::error(
                        IssueCode::BadRange,
                        format!("technology '{}': profile values outside [0, 1]", tech.label),
                    ));
                }
            }
        }
    }

    // Nodes.
    for node in &inst.nodes {
        if node.existing_capacity.dims() != (nt, ny) {
            issues.push(ValidationIssue::error(
                IssueCode::IndexMismatch,
                format!(
                    "node '{}': existing capacity table is {:?}, expected ({nt}, {ny})",
                    node.label,
                    node.existing_capacity.dims()
                ),
            ));
        }
        if node.invest_cap.dims() != (nt, ny) {
            issues.push(ValidationIssue::error(
                IssueCode::IndexMismatch,
                format!(
                    "node '{}': investment cap table is {:?}, expected ({nt}, {ny})",
                    node.label,
                    node.invest_cap.dims()
                ),
            ));
        }
        if node.existing_capacity.data().iter().any(|c| *c < 0.0)
            || node.invest_cap.data().iter().any(|c| *c < 0.0)
            || node.psp_invest_cap < 0.0
        {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("node '{}': capacities and caps must be >= 0", node.label),
            ));
        }
        if node.sector_shares.len() != ns || node.sector_vola.len() != ns {
            issues.push(ValidationIssue::error(
                IssueCode::IndexMismatch,
                format!("node '{}': sector tables must cover all {ns} sectors", node.label),
            ));
            continue;
        }
        let share_sum: f64 = node.sector_shares.iter().sum();
        if (share_sum - 1.0).abs() > SHARE_SUM_TOL {
            issues.push(ValidationIssue::error(
                IssueCode::ShareSum,
                format!("node '{}': sector shares sum to {share_sum}, expected 1", node.label),
            ));
        }
        for (s, (&share, &vola)) in node.sector_shares.iter().zip(&node.sector_vola).enumerate() {
            if share < 0.0 {
                issues.push(ValidationIssue::error(
                    IssueCode::BadRange,
                    format!("node '{}': sector {s} share {share} is negative", node.label),
                ));
            }
            if share > 0.0 && !(vola > 0.0) {
                issues.push(ValidationIssue::error(
                    IssueCode::BadRange,
                    format!("node '{}': sector {s} VoLA must be strictly positive", node.label),
                ));
            }
        }
    }

    // Interconnectors.
    for (l, link) in inst.links.iter().enumerate() {
        if link.from.0 >= nn || link.to.0 >= nn {
            issues.push(ValidationIssue::error(
                IssueCode::UnresolvedRef,
                format!("link {l} references unknown node ({} -> {})", link.from, link.to),
            ));
            continue;
        }
        if link.from == link.to {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("link {l} connects node '{}' to itself", inst.nodes[link.from.0].label),
            ));
        }
        if link.ntc.len() != ny {
            issues.push(ValidationIssue::error(
                IssueCode::IndexMismatch,
                format!("link {l}: NTC vector must cover all {ny} years"),
            ));
        }
        if link.ntc.iter().any(|v| *v < 0.0) || link.expansion_capex < 0.0 {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("link {l}: NTC values and capex must be >= 0"),
            ));
        }
        if link.lifetime < 1 {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("link {l}: lifetime must be >= 1 year"),
            ));
        }
    }

    // Hours.
    for (t, hour) in inst.hours.iter().enumerate() {
        if !(hour.weight > 0.0) || !hour.weight.is_finite() {
            issues.push(ValidationIssue::error(
                IssueCode::HourWeight,
                format!("hour {t}: weight {} must be strictly positive", hour.weight),
            ));
        }
        if hour.month.0 < 1 || hour.month.0 > 12 {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("hour {t}: month {} outside 1..=12", hour.month.0),
            ));
        }
    }

    // Hydro budgets.
    for ((tech, node, month), budget) in &inst.hydro_budget {
        if tech.0 >= nt || node.0 >= nn {
            issues.push(ValidationIssue::error(
                IssueCode::UnresolvedRef,
                format!("hydro budget references unknown ({tech}, {node})"),
            ));
            continue;
        }
        if inst.technologies[tech.0].kind != TechKind::HydroReservoir {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!(
                    "hydro budget given for '{}', which is not a hydro reservoir",
                    inst.technologies[tech.0].label
                ),
            ));
        }
        if month.0 < 1 || month.0 > 12 || *budget < 0.0 {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("hydro budget ({tech}, {node}, {month}) out of range"),
            ));
        }
    }

    // Finance and global scalars.
    let fs = &inst.finance;
    if !(0.0..1.0).contains(&fs.interest_rate) || !(0.0..1.0).contains(&fs.discount_rate) {
        issues.push(ValidationIssue::error(
            IssueCode::BadRange,
            format!(
                "interest rate {} and discount rate {} must lie in [0, 1)",
                fs.interest_rate, fs.discount_rate
            ),
        ));
    }
    if inst.years.first().map(|y| *y < fs.base_year).unwrap_or(false) {
        issues.push(ValidationIssue::error(
            IssueCode::BadRange,
            format!("first modeled year {} precedes base year {}", inst.years[0], fs.base_year),
        ));
    }
    if !(inst.capacity_power_factor > 0.0) {
        issues.push(ValidationIssue::error(
            IssueCode::BadRange,
            format!("capacity-power factor {} must be positive", inst.capacity_power_factor),
        ));
    }
    if let Some(pen) = inst.lost_load_penalty {
        if !(pen > 0.0) {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("lost-load penalty {pen} must be positive"),
            ));
        }
    }

    // Scenario set.
    validate_scenarios(inst, issues);

    // Soft check: the lost-load penalty should dominate every per-MWh
    // investment equivalent, otherwise the slack can displace investment.
    if let Some(pen) = inst.lost_load_penalty {
        let min_weight = inst.hours.iter().map(|h| h.weight).fold(f64::INFINITY, f64::min);
        if min_weight.is_finite() && min_weight > 0.0 {
            for tech in &inst.technologies {
                if !tech.investable {
                    continue;
                }
                if let Ok(a) = crate::finance::annuity(tech.capex, fs.interest_rate, tech.lifetime) {
                    if pen < a / min_weight {
                        issues.push(ValidationIssue::warning(
                            IssueCode::LostLoadPenalty,
                            format!(
                                "lost-load penalty {pen} is below the per-MWh annuity equivalent {} of '{}'; the slack may displace investment",
                                a / min_weight,
                                tech.label
                            ),
                        ));
                    }
                }
            }
        }
    }
}

fn validate_scenarios(inst: &PlanningInstance, issues: &mut Vec<ValidationIssue>) {
    use alloc::format;

    let nt = inst.technologies.len();
    let nn = inst.nodes.len();
    let ny = inst.years.len();
    let nh = inst.hours.len();
    let nf = inst.fuels.len();
    let scenarios = inst.scenarios.scenarios();

    let mut prob_sum = 0.0;
    for (s, sc) in scenarios.iter().enumerate() {
        prob_sum += sc.probability;
        if !(0.0..=1.0).contains(&sc.probability) {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("scenario {s} '{}': probability {} outside [0, 1]", sc.label, sc.probability),
            ));
        }
        if sc.demand.dims() != (nn, ny, nh)
            || sc.res_capacity.dims() != (nt, nn, ny)
            || sc.fuel_prices.dims() != (nf, ny)
            || sc.co2_price.len() != ny
        {
            issues.push(ValidationIssue::error(
                IssueCode::IndexMismatch,
                format!("scenario {s} '{}': data tables do not match the instance sets", sc.label),
            ));
            continue;
        }
        let neg = sc.demand.data().iter().chain(sc.res_capacity.data()).any(|v| *v < 0.0)
            || sc.fuel_prices.data().iter().any(|v| *v < 0.0)
            || sc.co2_price.iter().any(|v| *v < 0.0);
        if neg {
            issues.push(ValidationIssue::error(
                IssueCode::BadRange,
                format!("scenario {s} '{}': physical quantities must be >= 0", sc.label),
            ));
        }
    }
    if (prob_sum - 1.0).abs() > PROB_SUM_TOL {
        issues.push(ValidationIssue::error(
            IssueCode::ProbabilitySum,
            format!("scenario probabilities sum to {prob_sum}, expected 1"),
        ));
    }

    // First-stage years must carry bit-identical data in every scenario.
    let certain = inst.certain_year_count();
    if certain > 0 && scenarios.len() > 1 {
        let first = &scenarios[0];
        for (s, sc) in scenarios.iter().enumerate().skip(1) {
            if !sc.index_compatible(first) {
                continue;
            }
            if !first_stage_equal(first, sc, certain) {
                issues.push(ValidationIssue::error(
                    IssueCode::FirstStageMismatch,
                    format!(
                        "scenario {s} '{}' differs from '{}' in certain years before {}",
                        sc.label, first.label, inst.uncertain_from
                    ),
                ));
            }
        }
    }
}

/// Bitwise comparison of the first `certain` years of all data groups.
pub fn first_stage_equal(a: &Scenario, b: &Scenario, certain: usize) -> bool {
    let (nn, ny, nh) = a.demand.dims();
    let (nt, _, _) = a.res_capacity.dims();
    let (nf, _) = a.fuel_prices.dims();
    for y in 0..certain.min(ny) {
        for n in 0..nn {
            for t in 0..nh {
                if a.demand.get(n, y, t).to_bits() != b.demand.get(n, y, t).to_bits() {
                    return false;
                }
            }
        }
        for i in 0..nt {
            for n in 0..nn {
                if a.res_capacity.get(i, n, y).to_bits() != b.res_capacity.get(i, n, y).to_bits() {
                    return false;
                }
            }
        }
        for f in 0..nf {
            if a.fuel_prices.get(f, y).to_bits() != b.fuel_prices.get(f, y).to_bits() {
                return false;
            }
        }
        if a.co2_price[y].to_bits() != b.co2_price[y].to_bits() {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Errors raised by domain-level constructors and operations.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainError {
    OmegaOutOfRange(f64),
    AlphaOutOfRange(f64),
    NonpositiveScale(f64),
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainError::OmegaOutOfRange(w) => write!(f, "omega {w} outside [0, 1]"),
            DomainError::AlphaOutOfRange(a) => write!(f, "alpha {a} outside (0, 1)"),
            DomainError::NonpositiveScale(s) => write!(f, "scale factor {s} must be positive"),
        }
    }
}

impl core::error::Error for DomainError {}
