//! Scenario set construction by inter- and extrapolation of anchors.
//!
//! The uncertain stage is described by three anchor scenarios. The full set
//! is generated from them: the anchors themselves, linear blends of every
//! anchor pair at a list of weighting factors, the expected-value scenario
//! (element-wise mean of the anchors) and the midpoint between each anchor
//! and the expected value. With the default factors this yields
//! 3 + 3*5 + 1 + 3 = 22 scenarios with uniform probabilities.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::{first_stage_equal, Scenario};

/// Default pair-blending factors.
pub const DEFAULT_FACTORS: [f64; 5] = [-0.10, 0.33, 0.50, 0.67, 1.10];

/// The three anchor scenarios plus the number of leading certain years.
///
/// Anchor data for the certain years must be bit-identical; derived
/// scenarios copy that block unchanged so every scenario path starts from
/// the same first-stage assumptions.
#[derive(Clone, Debug)]
pub struct AnchorSet {
    anchors: [Scenario; 3],
    certain_years: usize,
}

/// Errors from scenario construction.
#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioError {
    IndexMismatch,
    FirstStageMismatch,
    BadProbability(f64),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::IndexMismatch => {
                write!(f, "scenarios cover different index sets and cannot be combined")
            }
            ScenarioError::FirstStageMismatch => {
                write!(f, "anchor scenarios disagree on first-stage (certain) years")
            }
            ScenarioError::BadProbability(p) => write!(f, "probability {p} outside [0, 1]"),
        }
    }
}

impl core::error::Error for ScenarioError {}

impl AnchorSet {
    pub fn new(anchors: [Scenario; 3], certain_years: usize) -> Result<Self, ScenarioError> {
        let [a, b, c] = &anchors;
        if !a.index_compatible(b) || !a.index_compatible(c) {
            return Err(ScenarioError::IndexMismatch);
        }
        if !(first_stage_equal(a, b, certain_years) && first_stage_equal(a, c, certain_years)) {
            return Err(ScenarioError::FirstStageMismatch);
        }
        Ok(Self { anchors, certain_years })
    }

    pub fn anchors(&self) -> &[Scenario; 3] {
        &self.anchors
    }

    pub fn certain_years(&self) -> usize {
        self.certain_years
    }
}

/// An ordered scenario sequence with probabilities summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSet {
    scenarios: Vec<Scenario>,
    /// Set when duplicate blending factors were dropped during construction.
    dedup_warning: bool,
}

impl ScenarioSet {
    /// Wraps externally supplied scenarios, checking the probability sum.
    pub fn from_scenarios(scenarios: Vec<Scenario>) -> Result<Self, ScenarioError> {
        let sum: f64 = scenarios.iter().map(|s| s.probability).sum();
        if scenarios.is_empty() || (sum - 1.0).abs() > 1e-12 {
            return Err(ScenarioError::BadProbability(sum));
        }
        Ok(Self { scenarios, dedup_warning: false })
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.probability).collect()
    }

    pub fn dedup_warning(&self) -> bool {
        self.dedup_warning
    }

    /// Total number of values clamped to zero during construction.
    pub fn clamp_count(&self) -> u64 {
        self.scenarios.iter().map(|s| s.clamp_count).sum()
    }
}

/// Linear blend `lambda * a + (1 - lambda) * b` of all uncertain data.
///
/// Factors outside [0, 1] extrapolate beyond the anchor pair; any negative
/// result is clamped to zero and counted in the result's `clamp_count`.
/// Certain-year data are copied bit-for-bit from `a` (both anchors agree on
/// them by construction).
pub fn blend(
    a: &Scenario,
    b: &Scenario,
    lambda: f64,
    certain_years: usize,
) -> Result<Scenario, ScenarioError> {
    if !a.index_compatible(b) {
        return Err(ScenarioError::IndexMismatch);
    }
    let mut out = a.clone();
    out.label = format!("{}~{}@{lambda}", a.label, b.label);
    out.clamp_count = 0;

    let (_, ny, _) = a.demand.dims();
    let mix = |av: f64, bv: f64| lambda * av + (1.0 - lambda) * bv;

    // Demand: (node, year, hour).
    {
        let (nn, ny_d, nh) = a.demand.dims();
        for n in 0..nn {
            for y in certain_years.min(ny_d)..ny_d {
                for t in 0..nh {
                    let v = mix(a.demand.get(n, y, t), b.demand.get(n, y, t));
                    out.demand.set(n, y, t, clamp_nonneg(v, &mut out.clamp_count));
                }
            }
        }
    }
    // RES capacity: (tech, node, year).
    {
        let (nt, nn, ny_r) = a.res_capacity.dims();
        for i in 0..nt {
            for n in 0..nn {
                for y in certain_years.min(ny_r)..ny_r {
                    let v = mix(a.res_capacity.get(i, n, y), b.res_capacity.get(i, n, y));
                    out.res_capacity.set(i, n, y, clamp_nonneg(v, &mut out.clamp_count));
                }
            }
        }
    }
    // Fuel prices: (fuel, year).
    {
        let (nf, ny_f) = a.fuel_prices.dims();
        for f in 0..nf {
            for y in certain_years.min(ny_f)..ny_f {
                let v = mix(a.fuel_prices.get(f, y), b.fuel_prices.get(f, y));
                out.fuel_prices.set(f, y, clamp_nonneg(v, &mut out.clamp_count));
            }
        }
    }
    // CO2 price: per year.
    for y in certain_years.min(ny)..ny {
        let v = mix(a.co2_price[y], b.co2_price[y]);
        out.co2_price[y] = clamp_nonneg(v, &mut out.clamp_count);
    }
    Ok(out)
}

fn clamp_nonneg(v: f64, clamps: &mut u64) -> f64 {
    if v < 0.0 {
        *clamps += 1;
        0.0
    } else {
        v
    }
}

/// Element-wise arithmetic mean of the three anchors.
pub fn expected_value(anchors: &AnchorSet) -> Scenario {
    let [a, b, c] = anchors.anchors();
    let certain = anchors.certain_years();
    let mut out = a.clone();
    out.label = String::from("EV");
    out.clamp_count = 0;

    let mean = |x: f64, y: f64, z: f64| (x + y + z) / 3.0;

    let (nn, ny, nh) = a.demand.dims();
    for n in 0..nn {
        for y in certain.min(ny)..ny {
            for t in 0..nh {
                out.demand.set(
                    n,
                    y,
                    t,
                    mean(a.demand.get(n, y, t), b.demand.get(n, y, t), c.demand.get(n, y, t)),
                );
            }
        }
    }
    let (nt, nn_r, ny_r) = a.res_capacity.dims();
    for i in 0..nt {
        for n in 0..nn_r {
            for y in certain.min(ny_r)..ny_r {
                out.res_capacity.set(
                    i,
                    n,
                    y,
                    mean(
                        a.res_capacity.get(i, n, y),
                        b.res_capacity.get(i, n, y),
                        c.res_capacity.get(i, n, y),
                    ),
                );
            }
        }
    }
    let (nf, ny_f) = a.fuel_prices.dims();
    for f in 0..nf {
        for y in certain.min(ny_f)..ny_f {
            out.fuel_prices.set(
                f,
                y,
                mean(a.fuel_prices.get(f, y), b.fuel_prices.get(f, y), c.fuel_prices.get(f, y)),
            );
        }
    }
    for y in certain.min(ny)..ny {
        out.co2_price[y] = mean(a.co2_price[y], b.co2_price[y], c.co2_price[y]);
    }
    out
}

/// Builds the full scenario set from the anchors and blending factors.
///
/// Emission order: the three anchors, blends of the pairs (A,B), (A,C),
/// (B,C) for each factor with the factor applied to the first pair member,
/// the expected value, and the three anchor/EV midpoints. Duplicate factor
/// values would reproduce identical scenarios; they are dropped up front and
/// the result carries a dedup warning. Probabilities are uniform.
pub fn build_set(anchors: &AnchorSet, factors: &[f64]) -> Result<ScenarioSet, ScenarioError> {
    let mut unique: Vec<f64> = Vec::new();
    let mut deduped = false;
    for &f in factors {
        if unique.iter().any(|u| *u == f) {
            deduped = true;
        } else {
            unique.push(f);
        }
    }

    let [a, b, c] = anchors.anchors();
    let certain = anchors.certain_years();
    let mut scenarios: Vec<Scenario> = Vec::with_capacity(4 + 3 * unique.len() + 3);

    scenarios.push(a.clone());
    scenarios.push(b.clone());
    scenarios.push(c.clone());
    for (x, y) in [(a, b), (a, c), (b, c)] {
        for &lambda in &unique {
            scenarios.push(blend(x, y, lambda, certain)?);
        }
    }
    let ev = expected_value(anchors);
    let mut midpoints = Vec::with_capacity(3);
    for anchor in [a, b, c] {
        midpoints.push(blend(anchor, &ev, 0.5, certain)?);
    }
    scenarios.push(ev);
    scenarios.extend(midpoints);

    let p = 1.0 / scenarios.len() as f64;
    for s in &mut scenarios {
        s.probability = p;
    }
    let mut set = ScenarioSet::from_scenarios(scenarios)?;
    set.dedup_warning = deduped;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Grid2, Grid3};
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    // One node, two years (first certain), one hour, one fuel, one tech.
    fn scalar_scenario(label: &str, demand: f64, res: f64, fuel: f64, co2: f64) -> Scenario {
        let mut s = Scenario {
            label: label.to_string(),
            probability: 1.0 / 3.0,
            demand: Grid3::zeros(1, 2, 1),
            res_capacity: Grid3::zeros(1, 1, 2),
            fuel_prices: Grid2::zeros(1, 2),
            co2_price: vec![10.0, 0.0],
            clamp_count: 0,
        };
        s.demand.set(0, 0, 0, 50.0); // certain year, shared
        s.demand.set(0, 1, 0, demand);
        s.res_capacity.set(0, 0, 0, 5.0);
        s.res_capacity.set(0, 0, 1, res);
        s.fuel_prices.set(0, 0, 20.0);
        s.fuel_prices.set(0, 1, fuel);
        s.co2_price[1] = co2;
        s
    }

    fn anchors() -> AnchorSet {
        AnchorSet::new(
            [
                scalar_scenario("DG", 100.0, 10.0, 30.0, 55.0),
                scalar_scenario("ST", 80.0, 8.0, 25.0, 89.9),
                scalar_scenario("EUCO", 90.0, 9.0, 35.0, 28.8),
            ],
            1,
        )
        .unwrap()
    }

    #[test]
    fn blend_reference_values() {
        let set = anchors();
        let [a, b, _] = set.anchors();
        // a=100, b=80 in the uncertain year.
        let mid = blend(a, b, 0.5, 1).unwrap();
        assert_eq!(mid.demand.get(0, 1, 0), 90.0);
        // Extrapolation beyond a: 1.1*100 - 0.1*80 = 102; and the spec-style
        // numbers on a (100, 200) pair.
        let a2 = scalar_scenario("A", 100.0, 0.0, 0.0, 0.0);
        let b2 = scalar_scenario("B", 200.0, 0.0, 0.0, 0.0);
        assert!((blend(&a2, &b2, 0.5, 1).unwrap().demand.get(0, 1, 0) - 150.0).abs() < 1e-12);
        assert!((blend(&a2, &b2, 1.1, 1).unwrap().demand.get(0, 1, 0) - 90.0).abs() < 1e-12);
        assert!((blend(&a2, &b2, -0.1, 1).unwrap().demand.get(0, 1, 0) - 210.0).abs() < 1e-12);
    }

    #[test]
    fn blend_clamps_negative_extrapolations() {
        let a = scalar_scenario("A", 1.0, 0.0, 0.0, 0.0);
        let b = scalar_scenario("B", 200.0, 0.0, 0.0, 0.0);
        let out = blend(&a, &b, 1.1, 1).unwrap();
        assert_eq!(out.demand.get(0, 1, 0), 0.0); // 1.1 - 20 < 0
        assert!(out.clamp_count >= 1);
    }

    #[test]
    fn expected_value_is_mean() {
        let ev = expected_value(&anchors());
        assert!((ev.demand.get(0, 1, 0) - 90.0).abs() < 1e-12);
        // CO2 prices from the anchor descriptions: (55 + 89.9 + 28.8) / 3.
        assert!((ev.co2_price[1] - (55.0 + 89.9 + 28.8) / 3.0).abs() < 1e-12);
        // Certain-year data is copied bit-for-bit.
        assert_eq!(ev.demand.get(0, 0, 0).to_bits(), 50.0f64.to_bits());
    }

    #[test]
    fn build_set_default_cardinality() {
        let set = build_set(&anchors(), &DEFAULT_FACTORS).unwrap();
        assert_eq!(set.len(), 22);
        assert!(!set.dedup_warning());
        for s in set.scenarios() {
            assert!((s.probability - 1.0 / 22.0).abs() < 1e-15);
        }
        let total: f64 = set.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn build_set_single_factor() {
        let set = build_set(&anchors(), &[0.5]).unwrap();
        assert_eq!(set.len(), 10); // 3 + 3 + 1 + 3
    }

    #[test]
    fn build_set_dedups_duplicate_factors() {
        let set = build_set(&anchors(), &[0.5, 0.5]).unwrap();
        assert_eq!(set.len(), 10);
        assert!(set.dedup_warning());
        let total: f64 = set.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_anchors_collapse() {
        let a = scalar_scenario("A", 100.0, 10.0, 30.0, 50.0);
        let set = AnchorSet::new([a.clone(), a.clone(), a.clone()], 1).unwrap();
        let ev = expected_value(&set);
        assert!((ev.demand.get(0, 1, 0) - 100.0).abs() < 1e-12);
        let built = build_set(&set, &DEFAULT_FACTORS).unwrap();
        assert_eq!(built.len(), 22);
        for s in built.scenarios() {
            assert!((s.demand.get(0, 1, 0) - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn first_stage_is_bit_identical_across_the_set() {
        let set = build_set(&anchors(), &DEFAULT_FACTORS).unwrap();
        let first = &set.scenarios()[0];
        for s in set.scenarios() {
            assert!(crate::domain::first_stage_equal(first, s, 1), "scenario {}", s.label);
        }
    }

    #[test]
    fn anchor_first_stage_mismatch_is_rejected() {
        let mut b = scalar_scenario("B", 80.0, 8.0, 25.0, 89.9);
        b.demand.set(0, 0, 0, 51.0);
        let err = AnchorSet::new(
            [scalar_scenario("A", 1.0, 1.0, 1.0, 1.0), b, scalar_scenario("C", 2.0, 2.0, 2.0, 2.0)],
            1,
        )
        .unwrap_err();
        assert_eq!(err, ScenarioError::FirstStageMismatch);
    }

    proptest! {
        // blend(a, b, l) == blend(b, a, 1 - l) element-wise exactly: the two
        // expressions produce the same products in either order.
        #[test]
        fn blend_order_invariance(demand_a in 0.0..500.0f64, demand_b in 0.0..500.0f64, l in -0.5..1.5f64) {
            let a = scalar_scenario("A", demand_a, 1.0, 1.0, 1.0);
            let b = scalar_scenario("B", demand_b, 1.0, 1.0, 1.0);
            let ab = blend(&a, &b, l, 1).unwrap();
            let ba = blend(&b, &a, 1.0 - l, 1).unwrap();
            prop_assert_eq!(ab.demand.get(0, 1, 0).to_bits(), ba.demand.get(0, 1, 0).to_bits());
        }

        // Interpolation stays within the value hull of the pair.
        #[test]
        fn blend_convex_hull(demand_a in 0.0..500.0f64, demand_b in 0.0..500.0f64, l in 0.0..1.0f64) {
            let a = scalar_scenario("A", demand_a, 1.0, 1.0, 1.0);
            let b = scalar_scenario("B", demand_b, 1.0, 1.0, 1.0);
            let out = blend(&a, &b, l, 1).unwrap();
            let (lo, hi) = (demand_a.min(demand_b), demand_a.max(demand_b));
            let v = out.demand.get(0, 1, 0);
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }

        // EV equals the element-wise mean of the anchors.
        #[test]
        fn ev_matches_mean(d1 in 0.0..500.0f64, d2 in 0.0..500.0f64, d3 in 0.0..500.0f64) {
            let set = AnchorSet::new(
                [
                    scalar_scenario("A", d1, 1.0, 1.0, 1.0),
                    scalar_scenario("B", d2, 1.0, 1.0, 1.0),
                    scalar_scenario("C", d3, 1.0, 1.0, 1.0),
                ],
                1,
            ).unwrap();
            let ev = expected_value(&set);
            prop_assert!((ev.demand.get(0, 1, 0) - (d1 + d2 + d3) / 3.0).abs() < 1e-12);
        }
    }
}
