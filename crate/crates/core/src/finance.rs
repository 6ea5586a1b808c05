//! Financial arithmetic: annuities, discount factors, marginal costs.

use core::fmt;

use crate::domain::{FinanceSettings, Technology, Year};

/// Errors from financial computations.
#[derive(Clone, Debug, PartialEq)]
pub enum FinanceError {
    NegativeCapex(f64),
    ShortLifetime(u32),
    NegativeRate(f64),
    YearBeforeBase { year: Year, base: Year },
    EfficiencyOutOfRange(f64),
}

impl fmt::Display for FinanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FinanceError::NegativeCapex(c) => write!(f, "capex {c} must be >= 0"),
            FinanceError::ShortLifetime(l) => write!(f, "lifetime {l} must be >= 1 year"),
            FinanceError::NegativeRate(r) => write!(f, "rate {r} must be >= 0"),
            FinanceError::YearBeforeBase { year, base } => {
                write!(f, "year {year} precedes base year {base}")
            }
            FinanceError::EfficiencyOutOfRange(e) => {
                write!(f, "efficiency {e} must be strictly positive")
            }
        }
    }
}

impl core::error::Error for FinanceError {}

/// Annualised capital cost of one MW, EUR/MW/year.
///
/// Spreads `capex` over `lifetime` years at the given interest rate:
/// `capex * rate / (1 - (1 + rate)^-lifetime)`. A zero rate degenerates to
/// straight-line depreciation `capex / lifetime`.
pub fn annuity(capex: f64, rate: f64, lifetime: u32) -> Result<f64, FinanceError> {
    if capex < 0.0 || !capex.is_finite() {
        return Err(FinanceError::NegativeCapex(capex));
    }
    if lifetime < 1 {
        return Err(FinanceError::ShortLifetime(lifetime));
    }
    if rate < 0.0 || !rate.is_finite() {
        return Err(FinanceError::NegativeRate(rate));
    }
    if rate == 0.0 {
        return Ok(capex / lifetime as f64);
    }
    let denom = 1.0 - libm::pow(1.0 + rate, -(lifetime as f64));
    Ok(capex * rate / denom)
}

/// Discount factor `(1 + discount_rate)^-(year - base_year)`.
pub fn discount_factor(year: Year, settings: &FinanceSettings) -> Result<f64, FinanceError> {
    if year < settings.base_year {
        return Err(FinanceError::YearBeforeBase { year, base: settings.base_year });
    }
    let span = (year.0 - settings.base_year.0) as f64;
    Ok(libm::pow(1.0 + settings.discount_rate, -span))
}

/// Variable generation cost of a technology, EUR per MWh electric.
///
/// Composes the cost from its drivers: `fuel_price / eta` for fuel,
/// `co2_price * emission_factor / eta` for certificates, plus the additive
/// variable O&M term. Instances that know variable costs directly can model
/// them as a dedicated fuel with unit efficiency and a zero emission factor.
pub fn marginal_cost(tech: &Technology, fuel_price: f64, co2_price: f64) -> Result<f64, FinanceError> {
    if !(tech.efficiency > 0.0) {
        return Err(FinanceError::EfficiencyOutOfRange(tech.efficiency));
    }
    Ok(fuel_price / tech.efficiency + co2_price * tech.emission_factor / tech.efficiency + tech.vom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Availability, TechKind, Technology};
    use alloc::string::ToString;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn tech(eta: f64, ef: f64) -> Technology {
        Technology {
            label: "t".to_string(),
            kind: TechKind::Thermal,
            fuel: None,
            efficiency: eta,
            emission_factor: ef,
            vom: 0.0,
            capex: 0.0,
            lifetime: 1,
            investable: true,
            emission_free: ef == 0.0,
            availability: Availability::Constant(1.0),
        }
    }

    #[test]
    fn annuity_reference_values() {
        // Closed-form values checked against an independent spreadsheet
        // evaluation of c*r/(1-(1+r)^-L).
        assert!((annuity(1000.0, 0.06, 50).unwrap() - 63.444).abs() < 1e-3);
        assert_eq!(annuity(1000.0, 0.0, 10).unwrap(), 100.0);
        assert_eq!(annuity(0.0, 0.06, 50).unwrap(), 0.0);
    }

    #[test]
    fn annuity_rejects_bad_input() {
        assert!(matches!(annuity(-1.0, 0.06, 10), Err(FinanceError::NegativeCapex(_))));
        assert!(matches!(annuity(1.0, 0.06, 0), Err(FinanceError::ShortLifetime(0))));
        assert!(matches!(annuity(1.0, -0.1, 10), Err(FinanceError::NegativeRate(_))));
    }

    #[test]
    fn discount_factor_reference_values() {
        let fs = FinanceSettings { interest_rate: 0.06, discount_rate: 0.06, base_year: Year(2020) };
        assert_eq!(discount_factor(Year(2020), &fs).unwrap(), 1.0);
        assert!((discount_factor(Year(2030), &fs).unwrap() - 0.5584).abs() < 1e-4);
        let flat = FinanceSettings { discount_rate: 0.0, ..fs };
        assert_eq!(discount_factor(Year(2025), &flat).unwrap(), 1.0);
        assert!(matches!(
            discount_factor(Year(2019), &fs),
            Err(FinanceError::YearBeforeBase { .. })
        ));
    }

    #[test]
    fn marginal_cost_reference_values() {
        assert_relative_eq!(marginal_cost(&tech(0.5, 0.0), 20.0, 0.0).unwrap(), 40.0);
        assert_relative_eq!(
            marginal_cost(&tech(0.4, 0.34), 10.0, 50.0).unwrap(),
            67.5,
            max_relative = 1e-4
        );
        assert_relative_eq!(marginal_cost(&tech(1.0, 0.0), 0.0, 100.0).unwrap(), 0.0);
        let mut bad = tech(0.5, 0.0);
        bad.efficiency = 0.0;
        assert!(marginal_cost(&bad, 1.0, 1.0).is_err());
    }

    proptest! {
        // Present-value round trip: the annuity paid over the lifetime,
        // discounted at the same rate, recovers the capex.
        #[test]
        fn annuity_present_value_round_trip(
            capex in 1.0..1e7f64,
            rate in 0.0..0.3f64,
            lifetime in 1u32..80,
        ) {
            let a = annuity(capex, rate, lifetime).unwrap();
            let pv: f64 = (1..=lifetime)
                .map(|t| a * libm::pow(1.0 + rate, -(t as f64)))
                .sum();
            prop_assert!((pv - capex).abs() <= 1e-6 * capex.max(1.0));
        }

        // Strictly increasing in capex and in rate (lifetime >= 2).
        #[test]
        fn annuity_monotone(
            capex in 1.0..1e6f64,
            bump in 1.0..1e5f64,
            rate in 0.001..0.2f64,
            dr in 0.001..0.1f64,
            lifetime in 2u32..60,
        ) {
            let base = annuity(capex, rate, lifetime).unwrap();
            prop_assert!(annuity(capex + bump, rate, lifetime).unwrap() > base);
            prop_assert!(annuity(capex, rate + dr, lifetime).unwrap() > base);
        }

        #[test]
        fn discount_factor_non_increasing(
            rate in 0.0..0.3f64,
            y1 in 2020u32..2050,
            dy in 0u32..30,
        ) {
            let fs = FinanceSettings {
                interest_rate: rate,
                discount_rate: rate,
                base_year: Year(2020),
            };
            let d1 = discount_factor(Year(y1), &fs).unwrap();
            let d2 = discount_factor(Year(y1 + dy), &fs).unwrap();
            prop_assert!(d2 <= d1 + 1e-15);
        }

        // Linear in both price drivers; the CO2 slope is ef/eta exactly.
        #[test]
        fn marginal_cost_linearity(
            eta in 0.2..1.0f64,
            ef in 0.0..1.0f64,
            fuel in 0.0..200.0f64,
            co2 in 0.0..300.0f64,
            scale in 0.1..3.0f64,
        ) {
            let t = tech(eta, ef);
            let at = |f: f64, c: f64| marginal_cost(&t, f, c).unwrap();
            let slope_co2 = at(fuel, co2 + 1.0) - at(fuel, co2);
            prop_assert!((slope_co2 - ef / eta).abs() < 1e-9 * (1.0 + ef / eta));
            let lhs = at(fuel * scale, co2) - at(0.0, co2);
            let rhs = scale * (at(fuel, co2) - at(0.0, co2));
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        }
    }
}
