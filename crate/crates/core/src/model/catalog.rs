//! Semantic variable keys and the key-to-column catalog.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::{HourId, NodeId, ScenarioId, SectorId, TechId, Year};

/// Semantic identity of one LP column.
///
/// First-stage keys carry (asset, node, year); second-stage keys add the
/// hour and scenario. `Threshold` is the CVaR threshold variable (the only
/// free variable of the model), `Excess` the per-scenario cost overshoot
/// above it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarKey {
    /// Cumulative generation capacity investment, MW.
    GenInvest { tech: TechId, node: NodeId, year: Year },
    /// Cumulative transfer capacity investment on a directed corridor, MW.
    NtcInvest { from: NodeId, to: NodeId, year: Year },
    /// Cumulative pumped-storage capacity investment, MW.
    PspInvest { tech: TechId, node: NodeId, year: Year },
    /// Generation, MWh per representative hour.
    Generation { tech: TechId, node: NodeId, hour: HourId, year: Year, scenario: ScenarioId },
    /// Directed cross-border flow, MWh.
    Flow { from: NodeId, to: NodeId, hour: HourId, year: Year, scenario: ScenarioId },
    /// Storage charging, MWh.
    Pump { tech: TechId, node: NodeId, hour: HourId, year: Year, scenario: ScenarioId },
    /// Sectoral load shedding, MWh.
    Shed { sector: SectorId, node: NodeId, hour: HourId, year: Year, scenario: ScenarioId },
    /// Storage basin level, MWh.
    StorageLevel { tech: TechId, node: NodeId, hour: HourId, year: Year, scenario: ScenarioId },
    /// Lost-load slack used when demand response is off, MWh.
    LostLoad { node: NodeId, hour: HourId, year: Year, scenario: ScenarioId },
    /// Discounted operating cost of one scenario, EUR.
    OpCost { scenario: ScenarioId },
    /// Cost overshoot above the CVaR threshold, EUR.
    Excess { scenario: ScenarioId },
    /// CVaR threshold (free), EUR.
    Threshold,
    /// Conditional value at risk of the operating cost, EUR.
    Cvar,
}

impl VarKey {
    pub fn is_investment(&self) -> bool {
        matches!(
            self,
            VarKey::GenInvest { .. } | VarKey::NtcInvest { .. } | VarKey::PspInvest { .. }
        )
    }

    pub fn is_dispatch(&self) -> bool {
        matches!(
            self,
            VarKey::Generation { .. }
                | VarKey::Flow { .. }
                | VarKey::Pump { .. }
                | VarKey::Shed { .. }
                | VarKey::StorageLevel { .. }
                | VarKey::LostLoad { .. }
        )
    }

    pub fn scenario(&self) -> Option<ScenarioId> {
        match self {
            VarKey::Generation { scenario, .. }
            | VarKey::Flow { scenario, .. }
            | VarKey::Pump { scenario, .. }
            | VarKey::Shed { scenario, .. }
            | VarKey::StorageLevel { scenario, .. }
            | VarKey::LostLoad { scenario, .. }
            | VarKey::OpCost { scenario }
            | VarKey::Excess { scenario } => Some(*scenario),
            _ => None,
        }
    }
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarKey::GenInvest { tech, node, year } => write!(f, "x_{tech}_{node}_y{year}"),
            VarKey::NtcInvest { from, to, year } => write!(f, "y_{from}_{to}_y{year}"),
            VarKey::PspInvest { tech, node, year } => write!(f, "z_{tech}_{node}_y{year}"),
            VarKey::Generation { tech, node, hour, year, scenario } => {
                write!(f, "g_{tech}_{node}_{hour}_y{year}_{scenario}")
            }
            VarKey::Flow { from, to, hour, year, scenario } => {
                write!(f, "fl_{from}_{to}_{hour}_y{year}_{scenario}")
            }
            VarKey::Pump { tech, node, hour, year, scenario } => {
                write!(f, "pm_{tech}_{node}_{hour}_y{year}_{scenario}")
            }
            VarKey::Shed { sector, node, hour, year, scenario } => {
                write!(f, "sh_{sector}_{node}_{hour}_y{year}_{scenario}")
            }
            VarKey::StorageLevel { tech, node, hour, year, scenario } => {
                write!(f, "sl_{tech}_{node}_{hour}_y{year}_{scenario}")
            }
            VarKey::LostLoad { node, hour, year, scenario } => {
                write!(f, "ll_{node}_{hour}_y{year}_{scenario}")
            }
            VarKey::OpCost { scenario } => write!(f, "oc_{scenario}"),
            VarKey::Excess { scenario } => write!(f, "a_{scenario}"),
            VarKey::Threshold => write!(f, "zeta"),
            VarKey::Cvar => write!(f, "cvar"),
        }
    }
}

/// Bijective mapping between semantic keys and column indices.
#[derive(Clone, Debug, Default)]
pub struct VariableCatalog {
    by_key: BTreeMap<VarKey, usize>,
    keys: Vec<VarKey>,
}

impl VariableCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a key at the next column index.
    pub fn insert(&mut self, key: VarKey, col: usize) {
        debug_assert_eq!(col, self.keys.len(), "columns must be registered in order");
        let prev = self.by_key.insert(key, col);
        debug_assert!(prev.is_none(), "duplicate variable key");
        self.keys.push(key);
    }

    pub fn col(&self, key: &VarKey) -> Option<usize> {
        self.by_key.get(key).copied()
    }

    pub fn key(&self, col: usize) -> Option<&VarKey> {
        self.keys.get(col)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarKey, usize)> {
        self.by_key.iter().map(|(k, v)| (k, *v))
    }

    /// Keys of one kind, in key order.
    pub fn keys(&self) -> &[VarKey] {
        &self.keys
    }

    pub fn name_of(&self, col: usize) -> Option<String> {
        use alloc::string::ToString;
        self.keys.get(col).map(|k| k.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_bijective() {
        let mut cat = VariableCatalog::new();
        let keys = [
            VarKey::Threshold,
            VarKey::Cvar,
            VarKey::OpCost { scenario: ScenarioId(0) },
            VarKey::GenInvest { tech: TechId(1), node: NodeId(0), year: Year(2030) },
        ];
        for (i, k) in keys.iter().enumerate() {
            cat.insert(*k, i);
        }
        for (i, k) in keys.iter().enumerate() {
            assert_eq!(cat.col(k), Some(i));
            assert_eq!(cat.key(i), Some(k));
        }
        assert_eq!(cat.len(), keys.len());
    }

    #[test]
    fn names_are_distinct() {
        let a = VarKey::Generation {
            tech: TechId(0),
            node: NodeId(1),
            hour: HourId(2),
            year: Year(2030),
            scenario: ScenarioId(3),
        };
        let b = VarKey::Generation {
            tech: TechId(0),
            node: NodeId(1),
            hour: HourId(2),
            year: Year(2030),
            scenario: ScenarioId(4),
        };
        use alloc::string::ToString;
        assert_ne!(a.to_string(), b.to_string());
    }
}
