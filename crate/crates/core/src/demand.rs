//! Stepwise load-shedding supply functions.
//!
//! Each node's demand splits into sectors with a share of hourly consumption
//! and a value of lack of adequacy (VoLA). Sorting the sectors by effective
//! VoLA yields a stepwise supply function for load shedding: the market
//! sheds the cheapest sector first, and each sector can shed at most its
//! share of the hour's demand. Since the shares sum to one, the whole load
//! is sheddable at finite cost, which keeps dispatch feasible whenever
//! demand response is available.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::{DemandResponse, FlexibilitySettings, Node, NodeId, SectorId};

/// One step of a node's shedding supply function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeritStep {
    pub sector: SectorId,
    /// Share of hourly demand this sector can shed.
    pub share: f64,
    /// Effective compensation, EUR/MWh, after scaling.
    pub vola: f64,
}

/// Per-node shedding merit orders; empty when demand response is off.
#[derive(Clone, Debug, PartialEq)]
pub struct SheddingMeritOrder {
    steps: Vec<Vec<MeritStep>>,
}

/// Errors from merit-order construction and lookups.
#[derive(Clone, Debug, PartialEq)]
pub enum DemandError {
    NonpositiveScale(f64),
    UnknownNode(NodeId),
    UnknownSector { node: NodeId, sector: SectorId },
    NegativeDemand(f64),
}

impl fmt::Display for DemandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemandError::NonpositiveScale(s) => write!(f, "VoLA scale factor {s} must be positive"),
            DemandError::UnknownNode(n) => write!(f, "unknown node {n}"),
            DemandError::UnknownSector { node, sector } => {
                write!(f, "sector {sector} has no shedding step at node {node}")
            }
            DemandError::NegativeDemand(d) => write!(f, "hourly demand {d} must be >= 0"),
        }
    }
}

impl core::error::Error for DemandError {}

/// Builds the per-node merit orders for the given flexibility settings.
///
/// Off-mode returns an empty order: no shedding steps, so the model creates
/// no shedding variables. In scaled mode every VoLA is multiplied by the
/// factor and steps are sorted ascending by effective VoLA with the sector
/// id as tie-break. With the European variant, each sector's VoLA is first
/// replaced by its average over the nodes where the sector is present.
pub fn build_merit_order(
    nodes: &[Node],
    flex: &FlexibilitySettings,
) -> Result<SheddingMeritOrder, DemandError> {
    let scale = match flex.demand {
        DemandResponse::Off => {
            return Ok(SheddingMeritOrder { steps: Vec::new() });
        }
        DemandResponse::Scaled(f) => {
            if !(f > 0.0) || !f.is_finite() {
                return Err(DemandError::NonpositiveScale(f));
            }
            f
        }
    };

    let n_sectors = nodes.first().map(|n| n.sector_shares.len()).unwrap_or(0);
    let mut averaged: Vec<f64> = Vec::new();
    if flex.european_merit_order {
        for sec in 0..n_sectors {
            let mut sum = 0.0;
            let mut count = 0usize;
            for node in nodes {
                if node.sector_shares.get(sec).copied().unwrap_or(0.0) > 0.0 {
                    sum += node.sector_vola[sec];
                    count += 1;
                }
            }
            averaged.push(if count > 0 { sum / count as f64 } else { 0.0 });
        }
    }

    let mut steps = Vec::with_capacity(nodes.len());
    for node in nodes {
        let mut node_steps: Vec<MeritStep> = node
            .sector_shares
            .iter()
            .enumerate()
            .filter(|(_, share)| **share > 0.0)
            .map(|(sec, share)| {
                let base = if flex.european_merit_order {
                    averaged[sec]
                } else {
                    node.sector_vola[sec]
                };
                MeritStep { sector: SectorId(sec), share: *share, vola: base * scale }
            })
            .collect();
        node_steps.sort_by(|a, b| {
            a.vola
                .partial_cmp(&b.vola)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.sector.cmp(&b.sector))
        });
        steps.push(node_steps);
    }
    Ok(SheddingMeritOrder { steps })
}

impl SheddingMeritOrder {
    /// True when demand response is off and no shedding exists anywhere.
    pub fn is_off(&self) -> bool {
        self.steps.is_empty()
    }

    /// Ordered shedding steps of a node.
    pub fn node_steps(&self, node: NodeId) -> Result<&[MeritStep], DemandError> {
        self.steps.get(node.0).map(|v| v.as_slice()).ok_or(DemandError::UnknownNode(node))
    }

    /// Upper bound on shedding of one sector in one hour: `demand * share`.
    pub fn shed_cap(&self, node: NodeId, sector: SectorId, demand: f64) -> Result<f64, DemandError> {
        if demand < 0.0 {
            return Err(DemandError::NegativeDemand(demand));
        }
        let steps = self.node_steps(node)?;
        let step = steps
            .iter()
            .find(|s| s.sector == sector)
            .ok_or(DemandError::UnknownSector { node, sector })?;
        Ok(demand * step.share)
    }
}

/// Human-readable merit order dump used by CLI diagnostics.
pub fn describe(order: &SheddingMeritOrder, node_labels: &[String]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (n, steps) in order.steps.iter().enumerate() {
        let label = node_labels.get(n).map(|s| s.as_str()).unwrap_or("?");
        let _ = writeln!(out, "{label}:");
        for s in steps {
            let _ = writeln!(out, "  sector {} share {:.4} vola {:.2}", s.sector.0, s.share, s.vola);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Expansion, Grid2};
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn node(shares: &[f64], volas: &[f64]) -> Node {
        Node {
            label: "n".to_string(),
            existing_capacity: Grid2::zeros(1, 1),
            invest_cap: Grid2::zeros(1, 1),
            psp_invest_cap: 0.0,
            sector_shares: shares.to_vec(),
            sector_vola: volas.to_vec(),
        }
    }

    fn flex(demand: DemandResponse) -> FlexibilitySettings {
        FlexibilitySettings {
            demand,
            ntc: Expansion::Off,
            psp: Expansion::Off,
            european_merit_order: false,
        }
    }

    #[test]
    fn sorts_by_vola() {
        let nodes = vec![node(&[0.4, 0.6], &[1000.0, 500.0])];
        let order = build_merit_order(&nodes, &flex(DemandResponse::Scaled(1.0))).unwrap();
        let steps = order.node_steps(NodeId(0)).unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[0], MeritStep { sector: SectorId(1), share: 0.6, vola: 500.0 });
        assert_eq!(steps[1], MeritStep { sector: SectorId(0), share: 0.4, vola: 1000.0 });
    }

    #[test]
    fn scaling_preserves_order() {
        let nodes = vec![node(&[0.4, 0.6], &[1000.0, 500.0])];
        let order = build_merit_order(&nodes, &flex(DemandResponse::Scaled(5.0))).unwrap();
        let steps = order.node_steps(NodeId(0)).unwrap();
        assert_eq!(steps[0].vola, 2500.0);
        assert_eq!(steps[1].vola, 5000.0);
        assert_eq!(steps[0].sector, SectorId(1));
    }

    #[test]
    fn off_mode_is_empty() {
        let nodes = vec![node(&[1.0], &[800.0])];
        let order = build_merit_order(&nodes, &flex(DemandResponse::Off)).unwrap();
        assert!(order.is_off());
    }

    #[test]
    fn rejects_nonpositive_scale() {
        let nodes = vec![node(&[1.0], &[800.0])];
        for bad in [0.0, -1.0] {
            let err = build_merit_order(&nodes, &flex(DemandResponse::Scaled(bad))).unwrap_err();
            assert_eq!(err, DemandError::NonpositiveScale(bad));
        }
    }

    #[test]
    fn shed_cap_values() {
        let nodes = vec![node(&[0.25, 0.75], &[900.0, 400.0])];
        let order = build_merit_order(&nodes, &flex(DemandResponse::Scaled(1.0))).unwrap();
        assert_eq!(order.shed_cap(NodeId(0), SectorId(0), 100.0).unwrap(), 25.0);
        assert!((order.shed_cap(NodeId(0), SectorId(1), 83.5).unwrap() - 62.625).abs() < 1e-12);
        assert!(matches!(
            order.shed_cap(NodeId(1), SectorId(0), 1.0),
            Err(DemandError::UnknownNode(_))
        ));
    }

    #[test]
    fn shed_cap_spec_arithmetic() {
        let nodes = vec![node(&[0.6, 0.4], &[400.0, 900.0])];
        let order = build_merit_order(&nodes, &flex(DemandResponse::Scaled(1.0))).unwrap();
        assert!((order.shed_cap(NodeId(0), SectorId(0), 83.5).unwrap() - 50.1).abs() < 1e-12);
        assert_eq!(order.shed_cap(NodeId(0), SectorId(1), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn european_variant_averages_volas() {
        let mut a = node(&[0.5, 0.5], &[1000.0, 300.0]);
        a.label = "A".to_string();
        let mut b = node(&[1.0, 0.0], &[2000.0, 999.0]);
        b.label = "B".to_string();
        let mut f = flex(DemandResponse::Scaled(1.0));
        f.european_merit_order = true;
        let order = build_merit_order(&[a, b], &f).unwrap();
        // Sector 0 present at both nodes: mean 1500; sector 1 only at A: 300.
        let steps_a = order.node_steps(NodeId(0)).unwrap();
        assert_eq!(steps_a[0].vola, 300.0);
        assert_eq!(steps_a[1].vola, 1500.0);
        let steps_b = order.node_steps(NodeId(1)).unwrap();
        assert_eq!(steps_b.len(), 1);
        assert_eq!(steps_b[0].vola, 1500.0);
    }

    proptest! {
        // Total sheddable energy equals demand when shares sum to one.
        #[test]
        fn total_sheddable_equals_demand(
            split in 0.01..0.99f64,
            demand in 0.0..1e5f64,
            v1 in 1.0..1e4f64,
            v2 in 1.0..1e4f64,
        ) {
            let nodes = vec![node(&[split, 1.0 - split], &[v1, v2])];
            let order = build_merit_order(&nodes, &flex(DemandResponse::Scaled(1.0))).unwrap();
            let total: f64 = order
                .node_steps(NodeId(0))
                .unwrap()
                .iter()
                .map(|s| order.shed_cap(NodeId(0), s.sector, demand).unwrap())
                .sum();
            prop_assert!((total - demand).abs() <= 1e-9 * demand.max(1.0));
        }

        // A common positive scale never changes the step ordering.
        #[test]
        fn scale_is_argsort_invariant(
            v in proptest::collection::vec(1.0..1e4f64, 2..6),
            scale in 0.01..100.0f64,
        ) {
            let shares = vec![1.0 / v.len() as f64; v.len()];
            let nodes1 = vec![node(&shares, &v)];
            let base = build_merit_order(&nodes1, &flex(DemandResponse::Scaled(1.0))).unwrap();
            let scaled = build_merit_order(&nodes1, &flex(DemandResponse::Scaled(scale))).unwrap();
            let order_base: Vec<_> =
                base.node_steps(NodeId(0)).unwrap().iter().map(|s| s.sector).collect();
            let order_scaled: Vec<_> =
                scaled.node_steps(NodeId(0)).unwrap().iter().map(|s| s.sector).collect();
            prop_assert_eq!(order_base, order_scaled);
        }
    }
}
