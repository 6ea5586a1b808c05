//! Sparse linear program in bounded row form.
//!
//! `minimize c'v` subject to `L_i <= a_i'v <= U_i` per row and
//! `l_j <= v_j <= u_j` per variable. Infinite bounds express one-sided or
//! free rows and variables. Row labels are unique and name the constraint
//! family plus its index tuple, which keeps solver diagnostics and the
//! interchange format readable.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub const INF: f64 = f64::INFINITY;
pub const NEG_INF: f64 = f64::NEG_INFINITY;

/// One constraint row: sparse coefficients and inclusive bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub label: String,
    pub coeffs: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
}

/// A sparse LP with named columns.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    name: String,
    objective: Vec<f64>,
    objective_offset: f64,
    col_names: Vec<String>,
    col_lower: Vec<f64>,
    col_upper: Vec<f64>,
    rows: Vec<Row>,
    col_index: BTreeMap<String, usize>,
}

/// Structural defects detected by [`LinearProgram::check`] or mutators.
#[derive(Clone, Debug, PartialEq)]
pub enum LpError {
    DuplicateColumn(String),
    DuplicateRow(String),
    UnknownColumn(usize),
    EmptyBoundInterval { what: String, lower: f64, upper: f64 },
    NotFinite(String),
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::DuplicateColumn(n) => write!(f, "duplicate column name '{n}'"),
            LpError::DuplicateRow(n) => write!(f, "duplicate row label '{n}'"),
            LpError::UnknownColumn(j) => write!(f, "coefficient references unknown column {j}"),
            LpError::EmptyBoundInterval { what, lower, upper } => {
                write!(f, "{what}: empty bound interval [{lower}, {upper}]")
            }
            LpError::NotFinite(what) => write!(f, "{what}: coefficient is not finite"),
        }
    }
}

impl core::error::Error for LpError {}

impl LinearProgram {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            objective: Vec::new(),
            objective_offset: 0.0,
            col_names: Vec::new(),
            col_lower: Vec::new(),
            col_upper: Vec::new(),
            rows: Vec::new(),
            col_index: BTreeMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Adds a column and returns its index. Names must be unique.
    pub fn add_col(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> Result<usize, LpError> {
        let name = name.into();
        if self.col_index.contains_key(&name) {
            return Err(LpError::DuplicateColumn(name));
        }
        if lower > upper {
            return Err(LpError::EmptyBoundInterval { what: name, lower, upper });
        }
        if !objective.is_finite() {
            return Err(LpError::NotFinite(name));
        }
        let idx = self.col_names.len();
        self.col_index.insert(name.clone(), idx);
        self.col_names.push(name);
        self.col_lower.push(lower);
        self.col_upper.push(upper);
        self.objective.push(objective);
        Ok(idx)
    }

    /// Adds a row with bounds `lower <= a'v <= upper`.
    pub fn add_row(
        &mut self,
        label: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        lower: f64,
        upper: f64,
    ) -> Result<usize, LpError> {
        let label = label.into();
        if lower > upper {
            return Err(LpError::EmptyBoundInterval { what: label, lower, upper });
        }
        for &(j, a) in &coeffs {
            if j >= self.col_names.len() {
                return Err(LpError::UnknownColumn(j));
            }
            if !a.is_finite() {
                return Err(LpError::NotFinite(label));
            }
        }
        self.rows.push(Row { label, coeffs, lower, upper });
        Ok(self.rows.len() - 1)
    }

    pub fn num_cols(&self) -> usize {
        self.col_names.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn set_objective_offset(&mut self, offset: f64) {
        self.objective_offset = offset;
    }

    pub fn set_objective_coeff(&mut self, col: usize, value: f64) {
        self.objective[col] = value;
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn col_name(&self, j: usize) -> &str {
        &self.col_names[j]
    }

    pub fn col_by_name(&self, name: &str) -> Option<usize> {
        self.col_index.get(name).copied()
    }

    pub fn col_bounds(&self, j: usize) -> (f64, f64) {
        (self.col_lower[j], self.col_upper[j])
    }

    pub fn col_lower(&self) -> &[f64] {
        &self.col_lower
    }

    pub fn col_upper(&self) -> &[f64] {
        &self.col_upper
    }

    /// Pins a variable to a fixed value within its current bounds.
    pub fn fix_col(&mut self, j: usize, value: f64) -> Result<(), LpError> {
        let (lo, hi) = self.col_bounds(j);
        let tol = 1e-9 * (1.0 + value.abs());
        if value < lo - tol || value > hi + tol {
            return Err(LpError::EmptyBoundInterval {
                what: self.col_names[j].clone(),
                lower: lo.max(value),
                upper: hi.min(value),
            });
        }
        self.col_lower[j] = value;
        self.col_upper[j] = value;
        Ok(())
    }

    /// Objective value of a primal point (including any constant offset).
    pub fn objective_value(&self, v: &[f64]) -> f64 {
        self.objective_offset
            + self.objective.iter().zip(v).map(|(c, x)| c * x).sum::<f64>()
    }

    /// Activity `a_i'v` of every row.
    pub fn row_activity(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(j, a)| a * v[j]).sum())
            .collect()
    }

    /// Largest relative bound violation over rows and columns.
    pub fn max_violation(&self, v: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, x) in v.iter().enumerate() {
            let scale = 1.0 + x.abs();
            worst = worst.max((self.col_lower[j] - x) / scale).max((x - self.col_upper[j]) / scale);
        }
        for (r, act) in self.rows.iter().zip(self.row_activity(v)) {
            let scale = 1.0 + act.abs();
            worst = worst.max((r.lower - act) / scale).max((act - r.upper) / scale);
        }
        worst
    }

    /// Verifies the structural invariants: unique labels, resolvable
    /// coefficients, non-empty bound intervals.
    pub fn check(&self) -> Result<(), LpError> {
        let mut labels = alloc::collections::BTreeSet::new();
        for row in &self.rows {
            if !labels.insert(row.label.as_str()) {
                return Err(LpError::DuplicateRow(row.label.clone()));
            }
            for &(j, a) in &row.coeffs {
                if j >= self.num_cols() {
                    return Err(LpError::UnknownColumn(j));
                }
                if !a.is_finite() {
                    return Err(LpError::NotFinite(row.label.clone()));
                }
            }
            if row.lower > row.upper {
                return Err(LpError::EmptyBoundInterval {
                    what: row.label.clone(),
                    lower: row.lower,
                    upper: row.upper,
                });
            }
        }
        for (j, name) in self.col_names.iter().enumerate() {
            if self.col_lower[j] > self.col_upper[j] {
                return Err(LpError::EmptyBoundInterval {
                    what: name.clone(),
                    lower: self.col_lower[j],
                    upper: self.col_upper[j],
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn build_and_evaluate() {
        let mut lp = LinearProgram::new("toy");
        let x = lp.add_col("x", 0.0, 5.0, -1.0).unwrap();
        let y = lp.add_col("y", 0.0, INF, 2.0).unwrap();
        lp.add_row("r0", vec![(x, 1.0), (y, 1.0)], NEG_INF, 4.0).unwrap();
        assert_eq!(lp.num_cols(), 2);
        assert_eq!(lp.num_rows(), 1);
        assert_eq!(lp.num_nonzeros(), 2);
        assert_eq!(lp.objective_value(&[5.0, 0.0]), -5.0);
        assert_eq!(lp.row_activity(&[2.0, 1.0]), vec![3.0]);
        assert!(lp.max_violation(&[2.0, 1.0]) <= 0.0);
        assert!(lp.max_violation(&[5.0, 1.0]) > 0.0);
        lp.check().unwrap();
    }

    #[test]
    fn rejects_duplicates_and_bad_bounds() {
        let mut lp = LinearProgram::new("bad");
        lp.add_col("x", 0.0, 1.0, 0.0).unwrap();
        assert!(matches!(lp.add_col("x", 0.0, 1.0, 0.0), Err(LpError::DuplicateColumn(_))));
        assert!(matches!(
            lp.add_col("y", 2.0, 1.0, 0.0),
            Err(LpError::EmptyBoundInterval { .. })
        ));
        assert!(matches!(lp.add_row("r", vec![(7, 1.0)], 0.0, 1.0), Err(LpError::UnknownColumn(7))));
    }

    #[test]
    fn fix_col_respects_original_bounds() {
        let mut lp = LinearProgram::new("fix");
        let x = lp.add_col("x", 0.0, 10.0, 0.0).unwrap();
        lp.fix_col(x, 3.0).unwrap();
        assert_eq!(lp.col_bounds(x), (3.0, 3.0));
        assert!(lp.fix_col(x, 4.0).is_err());
    }
}
