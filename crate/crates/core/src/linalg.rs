//! Gaussian elimination over GF(2^8).
//!
//! [`Eliminator`] keeps a system in reduced row-echelon form and accepts rows
//! and known values incrementally. A column counts as *pinned* once its pivot
//! row has no other nonzero entry; pinned values are handed back immediately
//! so a decoder can release packets before the system reaches full rank.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use thiserror::Error;

use crate::gf256::{Gf256, SymbolVector};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("inconsistent system: a combination reduced to 0 = nonzero")]
    Inconsistent,
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
    #[error("duplicate column id {0}")]
    DuplicateColumn(u32),
}

/// One sparse equation: `sum(coeffs[c] * x_c) = rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub coeffs: BTreeMap<u32, Gf256>,
    pub rhs: SymbolVector,
}

impl Row {
    pub fn new(coeffs: BTreeMap<u32, Gf256>, rhs: SymbolVector) -> Self {
        let mut row = Row { coeffs, rhs };
        row.coeffs.retain(|_, c| !c.is_zero());
        row
    }

    /// `self -= factor * other` (subtraction is addition in GF(2^8)).
    fn eliminate_with(&mut self, factor: Gf256, other: &Row) {
        for (&col, &c) in &other.coeffs {
            let entry = self.coeffs.entry(col).or_insert(Gf256::ZERO);
            *entry += factor * c;
            if entry.is_zero() {
                self.coeffs.remove(&col);
            }
        }
        self.rhs.add_scaled(factor, other.rhs.as_bytes());
    }

    fn normalize(&mut self, col: u32) {
        let lead = self.coeffs[&col];
        if lead != Gf256::ONE {
            let inv = lead.inv().expect("pivot is nonzero");
            for c in self.coeffs.values_mut() {
                *c *= inv;
            }
            self.rhs.scale(inv);
        }
    }
}

/// Incrementally maintained reduced row-echelon system.
#[derive(Debug, Clone, Default)]
pub struct Eliminator {
    /// Pivot column -> row with a 1 in that column. No pivot column appears
    /// in any other row.
    pivots: BTreeMap<u32, Row>,
}

pub type Pinned = Vec<(u32, SymbolVector)>;

impl Eliminator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &Row> {
        self.pivots.values()
    }

    /// Every column referenced by a stored row.
    pub fn columns(&self) -> BTreeSet<u32> {
        self.pivots.values().flat_map(|r| r.coeffs.keys().copied()).collect()
    }

    /// Adds a row and returns every column that became pinned. A row that
    /// reduces to nothing is dropped; if its rhs is not zero as well the
    /// system is inconsistent.
    pub fn insert(&mut self, mut row: Row) -> Result<Pinned, LinalgError> {
        self.reduce(&mut row);
        let mut pinned = Vec::new();
        self.place(row, &mut pinned)?;
        Ok(pinned)
    }

    /// Declares `col = value` and substitutes it out of every row.
    pub fn substitute(&mut self, col: u32, value: &[u8]) -> Result<Pinned, LinalgError> {
        let mut pinned = Vec::new();
        if let Some(mut row) = self.pivots.remove(&col) {
            // The pivot row loses its pivot; its remaining columns are free,
            // so it re-enters as a fresh row.
            row.coeffs.remove(&col);
            row.rhs.add_scaled(Gf256::ONE, value);
            self.place(row, &mut pinned)?;
            return Ok(pinned);
        }
        let mut touched = Vec::new();
        for (&p, row) in self.pivots.iter_mut() {
            if let Some(c) = row.coeffs.remove(&col) {
                row.rhs.add_scaled(c, value);
                touched.push(p);
            }
        }
        for p in touched {
            self.take_if_pinned(p, &mut pinned);
        }
        Ok(pinned)
    }

    fn reduce(&self, row: &mut Row) {
        let hits: Vec<u32> = row
            .coeffs
            .keys()
            .copied()
            .filter(|c| self.pivots.contains_key(c))
            .collect();
        for col in hits {
            // Earlier eliminations never reintroduce a pivot column.
            if let Some(&factor) = row.coeffs.get(&col) {
                row.eliminate_with(factor, &self.pivots[&col]);
            }
        }
    }

    /// Inserts a row whose columns are all free.
    fn place(&mut self, mut row: Row, pinned: &mut Pinned) -> Result<(), LinalgError> {
        let Some(&pivot) = row.coeffs.keys().next() else {
            return if row.rhs.is_zero() {
                Ok(())
            } else {
                Err(LinalgError::Inconsistent)
            };
        };
        row.normalize(pivot);
        let mut touched = Vec::new();
        for (&p, other) in self.pivots.iter_mut() {
            if let Some(&factor) = other.coeffs.get(&pivot) {
                other.eliminate_with(factor, &row);
                touched.push(p);
            }
        }
        self.pivots.insert(pivot, row);
        self.take_if_pinned(pivot, pinned);
        for p in touched {
            self.take_if_pinned(p, pinned);
        }
        Ok(())
    }

    fn take_if_pinned(&mut self, pivot: u32, pinned: &mut Pinned) {
        if self.pivots.get(&pivot).is_some_and(|r| r.coeffs.len() == 1) {
            let row = self.pivots.remove(&pivot).expect("checked above");
            pinned.push((pivot, row.rhs));
        }
    }

    /// Drops every row that mentions `col`. Used when an unknown is
    /// abandoned and can never be resolved.
    pub fn discard_column(&mut self, col: u32) {
        self.pivots.retain(|_, r| !r.coeffs.contains_key(&col));
    }
}

/// A dense system `rows * x = rhs` over the unknowns named by `column_ids`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    pub coefficient_rows: Vec<Vec<Gf256>>,
    pub rhs_rows: Vec<SymbolVector>,
    pub column_ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    /// Full column rank: every unknown.
    Solved(BTreeMap<u32, SymbolVector>),
    /// Rank deficit: the unknowns that are nonetheless determined.
    Underdetermined { pinned: BTreeMap<u32, SymbolVector> },
}

impl Solution {
    pub fn values(&self) -> &BTreeMap<u32, SymbolVector> {
        match self {
            Solution::Solved(v) => v,
            Solution::Underdetermined { pinned } => pinned,
        }
    }

    pub fn is_solved(&self) -> bool {
        matches!(self, Solution::Solved(_))
    }
}

pub fn solve(system: &LinearSystem) -> Result<Solution, LinalgError> {
    if system.coefficient_rows.len() != system.rhs_rows.len() {
        return Err(LinalgError::Shape("row count differs from rhs count"));
    }
    let width = system.column_ids.len();
    if system.coefficient_rows.iter().any(|r| r.len() != width) {
        return Err(LinalgError::Shape("row length differs from column count"));
    }
    if let Some(len) = system.rhs_rows.first().map(SymbolVector::len) {
        if system.rhs_rows.iter().any(|r| r.len() != len) {
            return Err(LinalgError::Shape("rhs lengths differ"));
        }
    }
    let mut seen = BTreeSet::new();
    for &id in &system.column_ids {
        if !seen.insert(id) {
            return Err(LinalgError::DuplicateColumn(id));
        }
    }

    let mut elim = Eliminator::new();
    let mut found = BTreeMap::new();
    for (coeffs, rhs) in system.coefficient_rows.iter().zip(&system.rhs_rows) {
        let mut row = Row::new(
            system.column_ids.iter().copied().zip(coeffs.iter().copied()).collect(),
            rhs.clone(),
        );
        // Values pinned by earlier rows are already substituted out of the
        // stored rows; new rows need the same treatment.
        for (col, value) in &found {
            if let Some(c) = row.coeffs.remove(col) {
                row.rhs.add_scaled(c, SymbolVector::as_bytes(value));
            }
        }
        for (col, value) in elim.insert(row)? {
            found.insert(col, value);
        }
    }
    if found.len() == width {
        Ok(Solution::Solved(found))
    } else {
        Ok(Solution::Underdetermined { pinned: found })
    }
}

/// Inverse of a dense square matrix by Gauss-Jordan elimination, or `None`
/// if it is singular.
pub fn invert(matrix: &[Vec<Gf256>]) -> Option<Vec<Vec<Gf256>>> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return None;
    }
    let mut a: Vec<Vec<Gf256>> = matrix.to_vec();
    let mut inv: Vec<Vec<Gf256>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Gf256::ONE } else { Gf256::ZERO }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = a[col][col].inv().ok()?;
        for j in 0..n {
            a[col][j] *= scale;
            inv[col][j] *= scale;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col];
            for j in 0..n {
                let (ac, ic) = (a[col][j], inv[col][j]);
                a[r][j] -= f * ac;
                inv[r][j] -= f * ic;
            }
        }
    }
    Some(inv)
}
