//! Joint distributions and count tables for two binary variables, together
//! with the population and sample association measures built on them.
//!
//! Cells are always ordered `(11, 12, 21, 22)`: row index is the level of X,
//! column index the level of Y.

use crate::error::{Error, Result};
use crate::extended::ExtReal;

/// Allowed deviation of the cell sum from one.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// A point on the 3-simplex: the joint law of (X, Y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDistribution {
    cells: [f64; 4],
}

impl JointDistribution {
    pub fn new(p11: f64, p12: f64, p21: f64, p22: f64) -> Result<Self> {
        Self::from_cells([p11, p12, p21, p22])
    }

    pub fn from_cells(cells: [f64; 4]) -> Result<Self> {
        if let Some(bad) = cells.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "cell {bad} is not a finite non-negative probability"
            )));
        }
        let sum: f64 = cells.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "cells sum to {sum}, not 1"
            )));
        }
        Ok(Self { cells })
    }

    /// Normalizes non-negative weights onto the simplex.
    pub fn from_weights(weights: [f64; 4]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}"
            )));
        }
        Self::from_cells(weights.map(|w| w / total))
    }

    /// The product distribution with `P(X=1) = row1` and `P(Y=1) = col1`.
    pub fn independent(row1: f64, col1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&row1) || !(0.0..=1.0).contains(&col1) {
            return Err(Error::InvalidDistribution(format!(
                "margins ({row1}, {col1}) outside [0, 1]"
            )));
        }
        Self::from_weights([
            row1 * col1,
            row1 * (1.0 - col1),
            (1.0 - row1) * col1,
            (1.0 - row1) * (1.0 - col1),
        ])
    }

    pub fn cells(&self) -> [f64; 4] {
        self.cells
    }

    pub fn p11(&self) -> f64 {
        self.cells[0]
    }

    pub fn p12(&self) -> f64 {
        self.cells[1]
    }

    pub fn p21(&self) -> f64 {
        self.cells[2]
    }

    pub fn p22(&self) -> f64 {
        self.cells[3]
    }

    /// `(p1+, p2+)`
    pub fn row_margins(&self) -> [f64; 2] {
        row_margins(&self.cells)
    }

    /// `(p+1, p+2)`
    pub fn col_margins(&self) -> [f64; 2] {
        col_margins(&self.cells)
    }

    pub fn has_positive_margins(&self) -> bool {
        positive_margins(&self.cells)
    }

    pub fn has_positive_cells(&self) -> bool {
        self.cells.iter().all(|&p| p > 0.0)
    }

    /// Swaps the roles of X and Y.
    pub fn transpose(&self) -> Self {
        let [a, b, c, d] = self.cells;
        Self {
            cells: [a, c, b, d],
        }
    }

    /// Relabels the levels of X only.
    pub fn swap_rows(&self) -> Self {
        let [a, b, c, d] = self.cells;
        Self {
            cells: [c, d, a, b],
        }
    }
}

/// Observed 2x2 counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContingencyTable {
    counts: [u64; 4],
}

impl ContingencyTable {
    pub fn new(n11: u64, n12: u64, n21: u64, n22: u64) -> Self {
        Self {
            counts: [n11, n12, n21, n22],
        }
    }

    pub fn from_counts(counts: [u64; 4]) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> [u64; 4] {
        self.counts
    }

    pub fn cells_f64(&self) -> [f64; 4] {
        self.counts.map(|c| c as f64)
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(n1+, n2+)`
    pub fn row_margins(&self) -> [u64; 2] {
        let [a, b, c, d] = self.counts;
        [a + b, c + d]
    }

    /// `(n+1, n+2)`
    pub fn col_margins(&self) -> [u64; 2] {
        let [a, b, c, d] = self.counts;
        [a + c, b + d]
    }

    pub fn has_positive_margins(&self) -> bool {
        self.row_margins().iter().chain(&self.col_margins()).all(|&m| m > 0)
    }

    pub fn has_zero_cell(&self) -> bool {
        self.counts.contains(&0)
    }

    /// Observed cell proportions, `None` for the empty table.
    pub fn proportions(&self) -> Option<JointDistribution> {
        let n = self.n();
        (n > 0).then(|| JointDistribution {
            cells: self.counts.map(|c| c as f64 / n as f64),
        })
    }

    pub fn transpose(&self) -> Self {
        let [a, b, c, d] = self.counts;
        Self::new(a, c, b, d)
    }

    pub fn swap_rows(&self) -> Self {
        let [a, b, c, d] = self.counts;
        Self::new(c, d, a, b)
    }
}

impl std::fmt::Display for ContingencyTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [a, b, c, d] = self.counts;
        write!(f, "{a},{b},{c},{d}")
    }
}

impl std::str::FromStr for ContingencyTable {
    type Err = String;

    /// Parses `n11,n12,n21,n22`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u64>()
                    .map_err(|e| format!("bad count {p:?}: {e}"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let counts: [u64; 4] = parts
            .try_into()
            .map_err(|v: Vec<u64>| format!("expected 4 counts, got {}", v.len()))?;
        Ok(Self::from_counts(counts))
    }
}

/// Cell probabilities divided by their values under independence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pillars {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Geometric mean of `a` and `d`.
    pub g1: f64,
    /// Geometric mean of `b` and `c`.
    pub g2: f64,
    /// Arithmetic mean of `a` and `d`.
    pub a1: f64,
    /// Arithmetic mean of `b` and `c`.
    pub a2: f64,
}

/// Log odds ratio alongside the phi coefficient of the same distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurePair {
    pub log_odds: ExtReal,
    pub phi: f64,
}

pub(crate) fn row_margins(cells: &[f64; 4]) -> [f64; 2] {
    [cells[0] + cells[1], cells[2] + cells[3]]
}

pub(crate) fn col_margins(cells: &[f64; 4]) -> [f64; 2] {
    [cells[0] + cells[2], cells[1] + cells[3]]
}

pub(crate) fn positive_margins(cells: &[f64; 4]) -> bool {
    row_margins(cells)
        .iter()
        .chain(&col_margins(cells))
        .all(|&m| m > 0.0)
}

/// `(ad - bc) / sqrt(r1 r2 c1 c2)` on raw (possibly unnormalized) cells.
pub(crate) fn phi_of_cells(cells: &[f64; 4]) -> Result<f64> {
    if !positive_margins(cells) {
        return Err(Error::DegenerateMargin);
    }
    let [a, b, c, d] = *cells;
    let [r1, r2] = row_margins(cells);
    let [c1, c2] = col_margins(cells);
    let value = (a * d - b * c) / (r1 * r2 * c1 * c2).sqrt();
    Ok(value.clamp(-1.0, 1.0))
}

/// `p11 p22 / (p12 p21)`, with `+inf` for a vanishing anti-diagonal and
/// `Undefined` when both products vanish.
pub fn odds_ratio(q: &JointDistribution) -> ExtReal {
    odds_ratio_of_cells(&q.cells)
}

pub(crate) fn odds_ratio_of_cells(cells: &[f64; 4]) -> ExtReal {
    let [a, b, c, d] = *cells;
    let num = a * d;
    let den = b * c;
    match (num > 0.0, den > 0.0) {
        (_, true) => ExtReal::Finite(num / den),
        (true, false) => ExtReal::PosInf,
        (false, false) => ExtReal::Undefined,
    }
}

pub fn log_odds(q: &JointDistribution) -> ExtReal {
    log_odds_of_cells(&q.cells)
}

pub(crate) fn log_odds_of_cells(cells: &[f64; 4]) -> ExtReal {
    let [a, b, c, d] = *cells;
    if a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0 {
        // Sum of logs keeps precision for very small cells.
        ExtReal::Finite(a.ln() + d.ln() - b.ln() - c.ln())
    } else {
        odds_ratio_of_cells(cells).ln()
    }
}

/// Population phi coefficient.
pub fn phi(q: &JointDistribution) -> Result<f64> {
    phi_of_cells(&q.cells)
}

/// Sample phi coefficient. The numerator is formed exactly in integers.
pub fn phi_hat(t: &ContingencyTable) -> Result<f64> {
    if !t.has_positive_margins() {
        return Err(Error::DegenerateMargin);
    }
    let [a, b, c, d] = t.counts.map(i128::from);
    let num = (a * d - b * c) as f64;
    let [r1, r2] = t.row_margins().map(|m| m as f64);
    let [c1, c2] = t.col_margins().map(|m| m as f64);
    Ok((num / ((r1 * r2).sqrt() * (c1 * c2).sqrt())).clamp(-1.0, 1.0))
}

pub fn pillars(q: &JointDistribution) -> Result<Pillars> {
    if !q.has_positive_margins() {
        return Err(Error::DegenerateMargin);
    }
    let [p11, p12, p21, p22] = q.cells;
    let [r1, r2] = q.row_margins();
    let [c1, c2] = q.col_margins();
    let a = p11 / (r1 * c1);
    let b = p12 / (r1 * c2);
    let c = p21 / (r2 * c1);
    let d = p22 / (r2 * c2);
    Ok(Pillars {
        a,
        b,
        c,
        d,
        g1: (a * d).sqrt(),
        g2: (b * c).sqrt(),
        a1: (a + d) / 2.0,
        a2: (b + c) / 2.0,
    })
}

/// Signed canonical correlation written through the pillars:
/// `sqrt(p1+ p+1 p2+ p+2) (A - B - C + D)`.
pub fn rho_signed(q: &JointDistribution) -> Result<f64> {
    let p = pillars(q)?;
    let [r1, r2] = q.row_margins();
    let [c1, c2] = q.col_margins();
    Ok((r1 * c1 * r2 * c2).sqrt() * (p.a - p.b - p.c + p.d))
}

pub fn measures(q: &JointDistribution) -> Result<MeasurePair> {
    Ok(MeasurePair {
        log_odds: log_odds(q),
        phi: phi(q)?,
    })
}

/// Row-major 2x2 matrix.
pub type Matrix2 = [[f64; 2]; 2];

/// `B[i][j] = p_ij / sqrt(p_i+ p_+j)`.
pub fn b_matrix(q: &JointDistribution) -> Result<Matrix2> {
    if !q.has_positive_margins() {
        return Err(Error::DegenerateMargin);
    }
    let [p11, p12, p21, p22] = q.cells;
    let [r1, r2] = q.row_margins();
    let [c1, c2] = q.col_margins();
    Ok([
        [p11 / (r1 * c1).sqrt(), p12 / (r1 * c2).sqrt()],
        [p21 / (r2 * c1).sqrt(), p22 / (r2 * c2).sqrt()],
    ])
}

/// Singular values `(s1, s2)` of a 2x2 matrix, `s1 >= s2 >= 0`.
///
/// With `E = (a+d)/2, F = (a-d)/2, G = (c+b)/2, H = (c-b)/2` the singular
/// values are `hypot(E,H) +- hypot(F,G)`.
pub fn singular_values_2x2(m: &Matrix2) -> (f64, f64) {
    let [[a, b], [c, d]] = *m;
    let e = 0.5 * (a + d);
    let f = 0.5 * (a - d);
    let g = 0.5 * (c + b);
    let h = 0.5 * (c - b);
    let q = e.hypot(h);
    let r = f.hypot(g);
    (q + r, (q - r).abs())
}

/// Canonical correlations `(rho1, rho2)`: the singular values of `B`.
/// `rho1` is always 1 and `rho2 = |phi|`.
pub fn canonical_singular_values(q: &JointDistribution) -> Result<(f64, f64)> {
    Ok(singular_values_2x2(&b_matrix(q)?))
}

/// `sum p_ij^2 / (p_i+ p_+j) - 1`, which is `trace(B B^T) - 1` and equals
/// the squared canonical correlation.
pub fn rho_squared(q: &JointDistribution) -> Result<f64> {
    if !q.has_positive_margins() {
        return Err(Error::DegenerateMargin);
    }
    let [r1, r2] = q.row_margins();
    let [c1, c2] = q.col_margins();
    let expected = [r1 * c1, r1 * c2, r2 * c1, r2 * c2];
    Ok(q
        .cells
        .iter()
        .zip(expected)
        .map(|(p, e)| p * p / e)
        .sum::<f64>()
        - 1.0)
}
