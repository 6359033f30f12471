//! Asymptotic variances of the log odds ratio and of the sample phi
//! coefficient.
//!
//! The phi variance is the first-order delta method: with cell proportions
//! `(j, k, l, m)` estimating `(a, b, c, d)`, `phi_hat = f(j, k, l, m)` and
//!
//! ```text
//! AsyVar(phi_hat) = grad f' * Cov(j, k, l, m) * grad f,
//! Cov = (diag(p) - p p') / n.
//! ```

use crate::assoc::{col_margins, row_margins, ContingencyTable, JointDistribution};
use crate::error::{Error, Result};

/// Where a variance value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceBasis {
    /// `sum 1/n_ij` from observed cells.
    WaldPlugin,
    /// Null-hypothesis variance estimated from observed margins.
    ScoreNull,
    /// Delta method evaluated at the true cell probabilities.
    DeltaMethodPopulation,
    /// Delta method evaluated at the observed cell proportions.
    DeltaMethodPlugin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub value: f64,
    pub basis: VarianceBasis,
}

impl VarianceEstimate {
    pub fn std_error(&self) -> f64 {
        self.value.sqrt()
    }
}

/// Partial derivatives of phi with respect to the four cell probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiGradient {
    pub df_dj: f64,
    pub df_dk: f64,
    pub df_dl: f64,
    pub df_dm: f64,
}

impl PhiGradient {
    pub fn as_array(&self) -> [f64; 4] {
        [self.df_dj, self.df_dk, self.df_dl, self.df_dm]
    }
}

fn require_positive_counts(t: &ContingencyTable) -> Result<()> {
    if t.has_zero_cell() {
        Err(Error::ZeroCell)
    } else {
        Ok(())
    }
}

fn require_positive_cells(q: &JointDistribution) -> Result<()> {
    if q.has_positive_cells() {
        Ok(())
    } else {
        Err(Error::ZeroCell)
    }
}

pub(crate) fn wald_var_of_cells(cells: &[f64; 4]) -> f64 {
    cells.iter().map(|c| c.recip()).sum()
}

/// `n/(n1+ n+1) + n/(n1+ n+2) + n/(n2+ n+1) + n/(n2+ n+2)` on raw cells.
pub(crate) fn score_var_of_cells(cells: &[f64; 4]) -> f64 {
    let n: f64 = cells.iter().sum();
    let [r1, r2] = row_margins(cells);
    let [c1, c2] = col_margins(cells);
    n / (r1 * c1) + n / (r1 * c2) + n / (r2 * c1) + n / (r2 * c2)
}

/// Estimated variance of `ln theta_hat` under the alternative.
pub fn wald_var_log_or(t: &ContingencyTable) -> Result<VarianceEstimate> {
    require_positive_counts(t)?;
    Ok(VarianceEstimate {
        value: wald_var_of_cells(&t.cells_f64()),
        basis: VarianceBasis::WaldPlugin,
    })
}

/// Estimated variance of `ln theta_hat` under independence.
pub fn score_var_log_or(t: &ContingencyTable) -> Result<VarianceEstimate> {
    if !t.has_positive_margins() {
        return Err(Error::DegenerateMargin);
    }
    Ok(VarianceEstimate {
        value: score_var_of_cells(&t.cells_f64()),
        basis: VarianceBasis::ScoreNull,
    })
}

/// `sum 1/(n p_ij)`: the large-sample variance of `ln theta_hat` at `q`.
pub fn population_var_log_or(q: &JointDistribution, n: u64) -> Result<VarianceEstimate> {
    require_positive_cells(q)?;
    let n = n as f64;
    Ok(VarianceEstimate {
        value: q.cells().iter().map(|p| (n * p).recip()).sum(),
        basis: VarianceBasis::WaldPlugin,
    })
}

/// Gradient kernel shared by the population and plug-in variants. Cells
/// need not be normalized; only positive margins are required for finiteness.
pub(crate) fn gradient_of_cells(cells: &[f64; 4]) -> PhiGradient {
    let [a, b, c, d] = *cells;
    let v = (a + b) * (a + c) * (c + d) * (b + d);
    let inv_sqrt_v = v.sqrt().recip();
    let rho = (a * d - b * c) * inv_sqrt_v;
    let half_rho_over_v = 0.5 * rho / v;
    PhiGradient {
        df_dj: -half_rho_over_v * (2.0 * a + b + c) * (c + d) * (b + d) + inv_sqrt_v * d,
        df_dk: -half_rho_over_v * (2.0 * b + a + d) * (a + c) * (c + d) - inv_sqrt_v * c,
        df_dl: -half_rho_over_v * (2.0 * c + a + d) * (a + b) * (b + d) - inv_sqrt_v * b,
        df_dm: -half_rho_over_v * (2.0 * d + b + c) * (a + b) * (a + c) + inv_sqrt_v * a,
    }
}

/// Quadratic form of the gradient against the multinomial covariance of
/// the cell proportions at sample size `n`.
pub(crate) fn delta_var_of_cells(cells: &[f64; 4], n: f64) -> f64 {
    let g = gradient_of_cells(cells).as_array();
    let mut total = 0.0;
    for i in 0..4 {
        // var(p_i) = p_i (1 - p_i) / n
        total += g[i] * g[i] * cells[i] * (1.0 - cells[i]);
        for j in (i + 1)..4 {
            // cov(p_i, p_j) = -p_i p_j / n
            total -= 2.0 * g[i] * g[j] * cells[i] * cells[j];
        }
    }
    total / n
}

pub fn phi_gradient(q: &JointDistribution) -> Result<PhiGradient> {
    require_positive_cells(q)?;
    Ok(gradient_of_cells(&q.cells()))
}

/// Delta-method variance of `phi_hat` for samples of size `n` drawn from `q`.
pub fn delta_var_phi(q: &JointDistribution, n: u64) -> Result<VarianceEstimate> {
    require_positive_cells(q)?;
    if n == 0 {
        return Err(Error::InvalidConfig("sample size must be positive".into()));
    }
    Ok(VarianceEstimate {
        value: delta_var_of_cells(&q.cells(), n as f64),
        basis: VarianceBasis::DeltaMethodPopulation,
    })
}

/// Delta-method variance evaluated at the observed proportions of `t`.
pub fn delta_var_phi_plugin(t: &ContingencyTable) -> Result<VarianceEstimate> {
    require_positive_counts(t)?;
    let n = t.n() as f64;
    let props = t.cells_f64().map(|c| c / n);
    Ok(VarianceEstimate {
        value: delta_var_of_cells(&props, n),
        basis: VarianceBasis::DeltaMethodPlugin,
    })
}
