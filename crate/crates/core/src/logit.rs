//! Binary logistic regression fitted by Newton / IRLS, with Wald z-tests.

use std::fmt::Write as _;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::attitude::Polarity;
use crate::error::{Error, Result};
use crate::numfmt::fixed3;

/// Display names of the five coefficients, in design-matrix column order.
pub const COEFFICIENT_NAMES: [&str; 5] = [
    "Intercept",
    "Age",
    "Gender",
    "Number of friends",
    "Political attitude x",
];

/// One complete case: response plus the four covariates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    /// 1 approves (attitude +1), 0 disapproves (attitude -1).
    pub response: u8,
    pub age: f64,
    /// 0 female, 1 male.
    pub gender: u8,
    pub friend_count: u64,
    pub x: f64,
}

impl RegressionRow {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.response > 1 {
            return Err(format!("response must be 0 or 1, got {}", self.response));
        }
        if self.gender > 1 {
            return Err(format!("gender must be 0 or 1, got {}", self.gender));
        }
        if !(self.age > 0.0 && self.age.is_finite()) {
            return Err(format!("age must be positive, got {}", self.age));
        }
        if !(0.0..=1.0).contains(&self.x) {
            return Err(format!("x must lie in [0, 1], got {}", self.x));
        }
        Ok(())
    }

    fn covariates(&self) -> [f64; 5] {
        [1.0, self.age, self.gender as f64, self.friend_count as f64, self.x]
    }
}

pub fn response_of(a: Polarity) -> u8 {
    match a {
        Polarity::Negative => 0,
        Polarity::Positive => 1,
    }
}

/// Design matrix with an intercept column, and the response vector.
pub fn design_matrix(rows: &[RegressionRow]) -> (DMatrix<f64>, DVector<f64>) {
    let x = DMatrix::from_fn(rows.len(), 5, |i, j| rows[i].covariates()[j]);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.response as f64));
    (x, y)
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli log-likelihood with logistic link.
pub fn log_likelihood(beta: &DVector<f64>, x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter()
        .zip(y.iter())
        .map(|(&e, &yi)| yi * e - softplus(e))
        .sum()
}

/// Gradient of [`log_likelihood`]: `X^T (y - mu)`.
pub fn score(beta: &DVector<f64>, x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let eta = x * beta;
    let resid = DVector::from_iterator(y.len(), eta.iter().zip(y.iter()).map(|(&e, &yi)| yi - sigmoid(e)));
    x.tr_mul(&resid)
}

/// Fisher information `X^T W X` with `W = diag(mu (1 - mu))`; the Hessian of
/// [`log_likelihood`] is its negative.
pub fn information(beta: &DVector<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let eta = x * beta;
    let mut weighted = x.clone();
    for (i, &e) in eta.iter().enumerate() {
        let mu = sigmoid(e);
        let w = mu * (1.0 - mu);
        weighted.row_mut(i).scale_mut(w);
    }
    x.tr_mul(&weighted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitOptions {
    pub max_iterations: usize,
    /// Relative change of the log-likelihood that counts as converged.
    pub tolerance: f64,
}

impl Default for LogitOptions {
    fn default() -> Self {
        LogitOptions {
            max_iterations: 100,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub z: Vec<f64>,
    pub p_values: Vec<f64>,
    pub codes: Vec<String>,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub n_used: usize,
    /// Rows excluded upstream for missing covariates (set by the caller).
    pub n_dropped: usize,
}

/// Fitted probabilities beyond this logit are numerically 0 or 1.
const SEPARATION_ETA: f64 = 36.0;
const COLLINEAR_RATIO: f64 = 1e-10;

fn check_rank(x: &DMatrix<f64>, names: &[String]) -> Result<()> {
    let k = x.ncols();
    let norms: Vec<f64> = (0..k).map(|j| x.column(j).norm()).collect();
    let zero: Vec<String> = (0..k).filter(|&j| norms[j] == 0.0).map(|j| names[j].clone()).collect();
    if !zero.is_empty() {
        return Err(Error::RankDeficient { columns: zero });
    }
    let mut scaled = x.clone();
    for (j, n) in norms.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / n);
    }
    let gram = scaled.tr_mul(&scaled);
    let eig = SymmetricEigen::new(gram);
    let (imin, lmin) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one column");
    let lmax = eig.eigenvalues.max();
    if lmin <= COLLINEAR_RATIO * lmax {
        let v = eig.eigenvectors.column(imin);
        let columns = (0..k)
            .filter(|&j| v[j].abs() > 0.1)
            .map(|j| names[j].clone())
            .collect();
        return Err(Error::RankDeficient { columns });
    }
    Ok(())
}

/// Maximum-likelihood logistic regression on an arbitrary design.
pub fn fit_logistic(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[&str],
    opts: &LogitOptions,
) -> Result<LogitFit> {
    let (n, k) = x.shape();
    if names.len() != k {
        return Err(Error::InvalidInput(format!(
            "{} coefficient names for {k} design columns",
            names.len()
        )));
    }
    if y.len() != n {
        return Err(Error::InvalidInput(format!("{} responses for {n} rows", y.len())));
    }
    if n <= k {
        return Err(Error::InvalidInput(format!(
            "logistic regression with {k} coefficients needs at least {} rows, got {n}",
            k + 1
        )));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidInput("responses must be 0 or 1".into()));
    }
    let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    check_rank(x, &names)?;

    let mut beta = DVector::zeros(k);
    let mut ll = log_likelihood(&beta, x, y);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let info = information(&beta, x);
        let grad = score(&beta, x, y);
        let Some(chol) = info.cholesky() else {
            return Err(Error::Separation(format!(
                "information matrix became singular at iteration {iterations}"
            )));
        };
        let step = chol.solve(&grad);
        // step-halving until the likelihood does not decrease
        let mut t = 1.0;
        let mut candidate = &beta + &step;
        let mut ll_new = log_likelihood(&candidate, x, y);
        while !(ll_new >= ll) && t > 1e-10 {
            t *= 0.5;
            candidate = &beta + &step * t;
            ll_new = log_likelihood(&candidate, x, y);
        }
        if !(ll_new >= ll) {
            // no ascent possible along the Newton direction: at the optimum
            converged = true;
            break;
        }
        let change = (ll_new - ll).abs() / ll.abs().max(1e-300);
        beta = candidate;
        ll = ll_new;
        if change < opts.tolerance {
            // Newton is quadratic here; a few full steps drive the score to
            // rounding level, where likelihood comparisons are just noise
            let mut grad = score(&beta, x, y);
            for _ in 0..5 {
                let Some(chol) = information(&beta, x).cholesky() else { break };
                let polish = &beta + chol.solve(&grad);
                let grad_polish = score(&polish, x, y);
                if grad_polish.amax() >= grad.amax() {
                    break;
                }
                beta = polish;
                grad = grad_polish;
            }
            ll = log_likelihood(&beta, x, y);
            converged = true;
            break;
        }
    }

    let eta = x * &beta;
    let max_eta = eta.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    if !converged || max_eta > SEPARATION_ETA {
        return Err(Error::Separation(format!(
            "fitted probabilities numerically 0 or 1 (max |linear predictor| = {max_eta:.1}, \
             converged = {converged}, iterations = {iterations})"
        )));
    }

    let info = information(&beta, x);
    let cov = info
        .cholesky()
        .ok_or_else(|| Error::Separation("information matrix is singular at the optimum".into()))?
        .inverse();
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let standard_errors: Vec<f64> = (0..k).map(|j| cov[(j, j)].sqrt()).collect();
    let z: Vec<f64> = coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(b, s)| b / s)
        .collect();
    let p_values: Vec<f64> = z.iter().map(|&zi| two_sided_p(zi)).collect();
    let codes = p_values.iter().map(|&p| significance_code(p).to_string()).collect();

    Ok(LogitFit {
        names,
        coefficients,
        standard_errors,
        z,
        p_values,
        codes,
        converged,
        iterations,
        log_likelihood: ll,
        n_used: n,
        n_dropped: 0,
    })
}

/// Fits attitude on (intercept, age, gender, friends, x).
pub fn fit_logit(rows: &[RegressionRow]) -> Result<LogitFit> {
    for (i, r) in rows.iter().enumerate() {
        r.validate()
            .map_err(|e| Error::InvalidInput(format!("regression row {i}: {e}")))?;
    }
    let (x, y) = design_matrix(rows);
    fit_logistic(&x, &y, &COEFFICIENT_NAMES, &LogitOptions::default())
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `2 (1 - Phi(|z|))`, evaluated through `erfc` so that small tails keep
/// their relative precision.
pub fn two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    libm::erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// R-style significance code.
pub fn significance_code(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else if p < 0.1 {
        "."
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaldRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub p_value: f64,
    pub code: &'static str,
}

impl WaldRow {
    pub fn new(name: &str, estimate: f64, std_error: f64) -> Self {
        let z = estimate / std_error;
        let p_value = two_sided_p(z);
        WaldRow {
            name: name.to_string(),
            estimate,
            std_error,
            z,
            p_value,
            code: significance_code(p_value),
        }
    }
}

pub fn wald_summary(fit: &LogitFit) -> Vec<WaldRow> {
    fit.names
        .iter()
        .zip(fit.coefficients.iter().zip(&fit.standard_errors))
        .map(|(name, (&b, &se))| WaldRow::new(name, b, se))
        .collect()
}

pub const SIGNIF_LEGEND: &str = "Signif. codes: 0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1";

/// Human-readable summary: estimate, standard error and p-value with its
/// code, three decimals.
pub fn format_summary(rows: &[WaldRow]) -> String {
    let width = rows.iter().map(|r| r.name.chars().count()).max().unwrap_or(0).max(11);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>14}  Pr(>|z|)",
        "Coefficient", "Estimate", "Standard error"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>14}  {}{}",
            r.name,
            fixed3(r.estimate),
            fixed3(r.std_error),
            fixed3(r.p_value),
            r.code
        );
    }
    let _ = writeln!(out, "\n{SIGNIF_LEGEND}");
    out
}

pub fn write_summary_csv<W: Write>(rows: &[WaldRow], w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["coefficient", "estimate", "std_error", "z", "p_value", "code"])?;
    for r in rows {
        wtr.write_record([
            r.name.clone(),
            r.estimate.to_string(),
            r.std_error.to_string(),
            r.z.to_string(),
            r.p_value.to_string(),
            r.code.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a `response,age,gender,friend_count,x` CSV with a header row.
pub fn read_rows_csv<R: Read>(reader: R, origin: &str) -> Result<Vec<RegressionRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<RegressionRow>().enumerate() {
        let line = i + 2;
        let row = rec.map_err(|e| Error::parse(origin, line, e))?;
        row.validate().map_err(|e| Error::parse(origin, line, e))?;
        out.push(row);
    }
    Ok(out)
}

pub fn write_rows_csv<W: Write>(rows: &[RegressionRow], w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
