//! Pure-types mixture model.
//!
//! Each user acts as an oppositionist with probability `x` and as a
//! conservative with probability `1 - x`. Oppositionists approve with
//! probability `p`, conservatives with probability `q`, so a user approves
//! with probability `x p + (1 - x) q`. The approval probabilities are fitted
//! by maximum likelihood over the box `[delta, 1 - delta]^2`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::attitude::Polarity;
use crate::error::{Error, Result};
use crate::numfmt::format_sig;

pub const DEFAULT_DELTA: f64 = 1e-5;

/// One retained user: ideology score and overall attitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: f64,
    pub a: Polarity,
}

impl Observation {
    pub fn new(x: f64, a: Polarity) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("observation x = {x} outside [0, 1]")));
        }
        Ok(Observation { x, a })
    }

    /// Probability the model assigns to this observation's response.
    #[inline]
    fn prob(&self, p: f64, q: f64) -> f64 {
        let x = self.x;
        match self.a {
            Polarity::Positive => x * p + (1.0 - x) * q,
            Polarity::Negative => x * (1.0 - p) + (1.0 - x) * (1.0 - q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureTypesParams {
    /// Approval probability of an oppositionist.
    pub p: f64,
    /// Approval probability of a conservative.
    pub q: f64,
}

impl PureTypesParams {
    pub fn new(p: f64, q: f64) -> Self {
        PureTypesParams { p, q }
    }

    pub fn in_box(&self, delta: f64) -> bool {
        let hi = 1.0 - delta;
        (delta..=hi).contains(&self.p) && (delta..=hi).contains(&self.q)
    }
}

fn check_nonempty(obs: &[Observation]) -> Result<()> {
    if obs.is_empty() {
        return Err(Error::InvalidInput("no observations".into()));
    }
    Ok(())
}

fn checked_prob(o: &Observation, params: PureTypesParams) -> Result<f64> {
    let t = o.prob(params.p, params.q);
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "likelihood term {t} is not positive at p={}, q={} for x={}, a={}",
            params.p, params.q, o.x, o.a
        )));
    }
    Ok(t)
}

/// `-ln L(p, q)`, accumulated term by term in the log domain.
pub fn neg_log_likelihood(params: PureTypesParams, obs: &[Observation]) -> Result<f64> {
    check_nonempty(obs)?;
    let mut sum = 0.0;
    for o in obs {
        sum -= checked_prob(o, params)?.ln();
    }
    Ok(sum)
}

/// Analytic gradient `(d/dp, d/dq)` of [`neg_log_likelihood`].
pub fn grad_neg_log_likelihood(params: PureTypesParams, obs: &[Observation]) -> Result<(f64, f64)> {
    check_nonempty(obs)?;
    let (mut dp, mut dq) = (0.0, 0.0);
    for o in obs {
        let t = checked_prob(o, params)?;
        let (wp, wq) = (o.x / t, (1.0 - o.x) / t);
        match o.a {
            Polarity::Positive => {
                dp -= wp;
                dq -= wq;
            }
            Polarity::Negative => {
                dp += wp;
                dq += wq;
            }
        }
    }
    Ok((dp, dq))
}

/// Hessian `[[pp, pq], [pq, qq]]` of [`neg_log_likelihood`]. Every term is
/// `-ln` of an affine function, so this is always positive semidefinite.
pub fn hessian_neg_log_likelihood(
    params: PureTypesParams,
    obs: &[Observation],
) -> Result<[[f64; 2]; 2]> {
    check_nonempty(obs)?;
    let (mut hpp, mut hpq, mut hqq) = (0.0, 0.0, 0.0);
    for o in obs {
        let t = checked_prob(o, params)?;
        let t2 = t * t;
        let (x, y) = (o.x, 1.0 - o.x);
        hpp += x * x / t2;
        hpq += x * y / t2;
        hqq += y * y / t2;
    }
    Ok([[hpp, hpq], [hpq, hqq]])
}

/// Minimizer of the likelihood restricted to `p = q`: every term collapses to
/// `p` or `1 - p`, so it is the clamped approval share.
pub fn diagonal_minimizer(obs: &[Observation], delta: f64) -> Result<f64> {
    check_nonempty(obs)?;
    let n_pos = obs.iter().filter(|o| o.a.is_positive()).count();
    Ok((n_pos as f64 / obs.len() as f64).clamp(delta, 1.0 - delta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub delta: f64,
    /// Start points; empty means [`default_starts`].
    pub starts: Vec<(f64, f64)>,
    pub max_iterations: usize,
    /// Stop when the projected gradient's infinity norm drops below this.
    pub gradient_tolerance: f64,
    /// Stop when an accepted step moves less than this.
    pub step_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            delta: DEFAULT_DELTA,
            starts: Vec::new(),
            max_iterations: 10_000,
            gradient_tolerance: 1e-8,
            step_tolerance: 1e-10,
        }
    }
}

impl FitOptions {
    pub fn with_delta(delta: f64) -> Self {
        FitOptions {
            delta,
            ..Default::default()
        }
    }
}

/// 5x5 uniform lattice `{0.1, 0.3, 0.5, 0.7, 0.9}^2` without its four
/// corners. The centroid `(0.5, 0.5)` is included.
pub fn default_starts() -> Vec<(f64, f64)> {
    let axis = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut out = Vec::with_capacity(21);
    for (i, &p) in axis.iter().enumerate() {
        for (j, &q) in axis.iter().enumerate() {
            let corner = (i == 0 || i == 4) && (j == 0 || j == 4);
            if !corner {
                out.push((p, q));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: PureTypesParams,
    /// `-ln L` at `params`.
    pub nll: f64,
    /// False when the likelihood is flat along some direction at the optimum.
    pub identifiable: bool,
    /// Iterations of the local run that produced `params`.
    pub iterations: usize,
    pub converged: bool,
    /// Start point of the winning local run.
    pub start: (f64, f64),
    pub starts_converged: usize,
    pub starts_total: usize,
}

#[derive(Debug, Clone, Copy)]
struct LocalRun {
    params: PureTypesParams,
    nll: f64,
    iterations: usize,
    converged: bool,
}

const ARMIJO: f64 = 1e-4;

/// Projected Newton iteration on the box. Bound-constrained coordinates whose
/// gradient points outward are held fixed; the rest take a (lightly damped)
/// Newton step, or a steepest-descent step when the Hessian gives no descent.
fn local_minimize(obs: &[Observation], start: (f64, f64), opts: &FitOptions) -> Result<LocalRun> {
    let lo = opts.delta;
    let hi = 1.0 - opts.delta;
    let clamp = |v: f64| v.clamp(lo, hi);

    let mut theta = [clamp(start.0), clamp(start.1)];
    let params = |t: [f64; 2]| PureTypesParams::new(t[0], t[1]);
    let mut f = neg_log_likelihood(params(theta), obs)?;

    for it in 0..opts.max_iterations {
        let (gp, gq) = grad_neg_log_likelihood(params(theta), obs)?;
        let g = [gp, gq];
        let pg_norm = (0..2)
            .map(|i| (clamp(theta[i] - g[i]) - theta[i]).abs())
            .fold(0.0, f64::max);
        if pg_norm < opts.gradient_tolerance {
            return Ok(LocalRun {
                params: params(theta),
                nll: f,
                iterations: it,
                converged: true,
            });
        }

        let free: [bool; 2] = std::array::from_fn(|i| {
            !((theta[i] <= lo && g[i] > 0.0) || (theta[i] >= hi && g[i] < 0.0))
        });
        let h = hessian_neg_log_likelihood(params(theta), obs)?;
        let mut d = newton_direction(&h, &g, free);
        let slope: f64 = (0..2).map(|i| g[i] * d[i]).sum();
        if !(slope < 0.0) {
            d = std::array::from_fn(|i| if free[i] { -g[i] } else { 0.0 });
        }

        let mut t = 1.0;
        let mut accepted = theta;
        let mut f_new = f;
        while t > 1e-20 {
            let cand = [clamp(theta[0] + t * d[0]), clamp(theta[1] + t * d[1])];
            let fc = neg_log_likelihood(params(cand), obs)?;
            let decrease: f64 = (0..2).map(|i| g[i] * (cand[i] - theta[i])).sum();
            if fc <= f + ARMIJO * decrease {
                accepted = cand;
                f_new = fc;
                break;
            }
            t *= 0.5;
        }
        let step = (0..2)
            .map(|i| (accepted[i] - theta[i]).abs())
            .fold(0.0, f64::max);
        theta = accepted;
        f = f_new;
        if step < opts.step_tolerance {
            return Ok(LocalRun {
                params: params(theta),
                nll: f,
                iterations: it + 1,
                converged: true,
            });
        }
    }
    Ok(LocalRun {
        params: params(theta),
        nll: f,
        iterations: opts.max_iterations,
        converged: false,
    })
}

fn newton_direction(h: &[[f64; 2]; 2], g: &[f64; 2], free: [bool; 2]) -> [f64; 2] {
    let scale = h[0][0].abs() + h[1][1].abs();
    let mu = 1e-12 * scale.max(1e-300);
    match free {
        [true, true] => {
            let a = h[0][0] + mu;
            let b = h[0][1];
            let c = h[1][1] + mu;
            let det = a * c - b * b;
            if det > 1e-14 * a * c && det.is_finite() {
                [(-c * g[0] + b * g[1]) / det, (b * g[0] - a * g[1]) / det]
            } else {
                [-g[0], -g[1]]
            }
        }
        [true, false] => [newton_1d(h[0][0] + mu, g[0]), 0.0],
        [false, true] => [0.0, newton_1d(h[1][1] + mu, g[1])],
        [false, false] => [0.0, 0.0],
    }
}

fn newton_1d(curv: f64, g: f64) -> f64 {
    if curv > 0.0 && curv.is_finite() {
        -g / curv
    } else {
        -g
    }
}

/// Relative eigenvalue threshold below which the Hessian counts as singular.
const SINGULAR_RATIO: f64 = 1e-10;

/// Whether the likelihood pins down both parameters at `params`.
pub fn is_identifiable(params: PureTypesParams, obs: &[Observation]) -> Result<bool> {
    check_nonempty(obs)?;
    let x0 = obs[0].x;
    if obs.iter().all(|o| o.x == x0) {
        return Ok(false);
    }
    let h = hessian_neg_log_likelihood(params, obs)?;
    let tr = h[0][0] + h[1][1];
    let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
    let disc = ((h[0][0] - h[1][1]).powi(2) + 4.0 * h[0][1] * h[0][1]).sqrt();
    let lmax = 0.5 * (tr + disc);
    if !(lmax > 0.0) {
        return Ok(false);
    }
    let lmin = det / lmax;
    Ok(lmin > SINGULAR_RATIO * lmax)
}

/// Multi-start box-constrained maximum likelihood.
///
/// Among converged runs the lowest `-ln L` wins. Runs within a relative
/// `1e-12` of the best count as ties: on a non-identifiable ridge the run
/// from the centroid start is reported, otherwise the lexicographically
/// smallest `(p, q)`.
pub fn fit(obs: &[Observation], opts: &FitOptions) -> Result<FitResult> {
    if !(opts.delta > 0.0 && opts.delta < 0.5) {
        return Err(Error::InvalidInput(format!(
            "delta must lie in (0, 0.5), got {}",
            opts.delta
        )));
    }
    check_nonempty(obs)?;
    let starts = if opts.starts.is_empty() {
        default_starts()
    } else {
        opts.starts.clone()
    };
    let centroid = (0.5, 0.5);

    let runs = starts
        .iter()
        .map(|&s| local_minimize(obs, s, opts).map(|r| (s, r)))
        .collect::<Result<Vec<_>>>()?;

    let converged: Vec<&((f64, f64), LocalRun)> = runs.iter().filter(|(_, r)| r.converged).collect();
    if converged.is_empty() {
        let (_, best) = runs
            .iter()
            .min_by(|a, b| a.1.nll.total_cmp(&b.1.nll))
            .expect("at least one start");
        return Err(Error::NonConvergence {
            best: best.params,
            nll: best.nll,
            iterations: best.iterations,
        });
    }

    let best_nll = converged
        .iter()
        .map(|(_, r)| r.nll)
        .fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * best_nll.abs().max(1.0);
    let mut ties: Vec<&((f64, f64), LocalRun)> = converged
        .iter()
        .copied()
        .filter(|(_, r)| r.nll <= best_nll + tol)
        .collect();
    ties.sort_by(|a, b| {
        a.1.params
            .p
            .total_cmp(&b.1.params.p)
            .then(a.1.params.q.total_cmp(&b.1.params.q))
    });
    let lexicographic = ties[0];
    let identifiable = is_identifiable(lexicographic.1.params, obs)?;
    let (start, run) = if identifiable {
        lexicographic
    } else {
        ties.iter()
            .copied()
            .find(|(s, _)| *s == centroid)
            .unwrap_or(lexicographic)
    };

    Ok(FitResult {
        params: run.params,
        nll: neg_log_likelihood(run.params, obs)?,
        identifiable,
        iterations: run.iterations,
        converged: true,
        start: *start,
        starts_converged: converged.len(),
        starts_total: runs.len(),
    })
}

/// `(-ln L)^exponent` sampled on a uniform lattice over the delta-box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourGrid {
    pub p_values: Vec<f64>,
    pub q_values: Vec<f64>,
    /// Row-major: `values[j * p_values.len() + i]` is at `(p_values[i], q_values[j])`.
    pub values: Vec<f64>,
    pub exponent: f64,
}

impl ContourGrid {
    pub fn value(&self, i_p: usize, j_q: usize) -> f64 {
        self.values[j_q * self.p_values.len() + i_p]
    }

    /// Lattice indices `(i_p, j_q)` of the smallest value; the first in
    /// row-major order wins ties.
    pub fn argmin_cell(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = k;
            }
        }
        (best % self.p_values.len(), best / self.p_values.len())
    }

    pub fn argmin(&self) -> PureTypesParams {
        let (i, j) = self.argmin_cell();
        PureTypesParams::new(self.p_values[i], self.q_values[j])
    }

    pub fn spacing(&self) -> f64 {
        self.p_values[1] - self.p_values[0]
    }

    /// Header row `q\p,<p lattice>`; each following row starts with its q value.
    /// All numbers carry 9 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["q\\p".to_string()];
        header.extend(self.p_values.iter().map(|p| format_sig(*p, 9)));
        wtr.write_record(&header)?;
        let np = self.p_values.len();
        for (j, q) in self.q_values.iter().enumerate() {
            let mut row = Vec::with_capacity(np + 1);
            row.push(format_sig(*q, 9));
            row.extend(self.values[j * np..(j + 1) * np].iter().map(|v| format_sig(*v, 9)));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Uniform lattice of `resolution` points from `delta` to `1 - delta`.
pub fn lattice(delta: f64, resolution: usize) -> Vec<f64> {
    let span = 1.0 - 2.0 * delta;
    let last = (resolution - 1) as f64;
    (0..resolution)
        .map(|k| if k + 1 == resolution { 1.0 - delta } else { delta + span * k as f64 / last })
        .collect()
}

pub fn contour_grid(
    obs: &[Observation],
    delta: f64,
    resolution: usize,
    exponent: f64,
) -> Result<ContourGrid> {
    if resolution < 2 {
        return Err(Error::InvalidInput(format!(
            "grid resolution must be at least 2, got {resolution}"
        )));
    }
    if !(exponent > 0.0 && exponent.is_finite()) {
        return Err(Error::InvalidInput(format!("grid exponent must be positive, got {exponent}")));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 0.5), got {delta}")));
    }
    check_nonempty(obs)?;
    let axis = lattice(delta, resolution);
    let mut values = Vec::with_capacity(resolution * resolution);
    for &q in &axis {
        for &p in &axis {
            let nll = neg_log_likelihood(PureTypesParams::new(p, q), obs)?;
            values.push(nll.powf(exponent));
        }
    }
    Ok(ContourGrid {
        p_values: axis.clone(),
        q_values: axis,
        values,
        exponent,
    })
}

/// Reads an `x,a` CSV with a header row.
pub fn read_observations_csv<R: Read>(reader: R, origin: &str) -> Result<Vec<Observation>> {
    #[derive(Deserialize)]
    struct Row {
        x: f64,
        a: i64,
    }
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = rec.map_err(|e| Error::parse(origin, line, e))?;
        let a = Polarity::from_value(row.a)
            .ok_or_else(|| Error::parse(origin, line, format!("a must be -1 or 1, got {}", row.a)))?;
        out.push(Observation::new(row.x, a).map_err(|e| Error::parse(origin, line, e))?);
    }
    Ok(out)
}

pub fn write_observations_csv<W: Write>(obs: &[Observation], w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["x", "a"])?;
    for o in obs {
        wtr.write_record([o.x.to_string(), o.a.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ob(x: f64, a: i64) -> Observation {
        Observation::new(x, Polarity::from_value(a).unwrap()).unwrap()
    }

    #[test]
    fn single_oppositionist_approval() {
        let nll = neg_log_likelihood(PureTypesParams::new(0.5, 0.123), &[ob(1.0, 1)]).unwrap();
        assert!((nll - std::f64::consts::LN_2).abs() < 1e-15);
        let g = grad_neg_log_likelihood(PureTypesParams::new(0.5, 0.5), &[ob(1.0, 1)]).unwrap();
        assert_eq!(g, (-2.0, 0.0));
    }

    #[test]
    fn coin_flip_params_give_n_ln2() {
        let obs: Vec<Observation> = (0..37).map(|i| ob(i as f64 / 36.0, if i % 3 == 0 { -1 } else { 1 })).collect();
        let nll = neg_log_likelihood(PureTypesParams::new(0.5, 0.5), &obs).unwrap();
        assert!((nll - 37.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn zero_ideology_leaves_p_unidentified() {
        let obs = vec![ob(0.0, 1), ob(0.0, -1), ob(0.0, 1)];
        let (dp, _) = grad_neg_log_likelihood(PureTypesParams::new(0.3, 0.7), &obs).unwrap();
        assert_eq!(dp, 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            neg_log_likelihood(PureTypesParams::new(0.0, 0.0), &[ob(0.5, 1)]),
            Err(Error::Domain(_))
        ));
        assert!(neg_log_likelihood(PureTypesParams::new(0.5, 0.5), &[]).is_err());
        assert!(Observation::new(1.01, Polarity::Positive).is_err());
        assert!(fit(&[ob(0.5, 1)], &FitOptions::with_delta(0.5)).is_err());
        assert!(fit(&[ob(0.5, 1)], &FitOptions::with_delta(0.0)).is_err());
    }

    #[test]
    fn default_start_lattice() {
        let s = default_starts();
        assert_eq!(s.len(), 21);
        assert!(s.contains(&(0.5, 0.5)));
        assert!(!s.contains(&(0.1, 0.1)));
        assert!(!s.contains(&(0.9, 0.9)));
        assert!(!s.contains(&(0.1, 0.9)));
        assert!(s.contains(&(0.1, 0.3)));
    }

    #[test]
    fn all_oppositionist_approvals_hit_the_bound() {
        let delta = 1e-5;
        let obs = vec![ob(1.0, 1); 25];
        let r = fit(&obs, &FitOptions::with_delta(delta)).unwrap();
        assert_eq!(r.params.p, 1.0 - delta);
        assert!(!r.identifiable);
        assert_eq!(r.start, (0.5, 0.5));
        assert_eq!(r.params.q, 0.5);
    }

    #[test]
    fn shared_ideology_is_flagged() {
        let obs: Vec<Observation> = (0..40).map(|i| ob(0.3, if i % 4 == 0 { -1 } else { 1 })).collect();
        let r = fit(&obs, &FitOptions::default()).unwrap();
        assert!(!r.identifiable);
        // only the mixture 0.3 p + 0.7 q is determined, and it equals the approval share
        let mix = 0.3 * r.params.p + 0.7 * r.params.q;
        assert!((mix - 0.75).abs() < 1e-6, "{mix}");
    }

    #[test]
    fn recovers_separated_types() {
        // x in {0, 1}: p and q are the approval shares of each pure group
        let mut obs = Vec::new();
        for i in 0..100 {
            obs.push(ob(1.0, if i < 90 { 1 } else { -1 }));
            obs.push(ob(0.0, if i < 40 { 1 } else { -1 }));
        }
        obs.push(ob(0.5, 1));
        let r = fit(&obs, &FitOptions::default()).unwrap();
        assert!(r.identifiable);
        assert!((r.params.p - 0.9).abs() < 0.01, "{:?}", r.params);
        assert!((r.params.q - 0.4).abs() < 0.01, "{:?}", r.params);
        let nll = neg_log_likelihood(r.params, &obs).unwrap();
        assert_eq!(r.nll, nll);
    }

    #[test]
    fn non_convergence_reports_best_so_far() {
        let obs: Vec<Observation> = (0..50).map(|i| ob(i as f64 / 49.0, if i % 3 == 0 { -1 } else { 1 })).collect();
        let opts = FitOptions {
            max_iterations: 1,
            gradient_tolerance: 0.0,
            step_tolerance: 0.0,
            ..Default::default()
        };
        match fit(&obs, &opts) {
            Err(Error::NonConvergence { best, nll, .. }) => {
                assert!(best.in_box(opts.delta));
                assert!(nll.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn grid_layout_and_csv() {
        let obs = vec![ob(0.2, 1), ob(0.8, -1), ob(0.5, 1)];
        let g = contour_grid(&obs, 0.1, 3, 1.0).unwrap();
        assert_eq!(g.p_values, vec![0.1, 0.5, 0.9]);
        let direct = neg_log_likelihood(PureTypesParams::new(0.9, 0.1), &obs).unwrap();
        assert_eq!(g.value(2, 0), direct);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "q\\p,0.1,0.5,0.9");
        assert!(lines[1].starts_with("0.1,"));
        assert_eq!(lines[1].split(',').nth(3).unwrap(), format_sig(direct, 9));
        assert!(contour_grid(&obs, 0.1, 1, 1.0).is_err());
        assert!(contour_grid(&obs, 0.1, 3, 0.0).is_err());
    }

    #[test]
    fn lattice_endpoints_are_exact() {
        let l = lattice(1e-5, 200);
        assert_eq!(l[0], 1e-5);
        assert_eq!(l[199], 1.0 - 1e-5);
        assert_eq!(l.len(), 200);
    }

    #[test]
    fn observation_csv_roundtrip() {
        let obs = vec![ob(0.25, 1), ob(1.0, -1), ob(0.0, 1)];
        let mut buf = Vec::new();
        write_observations_csv(&obs, &mut buf).unwrap();
        assert_eq!(read_observations_csv(buf.as_slice(), "mem").unwrap(), obs);
        let bad = "x,a\n0.5,0\n";
        assert!(matches!(read_observations_csv(bad.as_bytes(), "mem"), Err(Error::Parse { line: 2, .. })));
    }
}
