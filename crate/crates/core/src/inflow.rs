//! Multivariate AR(1) lateral inflow model.
//!
//! Parameters are periodic: stage `t` uses period `(t - 1) % periods`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

const EIGEN_FLOOR: f64 = 1e-10;
const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InflowError {
    #[error("hydro {hydro}: zero standard deviation with nonzero serial correlation at stage {stage}")]
    Degenerate { hydro: usize, stage: usize },
    #[error("correlation matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("hydro {hydro}, period {period}: at least 2 observations are required, found {found}")]
    TooShort { hydro: usize, period: usize, found: usize },
}

/// Periodic AR(1) parameters, indexed `[hydro][period]`, plus the spatial
/// correlation of the standardized residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct InflowModel {
    pub periods: usize,
    pub mean: Vec<Vec<f64>>,
    pub std_dev: Vec<Vec<f64>>,
    pub rho: Vec<Vec<f64>>,
    pub correlation: Vec<Vec<f64>>,
}

impl InflowModel {
    /// Zero-variance model with the given per-period means.
    pub fn deterministic(means: &[Vec<f64>]) -> Self {
        let n = means.len();
        let periods = means.first().map_or(1, |m| m.len().max(1));
        Self {
            periods,
            mean: means.to_vec(),
            std_dev: vec![vec![0.0; periods]; n],
            rho: vec![vec![0.0; periods]; n],
            correlation: identity(n),
        }
    }

    pub fn num_hydros(&self) -> usize {
        self.mean.len()
    }

    pub fn period_of(&self, t: usize) -> usize {
        (t - 1) % self.periods
    }

    pub fn mean_at(&self, hydro: usize, t: usize) -> f64 {
        self.mean[hydro][self.period_of(t)]
    }

    pub fn std_at(&self, hydro: usize, t: usize) -> f64 {
        self.std_dev[hydro][self.period_of(t)]
    }

    pub fn rho_at(&self, hydro: usize, t: usize) -> f64 {
        self.rho[hydro][self.period_of(t)]
    }

    /// Human-readable list of parameter problems for `hydros` plants.
    pub fn check(&self, hydros: usize) -> Vec<String> {
        let mut out = Vec::new();
        if self.periods < 1 {
            out.push("inflow periods must be at least 1".to_string());
            return out;
        }
        for (name, table) in [("mean", &self.mean), ("std_dev", &self.std_dev), ("rho", &self.rho)] {
            if table.len() != hydros || table.iter().any(|row| row.len() != self.periods) {
                out.push(format!("inflow {name} must have {hydros} rows of {} periods", self.periods));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for i in 0..hydros {
            for p in 0..self.periods {
                if !(self.mean[i][p].is_finite() && self.mean[i][p] >= 0.0) {
                    out.push(format!("hydro {i} period {p}: mean inflow must be nonnegative"));
                }
                if !(self.std_dev[i][p].is_finite() && self.std_dev[i][p] >= 0.0) {
                    out.push(format!("hydro {i} period {p}: standard deviation must be nonnegative"));
                }
                let r = self.rho[i][p];
                if !(r.is_finite() && r.abs() <= 1.0) {
                    out.push(format!("hydro {i} period {p}: serial correlation must lie in [-1, 1]"));
                }
                if self.std_dev[i][p] == 0.0 && r != 0.0 {
                    out.push(format!("hydro {i} period {p}: zero standard deviation requires zero serial correlation"));
                }
            }
        }
        if self.correlation.len() != hydros || self.correlation.iter().any(|r| r.len() != hydros) {
            out.push(format!("correlation matrix must be {hydros} x {hydros}"));
            return out;
        }
        for i in 0..hydros {
            if (self.correlation[i][i] - 1.0).abs() > 1e-9 {
                out.push(format!("correlation diagonal entry {i} must be 1"));
            }
            for j in 0..i {
                if (self.correlation[i][j] - self.correlation[j][i]).abs() > 1e-9 {
                    out.push(format!("correlation matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        if out.is_empty() {
            if let Err(e) = NoiseFactor::new(&self.correlation) {
                out.push(e.to_string());
            }
        }
        out
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// Next-stage inflows and which hydros hit the zero clamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditioned {
    pub inflows: Vec<f64>,
    pub clamped: Vec<bool>,
}

impl Conditioned {
    pub fn clamp_count(&self) -> usize {
        self.clamped.iter().filter(|&&c| c).count()
    }
}

/// Inflows for stage `t + 1` given stage-`t` inflows `current` and noise `xi`.
pub fn condition_next(model: &InflowModel, t: usize, current: &[f64], xi: &[f64]) -> Result<Conditioned, InflowError> {
    let n = model.num_hydros();
    if current.len() != n || xi.len() != n {
        return Err(InflowError::Dimension(format!(
            "expected {n} hydros, got {} inflows and {} noise values",
            current.len(),
            xi.len()
        )));
    }
    let mut inflows = Vec::with_capacity(n);
    let mut clamped = Vec::with_capacity(n);
    for i in 0..n {
        let (mu_t, sd_t, rho) = (model.mean_at(i, t), model.std_at(i, t), model.rho_at(i, t));
        let (mu_n, sd_n) = (model.mean_at(i, t + 1), model.std_at(i, t + 1));
        let anomaly = if sd_t == 0.0 {
            if rho != 0.0 {
                return Err(InflowError::Degenerate { hydro: i, stage: t });
            }
            0.0
        } else {
            rho * (current[i] - mu_t) / sd_t
        };
        let a = mu_n + sd_n * (anomaly + (1.0 - rho * rho).sqrt() * xi[i]);
        clamped.push(a < 0.0);
        inflows.push(a.max(0.0));
    }
    Ok(Conditioned { inflows, clamped })
}

/// `d a_{t+1,i} / d a_{t,i}` of the unclamped recursion.
pub fn conditioning_slope(model: &InflowModel, t: usize, hydro: usize) -> f64 {
    let sd_t = model.std_at(hydro, t);
    if sd_t == 0.0 {
        0.0
    } else {
        model.std_at(hydro, t + 1) * model.rho_at(hydro, t) / sd_t
    }
}

/// Symmetric square root of a correlation matrix.
#[derive(Debug, Clone)]
pub struct NoiseFactor {
    root: DMatrix<f64>,
}

impl NoiseFactor {
    pub fn new(correlation: &[Vec<f64>]) -> Result<Self, InflowError> {
        let n = correlation.len();
        if correlation.iter().any(|r| r.len() != n) {
            return Err(InflowError::Dimension("correlation matrix must be square".into()));
        }
        if n == 0 {
            return Ok(Self { root: DMatrix::zeros(0, 0) });
        }
        let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (correlation[i][j] + correlation[j][i]));
        let eig = SymmetricEigen::new(m);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(InflowError::NotPsd(min));
        }
        let sqrt_vals = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR).sqrt());
        let q = &eig.eigenvectors;
        let root = q * DMatrix::from_diagonal(&sqrt_vals) * q.transpose();
        Ok(Self { root })
    }

    pub fn dim(&self) -> usize {
        self.root.nrows()
    }

    /// Maps independent standard normals to correlated ones.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.root[(i, j)] * z[j]).sum()).collect()
    }

    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dim()).map(|_| StandardNormal.sample(rng)).collect();
        self.apply(&z)
    }
}

/// `count` correlated standard-normal draws, reproducible from `seed`.
pub fn sample_noise(model: &InflowModel, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, InflowError> {
    let factor = NoiseFactor::new(&model.correlation)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| factor.draw(&mut rng)).collect())
}

/// Result of a method-of-moments fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: InflowModel,
    pub warnings: Vec<String>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64], m: f64) -> f64 {
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        None
    } else {
        Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Fits periodic AR(1) parameters to `history[hydro][k]`, where observation
/// `k` belongs to stage `k + 1`. All series must share one length.
pub fn fit_ar1(history: &[Vec<f64>], periods: usize) -> Result<FitReport, InflowError> {
    let n = history.len();
    if periods == 0 {
        return Err(InflowError::Dimension("periods must be at least 1".into()));
    }
    let len = history.first().map_or(0, |s| s.len());
    if history.iter().any(|s| s.len() != len) {
        return Err(InflowError::Dimension("all inflow series must have the same length".into()));
    }
    let mut warnings = Vec::new();
    let mut mu = vec![vec![0.0; periods]; n];
    let mut sd = vec![vec![0.0; periods]; n];
    let mut rho = vec![vec![0.0; periods]; n];
    for i in 0..n {
        for p in 0..periods {
            let xs: Vec<f64> = history[i].iter().skip(p).step_by(periods).copied().collect();
            if xs.len() < 2 {
                return Err(InflowError::TooShort {
                    hydro: i,
                    period: p,
                    found: xs.len(),
                });
            }
            let m = mean(&xs);
            mu[i][p] = m;
            sd[i][p] = sample_std(&xs, m);
            if sd[i][p] <= 1e-12 * m.abs().max(1.0) {
                sd[i][p] = 0.0;
                warnings.push(format!("hydro {i} period {p}: constant series, standard deviation set to 0"));
            }
        }
        for p in 0..periods {
            let q = (p + 1) % periods;
            if sd[i][p] == 0.0 || sd[i][q] == 0.0 {
                continue;
            }
            // pairs (a_k, a_{k+1}) with k in period p
            let mut num = 0.0;
            let mut count = 0usize;
            let mut k = p;
            while k + 1 < len {
                num += (history[i][k] - mu[i][p]) * (history[i][k + 1] - mu[i][q]);
                count += 1;
                k += periods;
            }
            if count >= 2 {
                rho[i][p] = (num / ((count as f64 - 1.0) * sd[i][p] * sd[i][q])).clamp(-1.0, 1.0);
            } else {
                warnings.push(format!("hydro {i} period {p}: too few pairs for serial correlation, set to 0"));
            }
        }
    }

    // standardized residuals, one series per hydro
    let mut resid: Vec<Vec<f64>> = vec![Vec::new(); n];
    for k in 0..len.saturating_sub(1) {
        let p = k % periods;
        let q = (k + 1) % periods;
        for i in 0..n {
            let z0 = if sd[i][p] > 0.0 { (history[i][k] - mu[i][p]) / sd[i][p] } else { 0.0 };
            let z1 = if sd[i][q] > 0.0 { (history[i][k + 1] - mu[i][q]) / sd[i][q] } else { 0.0 };
            let r = rho[i][p];
            let w = (1.0 - r * r).sqrt();
            resid[i].push(if w > 1e-12 { (z1 - r * z0) / w } else { 0.0 });
        }
    }
    let mut correlation = identity(n);
    for i in 0..n {
        for j in 0..i {
            if let Some(c) = pearson(&resid[i], &resid[j]) {
                correlation[i][j] = c;
                correlation[j][i] = c;
            }
        }
    }
    Ok(FitReport {
        model: InflowModel {
            periods,
            mean: mu,
            std_dev: sd,
            rho,
            correlation,
        },
        warnings,
    })
}

/// Simulates `len` stages of inflows starting from `start` (stage 1).
pub fn simulate(model: &InflowModel, start: &[f64], len: usize, seed: u64) -> Result<Vec<Vec<f64>>, InflowError> {
    let factor = NoiseFactor::new(&model.correlation)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.num_hydros();
    let mut out = vec![Vec::with_capacity(len); n];
    let mut cur = start.to_vec();
    for t in 1..=len {
        for i in 0..n {
            out[i].push(cur[i]);
        }
        let xi = factor.draw(&mut rng);
        cur = condition_next(model, t, &cur, &xi)?.inflows;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_hydro() -> InflowModel {
        InflowModel {
            periods: 1,
            mean: vec![vec![100.0], vec![50.0]],
            std_dev: vec![vec![20.0], vec![10.0]],
            rho: vec![vec![0.5], vec![0.5]],
            correlation: vec![vec![1.0, 0.3], vec![0.3, 1.0]],
        }
    }

    #[test]
    fn zero_rho_zero_noise_gives_mean() {
        let mut m = two_hydro();
        m.rho = vec![vec![0.0], vec![0.0]];
        let c = condition_next(&m, 1, &[150.0, 10.0], &[0.0, 0.0]).unwrap();
        assert_eq!(c.inflows, vec![100.0, 50.0]);
    }

    #[test]
    fn unit_rho_keeps_anomaly() {
        let mut m = two_hydro();
        m.rho = vec![vec![1.0], vec![1.0]];
        let c = condition_next(&m, 1, &[130.0, 45.0], &[2.5, -7.0]).unwrap();
        assert!(((c.inflows[0] - 100.0) / 20.0 - 1.5).abs() < 1e-12);
        assert!(((c.inflows[1] - 50.0) / 10.0 + 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_model_rejected() {
        let mut m = two_hydro();
        m.std_dev[0][0] = 0.0;
        assert!(matches!(
            condition_next(&m, 1, &[100.0, 50.0], &[0.0, 0.0]),
            Err(InflowError::Degenerate { hydro: 0, .. })
        ));
    }

    #[test]
    fn clamp_is_counted() {
        let m = two_hydro();
        let c = condition_next(&m, 1, &[100.0, 50.0], &[-10.0, 0.0]).unwrap();
        assert_eq!(c.inflows[0], 0.0);
        assert_eq!(c.clamp_count(), 1);
    }

    #[test]
    fn non_psd_rejected() {
        let bad = vec![vec![1.0, 0.9, -0.9], vec![0.9, 1.0, 0.9], vec![-0.9, 0.9, 1.0]];
        assert!(matches!(NoiseFactor::new(&bad), Err(InflowError::NotPsd(_))));
    }

    #[test]
    fn same_seed_same_draws() {
        let m = two_hydro();
        assert_eq!(sample_noise(&m, 50, 9).unwrap(), sample_noise(&m, 50, 9).unwrap());
    }

    #[test]
    fn constant_series_warns() {
        let fit = fit_ar1(&[vec![100.0; 20]], 1).unwrap();
        assert_eq!(fit.model.mean[0][0], 100.0);
        assert_eq!(fit.model.std_dev[0][0], 0.0);
        assert_eq!(fit.model.rho[0][0], 0.0);
        assert!(!fit.warnings.is_empty());
    }
}
