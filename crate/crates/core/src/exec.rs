//! Deterministic Monte Carlo map-reduce.
//!
//! Sample indices are grouped into fixed-size blocks. Each block is reduced
//! sequentially into a [`Moments`] accumulator, blocks are evaluated in
//! parallel when the `parallel` feature is enabled, and block results are
//! merged in index order. Floating-point results therefore depend only on
//! `(seed, samples)` and never on the worker count.

use crate::error::Result;

/// Samples per reduction block. Changing this changes the rounding of every
/// estimate, so it is fixed.
pub const BLOCK_SIZE: u64 = 1024;

/// Default number of Monte Carlo samples per quantity.
pub const DEFAULT_SAMPLES: usize = 200_000;

/// Rejected samples (vanishing volume under a negative power) tolerated,
/// as a fraction of all samples.
pub const MAX_REJECT_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub mode: ExecMode,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        McConfig {
            samples,
            seed,
            mode: ExecMode::default(),
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        McConfig { seed, ..self }
    }

    pub fn with_samples(self, samples: usize) -> Self {
        McConfig { samples, ..self }
    }

    pub fn sequential(self) -> Self {
        McConfig {
            mode: ExecMode::Sequential,
            ..self
        }
    }
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig::new(DEFAULT_SAMPLES, 0)
    }
}

/// Running first-to-fourth moments of a vector statistic, plus the full
/// covariance co-moment matrix. Updates and merges follow Welford/Pébay.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: Vec<f64>,
    /// Row-major `dim × dim` sums of centred cross products.
    pub comoment: Vec<f64>,
    pub m3: Vec<f64>,
    pub m4: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Moments {
            count: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; dim * dim],
            m3: vec![0.0; dim],
            m4: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn push(&mut self, x: &[f64]) {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        self.count += 1;
        let n = self.count as f64;
        let n1 = n - 1.0;
        let mut delta = [0.0f64; 16];
        let mut delta_buf;
        let delta: &mut [f64] = if d <= 16 {
            &mut delta[..d]
        } else {
            delta_buf = vec![0.0; d];
            &mut delta_buf
        };
        for a in 0..d {
            delta[a] = x[a] - self.mean[a];
            let dn = delta[a] / n;
            let dn2 = dn * dn;
            let term1 = delta[a] * dn * n1;
            let m2 = self.comoment[a * d + a];
            self.m4[a] += term1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * m2 - 4.0 * dn * self.m3[a];
            self.m3[a] += term1 * dn * (n - 2.0) - 3.0 * dn * m2;
            self.mean[a] += dn;
        }
        for a in 0..d {
            for b in 0..d {
                self.comoment[a * d + b] += delta[a] * (x[b] - self.mean[b]);
            }
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let d = self.dim();
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta: Vec<f64> = (0..d).map(|a| other.mean[a] - self.mean[a]).collect();
        for a in 0..d {
            let da = delta[a];
            let m2a = self.comoment[a * d + a];
            let m2b = other.comoment[a * d + a];
            let m3a = self.m3[a];
            self.m4[a] += other.m4[a]
                + da.powi(4) * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
                + 6.0 * da * da * (na * na * m2b + nb * nb * m2a) / (n * n)
                + 4.0 * da * (na * other.m3[a] - nb * m3a) / n;
            self.m3[a] += other.m3[a]
                + da.powi(3) * na * nb * (na - nb) / (n * n)
                + 3.0 * da * (na * m2b - nb * m2a) / n;
        }
        for a in 0..d {
            for b in 0..d {
                self.comoment[a * d + b] +=
                    other.comoment[a * d + b] + delta[a] * delta[b] * na * nb / n;
            }
        }
        for a in 0..d {
            self.mean[a] += delta[a] * nb / n;
        }
        self.count += other.count;
    }

    /// Unbiased sample covariance between components `a` and `b`.
    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.comoment[a * self.dim() + b] / (self.count as f64 - 1.0)
    }

    pub fn variance(&self, a: usize) -> f64 {
        self.covariance(a, a).max(0.0)
    }

    /// Standard error of the sample mean of component `a`.
    pub fn std_error(&self, a: usize) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance(a) / self.count as f64).sqrt()
    }

    /// Sample excess kurtosis of component `a` (0 for constant samples).
    pub fn excess_kurtosis(&self, a: usize) -> f64 {
        let m2 = self.comoment[a * self.dim() + a];
        if self.count < 4 || m2 <= 0.0 {
            return 0.0;
        }
        self.count as f64 * self.m4[a] / (m2 * m2) - 3.0
    }
}

/// Moments of the accepted samples together with the rejection count.
#[derive(Debug, Clone)]
pub struct Accumulated {
    pub moments: Moments,
    pub rejected: usize,
}

/// Evaluate `stat(index, out)` for every sample index and reduce.
///
/// `stat` writes `dim` values into `out` and returns `Ok(false)` to reject
/// the sample. Errors are reported for the lowest failing block.
pub fn accumulate<F>(cfg: &McConfig, dim: usize, stat: F) -> Result<Accumulated>
where
    F: Fn(u64, &mut [f64]) -> Result<bool> + Sync,
{
    let total = cfg.samples as u64;
    let blocks = total.div_ceil(BLOCK_SIZE);
    let run_block = |blk: u64| -> Result<(Moments, usize)> {
        let mut m = Moments::new(dim);
        let mut rejected = 0usize;
        let mut buf = vec![0.0; dim];
        let start = blk * BLOCK_SIZE;
        let end = (start + BLOCK_SIZE).min(total);
        for idx in start..end {
            if stat(idx, &mut buf)? {
                m.push(&buf);
            } else {
                rejected += 1;
            }
        }
        Ok((m, rejected))
    };

    let parts: Vec<Result<(Moments, usize)>> = match cfg.mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            (0..blocks).into_par_iter().map(run_block).collect()
        }
        _ => (0..blocks).map(run_block).collect(),
    };

    let mut moments = Moments::new(dim);
    let mut rejected = 0;
    for part in parts {
        let (m, r) = part?;
        moments.merge(&m);
        rejected += r;
    }
    Ok(Accumulated { moments, rejected })
}

/// Run `f` with at most `threads` workers. `None` keeps the global pool.
/// Without the `parallel` feature this simply calls `f`.
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if let Some(t) = threads {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .expect("failed to build worker pool");
            return pool.install(f);
        }
        f()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(xs: &[f64]) -> (f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        let m4: f64 = xs.iter().map(|x| (x - mean).powi(4)).sum();
        (mean, m2 / (n - 1.0), n * m4 / (m2 * m2) - 3.0)
    }

    #[test]
    fn streaming_matches_two_pass() {
        let xs: Vec<f64> = (0..500).map(|i| ((i * 37 % 101) as f64).sqrt() + 0.01 * i as f64).collect();
        let mut m = Moments::new(1);
        for x in &xs {
            m.push(&[*x]);
        }
        let (mean, var, kurt) = naive(&xs);
        assert!((m.mean[0] - mean).abs() < 1e-12);
        assert!((m.variance(0) - var).abs() < 1e-10);
        assert!((m.excess_kurtosis(0) - kurt).abs() < 1e-9);
    }

    #[test]
    fn merge_matches_single_stream() {
        let xs: Vec<[f64; 2]> = (0..300)
            .map(|i| {
                let t = i as f64 * 0.1;
                [t.sin() * 3.0 + 1.0, t.cos() + t * 0.02]
            })
            .collect();
        let mut whole = Moments::new(2);
        xs.iter().for_each(|x| whole.push(x));
        let mut a = Moments::new(2);
        let mut b = Moments::new(2);
        xs[..117].iter().for_each(|x| a.push(x));
        xs[117..].iter().for_each(|x| b.push(x));
        a.merge(&b);
        for k in 0..2 {
            assert!((a.mean[k] - whole.mean[k]).abs() < 1e-12);
            assert!((a.m3[k] - whole.m3[k]).abs() < 1e-8 * whole.m3[k].abs().max(1.0));
            assert!((a.m4[k] - whole.m4[k]).abs() < 1e-8 * whole.m4[k].abs().max(1.0));
        }
        for i in 0..4 {
            assert!((a.comoment[i] - whole.comoment[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn accumulate_counts_rejections() {
        let cfg = McConfig::new(5000, 1);
        let acc = accumulate(&cfg, 1, |i, out| {
            out[0] = i as f64;
            Ok(i % 10 != 0)
        })
        .unwrap();
        assert_eq!(acc.rejected, 500);
        assert_eq!(acc.moments.count, 4500);
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let stat = |i: u64, out: &mut [f64]| {
            out[0] = ((i as f64) * 0.618).fract().ln_1p();
            Ok(true)
        };
        let cfg = McConfig::new(20_000, 3);
        let par = accumulate(&cfg, 1, stat).unwrap();
        let seq = accumulate(&cfg.sequential(), 1, stat).unwrap();
        assert_eq!(par.moments, seq.moments);
    }
}
