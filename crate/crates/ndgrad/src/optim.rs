//! Adaptive-moment optimizer.

use crate::checkpoint::Record;
use crate::error::{shape_err, NdError, Result};
use crate::params::ParamSet;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    /// Moment decays (0.5, 0.999), the usual choice for GAN training.
    pub fn gan(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Applied,
    /// A gradient contained NaN/inf; parameters and moments were left as-is.
    SkippedNonFinite,
}

/// Per-parameter first/second moments plus step and skip counters.
#[derive(Debug, Clone)]
pub struct OptimState<T: Scalar> {
    pub config: AdamConfig,
    step: u64,
    skipped: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> OptimState<T> {
    pub fn new(config: AdamConfig, params: &ParamSet<T>) -> Self {
        let zeros: Vec<Vec<T>> = (0..params.len())
            .map(|i| vec![T::zero(); params.tensor(i).numel()])
            .collect();
        Self {
            config,
            step: 0,
            skipped: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn first_moment(&self, i: usize) -> &[T] {
        &self.first[i]
    }

    pub fn second_moment(&self, i: usize) -> &[T] {
        &self.second[i]
    }

    /// Applies one update using the gradients currently held by `params`.
    pub fn step(&mut self, params: &mut ParamSet<T>) -> Result<StepOutcome> {
        let grads = params.grads();
        self.apply(params, &grads)
    }

    /// Applies one update with explicit gradients (one buffer per parameter).
    pub fn apply(&mut self, params: &mut ParamSet<T>, grads: &[Vec<T>]) -> Result<StepOutcome> {
        if grads.len() != params.len() || self.first.len() != params.len() {
            return Err(shape_err(
                "optim_step",
                format!(
                    "{} params, {} grads, {} moment buffers",
                    params.len(),
                    grads.len(),
                    self.first.len()
                ),
            ));
        }
        for (i, g) in grads.iter().enumerate() {
            if g.len() != params.tensor(i).numel() || self.first[i].len() != g.len() {
                return Err(shape_err(
                    "optim_step",
                    format!("parameter {} has {} values, grad {}", params.name(i), params.tensor(i).numel(), g.len()),
                ));
            }
        }
        if grads.iter().flatten().any(|g| !g.is_finite()) {
            self.skipped += 1;
            return Ok(StepOutcome::SkippedNonFinite);
        }

        self.step += 1;
        let c = self.config;
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let one = T::one();
        let t = self.step as i32;
        let bias1 = one - b1.powi(t);
        let bias2 = one - b2.powi(t);
        let (lr, eps) = (T::lit(c.lr), T::lit(c.eps));
        for (i, g) in grads.iter().enumerate() {
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            let mut values = params.tensor(i).to_vec();
            for j in 0..g.len() {
                m[j] = b1 * m[j] + (one - b1) * g[j];
                v[j] = b2 * v[j] + (one - b2) * g[j] * g[j];
                let m_hat = m[j] / bias1;
                let v_hat = v[j] / bias2;
                values[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            params.set(i, values)?;
        }
        Ok(StepOutcome::Applied)
    }

    pub fn to_records(&self, prefix: &str, params: &ParamSet<T>) -> Vec<Record> {
        let mut out = vec![Record::new(
            format!("{prefix}counters"),
            vec![2],
            vec![self.step as f64, self.skipped as f64],
        )];
        for i in 0..params.len() {
            let shape = params.tensor(i).shape().to_vec();
            let to64 = |v: &[T]| v.iter().map(|x| x.to_f64().unwrap()).collect();
            out.push(Record::new(format!("{prefix}m.{}", params.name(i)), shape.clone(), to64(&self.first[i])));
            out.push(Record::new(format!("{prefix}v.{}", params.name(i)), shape, to64(&self.second[i])));
        }
        out
    }

    pub fn load_records(&mut self, prefix: &str, params: &ParamSet<T>, records: &[Record]) -> Result<()> {
        let find = |name: String| {
            records
                .iter()
                .find(|r| r.name == name)
                .ok_or_else(|| NdError::Format(format!("missing optimizer record {name}")))
        };
        let counters = find(format!("{prefix}counters"))?;
        if counters.values.len() != 2 {
            return Err(NdError::Format("optimizer counters must hold two values".into()));
        }
        self.step = counters.values[0] as u64;
        self.skipped = counters.values[1] as u64;
        for i in 0..params.len() {
            for (kind, buf) in [("m", &mut self.first[i]), ("v", &mut self.second[i])] {
                let rec = find(format!("{prefix}{kind}.{}", params.name(i)))?;
                if rec.values.len() != buf.len() {
                    return Err(NdError::Format(format!("optimizer record {} has wrong size", rec.name)));
                }
                *buf = rec.values.iter().map(|&v| T::lit(v)).collect();
            }
        }
        Ok(())
    }
}
