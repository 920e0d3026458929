use ndgrad::{add, scale, AdamConfig, OptimState, Record, Scalar, Tensor};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainingConfig;
use crate::error::{EmovcError, Result};
use crate::model::losses::{
    adversarial_loss, classifier_genuine_loss, cycle_loss, emotion_loss, full_objective,
    generator_adversarial_loss, ClassifierOutputs,
};
use crate::model::{ClassifierNet, DiscriminatorNet, GeneratorNet};

/// The five networks of the model.
#[derive(Debug, Clone)]
pub struct Networks<T: Scalar> {
    pub g_ab: GeneratorNet<T>,
    pub g_ba: GeneratorNet<T>,
    pub d_a: DiscriminatorNet<T>,
    pub d_b: DiscriminatorNet<T>,
    pub c: ClassifierNet<T>,
}

pub const NET_PREFIXES: [&str; 5] = ["g_ab.", "g_ba.", "d_a.", "d_b.", "c."];

impl<T: Scalar> Networks<T> {
    /// Initialized in a fixed order: G_AB, G_BA, D_A, D_B, C.
    pub fn new(rho: f64, height: usize, crop_width: usize, rng: &mut impl Rng) -> Result<Self> {
        Ok(Self {
            g_ab: GeneratorNet::new(rho, rng)?,
            g_ba: GeneratorNet::new(rho, rng)?,
            d_a: DiscriminatorNet::new(rho, height, crop_width, rng)?,
            d_b: DiscriminatorNet::new(rho, height, crop_width, rng)?,
            c: ClassifierNet::new(rho, height, crop_width, rng)?,
        })
    }

    fn param_sets(&self) -> [&ndgrad::ParamSet<T>; 5] {
        [self.g_ab.params(), self.g_ba.params(), self.d_a.params(), self.d_b.params(), self.c.params()]
    }

    fn param_sets_mut(&mut self) -> [&mut ndgrad::ParamSet<T>; 5] {
        [
            self.g_ab.params_mut(),
            self.g_ba.params_mut(),
            self.d_a.params_mut(),
            self.d_b.params_mut(),
            self.c.params_mut(),
        ]
    }

    pub fn zero_grad(&self) {
        for p in self.param_sets() {
            p.zero_grad();
        }
    }

    pub fn to_records(&self) -> Vec<Record> {
        self.param_sets()
            .iter()
            .zip(NET_PREFIXES)
            .flat_map(|(p, prefix)| p.to_records(prefix))
            .collect()
    }

    pub fn load_records(&mut self, records: &[Record]) -> Result<()> {
        for (p, prefix) in self.param_sets_mut().into_iter().zip(NET_PREFIXES) {
            p.load_records(prefix, records)?;
        }
        Ok(())
    }
}

/// Adam state for each network.
#[derive(Debug, Clone)]
pub struct Optimizers<T: Scalar> {
    pub g_ab: OptimState<T>,
    pub g_ba: OptimState<T>,
    pub d_a: OptimState<T>,
    pub d_b: OptimState<T>,
    pub c: OptimState<T>,
}

impl<T: Scalar> Optimizers<T> {
    pub fn new(nets: &Networks<T>, cfg: &TrainingConfig) -> Self {
        let (g, d) = (AdamConfig::gan(cfg.lr_g), AdamConfig::gan(cfg.lr_d));
        Self {
            g_ab: OptimState::new(g, nets.g_ab.params()),
            g_ba: OptimState::new(g, nets.g_ba.params()),
            d_a: OptimState::new(d, nets.d_a.params()),
            d_b: OptimState::new(d, nets.d_b.params()),
            c: OptimState::new(d, nets.c.params()),
        }
    }

    fn states(&self) -> [&OptimState<T>; 5] {
        [&self.g_ab, &self.g_ba, &self.d_a, &self.d_b, &self.c]
    }

    pub fn skipped(&self) -> u64 {
        self.states().iter().map(|s| s.skipped()).sum()
    }

    pub fn to_records(&self, nets: &Networks<T>) -> Vec<Record> {
        self.states()
            .iter()
            .zip(nets.param_sets())
            .zip(NET_PREFIXES)
            .flat_map(|((s, p), prefix)| s.to_records(&format!("opt.{prefix}"), p))
            .collect()
    }

    pub fn load_records(&mut self, nets: &Networks<T>, records: &[Record]) -> Result<()> {
        let states = [&mut self.g_ab, &mut self.g_ba, &mut self.d_a, &mut self.d_b, &mut self.c];
        for ((s, p), prefix) in states.into_iter().zip(nets.param_sets()).zip(NET_PREFIXES) {
            s.load_records(&format!("opt.{prefix}"), p, records)?;
        }
        Ok(())
    }
}

/// Loss components of one step. Adversarial values are the two-sided
/// objective measured by the discriminators before their update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: u64,
    pub adv_ab: f64,
    pub adv_ba: f64,
    pub cyc: f64,
    pub emo: f64,
    pub full: f64,
    /// Mean discriminator accuracy on the real and converted crops.
    pub d_acc: f64,
}

pub const LOSS_CSV_HEADER: &str = "step,adv_ab,adv_ba,cyc,emo,full,d_acc";

impl LossRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.step, self.adv_ab, self.adv_ba, self.cyc, self.emo, self.full, self.d_acc
        )
    }

    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        let bad = || EmovcError::Contract(format!("malformed loss row '{line}'"));
        if f.len() != 7 {
            return Err(bad());
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad());
        Ok(Self {
            step: f[0].parse().map_err(|_| bad())?,
            adv_ab: num(1)?,
            adv_ba: num(2)?,
            cyc: num(3)?,
            emo: num(4)?,
            full: num(5)?,
            d_acc: num(6)?,
        })
    }
}

fn val<T: Scalar>(t: &Tensor<T>) -> f64 {
    t.item().to_f64().unwrap_or(f64::NAN)
}

fn accuracy<T: Scalar>(real: &Tensor<T>, fake: &Tensor<T>) -> f64 {
    let half = T::lit(0.5);
    let r = real.data().iter().filter(|p| **p > half).count();
    let f = fake.data().iter().filter(|p| **p < half).count();
    (r + f) as f64 / (real.numel() + fake.numel()) as f64
}

fn check_finite(step: u64, parts: &[(&str, f64)]) -> Result<()> {
    if parts.iter().all(|(_, v)| v.is_finite()) {
        return Ok(());
    }
    let breakdown = parts
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ");
    Err(EmovcError::NonFiniteLoss { step, breakdown })
}

/// One update round: discriminators, then the classifier on genuine crops,
/// then both generators against the updated (frozen) discriminators and
/// classifier.
pub fn train_step<T: Scalar>(
    nets: &mut Networks<T>,
    opts: &mut Optimizers<T>,
    a: &Tensor<T>,
    b: &Tensor<T>,
    cfg: &TrainingConfig,
    step: u64,
) -> Result<LossRecord> {
    let neg = -T::one();
    nets.zero_grad();

    // Generator graph, reused by the generator update below.
    let fake_b = nets.g_ab.forward(a)?;
    let fake_a = nets.g_ba.forward(b)?;
    let cyc_a = nets.g_ba.forward(&fake_b)?;
    let cyc_b = nets.g_ab.forward(&fake_a)?;
    let (fake_a_d, fake_b_d) = (fake_a.detach(), fake_b.detach());

    let mut logged: Option<(f64, f64, f64)> = None;
    for _ in 0..cfg.d_updates {
        let (ra, fa) = (nets.d_a.forward(a)?, nets.d_a.forward(&fake_a_d)?);
        let (rb, fb) = (nets.d_b.forward(b)?, nets.d_b.forward(&fake_b_d)?);
        let adv_ba = adversarial_loss(&ra, &fa)?;
        let adv_ab = adversarial_loss(&rb, &fb)?;
        let (v_ab, v_ba) = (val(&adv_ab), val(&adv_ba));
        check_finite(step, &[("adv_ab", v_ab), ("adv_ba", v_ba)])?;
        if logged.is_none() {
            logged = Some((v_ab, v_ba, 0.5 * (accuracy(&ra, &fa) + accuracy(&rb, &fb))));
        }
        // Discriminators ascend the two-sided objective.
        scale(&add(&adv_ab, &adv_ba)?, neg).backward()?;
        opts.d_a.step(nets.d_a.params_mut())?;
        opts.d_b.step(nets.d_b.params_mut())?;
        nets.zero_grad();
    }
    let (adv_ab, adv_ba, d_acc) = logged.expect("at least one discriminator update");

    for _ in 0..cfg.c_updates {
        let loss = classifier_genuine_loss(&nets.c.forward(a)?, &nets.c.forward(b)?)?;
        check_finite(step, &[("classifier", val(&loss))])?;
        loss.backward()?;
        opts.c.step(nets.c.params_mut())?;
        nets.zero_grad();
    }

    let (d_a, d_b, c) = (nets.d_a.frozen(), nets.d_b.frozen(), nets.c.frozen());
    let adv_g = add(
        &generator_adversarial_loss(&d_b.forward(&fake_b)?)?,
        &generator_adversarial_loss(&d_a.forward(&fake_a)?)?,
    )?;
    let cyc = cycle_loss(a, &cyc_a, b, &cyc_b)?;
    let emo = emotion_loss(&ClassifierOutputs {
        a: c.forward(a)?,
        ab: c.forward(&fake_b)?,
        aba: c.forward(&cyc_a)?,
        b: c.forward(b)?,
        ba: c.forward(&fake_a)?,
        bab: c.forward(&cyc_b)?,
    })?;
    let (v_cyc, v_emo) = (val(&cyc), val(&emo));
    check_finite(step, &[("adv_g", val(&adv_g)), ("cyc", v_cyc), ("emo", v_emo)])?;
    let w = cfg.weights;
    let g_loss = add(
        &adv_g,
        &add(&scale(&cyc, T::lit(w.lambda1)), &scale(&emo, T::lit(w.lambda2)))?,
    )?;
    g_loss.backward()?;
    opts.g_ab.step(nets.g_ab.params_mut())?;
    opts.g_ba.step(nets.g_ba.params_mut())?;
    nets.zero_grad();

    let s = |v: f64| Tensor::<f64>::scalar(v);
    let full = val(&full_objective(&s(adv_ab), &s(adv_ba), &s(v_cyc), &s(v_emo), w)?);
    Ok(LossRecord {
        step,
        adv_ab,
        adv_ba,
        cyc: v_cyc,
        emo: v_emo,
        full,
        d_acc,
    })
}
