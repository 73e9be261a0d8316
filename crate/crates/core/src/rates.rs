//! RSMA and NOMA secrecy rates for one channel realization.
//!
//! Under RSMA the satellite transmits one common stream (power
//! `p_c = alpha P_t`, beamformer `w_c`) plus one private stream per user
//! (power `p_k`, beamformer `w_k`). With cascades `h_B Phi G`, the SINRs are
//!
//! ```text
//! gamma_k^c = rho_k p_c |h_k Phi G w_c|^2 / (sum_j rho_k p_j |h_j Phi G w_j|^2 + sigma^2)
//! gamma_k^p = rho_k p_k |h_k Phi G w_k|^2 / (sum_{j!=k} rho_k p_j |h_j Phi G w_j|^2 + sigma^2)
//! gamma_e^c = rho_e p_c |h_e Phi G w_c|^2 / (sum_j rho_e p_j |h_e Phi G w_j|^2 + sigma^2)
//! gamma_e^p = rho_e p_k |h_e Phi G w_k|^2 / (sum_{j!=k} rho_e p_j |h_e Phi G w_j|^2 + sigma^2)
//! ```
//!
//! and rates are `C = B_w log2(1 + gamma)`. Secrecy clamps the eavesdropper
//! off: `R_k^c = max(C_k^c - C_e^c, 0)`, `R_k^p = max(C_k^p - C_e^p, 0)`,
//! `R_k = R_k^c + R_k^p`; the secure sum rate `sum_k R_k` is the optimization
//! objective throughout the crate.
//!
//! The NOMA baseline superposes all streams on one shared matched beamformer
//! with inverse-gain power allocation and gain-ordered SIC; the eavesdropper
//! is assumed to run the same decoding order.

use nalgebra::{DVector, RowDVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelRealization;
use crate::config::LinearConfig;
use crate::ris::{factor_of, PhaseConfig};

#[derive(Debug, Error)]
pub enum RatesError {
    #[error("alpha_split must lie in (0, 1], got {0}")]
    InvalidSplit(f64),
    #[error("transmit power must be positive, got {0}")]
    InvalidPower(f64),
    #[error("need at least one user")]
    NoUsers,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Transmit power split across the common stream and the K private streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    /// Common-stream power, W.
    pub p_c: f64,
    /// Private-stream powers, W, one per user.
    pub p_k: Vec<f64>,
}

impl PowerAllocation {
    /// The RSMA split: `p_c = alpha P_t`, remainder shared evenly.
    pub fn rsma_uniform(p_t: f64, alpha: f64, k: usize) -> Result<Self, RatesError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(RatesError::InvalidSplit(alpha));
        }
        if !(p_t > 0.0) {
            return Err(RatesError::InvalidPower(p_t));
        }
        if k == 0 {
            return Err(RatesError::NoUsers);
        }
        let per_user = (1.0 - alpha) * p_t / k as f64;
        Ok(Self {
            p_c: alpha * p_t,
            p_k: vec![per_user; k],
        })
    }

    pub fn total(&self) -> f64 {
        self.p_c + self.p_k.iter().sum::<f64>()
    }
}

/// How transmit beamformers are constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecoderPolicy {
    /// Match each private beam to its user's cascade at the identity phase
    /// reference. Precoders then stay put while the RIS phases move, so the
    /// objective depends on the phases alone. This is the default.
    Matched,
    /// Re-match against the phase configuration actually under evaluation.
    MatchedPerPhase,
    /// Unit-norm isotropic random beams, drawn once per channel.
    FixedRandom,
}

impl std::str::FromStr for PrecoderPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "matched" => Ok(Self::Matched),
            "matched-per-phase" => Ok(Self::MatchedPerPhase),
            "fixed-random" => Ok(Self::FixedRandom),
            other => Err(format!(
                "unknown precoder policy {other:?}; expected matched, \
                 matched-per-phase, or fixed-random"
            )),
        }
    }
}

/// Unit-norm transmit beamformers: one common, one per user.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoders {
    pub w_c: DVector<Complex64>,
    pub w_k: Vec<DVector<Complex64>>,
}

fn unit_or_basis(v: DVector<Complex64>) -> DVector<Complex64> {
    let norm = v.norm();
    if norm > 0.0 {
        v / Complex64::new(norm, 0.0)
    } else {
        let mut e1 = DVector::from_element(v.len(), Complex64::new(0.0, 0.0));
        e1[0] = Complex64::new(1.0, 0.0);
        e1
    }
}

/// Builds beamformers for one channel under the given policy.
///
/// `Matched` conjugate-matches each `w_k` to `h_k G` (the cascade at the
/// all-zero phase reference) and points `w_c` along the normalized mean of
/// the private beams; `phases` is ignored. `MatchedPerPhase` does the same
/// against `h_k Phi G`. `FixedRandom` draws isotropic unit vectors from
/// `rng` (users first, common beam last); the other policies never touch
/// `rng`. A zero cascade falls back to the first canonical basis vector.
pub fn make_precoders(
    ch: &ChannelRealization,
    phases: &PhaseConfig,
    policy: PrecoderPolicy,
    rng: &mut impl Rng,
) -> Precoders {
    let m = ch.m();
    match policy {
        PrecoderPolicy::Matched | PrecoderPolicy::MatchedPerPhase => {
            let factors: Vec<Complex64> = match policy {
                PrecoderPolicy::Matched => vec![Complex64::new(1.0, 0.0); ch.l()],
                _ => phases.factors(),
            };
            let w_k: Vec<DVector<Complex64>> = ch
                .h_users
                .iter()
                .map(|h| {
                    let cascade = scaled_row(h, &factors) * &ch.g;
                    unit_or_basis(cascade.adjoint())
                })
                .collect();
            let mut mean = DVector::from_element(m, Complex64::new(0.0, 0.0));
            for w in &w_k {
                mean += w;
            }
            mean /= Complex64::new(w_k.len() as f64, 0.0);
            Precoders {
                w_c: unit_or_basis(mean),
                w_k,
            }
        }
        PrecoderPolicy::FixedRandom => {
            let mut draw = || {
                let v = DVector::from_iterator(
                    m,
                    (0..m).map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(re, im)
                    }),
                );
                unit_or_basis(v)
            };
            let w_k: Vec<DVector<Complex64>> = (0..ch.k()).map(|_| draw()).collect();
            let w_c = draw();
            Precoders { w_c, w_k }
        }
    }
}

/// Every intermediate SINR and rate for one evaluation.
///
/// The CSV row layout (see [`RateReport::csv_header`]) is: for each user `k`
/// the seven columns `gamma_c_k, gamma_p_k, c_c_k, c_p_k, r_c_k, r_p_k, r_k`,
/// then `gamma_e_c, c_e_c`, then per user `gamma_e_p_k, c_e_p_k`, finally
/// `secure_sum`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Common-stream SINR at each user.
    pub gamma_c: Vec<f64>,
    /// Private-stream SINR at each user (after common-stream SIC).
    pub gamma_p: Vec<f64>,
    /// Common-stream rate at each user, bit/s.
    pub rate_c: Vec<f64>,
    /// Private-stream rate at each user, bit/s.
    pub rate_p: Vec<f64>,
    /// Common-stream secrecy rate per user.
    pub secrecy_c: Vec<f64>,
    /// Private-stream secrecy rate per user.
    pub secrecy_p: Vec<f64>,
    /// Total secrecy rate per user.
    pub secrecy: Vec<f64>,
    /// Common-stream SINR at the eavesdropper.
    pub gamma_e_c: f64,
    /// Common-stream rate at the eavesdropper.
    pub rate_e_c: f64,
    /// Eavesdropper SINR on each user's private stream.
    pub gamma_e_p: Vec<f64>,
    /// Eavesdropper rate on each user's private stream.
    pub rate_e_p: Vec<f64>,
    /// The secure sum rate `sum_k R_k`, bit/s.
    pub secure_sum: f64,
}

impl RateReport {
    pub fn csv_header(k: usize) -> String {
        let mut cols = Vec::new();
        for i in 0..k {
            for name in ["gamma_c", "gamma_p", "c_c", "c_p", "r_c", "r_p", "r"] {
                cols.push(format!("{name}_{i}"));
            }
        }
        cols.push("gamma_e_c".into());
        cols.push("c_e_c".into());
        for i in 0..k {
            cols.push(format!("gamma_e_p_{i}"));
            cols.push(format!("c_e_p_{i}"));
        }
        cols.push("secure_sum".into());
        cols.join(",")
    }

    /// One CSV row in the [`RateReport::csv_header`] column order, floats
    /// with 17 significant digits.
    pub fn csv_row(&self) -> String {
        let mut cols = Vec::new();
        let f = |x: f64| format!("{x:.16e}");
        for i in 0..self.gamma_c.len() {
            cols.push(f(self.gamma_c[i]));
            cols.push(f(self.gamma_p[i]));
            cols.push(f(self.rate_c[i]));
            cols.push(f(self.rate_p[i]));
            cols.push(f(self.secrecy_c[i]));
            cols.push(f(self.secrecy_p[i]));
            cols.push(f(self.secrecy[i]));
        }
        cols.push(f(self.gamma_e_c));
        cols.push(f(self.rate_e_c));
        for i in 0..self.gamma_e_p.len() {
            cols.push(f(self.gamma_e_p[i]));
            cols.push(f(self.rate_e_p[i]));
        }
        cols.push(f(self.secure_sum));
        cols.join(",")
    }
}

/// Transmission scheme the secure sum rate is evaluated under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Rsma,
    Noma,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Rsma => "rsma",
            Scheme::Noma => "noma",
        })
    }
}

/// `B_w log2(1 + gamma)`, numerically stable for tiny SINRs.
fn rate(b_w: f64, gamma: f64) -> f64 {
    b_w * gamma.ln_1p() / std::f64::consts::LN_2
}

fn scaled_row(h: &RowDVector<Complex64>, factors: &[Complex64]) -> RowDVector<Complex64> {
    RowDVector::from_iterator(h.len(), h.iter().zip(factors).map(|(z, f)| z * f))
}

fn beam_gain(cascade: &RowDVector<Complex64>, w: &DVector<Complex64>) -> f64 {
    (cascade * w)[(0, 0)].norm_sqr()
}

fn check_dims(
    ch: &ChannelRealization,
    phases: &PhaseConfig,
    cfg: &LinearConfig,
) -> Result<(), RatesError> {
    if phases.len() != ch.l() {
        return Err(RatesError::Dimension(format!(
            "phase configuration has {} elements but the channel has {}",
            phases.len(),
            ch.l()
        )));
    }
    if ch.k() != cfg.k || ch.rho_users.len() != cfg.k {
        return Err(RatesError::Dimension(format!(
            "channel serves {} users but the config says K = {}",
            ch.k(),
            cfg.k
        )));
    }
    if ch.m() != cfg.m {
        return Err(RatesError::Dimension(format!(
            "channel has {} transmit antennas but the config says M = {}",
            ch.m(),
            cfg.m
        )));
    }
    Ok(())
}

/// Full RSMA rate report for one (channel, phases, powers, precoders) tuple.
pub fn rsma_report(
    ch: &ChannelRealization,
    phases: &PhaseConfig,
    power: &PowerAllocation,
    pre: &Precoders,
    cfg: &LinearConfig,
) -> Result<RateReport, RatesError> {
    check_dims(ch, phases, cfg)?;
    let k = cfg.k;
    if power.p_k.len() != k || pre.w_k.len() != k {
        return Err(RatesError::Dimension(format!(
            "power allocation covers {} users and precoders {}, but K = {k}",
            power.p_k.len(),
            pre.w_k.len()
        )));
    }
    let factors = phases.factors();
    let cascades: Vec<RowDVector<Complex64>> = ch
        .h_users
        .iter()
        .map(|h| scaled_row(h, &factors) * &ch.g)
        .collect();
    let cascade_eve = scaled_row(&ch.h_eve, &factors) * &ch.g;

    // |h_j Phi G w_j|^2: user j receiving its own private beam.
    let own_gain: Vec<f64> = (0..k).map(|j| beam_gain(&cascades[j], &pre.w_k[j])).collect();
    let common_gain: Vec<f64> = (0..k).map(|j| beam_gain(&cascades[j], &pre.w_c)).collect();
    let eve_gain: Vec<f64> = (0..k).map(|j| beam_gain(&cascade_eve, &pre.w_k[j])).collect();
    let eve_common = beam_gain(&cascade_eve, &pre.w_c);

    let sigma2 = cfg.sigma2_w;
    let b_w = cfg.b_w;

    let mut gamma_c = Vec::with_capacity(k);
    let mut gamma_p = Vec::with_capacity(k);
    for i in 0..k {
        let rho = ch.rho_users[i];
        let all: f64 = (0..k).map(|j| power.p_k[j] * own_gain[j]).sum();
        let others: f64 = (0..k)
            .filter(|&j| j != i)
            .map(|j| power.p_k[j] * own_gain[j])
            .sum();
        gamma_c.push(rho * power.p_c * common_gain[i] / (rho * all + sigma2));
        gamma_p.push(rho * power.p_k[i] * own_gain[i] / (rho * others + sigma2));
    }

    let rho_e = ch.rho_eve;
    let eve_all: f64 = (0..k).map(|j| power.p_k[j] * eve_gain[j]).sum();
    let gamma_e_c = rho_e * power.p_c * eve_common / (rho_e * eve_all + sigma2);
    let gamma_e_p: Vec<f64> = (0..k)
        .map(|i| {
            let others: f64 = (0..k)
                .filter(|&j| j != i)
                .map(|j| power.p_k[j] * eve_gain[j])
                .sum();
            rho_e * power.p_k[i] * eve_gain[i] / (rho_e * others + sigma2)
        })
        .collect();

    Ok(assemble_report(b_w, gamma_c, gamma_p, gamma_e_c, gamma_e_p))
}

fn assemble_report(
    b_w: f64,
    gamma_c: Vec<f64>,
    gamma_p: Vec<f64>,
    gamma_e_c: f64,
    gamma_e_p: Vec<f64>,
) -> RateReport {
    let k = gamma_c.len();
    let rate_c: Vec<f64> = gamma_c.iter().map(|&g| rate(b_w, g)).collect();
    let rate_p: Vec<f64> = gamma_p.iter().map(|&g| rate(b_w, g)).collect();
    let rate_e_c = rate(b_w, gamma_e_c);
    let rate_e_p: Vec<f64> = gamma_e_p.iter().map(|&g| rate(b_w, g)).collect();
    let secrecy_c: Vec<f64> = (0..k).map(|i| (rate_c[i] - rate_e_c).max(0.0)).collect();
    let secrecy_p: Vec<f64> = (0..k)
        .map(|i| (rate_p[i] - rate_e_p[i]).max(0.0))
        .collect();
    let secrecy: Vec<f64> = (0..k).map(|i| secrecy_c[i] + secrecy_p[i]).collect();
    let secure_sum = secrecy.iter().sum();
    RateReport {
        gamma_c,
        gamma_p,
        rate_c,
        rate_p,
        secrecy_c,
        secrecy_p,
        secrecy,
        gamma_e_c,
        rate_e_c,
        gamma_e_p,
        rate_e_p,
        secure_sum,
    }
}

/// The single beamformer NOMA superposes every stream on: the normalized
/// mean of the per-user matched beams at the identity phase reference.
pub fn noma_shared_precoder(ch: &ChannelRealization) -> DVector<Complex64> {
    let ones = vec![Complex64::new(1.0, 0.0); ch.l()];
    let mut mean = DVector::from_element(ch.m(), Complex64::new(0.0, 0.0));
    for h in &ch.h_users {
        let cascade = scaled_row(h, &ones) * &ch.g;
        mean += unit_or_basis(cascade.adjoint());
    }
    mean /= Complex64::new(ch.k() as f64, 0.0);
    unit_or_basis(mean)
}

/// SIC decoding order: users sorted by cascaded gain ascending, ties broken
/// by user index. Earlier (weaker) users carry more power and are decoded
/// and cancelled first.
pub fn noma_decode_order(gains: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| {
        gains[a]
            .partial_cmp(&gains[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

fn noma_from_gains(
    gains: &[f64],
    gain_eve: f64,
    rho_users: &[f64],
    rho_eve: f64,
    cfg: &LinearConfig,
) -> RateReport {
    let k = gains.len();
    let order = noma_decode_order(gains);

    // Inverse-gain power allocation normalized to the budget.
    let weights: Vec<f64> = gains
        .iter()
        .map(|&g| 1.0 / g.max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = weights.iter().sum();
    let p: Vec<f64> = weights.iter().map(|w| cfg.p_t_w * w / total).collect();

    // Power still undecoded when user at sorted position i is reached.
    let mut interference_after = vec![0.0; k];
    let mut acc = 0.0;
    for pos in (0..k).rev() {
        interference_after[pos] = acc;
        acc += p[order[pos]];
    }

    let sigma2 = cfg.sigma2_w;
    let mut gamma = vec![0.0; k];
    let mut gamma_e = vec![0.0; k];
    for (pos, &user) in order.iter().enumerate() {
        let interf = interference_after[pos];
        gamma[user] =
            rho_users[user] * gains[user] * p[user] / (rho_users[user] * gains[user] * interf + sigma2);
        gamma_e[user] =
            rho_eve * gain_eve * p[user] / (rho_eve * gain_eve * interf + sigma2);
    }

    let b_w = cfg.b_w;
    let rate_p: Vec<f64> = gamma.iter().map(|&g| rate(b_w, g)).collect();
    let rate_e_p: Vec<f64> = gamma_e.iter().map(|&g| rate(b_w, g)).collect();
    let secrecy_p: Vec<f64> = (0..k)
        .map(|i| (rate_p[i] - rate_e_p[i]).max(0.0))
        .collect();
    let secure_sum = secrecy_p.iter().sum();
    RateReport {
        gamma_c: vec![0.0; k],
        gamma_p: gamma,
        rate_c: vec![0.0; k],
        rate_p,
        secrecy_c: vec![0.0; k],
        secrecy_p: secrecy_p.clone(),
        secrecy: secrecy_p,
        gamma_e_c: 0.0,
        rate_e_c: 0.0,
        gamma_e_p: gamma_e,
        rate_e_p,
        secure_sum,
    }
}

/// NOMA baseline rate report: single shared matched beamformer,
/// inverse-gain power allocation, gain-ordered SIC mirrored at the
/// eavesdropper. The common-stream fields are zero by construction.
pub fn noma_report(
    ch: &ChannelRealization,
    phases: &PhaseConfig,
    cfg: &LinearConfig,
) -> Result<RateReport, RatesError> {
    check_dims(ch, phases, cfg)?;
    let w = noma_shared_precoder(ch);
    let factors = phases.factors();
    let gains: Vec<f64> = ch
        .h_users
        .iter()
        .map(|h| beam_gain(&(scaled_row(h, &factors) * &ch.g), &w))
        .collect();
    let gain_eve = beam_gain(&(scaled_row(&ch.h_eve, &factors) * &ch.g), &w);
    Ok(noma_from_gains(
        &gains,
        gain_eve,
        &ch.rho_users,
        ch.rho_eve,
        cfg,
    ))
}

/// Secure sum rate under the given scheme with the default power split and
/// the default (`Matched`) precoder policy.
pub fn secure_sum(
    ch: &ChannelRealization,
    phases: &PhaseConfig,
    cfg: &LinearConfig,
    scheme: Scheme,
) -> Result<f64, RatesError> {
    match scheme {
        Scheme::Rsma => {
            let power = PowerAllocation::rsma_uniform(cfg.p_t_w, cfg.alpha_split, cfg.k)?;
            let mut unused = rand::rngs::mock::StepRng::new(0, 1);
            let pre = make_precoders(ch, phases, PrecoderPolicy::Matched, &mut unused);
            Ok(rsma_report(ch, phases, &power, &pre, cfg)?.secure_sum)
        }
        Scheme::Noma => Ok(noma_report(ch, phases, cfg)?.secure_sum),
    }
}

/// Precomputed per-element taps that make the secure sum rate cheap inside
/// optimizer loops.
///
/// For fixed precoders, `h_B Phi G w = sum_l e^(j theta_l) h_B[l] (G[l,:] w)`,
/// so each (receiver, beam) pair collapses to one length-`L` weighted sum.
/// The per-index reflection factors are tabulated once, which keeps the fast
/// path bit-compatible with [`PhaseConfig::factor`].
pub struct SecureSumEvaluator {
    scheme: Scheme,
    k: usize,
    l: usize,
    mu: u8,
    b_w: f64,
    sigma2: f64,
    p_t: f64,
    power: PowerAllocation,
    rho_users: Vec<f64>,
    rho_eve: f64,
    /// `[k][l]`: user k's own private beam.
    taps_own: Vec<Vec<Complex64>>,
    /// `[k][l]`: the common beam at user k.
    taps_common: Vec<Vec<Complex64>>,
    /// `[j][l]`: user j's private beam at the eavesdropper.
    taps_eve: Vec<Vec<Complex64>>,
    /// `[l]`: the common beam at the eavesdropper.
    taps_eve_common: Vec<Complex64>,
    /// NOMA: the shared beam at each user, then row K is the eavesdropper.
    taps_shared: Vec<Vec<Complex64>>,
    /// Reflection coefficient per codebook index.
    factor_table: Vec<Complex64>,
}

fn taps_for(
    h: &RowDVector<Complex64>,
    g: &nalgebra::DMatrix<Complex64>,
    w: &DVector<Complex64>,
) -> Vec<Complex64> {
    (0..h.len())
        .map(|l| h[l] * (g.row(l) * w)[(0, 0)])
        .collect()
}

impl SecureSumEvaluator {
    /// Precomputes taps for one (channel, precoders, scheme) triple. The
    /// precoders are ignored under NOMA, which always uses its shared
    /// matched beam.
    pub fn new(
        cfg: &LinearConfig,
        ch: &ChannelRealization,
        pre: &Precoders,
        scheme: Scheme,
    ) -> Result<Self, RatesError> {
        if ch.k() != cfg.k || ch.m() != cfg.m || ch.l() != cfg.l {
            return Err(RatesError::Dimension(format!(
                "channel is ({}, {}, {}) but the config says (K, M, L) = ({}, {}, {})",
                ch.k(),
                ch.m(),
                ch.l(),
                cfg.k,
                cfg.m,
                cfg.l
            )));
        }
        let k = cfg.k;
        let power = PowerAllocation::rsma_uniform(cfg.p_t_w, cfg.alpha_split, k)?;
        let taps_own: Vec<Vec<Complex64>> = (0..k)
            .map(|i| taps_for(&ch.h_users[i], &ch.g, &pre.w_k[i]))
            .collect();
        let taps_common: Vec<Vec<Complex64>> = (0..k)
            .map(|i| taps_for(&ch.h_users[i], &ch.g, &pre.w_c))
            .collect();
        let taps_eve: Vec<Vec<Complex64>> = (0..k)
            .map(|j| taps_for(&ch.h_eve, &ch.g, &pre.w_k[j]))
            .collect();
        let taps_eve_common = taps_for(&ch.h_eve, &ch.g, &pre.w_c);
        let shared = noma_shared_precoder(ch);
        let mut taps_shared: Vec<Vec<Complex64>> = (0..k)
            .map(|i| taps_for(&ch.h_users[i], &ch.g, &shared))
            .collect();
        taps_shared.push(taps_for(&ch.h_eve, &ch.g, &shared));
        let factor_table: Vec<Complex64> = (0..1u32 << cfg.mu)
            .map(|i| factor_of(i as u16, cfg.mu))
            .collect();
        Ok(Self {
            scheme,
            k,
            l: cfg.l,
            mu: cfg.mu,
            b_w: cfg.b_w,
            sigma2: cfg.sigma2_w,
            p_t: cfg.p_t_w,
            power,
            rho_users: ch.rho_users.clone(),
            rho_eve: ch.rho_eve,
            taps_own,
            taps_common,
            taps_eve,
            taps_eve_common,
            taps_shared,
            factor_table,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn mu(&self) -> u8 {
        self.mu
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    fn gain(&self, taps: &[Complex64], indices: &[u16]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (tap, &idx) in taps.iter().zip(indices) {
            acc += tap * self.factor_table[idx as usize];
        }
        acc.norm_sqr()
    }

    /// Secure sum rate of one index vector.
    pub fn secure_sum_indices(&self, indices: &[u16]) -> f64 {
        debug_assert_eq!(indices.len(), self.l);
        match self.scheme {
            Scheme::Rsma => {
                let k = self.k;
                let own: Vec<f64> = (0..k)
                    .map(|j| self.gain(&self.taps_own[j], indices))
                    .collect();
                let eve: Vec<f64> = (0..k)
                    .map(|j| self.gain(&self.taps_eve[j], indices))
                    .collect();
                let mut sum = 0.0;
                let eve_all: f64 = (0..k).map(|j| self.power.p_k[j] * eve[j]).sum();
                let gamma_e_c = self.rho_eve * self.power.p_c * self.gain(&self.taps_eve_common, indices)
                    / (self.rho_eve * eve_all + self.sigma2);
                let rate_e_c = rate(self.b_w, gamma_e_c);
                let all: f64 = (0..k).map(|j| self.power.p_k[j] * own[j]).sum();
                for i in 0..k {
                    let rho = self.rho_users[i];
                    let common = self.gain(&self.taps_common[i], indices);
                    let gamma_c = rho * self.power.p_c * common / (rho * all + self.sigma2);
                    let others: f64 = (0..k)
                        .filter(|&j| j != i)
                        .map(|j| self.power.p_k[j] * own[j])
                        .sum();
                    let gamma_p = rho * self.power.p_k[i] * own[i] / (rho * others + self.sigma2);
                    let eve_others: f64 = (0..k)
                        .filter(|&j| j != i)
                        .map(|j| self.power.p_k[j] * eve[j])
                        .sum();
                    let gamma_e_p = self.rho_eve * self.power.p_k[i] * eve[i]
                        / (self.rho_eve * eve_others + self.sigma2);
                    let r_c = (rate(self.b_w, gamma_c) - rate_e_c).max(0.0);
                    let r_p = (rate(self.b_w, gamma_p) - rate(self.b_w, gamma_e_p)).max(0.0);
                    sum += r_c + r_p;
                }
                sum
            }
            Scheme::Noma => {
                let gains: Vec<f64> = (0..self.k)
                    .map(|i| self.gain(&self.taps_shared[i], indices))
                    .collect();
                let gain_eve = self.gain(&self.taps_shared[self.k], indices);
                let cfg_view = NomaView {
                    p_t_w: self.p_t,
                    sigma2_w: self.sigma2,
                    b_w: self.b_w,
                };
                noma_secure_sum_from_gains(
                    &gains,
                    gain_eve,
                    &self.rho_users,
                    self.rho_eve,
                    &cfg_view,
                )
            }
        }
    }

    /// Secure sum rate of one phase configuration.
    pub fn secure_sum(&self, phases: &PhaseConfig) -> f64 {
        self.secure_sum_indices(phases.indices())
    }
}

struct NomaView {
    p_t_w: f64,
    sigma2_w: f64,
    b_w: f64,
}

fn noma_secure_sum_from_gains(
    gains: &[f64],
    gain_eve: f64,
    rho_users: &[f64],
    rho_eve: f64,
    cfg: &NomaView,
) -> f64 {
    let k = gains.len();
    let order = noma_decode_order(gains);
    let weights: Vec<f64> = gains
        .iter()
        .map(|&g| 1.0 / g.max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = weights.iter().sum();
    let p: Vec<f64> = weights.iter().map(|w| cfg.p_t_w * w / total).collect();
    let mut interference_after = vec![0.0; k];
    let mut acc = 0.0;
    for pos in (0..k).rev() {
        interference_after[pos] = acc;
        acc += p[order[pos]];
    }
    let mut sum = 0.0;
    for (pos, &user) in order.iter().enumerate() {
        let interf = interference_after[pos];
        let gamma = rho_users[user] * gains[user] * p[user]
            / (rho_users[user] * gains[user] * interf + cfg.sigma2_w);
        let gamma_e =
            rho_eve * gain_eve * p[user] / (rho_eve * gain_eve * interf + cfg.sigma2_w);
        sum += (rate(cfg.b_w, gamma) - rate(cfg.b_w, gamma_e)).max(0.0);
    }
    sum
}
