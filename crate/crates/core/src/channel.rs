//! Satellite-downlink channel model: free-space path loss and Rician fading.
//!
//! The satellite→RIS matrix `G` (`L x M`) and each RIS→receiver row `h_B`
//! (`1 x L`) follow the standard Rician decomposition
//!
//! ```text
//! H = sqrt(kappa / (1 + kappa)) * H_los + sqrt(1 / (1 + kappa)) * H_nlos
//! ```
//!
//! with a deterministic line-of-sight part built from half-wavelength ULA
//! steering vectors (angles drawn uniformly per realization) and i.i.d.
//! unit-variance circularly-symmetric Gaussian scattering. Both parts have
//! unit per-entry power, so `E|entry|^2 = 1` for every Rician factor.
//! Large-scale attenuation is kept separate as per-receiver link budgets
//! `rho = PL(d_SR) * PL(d_RB) * g_s`.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::config::LinearConfig;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("path loss requires a positive distance, got {0}")]
    NonPositiveDistance(f64),
}

/// Free-space path loss with antenna gain:
/// `gain * (c / (4 pi f_c))^2 * d^(-alpha)`.
pub fn path_loss(d: f64, gain: f64, f_c: f64, c: f64, alpha: f64) -> Result<f64, ChannelError> {
    if !(d > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d));
    }
    let aperture = (c / (4.0 * PI * f_c)).powi(2);
    Ok(gain * aperture * d.powf(-alpha))
}

/// One small-scale fading draw plus the per-receiver link budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Satellite→RIS matrix, `L x M`.
    pub g: DMatrix<Complex64>,
    /// RIS→user rows, one `1 x L` vector per user.
    pub h_users: Vec<RowDVector<Complex64>>,
    /// RIS→eavesdropper row, `1 x L`.
    pub h_eve: RowDVector<Complex64>,
    /// Cascaded link budget per user: `PL(d_SR) * PL(d_Rk) * g_s`.
    pub rho_users: Vec<f64>,
    /// Cascaded link budget of the eavesdropper.
    pub rho_eve: f64,
}

impl ChannelRealization {
    pub fn l(&self) -> usize {
        self.g.nrows()
    }

    pub fn m(&self) -> usize {
        self.g.ncols()
    }

    pub fn k(&self) -> usize {
        self.h_users.len()
    }

    /// Writes the realization in a binary-free CSV layout for
    /// cross-implementation comparison. Complex entries become quoted
    /// `"re,im"` cells with 17 significant digits; one row per section:
    ///
    /// ```text
    /// G,<element>,cell_1..cell_M
    /// h_user,<user>,cell_1..cell_L
    /// h_eve,0,cell_1..cell_L
    /// rho_user,<user>,value
    /// rho_eve,0,value
    /// ```
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        let cell = |z: &Complex64| format!("\"{:.16e},{:.16e}\"", z.re, z.im);
        for l in 0..self.l() {
            let cells: Vec<String> = self.g.row(l).iter().map(cell).collect();
            writeln!(w, "G,{l},{}", cells.join(","))?;
        }
        for (k, h) in self.h_users.iter().enumerate() {
            let cells: Vec<String> = h.iter().map(cell).collect();
            writeln!(w, "h_user,{k},{}", cells.join(","))?;
        }
        let cells: Vec<String> = self.h_eve.iter().map(cell).collect();
        writeln!(w, "h_eve,0,{}", cells.join(","))?;
        for (k, rho) in self.rho_users.iter().enumerate() {
            writeln!(w, "rho_user,{k},{rho:.16e}")?;
        }
        writeln!(w, "rho_eve,0,{:.16e}", self.rho_eve)
    }
}

/// Half-wavelength ULA steering vector `[e^(j pi n sin(angle))]_(n=0..n-1)`.
fn steering(n: usize, angle: f64) -> DVector<Complex64> {
    let s = angle.sin();
    DVector::from_iterator(
        n,
        (0..n).map(|i| Complex64::from_polar(1.0, PI * i as f64 * s)),
    )
}

fn cscg(rng: &mut (impl Rng + ?Sized)) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Rician blend weights `(sqrt(kappa/(1+kappa)), sqrt(1/(1+kappa)))`.
fn rician_weights(kappa: f64) -> (f64, f64) {
    ((kappa / (1.0 + kappa)).sqrt(), (1.0 / (1.0 + kappa)).sqrt())
}

/// Draws one channel realization from `rng`.
///
/// Draw order is part of the determinism contract: satellite→RIS angles
/// (arrival, then departure), the `L x M` scattering matrix row-major
/// (real before imaginary), then per user `k = 0..K-1` its angle followed by
/// its scattering row, then the eavesdropper's angle and row.
pub fn generate(cfg: &LinearConfig, rng: &mut impl Rng) -> Result<ChannelRealization, ChannelError> {
    let (l, m) = (cfg.l, cfg.m);
    let (w_los, w_nlos) = rician_weights(cfg.kappa);
    let (u_los, u_nlos) = rician_weights(cfg.mu_kappa);

    let aoa: f64 = rng.gen::<f64>() * TAU;
    let aod: f64 = rng.gen::<f64>() * TAU;
    let los = steering(l, aoa) * steering(m, aod).adjoint();
    let nlos = DMatrix::from_row_iterator(l, m, (0..l * m).map(|_| cscg(rng)));
    let g = los.map(|z| z * w_los) + nlos.map(|z| z * w_nlos);

    let draw_row = |rng: &mut dyn rand::RngCore| {
        let angle: f64 = rng.gen::<f64>() * TAU;
        let los_row = steering(l, angle).adjoint();
        let nlos_row =
            RowDVector::from_iterator(l, (0..l).map(|_| cscg(rng)));
        los_row.map(|z| z * u_los) + nlos_row.map(|z| z * u_nlos)
    };
    let h_users: Vec<RowDVector<Complex64>> = (0..cfg.k).map(|_| draw_row(rng)).collect();
    let h_eve = draw_row(rng);

    let sat_leg = path_loss(cfg.d_sr, cfg.gain_sat, cfg.f_c, cfg.c, cfg.alpha_sr)?;
    let rho_users = cfg
        .d_rk
        .iter()
        .map(|&d| {
            path_loss(d, cfg.gain_rx, cfg.f_c, cfg.c, cfg.alpha_rb)
                .map(|leg| sat_leg * leg * cfg.g_s)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rho_eve =
        sat_leg * path_loss(cfg.d_re, cfg.gain_rx, cfg.f_c, cfg.c, cfg.alpha_rb)? * cfg.g_s;

    Ok(ChannelRealization {
        g,
        h_users,
        h_eve,
        rho_users,
        rho_eve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::stream::{Domain, Streams};

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn small_cfg(kappa_db: f64) -> LinearConfig {
        SystemConfig {
            k: 2,
            m: 2,
            l: 4,
            d_rk: vec![300.0e3, 400.0e3],
            kappa_db,
            mu_kappa_db: kappa_db,
            ..SystemConfig::default()
        }
        .to_linear()
        .unwrap()
    }

    #[test]
    fn path_loss_matches_aperture_term_at_unit_distance() {
        let got = path_loss(1.0, 1.0, 14.0e9, 3.0e8, 2.0).unwrap();
        // Independently computed (c / (4 pi f_c))^2 at 14 GHz.
        assert!(rel_err(got, 2.907_814_581_572_193_7e-6) < 1e-12, "got {got}");
        let oracle = (3.0e8 / (4.0 * PI * 14.0e9)).powi(2);
        assert!(rel_err(got, oracle) < 1e-15);
    }

    #[test]
    fn path_loss_with_zero_exponent_ignores_distance() {
        let a = path_loss(1.0, 2.0, 14.0e9, 3.0e8, 0.0).unwrap();
        let b = path_loss(7.3e5, 2.0, 14.0e9, 3.0e8, 0.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reference_satellite_leg_is_pinned() {
        // G_S = 40 dBi, d_SR = 300 km, alpha = 2; value frozen from an
        // independent high-precision evaluation.
        let got = path_loss(300.0e3, 1.0e4, 14.0e9, 3.0e8, 2.0).unwrap();
        assert!(rel_err(got, 3.230_905_090_635_770_8e-13) < 1e-12, "got {got}");
    }

    #[test]
    fn doubling_distance_at_square_law_quarters_the_loss() {
        for d in [1.0, 137.0, 3.0e5] {
            let near = path_loss(d, 1.0, 14.0e9, 3.0e8, 2.0).unwrap();
            let far = path_loss(2.0 * d, 1.0, 14.0e9, 3.0e8, 2.0).unwrap();
            assert!(rel_err(far, near / 4.0) < 1e-15, "d = {d}");
        }
    }

    #[test]
    fn nonpositive_distance_is_rejected() {
        assert!(path_loss(0.0, 1.0, 14.0e9, 3.0e8, 2.0).is_err());
        assert!(path_loss(-1.0, 1.0, 14.0e9, 3.0e8, 2.0).is_err());
    }

    #[test]
    fn shapes_match_config() {
        let cfg = small_cfg(10.0);
        let mut rng = Streams::new(1).rng(Domain::Channel, 0);
        let ch = generate(&cfg, &mut rng).unwrap();
        assert_eq!((ch.l(), ch.m(), ch.k()), (4, 2, 2));
        assert_eq!(ch.h_eve.len(), 4);
        assert_eq!(ch.rho_users.len(), 2);
    }

    #[test]
    fn infinite_rician_factor_gives_unit_modulus_entries() {
        let cfg = small_cfg(300.0);
        let mut rng = Streams::new(2).rng(Domain::Channel, 0);
        let ch = generate(&cfg, &mut rng).unwrap();
        for z in ch.g.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-9, "|{z}| = {}", z.norm());
        }
        for h in ch.h_users.iter().chain(std::iter::once(&ch.h_eve)) {
            for z in h.iter() {
                assert!((z.norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn vanishing_rician_factor_centres_the_entries() {
        let cfg = small_cfg(-300.0);
        let mut rng = Streams::new(3).rng(Domain::Channel, 0);
        let n = 100_000 / (cfg.l * cfg.m);
        let mut mean = Complex64::new(0.0, 0.0);
        let mut count = 0.0;
        for _ in 0..n {
            let ch = generate(&cfg, &mut rng).unwrap();
            for z in ch.g.iter() {
                mean += z;
                count += 1.0;
            }
        }
        assert!((mean / count).norm() < 0.02);
    }

    #[test]
    fn per_entry_power_is_unit_for_moderate_rician_factor() {
        let cfg = small_cfg(10.0);
        let mut rng = Streams::new(4).rng(Domain::Channel, 0);
        let n = 100_000 / (cfg.l * cfg.m);
        let mut acc = 0.0;
        let mut count = 0.0;
        for _ in 0..n {
            let ch = generate(&cfg, &mut rng).unwrap();
            for z in ch.g.iter() {
                acc += z.norm_sqr();
                count += 1.0;
            }
        }
        assert!((acc / count - 1.0).abs() < 0.02, "mean power {}", acc / count);
    }

    #[test]
    fn same_stream_reproduces_the_realization() {
        let cfg = small_cfg(10.0);
        let streams = Streams::new(5);
        let a = generate(&cfg, &mut streams.rng(Domain::Channel, 9)).unwrap();
        let b = generate(&cfg, &mut streams.rng(Domain::Channel, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn link_budgets_multiply_both_legs_and_the_spreading_gain() {
        let cfg = small_cfg(10.0);
        let mut rng = Streams::new(6).rng(Domain::Channel, 0);
        let ch = generate(&cfg, &mut rng).unwrap();
        let sat = path_loss(cfg.d_sr, cfg.gain_sat, cfg.f_c, cfg.c, cfg.alpha_sr).unwrap();
        for (k, rho) in ch.rho_users.iter().enumerate() {
            let leg = path_loss(cfg.d_rk[k], cfg.gain_rx, cfg.f_c, cfg.c, cfg.alpha_rb).unwrap();
            assert!(rel_err(*rho, sat * leg * cfg.g_s) < 1e-15);
            assert!(*rho > 0.0);
        }
        let leg = path_loss(cfg.d_re, cfg.gain_rx, cfg.f_c, cfg.c, cfg.alpha_rb).unwrap();
        assert!(rel_err(ch.rho_eve, sat * leg * cfg.g_s) < 1e-15);
    }

    #[test]
    fn csv_dump_uses_re_im_cells() {
        let cfg = small_cfg(10.0);
        let mut rng = Streams::new(7).rng(Domain::Channel, 0);
        let ch = generate(&cfg, &mut rng).unwrap();
        let mut buf = Vec::new();
        ch.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        // L rows of G, K user rows, one eve row, K rho rows, one rho_eve row.
        assert_eq!(lines.len(), 4 + 2 + 1 + 2 + 1);
        assert!(lines[0].starts_with("G,0,\""));
        assert!(lines[0].matches("\",\"").count() == 1, "M = 2 cells: {}", lines[0]);
        assert!(lines[4].starts_with("h_user,0,"));
        assert!(lines[6].starts_with("h_eve,0,"));
        assert!(lines[7].starts_with("rho_user,0,"));
        assert!(lines[9].starts_with("rho_eve,0,"));
        let g00 = ch.g[(0, 0)];
        assert!(lines[0].contains(&format!("{:.16e},{:.16e}", g00.re, g00.im)));
    }
}
