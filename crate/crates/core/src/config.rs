//! Scenario description: geometry, power budget, and fading parameters.
//!
//! [`SystemConfig`] mirrors the JSON config file: powers and antenna gains in
//! dB units (the key names carry `_dBm` / `_dBi` / `_dB` suffixes), distances
//! in metres, frequencies in Hz. [`SystemConfig::to_linear`] validates the
//! whole document and converts every dB quantity once, so the hot paths only
//! ever see linear units (watts for powers).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Full description of one downlink scenario.
///
/// Defaults give the reference scenario: a 5-user Ku-band downlink through a
/// 30-element surface, 70 dBm transmit power, users 300–500 km from the RIS
/// and the eavesdropper at 450 km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// Number of legitimate users.
    #[serde(rename = "K")]
    pub k: usize,
    /// Transmit antennas at the satellite.
    #[serde(rename = "M")]
    pub m: usize,
    /// Reflecting elements on the RIS.
    #[serde(rename = "L")]
    pub l: usize,
    /// Phase resolution in bits: each element picks one of `2^mu` phases.
    pub mu: u8,
    /// Number of eavesdroppers; the model supports exactly one.
    pub e_count: usize,
    /// Transmission bandwidth in Hz.
    #[serde(rename = "B_w")]
    pub b_w: f64,
    /// Total noise power per receiver, dBm.
    #[serde(rename = "sigma2_dBm")]
    pub sigma2_dbm: f64,
    /// Transmit power budget, dBm.
    #[serde(rename = "P_t_dBm")]
    pub p_t_dbm: f64,
    /// RSMA power split: fraction of the budget on the common stream.
    pub alpha_split: f64,
    /// Satellite antenna gain, dBi.
    #[serde(rename = "G_S_dBi")]
    pub g_s_dbi: f64,
    /// Receiver-side antenna gain on the RIS→receiver segment, dBi.
    #[serde(rename = "G_B_dBi")]
    pub g_b_dbi: f64,
    /// Carrier frequency, Hz.
    pub f_c: f64,
    /// Propagation speed, m/s.
    pub c: f64,
    /// Spread-spectrum processing gain, linear.
    pub g_s: f64,
    /// Satellite→RIS distance, m.
    #[serde(rename = "d_SR")]
    pub d_sr: f64,
    /// RIS→user distances, m; one entry per user.
    #[serde(rename = "d_Rk")]
    pub d_rk: Vec<f64>,
    /// RIS→eavesdropper distance, m.
    #[serde(rename = "d_Re")]
    pub d_re: f64,
    /// Path-loss exponent of the satellite→RIS link.
    #[serde(rename = "alpha_SR")]
    pub alpha_sr: f64,
    /// Path-loss exponent of the RIS→receiver links.
    #[serde(rename = "alpha_RB")]
    pub alpha_rb: f64,
    /// Rician factor of the satellite→RIS link, dB.
    #[serde(rename = "kappa_dB")]
    pub kappa_db: f64,
    /// Rician factor of the RIS→receiver links, dB.
    #[serde(rename = "mu_kappa_dB")]
    pub mu_kappa_db: f64,
    /// Root seed; every random stream in a run derives from it.
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            k: 5,
            m: 3,
            l: 30,
            mu: 2,
            e_count: 1,
            b_w: 20.0e6,
            sigma2_dbm: -96.0,
            p_t_dbm: 70.0,
            alpha_split: 0.3,
            g_s_dbi: 40.0,
            g_b_dbi: 20.0,
            f_c: 14.0e9,
            c: 3.0e8,
            g_s: 1000.0,
            d_sr: 300.0e3,
            d_rk: spaced_user_distances(5),
            d_re: 450.0e3,
            alpha_sr: 2.0,
            alpha_rb: 2.5,
            kappa_db: 10.0,
            mu_kappa_db: 12.0,
            rng_seed: 0,
        }
    }
}

/// Evenly spaced RIS→user distances across the 300–500 km service span
/// (single user sits at the midpoint). Used whenever a config does not pin
/// `d_Rk` explicitly.
pub fn spaced_user_distances(k: usize) -> Vec<f64> {
    const NEAR: f64 = 300.0e3;
    const FAR: f64 = 500.0e3;
    if k == 1 {
        return vec![0.5 * (NEAR + FAR)];
    }
    (0..k)
        .map(|i| NEAR + (FAR - NEAR) * i as f64 / (k - 1) as f64)
        .collect()
}

/// All constraint violations found in one validation pass.
#[derive(Debug, Error)]
#[error("invalid configuration: {}", violations.join("; "))]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl SystemConfig {
    /// Checks every invariant and reports all violations, not just the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut violations = Vec::new();
        if self.k < 1 {
            violations.push(format!("K must be at least 1, got {}", self.k));
        }
        if self.m < 1 {
            violations.push(format!("M must be at least 1, got {}", self.m));
        }
        if self.l < 1 {
            violations.push(format!("L must be at least 1, got {}", self.l));
        }
        if !(1..=16).contains(&self.mu) {
            violations.push(format!(
                "mu must lie in 1..=16 (phase indices are 16-bit), got {}",
                self.mu
            ));
        }
        if self.e_count != 1 {
            violations.push(format!(
                "e_count must be exactly 1, got {}",
                self.e_count
            ));
        }
        if !(self.b_w > 0.0) {
            violations.push(format!("B_w must be positive, got {}", self.b_w));
        }
        if !(self.alpha_split > 0.0 && self.alpha_split <= 1.0) {
            violations.push(format!(
                "alpha_split must lie in (0, 1], got {}",
                self.alpha_split
            ));
        }
        if !(self.f_c > 0.0) {
            violations.push(format!("f_c must be positive, got {}", self.f_c));
        }
        if !(self.c > 0.0) {
            violations.push(format!("c must be positive, got {}", self.c));
        }
        if !(self.g_s > 0.0) {
            violations.push(format!("g_s must be positive, got {}", self.g_s));
        }
        if !(self.d_sr > 0.0) {
            violations.push(format!("d_SR must be positive, got {}", self.d_sr));
        }
        if !(self.d_re > 0.0) {
            violations.push(format!("d_Re must be positive, got {}", self.d_re));
        }
        if self.d_rk.len() != self.k {
            violations.push(format!(
                "d_Rk has {} entries but K = {}",
                self.d_rk.len(),
                self.k
            ));
        }
        for (i, d) in self.d_rk.iter().enumerate() {
            if !(*d > 0.0) {
                violations.push(format!("d_Rk[{i}] must be positive, got {d}"));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { violations })
        }
    }

    /// Validates, then converts every dB-domain quantity to linear scale.
    pub fn to_linear(&self) -> Result<LinearConfig, ConfigError> {
        self.validate()?;
        Ok(LinearConfig {
            k: self.k,
            m: self.m,
            l: self.l,
            mu: self.mu,
            e_count: self.e_count,
            b_w: self.b_w,
            sigma2_w: dbm_to_watts(self.sigma2_dbm),
            p_t_w: dbm_to_watts(self.p_t_dbm),
            alpha_split: self.alpha_split,
            gain_sat: db_to_linear(self.g_s_dbi),
            gain_rx: db_to_linear(self.g_b_dbi),
            f_c: self.f_c,
            c: self.c,
            g_s: self.g_s,
            d_sr: self.d_sr,
            d_rk: self.d_rk.clone(),
            d_re: self.d_re,
            alpha_sr: self.alpha_sr,
            alpha_rb: self.alpha_rb,
            kappa: db_to_linear(self.kappa_db),
            mu_kappa: db_to_linear(self.mu_kappa_db),
            rng_seed: self.rng_seed,
        })
    }

    /// Reads a config from its JSON form, rejecting unknown keys.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// [`SystemConfig`] with every dB quantity converted: powers in watts, gains
/// and Rician factors linear. This is what the simulation kernels consume.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConfig {
    pub k: usize,
    pub m: usize,
    pub l: usize,
    pub mu: u8,
    pub e_count: usize,
    pub b_w: f64,
    /// Total noise power per receiver, W.
    pub sigma2_w: f64,
    /// Transmit power budget, W.
    pub p_t_w: f64,
    pub alpha_split: f64,
    /// Satellite antenna gain, linear.
    pub gain_sat: f64,
    /// Receiver-side antenna gain, linear.
    pub gain_rx: f64,
    pub f_c: f64,
    pub c: f64,
    pub g_s: f64,
    pub d_sr: f64,
    pub d_rk: Vec<f64>,
    pub d_re: f64,
    pub alpha_sr: f64,
    pub alpha_rb: f64,
    /// Satellite→RIS Rician factor, linear.
    pub kappa: f64,
    /// RIS→receiver Rician factor, linear.
    pub mu_kappa: f64,
    pub rng_seed: u64,
}

/// `10^(x/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Inverse of [`db_to_linear`].
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// dBm → watts: `10^(x/10)` milliwatts, scaled to W.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) / 1000.0
}

/// Inverse of [`dbm_to_watts`].
pub fn watts_to_dbm(watts: f64) -> f64 {
    linear_to_db(watts * 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn defaults_validate() {
        SystemConfig::default().validate().expect("defaults are valid");
    }

    #[test]
    fn defaults_match_reference_scenario() {
        let cfg = SystemConfig::default();
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.m, 3);
        assert_eq!(cfg.l, 30);
        assert_eq!(cfg.mu, 2);
        assert_eq!(cfg.e_count, 1);
        assert_eq!(cfg.b_w, 20.0e6);
        assert_eq!(cfg.sigma2_dbm, -96.0);
        assert_eq!(cfg.p_t_dbm, 70.0);
        assert_eq!(cfg.alpha_split, 0.3);
        assert_eq!(cfg.g_s_dbi, 40.0);
        assert_eq!(cfg.g_b_dbi, 20.0);
        assert_eq!(cfg.f_c, 14.0e9);
        assert_eq!(cfg.c, 3.0e8);
        assert_eq!(cfg.g_s, 1000.0);
        assert_eq!(cfg.d_sr, 300.0e3);
        assert_eq!(cfg.d_rk, vec![300.0e3, 350.0e3, 400.0e3, 450.0e3, 500.0e3]);
        assert_eq!(cfg.d_re, 450.0e3);
        assert_eq!(cfg.alpha_sr, 2.0);
        assert_eq!(cfg.alpha_rb, 2.5);
        assert_eq!(cfg.kappa_db, 10.0);
        assert_eq!(cfg.mu_kappa_db, 12.0);
    }

    #[test]
    fn linear_conversion_hits_exact_values() {
        let lin = SystemConfig::default().to_linear().unwrap();
        assert_eq!(lin.p_t_w, 10_000.0);
        assert_eq!(lin.gain_sat, 10_000.0);
        assert_eq!(lin.gain_rx, 100.0);
        assert_eq!(lin.kappa, 10.0);
        assert_eq!(db_to_linear(0.0), 1.0);
        // Independently computed: 10^(-96/10) mW = 2.5118864315095801e-13 W.
        assert!(rel_err(lin.sigma2_w, 2.511_886_431_509_580_1e-13) < 1e-12);
        // 10^(12/10) = 15.848931924611135.
        assert!(rel_err(lin.mu_kappa, 15.848_931_924_611_135) < 1e-12);
    }

    #[test]
    fn zero_alpha_split_is_rejected_by_name() {
        let cfg = SystemConfig {
            alpha_split: 0.0,
            ..SystemConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("alpha_split"), "got: {err}");
    }

    #[test]
    fn distance_count_must_match_k() {
        let cfg = SystemConfig {
            k: 3,
            d_rk: vec![300.0e3, 400.0e3],
            ..SystemConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("d_Rk has 2 entries but K = 3"), "got: {msg}");
    }

    #[test]
    fn all_violations_are_reported_together() {
        let cfg = SystemConfig {
            k: 0,
            mu: 0,
            alpha_split: 2.0,
            b_w: 0.0,
            d_rk: vec![],
            ..SystemConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        assert!(err.violations.len() >= 4, "violations: {:?}", err.violations);
    }

    #[test]
    fn json_round_trip_uses_documented_keys() {
        let cfg = SystemConfig::default();
        let json = cfg.to_json();
        for key in [
            "\"K\"", "\"M\"", "\"L\"", "\"mu\"", "\"e_count\"", "\"B_w\"",
            "\"sigma2_dBm\"", "\"P_t_dBm\"", "\"alpha_split\"", "\"G_S_dBi\"",
            "\"G_B_dBi\"", "\"f_c\"", "\"c\"", "\"g_s\"", "\"d_SR\"", "\"d_Rk\"",
            "\"d_Re\"", "\"alpha_SR\"", "\"alpha_RB\"", "\"kappa_dB\"",
            "\"mu_kappa_dB\"", "\"rng_seed\"",
        ] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
        let back = SystemConfig::from_json(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_json_keys_are_rejected() {
        let mut doc: serde_json::Value =
            serde_json::from_str(&SystemConfig::default().to_json()).unwrap();
        doc["bogus"] = serde_json::json!(1);
        assert!(SystemConfig::from_json(&doc.to_string()).is_err());
    }

    #[test]
    fn partial_json_falls_back_to_defaults() {
        let cfg = SystemConfig::from_json(r#"{"K": 2, "d_Rk": [3.0e5, 4.0e5]}"#).unwrap();
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.l, 30);
        cfg.validate().unwrap();
    }

    #[test]
    fn single_user_sits_at_midpoint() {
        assert_eq!(spaced_user_distances(1), vec![400.0e3]);
        assert_eq!(spaced_user_distances(2), vec![300.0e3, 500.0e3]);
    }

    proptest! {
        #[test]
        fn db_round_trip(db in -200.0f64..200.0) {
            let back = linear_to_db(db_to_linear(db));
            prop_assert!((back - db).abs() <= 1e-12 * db.abs().max(1.0));
        }

        #[test]
        fn dbm_round_trip(dbm in -200.0f64..120.0) {
            let back = watts_to_dbm(dbm_to_watts(dbm));
            prop_assert!((back - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }
    }
}
