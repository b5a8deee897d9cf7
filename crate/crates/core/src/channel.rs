//! 3GPP UMa path loss, LoS probability, link-budget MAPL, and the
//! visibility-gated blend used as the per-link path loss.

use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Path loss of a link with neither direct nor indirect visibility.
pub const PL_OUT: f64 = f64::INFINITY;

/// MAPL constant quoted in the original text for these budget values ("121 − SINR").
/// The budget arithmetic gives 120; both are reported.
pub const STATED_MAPL_CONSTANT_DB: f64 = 121.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlosModel {
    /// TR 38.901 UMa: 1 for d ≤ 18 m, else 18/d + exp(−d/63)(1 − 18/d).
    #[default]
    Uma3gpp,
    /// min(18/d, 1)(1 + exp(−d/63)) + exp(−d/63), clamped to [0, 1].
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub fc_ghz: f64,
    pub ue_height_m: f64,
    pub plos_model: PlosModel,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            fc_ghz: 28.0,
            ue_height_m: 1.5,
            plos_model: PlosModel::Uma3gpp,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.fc_ghz.is_finite() && self.fc_ghz > 0.0) {
            return Err(PlanError::Config(format!(
                "carrier frequency must be > 0 GHz, got {}",
                self.fc_ghz
            )));
        }
        if !(self.ue_height_m.is_finite() && self.ue_height_m >= 1.5) {
            return Err(PlanError::Config(format!(
                "UE height must be >= 1.5 m, got {}",
                self.ue_height_m
            )));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / (self.fc_ghz * 1e9)
    }

    /// Break-point distance 4(z_gNB − 1)(z_UE − 1)·f/c.
    pub fn breakpoint_m(&self, gnb_height_m: f64) -> f64 {
        4.0 * (gnb_height_m - 1.0) * (self.ue_height_m - 1.0) * self.fc_ghz * 1e9 / SPEED_OF_LIGHT
    }

    pub fn p_los(&self, d2d: f64) -> f64 {
        match self.plos_model {
            PlosModel::Uma3gpp => p_los(d2d),
            PlosModel::Printed => p_los_printed(d2d),
        }
    }
}

fn check_distance(d3d: f64) -> Result<()> {
    if d3d.is_finite() && d3d > 0.0 {
        Ok(())
    } else {
        Err(PlanError::Domain(format!(
            "3D distance must be > 0 m, got {d3d}"
        )))
    }
}

/// UMa LoS path loss, dB: 28 + 22·log10(d) + 20·log10(fc).
pub fn pl_los(d3d: f64, fc_ghz: f64) -> Result<f64> {
    check_distance(d3d)?;
    Ok(28.0 + 22.0 * d3d.log10() + 20.0 * fc_ghz.log10())
}

/// UMa NLoS path loss, dB, floored by the LoS value.
pub fn pl_nlos(d3d: f64, fc_ghz: f64, z_sa: f64) -> Result<f64> {
    let los = pl_los(d3d, fc_ghz)?;
    let nlos = 13.54 + 39.08 * d3d.log10() + 20.0 * fc_ghz.log10() - 0.6 * (z_sa - 1.5);
    Ok(los.max(nlos))
}

/// UMa LoS probability (TR 38.901), outdoor UE below 13 m.
pub fn p_los(d2d: f64) -> f64 {
    if d2d <= 18.0 {
        1.0
    } else {
        18.0 / d2d + (-d2d / 63.0).exp() * (1.0 - 18.0 / d2d)
    }
}

/// The alternative LoS probability expression, clamped into [0, 1].
pub fn p_los_printed(d2d: f64) -> f64 {
    let e = (-d2d / 63.0).exp();
    let ratio = if d2d <= 0.0 {
        1.0
    } else {
        (18.0 / d2d).min(1.0)
    };
    (ratio * (1.0 + e) + e).clamp(0.0, 1.0)
}

/// Visibility-gated path loss in dB.
///
/// Direct links blend LoS and NLoS path loss by the LoS probability (in dB);
/// indirect-only links use NLoS path loss; anything else is [`PL_OUT`].
pub fn gb_plm(direct: bool, indirect: bool, d2d: f64, d3d: f64, p: &ChannelParams) -> Result<f64> {
    match (direct, indirect) {
        (true, true) => Err(PlanError::Contract(
            "a link cannot be both directly and only-indirectly visible".into(),
        )),
        (true, false) => {
            let los = pl_los(d3d, p.fc_ghz)?;
            let nlos = pl_nlos(d3d, p.fc_ghz, p.ue_height_m)?;
            let pr = p.p_los(d2d);
            Ok(pr * los + (1.0 - pr) * nlos)
        }
        (false, true) => pl_nlos(d3d, p.fc_ghz, p.ue_height_m),
        (false, false) => Ok(PL_OUT),
    }
}

/// Link-budget terms, dB / dBm / dBi / Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudget {
    pub p_gnb_dbm: f64,
    pub g_gnb_dbi: f64,
    pub g_ue_dbi: f64,
    pub l_cable_db: f64,
    pub l_body_db: f64,
    pub l_foliage_db: f64,
    pub l_rain_ice_db: f64,
    pub l_interference_db: f64,
    pub l_shadow_fading_db: f64,
    pub l_other_db: f64,
    pub bandwidth_hz: f64,
    pub nf_ue_db: f64,
    pub sinr_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            p_gnb_dbm: 49.0,
            g_gnb_dbi: 21.5,
            g_ue_dbi: 5.5,
            l_cable_db: 2.0,
            l_body_db: 13.0,
            l_foliage_db: 16.0,
            l_rain_ice_db: 3.0,
            l_interference_db: 1.0,
            l_shadow_fading_db: 7.0,
            l_other_db: 3.0,
            bandwidth_hz: 100e6,
            nf_ue_db: 5.0,
            sinr_db: 7.0,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        let losses = [
            self.l_cable_db,
            self.l_body_db,
            self.l_foliage_db,
            self.l_rain_ice_db,
            self.l_interference_db,
            self.l_shadow_fading_db,
            self.l_other_db,
        ];
        if losses.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(PlanError::Config(
                "link-budget losses must be finite and >= 0 dB".into(),
            ));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(PlanError::Config("bandwidth must be > 0 Hz".into()));
        }
        Ok(())
    }

    /// Thermal noise −174 + 10·log10(W), dBm.
    pub fn noise_dbm(&self) -> f64 {
        -174.0 + 10.0 * self.bandwidth_hz.log10()
    }

    pub fn total_gain_db(&self) -> f64 {
        self.g_gnb_dbi + self.g_ue_dbi
    }

    pub fn total_loss_db(&self) -> f64 {
        self.l_cable_db
            + self.l_body_db
            + self.l_foliage_db
            + self.l_rain_ice_db
            + self.l_interference_db
            + self.l_shadow_fading_db
            + self.l_other_db
    }

    /// Everything except the SINR term, so that `mapl = constant − SINR`.
    pub fn mapl_constant_db(&self) -> f64 {
        self.p_gnb_dbm + self.total_gain_db()
            - self.total_loss_db()
            - self.noise_dbm()
            - self.nf_ue_db
    }
}

/// Maximum allowable path loss P + G_tot − L_tot − (N0 + NF + SINR), dB.
pub fn mapl(b: &LinkBudget) -> f64 {
    b.mapl_constant_db() - b.sinr_db
}

/// The budget's MAPL next to the value quoted as "121 − SINR".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaplCheck {
    pub computed_db: f64,
    pub stated_db: f64,
    pub discrepancy_db: f64,
}

pub fn mapl_check(b: &LinkBudget) -> MaplCheck {
    let computed_db = mapl(b);
    let stated_db = STATED_MAPL_CONSTANT_DB - b.sinr_db;
    MaplCheck {
        computed_db,
        stated_db,
        discrepancy_db: stated_db - computed_db,
    }
}

/// dB → linear power ratio.
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn los_examples() {
        // 28 + 22·2 + 20·log10(28)
        let fc_term = 20.0 * 28f64.log10();
        assert!((pl_los(100.0, 28.0).unwrap() - (72.0 + fc_term)).abs() < 1e-12);
        assert!((pl_los(100.0, 28.0).unwrap() - 100.944).abs() < 1e-3);
        assert_eq!(pl_los(1.0, 1.0).unwrap(), 28.0);
        assert!((pl_los(10.0, 28.0).unwrap() - 78.944).abs() < 1e-3);
        assert!(pl_los(0.0, 28.0).is_err());
        assert!(pl_los(-1.0, 28.0).is_err());
    }

    #[test]
    fn nlos_examples() {
        assert!((pl_nlos(100.0, 28.0, 1.5).unwrap() - 120.644).abs() < 1e-3);
        // LoS floor binds at 1 m
        assert_eq!(pl_nlos(1.0, 28.0, 1.5).unwrap(), pl_los(1.0, 28.0).unwrap());
        // height correction lowers NLoS by 0.6 dB per meter above 1.5
        let a = pl_nlos(100.0, 28.0, 1.5).unwrap();
        let b = pl_nlos(100.0, 28.0, 2.5).unwrap();
        assert!((a - b - 0.6).abs() < 1e-9);
    }

    #[test]
    fn plos_examples() {
        assert_eq!(p_los(10.0), 1.0);
        assert_eq!(p_los(18.0), 1.0);
        let want = 18.0 / 63.0 + (-1f64).exp() * (1.0 - 18.0 / 63.0);
        assert!((p_los(63.0) - want).abs() < 1e-15);
        assert!((p_los(63.0) - 0.5485).abs() < 1e-4);
        for d in [0.0, 1.0, 5.0, 10.0, 50.0, 500.0] {
            let v = p_los_printed(d);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn blend_cases() {
        let p = ChannelParams::default();
        // P_LoS = 1 collapses the blend to LoS
        let v = gb_plm(true, false, 10.0, 10.1, &p).unwrap();
        assert!((v - pl_los(10.1, 28.0).unwrap()).abs() < 1e-12);
        let v = gb_plm(false, true, 90.0, 100.0, &p).unwrap();
        assert!((v - 120.644).abs() < 1e-3);
        assert_eq!(gb_plm(false, false, 5.0, 5.0, &p).unwrap(), PL_OUT);
        assert!(matches!(
            gb_plm(true, true, 5.0, 5.0, &p),
            Err(PlanError::Contract(_))
        ));
    }

    #[test]
    fn mapl_budget() {
        let b = LinkBudget::default();
        assert_eq!(b.noise_dbm(), -94.0);
        assert_eq!(mapl(&b), 113.0);
        assert_eq!(b.mapl_constant_db(), 120.0);
        let c = mapl_check(&b);
        assert_eq!(c.stated_db, 114.0);
        assert_eq!(c.discrepancy_db, 1.0);
        let zero = LinkBudget {
            p_gnb_dbm: 0.0,
            g_gnb_dbi: 0.0,
            g_ue_dbi: 0.0,
            l_cable_db: 0.0,
            l_body_db: 0.0,
            l_foliage_db: 0.0,
            l_rain_ice_db: 0.0,
            l_interference_db: 0.0,
            l_shadow_fading_db: 0.0,
            l_other_db: 0.0,
            // N0 = 0 dBm
            bandwidth_hz: 10f64.powf(17.4),
            nf_ue_db: 0.0,
            sinr_db: 0.0,
        };
        assert!(mapl(&zero).abs() < 1e-9);
    }

    #[test]
    fn breakpoint_distance() {
        let p = ChannelParams::default();
        // 4·24·0.5·28e9/c
        let want = 4.0 * 24.0 * 0.5 * 28e9 / SPEED_OF_LIGHT;
        assert!((p.breakpoint_m(25.0) - want).abs() < 1e-9);
    }
}
