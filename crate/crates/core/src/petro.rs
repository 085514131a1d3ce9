//! Constitutive relations for the aqueous/oleic system.
//!
//! Relative permeabilities and capillary pressure follow the Parker
//! modification of the van Genuchten model, written in terms of the
//! effective saturation `s_e = (s - s_ra) / (1 - s_ra)`. Every evaluation
//! clamps `s_e` to `[eps_sat, 1 - eps_sat]` so that mobilities stay strictly
//! positive and the capillary pressure stays finite.
//!
//! Derivatives are closed forms. Where the effective saturation is clamped,
//! derivatives are evaluated at the clamped point (a continuous extension),
//! not set to zero.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PetroError {
    #[error("invalid model parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("effective saturation {se} outside clamped range [{lo}, {hi}]")]
    Domain { se: f64, lo: f64, hi: f64 },
}

/// Constitutive parameters. Immutable once validated; cheap to copy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PetroModel {
    /// Viscosity of pure water.
    pub mu_w: f64,
    /// Oil viscosity.
    pub mu_o: f64,
    /// Residual aqueous saturation.
    pub s_ra: f64,
    /// Residual oleic saturation.
    pub s_ro: f64,
    /// van Genuchten exponent, `0 < m < 1`.
    pub m: f64,
    /// Capillary pressure scale.
    pub alpha0: f64,
    /// Slope of the linear polymer viscosity mixing law.
    pub beta_visc: f64,
    /// Margin used to clamp the effective saturation away from 0 and 1.
    pub eps_sat: f64,
}

impl Default for PetroModel {
    /// Reservoir parameters of the quarter five-spot polymer flood.
    fn default() -> Self {
        PetroModel {
            mu_w: 1.26,
            mu_o: 12.6,
            s_ra: 0.1,
            s_ro: 0.2,
            m: 2.0 / 3.0,
            alpha0: 0.125,
            beta_visc: 15.0,
            eps_sat: 1e-6,
        }
    }
}

/// Phase and total mobilities at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobilities {
    pub aqueous: f64,
    pub oleic: f64,
    pub total: f64,
}

/// Fractional flow and its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalFlow {
    pub f: f64,
    pub dfds: f64,
    pub dfdc: f64,
}

impl PetroModel {
    pub fn validate(&self) -> Result<(), PetroError> {
        let bad = |name, value, reason| {
            Err(PetroError::InvalidParameter {
                name,
                value,
                reason,
            })
        };
        let all = [
            ("mu_w", self.mu_w),
            ("mu_o", self.mu_o),
            ("s_ra", self.s_ra),
            ("s_ro", self.s_ro),
            ("m", self.m),
            ("alpha0", self.alpha0),
            ("beta_visc", self.beta_visc),
            ("eps_sat", self.eps_sat),
        ];
        for (name, value) in all {
            if !value.is_finite() {
                return bad(name, value, "must be finite");
            }
        }
        if self.mu_w <= 0.0 {
            return bad("mu_w", self.mu_w, "must be positive");
        }
        if self.mu_o <= 0.0 {
            return bad("mu_o", self.mu_o, "must be positive");
        }
        if !(0.0..1.0).contains(&self.s_ra) {
            return bad("s_ra", self.s_ra, "must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.s_ro) {
            return bad("s_ro", self.s_ro, "must lie in [0, 1)");
        }
        if self.s_ra + self.s_ro >= 1.0 {
            return bad("s_ro", self.s_ro, "s_ra + s_ro must be below 1");
        }
        if !(self.m > 0.0 && self.m < 1.0) {
            return bad("m", self.m, "must lie in (0, 1)");
        }
        if self.alpha0 <= 0.0 {
            return bad("alpha0", self.alpha0, "must be positive");
        }
        if self.beta_visc < 0.0 {
            return bad("beta_visc", self.beta_visc, "must be non-negative");
        }
        if !(self.eps_sat > 0.0 && self.eps_sat < 0.5) {
            return bad("eps_sat", self.eps_sat, "must lie in (0, 0.5)");
        }
        Ok(())
    }

    /// Physical saturation range `[s_ra, 1 - s_ro]`.
    pub fn saturation_bounds(&self) -> (f64, f64) {
        (self.s_ra, 1.0 - self.s_ro)
    }

    /// Clamped effective saturation plus a flag telling whether the clamp was active.
    pub fn effective_saturation_checked(&self, s: f64) -> (f64, bool) {
        let raw = (s - self.s_ra) / (1.0 - self.s_ra);
        let lo = self.eps_sat;
        let hi = 1.0 - self.eps_sat;
        if raw < lo {
            (lo, true)
        } else if raw > hi {
            (hi, true)
        } else {
            (raw, false)
        }
    }

    pub fn effective_saturation(&self, s: f64) -> f64 {
        self.effective_saturation_checked(s).0
    }

    fn dse_ds(&self) -> f64 {
        1.0 / (1.0 - self.s_ra)
    }

    /// Aqueous relative permeability `s_e^{1/2} (1 - (1 - s_e^{1/m})^m)^2`.
    pub fn krw(&self, se: f64) -> f64 {
        let u = se.powf(1.0 / self.m);
        let g = 1.0 - (1.0 - u).powf(self.m);
        se.sqrt() * g * g
    }

    /// Oleic relative permeability `(1 - s_e)^{1/2} (1 - s_e^{1/m})^{2m}`.
    pub fn kro(&self, se: f64) -> f64 {
        let u = se.powf(1.0 / self.m);
        (1.0 - se).sqrt() * (1.0 - u).powf(2.0 * self.m)
    }

    pub fn dkrw_dse(&self, se: f64) -> f64 {
        let m = self.m;
        let u = se.powf(1.0 / m);
        let one_minus_u = 1.0 - u;
        let g = 1.0 - one_minus_u.powf(m);
        // d/dse (1 - u)^m = -(1 - u)^{m-1} se^{1/m - 1}
        let dg = one_minus_u.powf(m - 1.0) * se.powf(1.0 / m - 1.0);
        0.5 / se.sqrt() * g * g + se.sqrt() * 2.0 * g * dg
    }

    pub fn dkro_dse(&self, se: f64) -> f64 {
        let m = self.m;
        let u = se.powf(1.0 / m);
        let du = se.powf(1.0 / m - 1.0) / m;
        let root = (1.0 - se).sqrt();
        -0.5 / root * (1.0 - u).powf(2.0 * m)
            - root * 2.0 * m * (1.0 - u).powf(2.0 * m - 1.0) * du
    }

    /// Capillary pressure `(1/alpha0) (s_e^{-1/m} - 1)^{1-m}`.
    ///
    /// `se` must already be clamped; the relation diverges at `se -> 0`.
    pub fn capillary_pressure(&self, se: f64) -> Result<f64, PetroError> {
        let lo = self.eps_sat;
        let hi = 1.0 - self.eps_sat;
        // one ulp of slack so a clamped value always passes
        if !(se >= lo * (1.0 - f64::EPSILON) && se <= hi * (1.0 + f64::EPSILON)) {
            return Err(PetroError::Domain { se, lo, hi });
        }
        Ok(self.pc_unchecked(se))
    }

    fn pc_unchecked(&self, se: f64) -> f64 {
        (se.powf(-1.0 / self.m) - 1.0).powf(1.0 - self.m) / self.alpha0
    }

    fn dpc_dse(&self, se: f64) -> f64 {
        let m = self.m;
        let base = se.powf(-1.0 / m) - 1.0;
        -(1.0 - m) / (m * self.alpha0) * base.powf(-m) * se.powf(-1.0 / m - 1.0)
    }

    /// Capillary pressure as a function of the physical saturation.
    pub fn capillary_pressure_at(&self, s: f64) -> f64 {
        self.pc_unchecked(self.effective_saturation(s))
    }

    /// `dp_c/ds`, always `<= 0`.
    pub fn dpc_ds(&self, s: f64) -> f64 {
        self.dpc_dse(self.effective_saturation(s)) * self.dse_ds()
    }

    /// Viscosity of the aqueous phase carrying polymer at concentration `c`.
    pub fn aqueous_viscosity(&self, c: f64) -> f64 {
        self.mu_w * (1.0 + self.beta_visc * c)
    }

    pub fn mobilities(&self, s: f64, c: f64) -> Mobilities {
        let se = self.effective_saturation(s);
        let aqueous = self.krw(se) / self.aqueous_viscosity(c);
        let oleic = self.kro(se) / self.mu_o;
        Mobilities {
            aqueous,
            oleic,
            total: aqueous + oleic,
        }
    }

    pub fn fractional_flow(&self, s: f64, c: f64) -> f64 {
        let lam = self.mobilities(s, c);
        lam.aqueous / lam.total
    }

    pub fn fractional_flow_derivs(&self, s: f64, c: f64) -> FractionalFlow {
        let se = self.effective_saturation(s);
        let mu_a = self.aqueous_viscosity(c);
        let krw = self.krw(se);
        let la = krw / mu_a;
        let lo = self.kro(se) / self.mu_o;
        let lt = la + lo;
        let dla_ds = self.dkrw_dse(se) * self.dse_ds() / mu_a;
        let dlo_ds = self.dkro_dse(se) * self.dse_ds() / self.mu_o;
        let dla_dc = -krw * self.mu_w * self.beta_visc / (mu_a * mu_a);
        let lt2 = lt * lt;
        FractionalFlow {
            f: la / lt,
            dfds: (dla_ds * lo - la * dlo_ds) / lt2,
            dfdc: dla_dc * lo / lt2,
        }
    }

    /// Capillary diffusion coefficient `D = K lambda_o f dp_c/ds <= 0`.
    pub fn capillary_diffusion(&self, s: f64, c: f64, k: f64) -> f64 {
        let lam = self.mobilities(s, c);
        let f = lam.aqueous / lam.total;
        k * lam.oleic * f * self.dpc_ds(s)
    }

    /// `|D|`, the magnitude used to assemble the diffusion operator.
    pub fn capillary_diffusion_abs(&self, s: f64, c: f64, k: f64) -> f64 {
        -self.capillary_diffusion(s, c, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model() -> PetroModel {
        PetroModel::default()
    }

    #[test]
    fn effective_saturation_cases() {
        let pm = model();
        assert_eq!(pm.effective_saturation(0.1), pm.eps_sat);
        assert_eq!(pm.effective_saturation(1.0), 1.0 - pm.eps_sat);
        assert_relative_eq!(pm.effective_saturation(0.21), 0.11 / 0.9, max_relative = 1e-14);
        assert!(pm.effective_saturation_checked(0.05).1);
        assert!(!pm.effective_saturation_checked(0.5).1);
    }

    #[test]
    fn relative_permeability_limits_and_values() {
        let pm = model();
        assert_eq!(pm.krw(0.0), 0.0);
        assert_relative_eq!(pm.krw(1.0), 1.0);
        assert_relative_eq!(pm.kro(0.0), 1.0);
        assert_eq!(pm.kro(1.0), 0.0);
        // mpmath, 40 digits
        assert_relative_eq!(pm.krw(0.25), 3.627268725717236e-3, max_relative = 1e-12);
        assert_relative_eq!(pm.kro(0.25), 0.7247830624878822, max_relative = 1e-12);
    }

    #[test]
    fn capillary_pressure_values_and_domain() {
        let pm = model();
        let hi = 1.0 - pm.eps_sat;
        assert!(pm.capillary_pressure(hi).unwrap() < 0.2);
        let expected = 8.0 * (2f64.powf(1.5) - 1.0).cbrt();
        assert_relative_eq!(pm.capillary_pressure(0.5).unwrap(), expected, max_relative = 1e-13);
        assert_relative_eq!(pm.capillary_pressure(0.5).unwrap(), 9.782485333871791, max_relative = 1e-13);
        assert!(matches!(pm.capillary_pressure(0.0), Err(PetroError::Domain { .. })));
        assert!(pm.capillary_pressure(1.0).is_err());
        assert!(pm.dpc_ds(0.5) < 0.0);
        assert_relative_eq!(pm.dpc_ds(0.5), -18.959695925129608, max_relative = 1e-11);
    }

    #[test]
    fn viscosity_mixing() {
        let pm = model();
        assert_eq!(pm.aqueous_viscosity(0.0), 1.26);
        let other = PetroModel { beta_visc: 3.0, ..pm };
        assert_eq!(other.aqueous_viscosity(0.0), 1.26);
        assert_relative_eq!(pm.aqueous_viscosity(0.1), 3.15, max_relative = 1e-14);
    }

    #[test]
    fn mobilities_and_fractional_flow_reference_point() {
        let pm = model();
        let lam = pm.mobilities(0.5, 0.0);
        assert_relative_eq!(lam.aqueous, 0.023078051247508438, max_relative = 1e-12);
        assert_relative_eq!(lam.oleic, 0.0370265275584561, max_relative = 1e-12);
        assert_relative_eq!(lam.total, 0.06010457880596454, max_relative = 1e-12);
        assert_relative_eq!(pm.fractional_flow(0.5, 0.0), 0.38396494420185945, max_relative = 1e-12);
        assert_relative_eq!(
            pm.capillary_diffusion(0.5, 0.0, 1.0),
            -0.2695478846293793,
            max_relative = 1e-11
        );
        let ff = pm.fractional_flow_derivs(0.5, 0.05);
        assert_relative_eq!(ff.dfds, 2.387813169221028, max_relative = 1e-11);
        assert_relative_eq!(ff.dfdc, -1.6598845998709885, max_relative = 1e-11);
    }

    #[test]
    fn endpoint_limits() {
        let pm = model();
        let low = pm.mobilities(pm.s_ra, 0.05);
        assert!(low.aqueous < 1e-12);
        assert_relative_eq!(low.total, low.oleic, max_relative = 1e-10);
        let high = pm.mobilities(1.0, 0.05);
        assert!(high.oleic < 1e-6);
        assert!(pm.fractional_flow(pm.s_ra, 0.0) < 1e-10);
        assert!(pm.fractional_flow(1.0, 0.0) > 1.0 - 1e-4);
        assert!(pm.capillary_diffusion(1.0, 0.0, 1.0).abs() < 1e-4);
        assert!(pm.capillary_diffusion(pm.s_ra, 0.0, 1.0).abs() < 1e-10);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let pm = model();
        assert!(pm.validate().is_ok());
        assert!(PetroModel { s_ra: 0.6, s_ro: 0.4, ..pm }.validate().is_err());
        assert!(PetroModel { m: 1.0, ..pm }.validate().is_err());
        assert!(PetroModel { alpha0: 0.0, ..pm }.validate().is_err());
        assert!(PetroModel { mu_w: -1.0, ..pm }.validate().is_err());
        assert!(PetroModel { mu_o: f64::NAN, ..pm }.validate().is_err());
    }
}
