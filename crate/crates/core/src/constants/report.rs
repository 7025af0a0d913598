//! The assembled report.

use super::{
    indicator_touching, offset_a2, one_tailed_a2, one_tailed_a2_star, punctured_a2, punctured_a2_star, strong_energy,
    strong_energy_star, testing, testing_star, wbp, CubeFamily, EnergyParams, Sup, TestingMode, Witness,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{units_to_decimal, DyadicGrid, GoodnessParams};
use crate::kernels::KernelSpec;
use crate::measures::AtomicMeasure;
use crate::operators::{operator_norm, KernelTable, NormMethod};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsParams {
    pub alpha: f64,
    #[serde(flatten)]
    pub goodness: GoodnessParams,
    pub d_part: u32,
    pub ell_max: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl Default for ConstantsParams {
    fn default() -> Self {
        ConstantsParams {
            alpha: 0.0,
            goodness: GoodnessParams::default(),
            d_part: 3,
            ell_max: 2,
            lambda: None,
        }
    }
}

impl ConstantsParams {
    pub fn energy(&self) -> EnergyParams {
        EnergyParams {
            goodness: self.goodness,
            d_part: self.d_part,
            ell_max: self.ell_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.goodness.validate()?;
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l < 0.5) {
                return Err(Error::InvalidParameter(format!("lambda {l} outside (0, 1/2)")));
            }
        }
        if self.d_part == 0 {
            return Err(Error::InvalidParameter("d_part must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    #[serde(rename = "M")]
    pub fine: i32,
    #[serde(rename = "N")]
    pub top: i32,
    pub grids: Vec<DyadicGrid>,
    pub cubes: usize,
    pub window_lower: Vec<String>,
    pub window_upper: Vec<String>,
    pub partitions: String,
}

impl FamilySummary {
    pub fn of(family: &CubeFamily, d_part: u32) -> Self {
        let (lo, hi) = family.window();
        FamilySummary {
            fine: family.fine(),
            top: family.top(),
            grids: family.grids().to_vec(),
            cubes: family.len(),
            window_lower: lo.iter().map(|&u| units_to_decimal(u)).collect(),
            window_upper: hi.iter().map(|&u| units_to_decimal(u)).collect(),
            partitions: format!("recursive dyadic partitions of depth <= {d_part}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    #[serde(rename = "A2_offset")]
    pub a2_offset: f64,
    #[serde(rename = "A2_one_tailed")]
    pub a2_one_tailed: f64,
    #[serde(rename = "A2_one_tailed_star")]
    pub a2_one_tailed_star: f64,
    #[serde(rename = "A2_punct")]
    pub a2_punct: f64,
    #[serde(rename = "A2_punct_star")]
    pub a2_punct_star: f64,
    #[serde(rename = "frakA2")]
    pub frak_a2: f64,
    #[serde(rename = "T_test")]
    pub t_test: f64,
    #[serde(rename = "T_test_star")]
    pub t_test_star: f64,
    #[serde(rename = "FT_full")]
    pub ft_full: f64,
    #[serde(rename = "FT_full_star")]
    pub ft_full_star: f64,
    #[serde(rename = "WBP")]
    pub wbp: f64,
    #[serde(rename = "I_touch")]
    pub i_touch: f64,
    #[serde(rename = "E_strong")]
    pub e_strong: f64,
    #[serde(rename = "E_strong_star")]
    pub e_strong_star: f64,
    #[serde(rename = "N_norm")]
    pub n_norm: f64,
    pub norm_method: NormMethod,
    pub witnesses: BTreeMap<String, Witness>,
    pub params: ConstantsParams,
    pub kernel: KernelSpec,
    pub family: FamilySummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub good_lambda_rhs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl ConstantsReport {
    /// `(1/λ)√𝔄₂ + 𝔗 + 𝔗* + ℰ + ℰ* + λ^{1/4} 𝔑`.
    pub fn good_lambda_rhs_at(&self, lambda: f64) -> f64 {
        self.frak_a2.sqrt() / lambda
            + self.t_test
            + self.t_test_star
            + self.e_strong
            + self.e_strong_star
            + lambda.powf(0.25) * self.n_norm
    }

    /// `WBP / RHS(λ)`, zero when both vanish.
    pub fn ratio_at(&self, lambda: f64) -> f64 {
        let rhs = self.good_lambda_rhs_at(lambda);
        if rhs > 0.0 {
            self.wbp / rhs
        } else {
            0.0
        }
    }

    pub fn set_lambda(&mut self, lambda: Option<f64>) {
        self.params.lambda = lambda;
        self.good_lambda_rhs = lambda.map(|l| self.good_lambda_rhs_at(l));
        self.ratio = lambda.map(|l| self.ratio_at(l));
    }
}

/// Every constant over one family, with witnesses.
pub fn full_report(
    spec: &KernelSpec,
    sigma: &AtomicMeasure,
    omega: &AtomicMeasure,
    family: &CubeFamily,
    params: &ConstantsParams,
    exec: Exec,
) -> Result<ConstantsReport> {
    params.validate()?;
    for mu in [sigma, omega] {
        if mu.dim() != spec.dim {
            return Err(Error::DimensionMismatch {
                expected: spec.dim,
                got: mu.dim(),
            });
        }
    }
    let alpha = params.alpha;
    if (alpha - spec.alpha).abs() > 0.0 {
        return Err(Error::InvalidParameter(format!(
            "kernel alpha {} differs from requested {alpha}",
            spec.alpha
        )));
    }
    let table = KernelTable::new(spec, sigma, omega, exec);
    let eta = params.goodness.rho;
    let mut w = BTreeMap::new();
    let mut take = |name: &str, s: Sup| {
        w.insert(name.to_string(), s.witness);
        s.value
    };
    let a2_offset = match offset_a2(sigma, omega, alpha, family, exec) {
        Ok(s) => take("A2_offset", s),
        Err(Error::NoQualifyingPairs) => take("A2_offset", Sup::zero()),
        Err(e) => return Err(e),
    };
    let a2_one_tailed = take("A2_one_tailed", one_tailed_a2(sigma, omega, alpha, family, exec));
    let a2_one_tailed_star = take("A2_one_tailed_star", one_tailed_a2_star(sigma, omega, alpha, family, exec));
    let a2_punct = take("A2_punct", punctured_a2(sigma, omega, alpha, family, exec));
    let a2_punct_star = take("A2_punct_star", punctured_a2_star(sigma, omega, alpha, family, exec));
    let t_test = take("T_test", testing(&table, sigma, omega, family, TestingMode::Local, exec));
    let t_test_star = take("T_test_star", testing_star(&table, sigma, omega, family, TestingMode::Local, exec));
    let ft_full = take("FT_full", testing(&table, sigma, omega, family, TestingMode::Full, exec));
    let ft_full_star = take("FT_full_star", testing_star(&table, sigma, omega, family, TestingMode::Full, exec));
    let wbp_v = match wbp(&table, sigma, omega, family, eta, exec) {
        Ok(s) => take("WBP", s),
        Err(Error::NoQualifyingPairs) => take("WBP", Sup::zero()),
        Err(e) => return Err(e),
    };
    let i_touch = take("I_touch", indicator_touching(&table, sigma, omega, family, eta, exec));
    let ep = params.energy();
    let e_strong = take("E_strong", strong_energy(sigma, omega, alpha, family, &ep, exec)?);
    let e_strong_star = take("E_strong_star", strong_energy_star(sigma, omega, alpha, family, &ep, exec)?);
    let norm = operator_norm(spec, sigma, omega, exec)?;
    let mut report = ConstantsReport {
        a2_offset,
        a2_one_tailed,
        a2_one_tailed_star,
        a2_punct,
        a2_punct_star,
        frak_a2: a2_one_tailed + a2_one_tailed_star + a2_punct + a2_punct_star,
        t_test,
        t_test_star,
        ft_full,
        ft_full_star,
        wbp: wbp_v,
        i_touch,
        e_strong,
        e_strong_star,
        n_norm: norm.value,
        norm_method: norm.method,
        witnesses: w,
        params: *params,
        kernel: *spec,
        family: FamilySummary::of(family, params.d_part),
        good_lambda_rhs: None,
        ratio: None,
    };
    report.set_lambda(params.lambda);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{FamilySpec, GridSelection};

    fn single() -> (AtomicMeasure, AtomicMeasure) {
        (
            AtomicMeasure::from_f64(1, &[(&[0.25], 1.0)]).unwrap(),
            AtomicMeasure::from_f64(1, &[(&[0.75], 1.0)]).unwrap(),
        )
    }

    #[test]
    fn single_atom_report() {
        let (s, w) = single();
        let spec = KernelSpec::default_for(0.0, &s, &w).unwrap();
        let f = CubeFamily::build(&s, &w, &FamilySpec::default()).unwrap();
        let params = ConstantsParams {
            lambda: Some(0.25),
            ..Default::default()
        };
        let r = full_report(&spec, &s, &w, &f, &params, Exec::default()).unwrap();
        for v in [r.t_test, r.t_test_star, r.n_norm, r.wbp, r.i_touch] {
            assert!((v - 2.0).abs() < 1e-9, "{v}");
        }
        assert!((r.a2_offset - 4.0).abs() < 1e-12);
        assert_eq!(r.e_strong, 0.0);
        assert_eq!(r.frak_a2, r.a2_one_tailed + r.a2_one_tailed_star + r.a2_punct + r.a2_punct_star);
        for l in [0.01, 0.1, 0.25, 0.49] {
            assert!(r.ratio_at(l) < 0.5);
        }
        assert!(r.ratio.unwrap() < 0.5);
        let js = serde_json::to_string(&r).unwrap();
        assert!(js.contains("\"frakA2\""));
        let back: ConstantsReport = serde_json::from_str(&js).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn zero_sigma_gives_zero() {
        let (_, w) = single();
        let z = AtomicMeasure::zero(1).unwrap();
        let spec = KernelSpec::default_for(0.0, &w, &w).unwrap();
        let f = CubeFamily::build(&z, &w, &FamilySpec::new(6, 0, GridSelection::Standard)).unwrap();
        let r = full_report(&spec, &z, &w, &f, &ConstantsParams::default(), Exec::Sequential).unwrap();
        for v in [r.a2_offset, r.frak_a2, r.t_test, r.t_test_star, r.ft_full, r.wbp, r.i_touch, r.e_strong, r.e_strong_star, r.n_norm] {
            assert_eq!(v, 0.0);
        }
    }
}
