//! Weight functions for the targeted loss.
//!
//! A weight maps a predictor row (and the experiment's sample size `n`) to a
//! nonnegative number. Selection only depends on weights up to a positive
//! factor, so normalization is tracked as metadata rather than enforced.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnRef, CompiledRegion, Dataset, Region};
use crate::error::{Error, Result};

/// How a weight relates to the normalization `E[W(X)] = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divided by a known constant so that `E[W(X)] = 1` under the design law.
    Exact(f64),
    /// Divided by the sample mean of the raw weight on whatever sample is scored.
    Empirical,
    Unnormalized,
}

/// Normalization choice for [`point_weight`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointNorm {
    /// Divide the kernel by this constant (its integral under the design law).
    Exact(f64),
    #[default]
    Empirical,
}

type VarianceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Constant(f64),
    Region {
        region: CompiledRegion,
        inv_c: f64,
    },
    Piecewise {
        region: CompiledRegion,
        inside: f64,
        outside: f64,
    },
    Variance {
        sigma2: VarianceFn,
        norm_const: f64,
    },
    Point {
        center: Vec<f64>,
        inv_c: f64,
    },
    /// `1(0 <= x <= n^e) / n^e`
    Window {
        column: usize,
        exponent: f64,
    },
}

#[derive(Clone)]
pub struct WeightFunction {
    kind: Kind,
    scale: f64,
    normalization: Normalization,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            Kind::Constant(c) => format!("Constant({c})"),
            Kind::Region { region, inv_c } => format!("Region({region:?}, 1/C={inv_c})"),
            Kind::Piecewise {
                region,
                inside,
                outside,
            } => format!("Piecewise({region:?}, {inside}, {outside})"),
            Kind::Variance { norm_const, .. } => format!("Variance(norm={norm_const})"),
            Kind::Point { center, inv_c } => format!("Point({center:?}, 1/C={inv_c})"),
            Kind::Window { column, exponent } => format!("Window(#{column}, n^{exponent})"),
        };
        f.debug_struct("WeightFunction")
            .field("kind", &kind)
            .field("scale", &self.scale)
            .field("normalization", &self.normalization)
            .finish()
    }
}

impl WeightFunction {
    fn new(kind: Kind, normalization: Normalization) -> Self {
        WeightFunction {
            kind,
            scale: 1.0,
            normalization,
        }
    }

    /// Raw weight at `x` (before any empirical normalization).
    pub fn eval(&self, x: &[f64], n: usize) -> Result<f64> {
        let raw = match &self.kind {
            Kind::Constant(c) => *c,
            Kind::Region { region, inv_c } => {
                if region.contains(x) {
                    *inv_c
                } else {
                    0.0
                }
            }
            Kind::Piecewise {
                region,
                inside,
                outside,
            } => {
                if region.contains(x) {
                    *inside
                } else {
                    *outside
                }
            }
            Kind::Variance { sigma2, norm_const } => {
                let s2 = sigma2(x);
                if !(s2 > 0.0) {
                    return Err(Error::InvalidVariance(s2));
                }
                1.0 / s2 / norm_const
            }
            Kind::Point { center, inv_c } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 * n as f64).exp() * inv_c
            }
            Kind::Window { column, exponent } => {
                let width = (n as f64).powf(*exponent);
                let v = x[*column];
                if (0.0..=width).contains(&v) {
                    1.0 / width
                } else {
                    0.0
                }
            }
        };
        Ok(raw * self.scale)
    }

    /// Weights for the given rows, with empirical normalization applied when
    /// this weight is empirically normalized.
    pub fn eval_rows(&self, data: &Dataset, rows: &[usize], n: usize) -> Result<Vec<f64>> {
        let mut w = rows
            .iter()
            .map(|&i| self.eval(data.row(i), n))
            .collect::<Result<Vec<_>>>()?;
        if self.normalization == Normalization::Empirical && !w.is_empty() {
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            if mean > 0.0 {
                w.iter_mut().for_each(|v| *v /= mean);
            }
        }
        Ok(w)
    }

    pub fn eval_all(&self, data: &Dataset, n: usize) -> Result<Vec<f64>> {
        let rows: Vec<usize> = (0..data.n()).collect();
        self.eval_rows(data, &rows, n)
    }

    /// Declared essential supremum at sample size `n`, if known.
    pub fn sup_bound(&self, n: usize) -> Option<f64> {
        let raw = match &self.kind {
            Kind::Constant(c) => Some(*c),
            Kind::Region { inv_c, .. } => Some(*inv_c),
            Kind::Piecewise {
                inside, outside, ..
            } => Some(inside.max(*outside)),
            Kind::Variance { .. } => None,
            Kind::Point { inv_c, .. } => match self.normalization {
                Normalization::Empirical => None,
                _ => Some(*inv_c),
            },
            Kind::Window { exponent, .. } => Some((n as f64).powf(-exponent)),
        };
        raw.map(|v| v * self.scale)
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// `kappa * W`. Selection decisions are unchanged by this.
    pub fn scaled(&self, kappa: f64) -> Result<WeightFunction> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidWeight(format!("scale {kappa} must be positive")));
        }
        let mut w = self.clone();
        w.scale *= kappa;
        if let Normalization::Exact(_) = w.normalization {
            w.normalization = Normalization::Unnormalized;
        }
        Ok(w)
    }
}

/// `W(x) = c`.
pub fn constant_weight(c: f64) -> Result<WeightFunction> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidWeight(format!("constant weight {c} must be positive")));
    }
    let norm = if c == 1.0 {
        Normalization::Exact(1.0)
    } else {
        Normalization::Unnormalized
    };
    Ok(WeightFunction::new(Kind::Constant(c), norm))
}

/// `W(x) = 1(x in A) / C` with `C = prob_region`, or the bare indicator when
/// the region probability is unknown.
pub fn region_weight(region: CompiledRegion, prob_region: Option<f64>) -> Result<WeightFunction> {
    let (inv_c, norm) = match prob_region {
        Some(p) if p > 0.0 && p <= 1.0 => (1.0 / p, Normalization::Exact(p)),
        Some(p) => {
            return Err(Error::InvalidWeight(format!(
                "region probability {p} outside (0, 1]"
            )))
        }
        None => (1.0, Normalization::Unnormalized),
    };
    Ok(WeightFunction::new(Kind::Region { region, inv_c }, norm))
}

/// `W(x) = (1 / sigma2(x)) / norm_const`.
pub fn variance_weight<F>(sigma2: F, norm_const: f64) -> Result<WeightFunction>
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    if !(norm_const > 0.0 && norm_const.is_finite()) {
        return Err(Error::InvalidWeight(format!(
            "normalizing constant {norm_const} must be positive"
        )));
    }
    Ok(WeightFunction::new(
        Kind::Variance {
            sigma2: Arc::new(sigma2),
            norm_const,
        },
        Normalization::Exact(norm_const),
    ))
}

/// `W_n(x) ∝ exp(-||x - center||^2 * n)`.
pub fn point_weight(center: Vec<f64>, norm: PointNorm) -> Result<WeightFunction> {
    if center.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidWeight("point weight center must be finite".into()));
    }
    let (inv_c, normalization) = match norm {
        PointNorm::Exact(c) if c > 0.0 => (1.0 / c, Normalization::Exact(c)),
        PointNorm::Exact(c) => {
            return Err(Error::InvalidWeight(format!(
                "normalizing constant {c} must be positive"
            )))
        }
        PointNorm::Empirical => (1.0, Normalization::Empirical),
    };
    Ok(WeightFunction::new(Kind::Point { center, inv_c }, normalization))
}

/// `W(x) = w_in` inside the region, `w_out` outside.
pub fn piecewise_weight(region: CompiledRegion, w_in: f64, w_out: f64) -> Result<WeightFunction> {
    if !(w_in >= 0.0 && w_out >= 0.0) || !(w_in.is_finite() && w_out.is_finite()) {
        return Err(Error::InvalidWeight(format!(
            "piecewise levels ({w_in}, {w_out}) must be finite and nonnegative"
        )));
    }
    if w_in + w_out == 0.0 {
        return Err(Error::InvalidWeight("piecewise levels are both zero".into()));
    }
    Ok(WeightFunction::new(
        Kind::Piecewise {
            region,
            inside: w_in,
            outside: w_out,
        },
        Normalization::Unnormalized,
    ))
}

/// `W_n(x) = 1(0 <= x_col <= n^exponent) / n^exponent`; exact for a U(0,1)
/// column when `exponent < 0`.
pub fn window_weight(column: usize, exponent: f64) -> Result<WeightFunction> {
    if !(exponent <= 0.0) {
        return Err(Error::InvalidWeight(format!(
            "window exponent {exponent} must be nonpositive"
        )));
    }
    Ok(WeightFunction::new(
        Kind::Window { column, exponent },
        Normalization::Exact(1.0),
    ))
}

/// Essential supremum of a weight, or its maximum over a probe sample when
/// no bound is declared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSup {
    pub value: f64,
    pub empirical: bool,
}

pub fn weight_sup(w: &WeightFunction, probe: &Dataset, n: usize) -> Result<WeightSup> {
    if let Some(value) = w.sup_bound(n) {
        return Ok(WeightSup {
            value,
            empirical: false,
        });
    }
    let value = w
        .eval_all(probe, n)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(WeightSup {
        value,
        empirical: true,
    })
}

/// Serializable weight description, resolved against a dataset's columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant {
        value: f64,
    },
    Region {
        region: Region,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prob: Option<f64>,
    },
    Piecewise {
        region: Region,
        inside: f64,
        outside: f64,
    },
    Point {
        center: Vec<f64>,
        #[serde(default)]
        normalization: PointNorm,
    },
    Window {
        column: ColumnRef,
        exponent: f64,
    },
}

impl WeightSpec {
    pub fn uniform() -> Self {
        WeightSpec::Constant { value: 1.0 }
    }

    pub fn build(&self, names: Option<&[String]>, p: usize) -> Result<WeightFunction> {
        match self {
            WeightSpec::Constant { value } => constant_weight(*value),
            WeightSpec::Region { region, prob } => region_weight(region.compile(names, p)?, *prob),
            WeightSpec::Piecewise {
                region,
                inside,
                outside,
            } => piecewise_weight(region.compile(names, p)?, *inside, *outside),
            WeightSpec::Point {
                center,
                normalization,
            } => {
                if center.len() != p {
                    return Err(Error::InvalidWeight(format!(
                        "center has {} coordinates for {p} predictors",
                        center.len()
                    )));
                }
                point_weight(center.clone(), *normalization)
            }
            WeightSpec::Window { column, exponent } => {
                window_weight(column.resolve(names, p)?, *exponent)
            }
        }
    }

    pub fn build_for(&self, data: &Dataset) -> Result<WeightFunction> {
        self.build(data.column_names(), data.p())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn below(col: usize, t: f64) -> CompiledRegion {
        CompiledRegion::Below(col, t)
    }

    #[test]
    fn region_weight_levels() {
        let w = region_weight(below(0, 0.5), Some(0.25)).unwrap();
        assert_eq!(w.eval(&[0.1], 10).unwrap(), 4.0);
        assert_eq!(w.eval(&[0.9], 10).unwrap(), 0.0);
        assert_eq!(w.sup_bound(10), Some(4.0));

        let ind = region_weight(below(0, 0.5), None).unwrap();
        assert_eq!(ind.eval(&[0.1], 10).unwrap(), 1.0);
        assert_eq!(ind.eval(&[0.7], 10).unwrap(), 0.0);

        let all = region_weight(CompiledRegion::All, Some(1.0)).unwrap();
        assert_eq!(all.eval(&[123.0], 5).unwrap(), 1.0);
    }

    #[test]
    fn region_weight_rejects_bad_probability() {
        assert!(matches!(
            region_weight(CompiledRegion::All, Some(0.0)),
            Err(Error::InvalidWeight(_))
        ));
        assert!(matches!(
            region_weight(CompiledRegion::All, Some(1.5)),
            Err(Error::InvalidWeight(_))
        ));
    }

    #[test]
    fn variance_weight_cases() {
        let c = 3.0;
        let w = variance_weight(move |_| c, 1.0 / c).unwrap();
        assert!((w.eval(&[0.0], 1).unwrap() - 1.0).abs() < 1e-15);

        let w = variance_weight(|x| if x[0] == 0.0 { 2.0 } else { 1.0 }, 1.0).unwrap();
        assert_eq!(w.eval(&[0.0], 1).unwrap(), 0.5);

        let w = variance_weight(|_| 0.0, 1.0).unwrap();
        assert!(matches!(w.eval(&[0.0], 1), Err(Error::InvalidVariance(_))));
        assert!(variance_weight(|_| 1.0, 0.0).is_err());
    }

    #[test]
    fn point_weight_shape() {
        let w = point_weight(vec![0.5, 0.5], PointNorm::Exact(1.0)).unwrap();
        assert_eq!(w.eval(&[0.5, 0.5], 100).unwrap(), 1.0);
        let a = w.eval(&[0.6, 0.5], 100).unwrap();
        let b = w.eval(&[0.5, 0.4], 100).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(a < 1.0);
        let a2 = w.eval(&[0.6, 0.5], 200).unwrap();
        assert!((a2 - a * a).abs() < 1e-15);
    }

    #[test]
    fn point_weight_empirical_normalization() {
        let d = Dataset::from_rows(&[vec![0.0], vec![0.1], vec![0.5]], vec![0.0; 3]).unwrap();
        let w = point_weight(vec![0.0], PointNorm::Empirical).unwrap();
        let v = w.eval_all(&d, 10).unwrap();
        let mean = v.iter().sum::<f64>() / 3.0;
        assert!((mean - 1.0).abs() < 1e-12);
        assert!(v[0] > v[1] && v[1] > v[2]);
        let sup = weight_sup(&w, &d, 10).unwrap();
        assert!(sup.empirical);
        assert_eq!(sup.value, v[0]);
    }

    #[test]
    fn piecewise_cases() {
        let w = piecewise_weight(below(0, 0.1), 0.8, 0.2).unwrap();
        assert_eq!(w.eval(&[0.05], 1).unwrap(), 0.8);
        assert_eq!(w.eval(&[0.5], 1).unwrap(), 0.2);
        assert_eq!(w.sup_bound(1), Some(0.8));

        let flat = piecewise_weight(below(0, 0.1), 0.5, 0.5).unwrap();
        for x in [0.0, 0.09, 0.1, 0.7] {
            assert_eq!(flat.eval(&[x], 1).unwrap(), 0.5);
        }

        let ind = piecewise_weight(below(0, 0.1), 1.0, 0.0).unwrap();
        let reg = region_weight(below(0, 0.1), None).unwrap();
        for x in [0.0, 0.05, 0.1, 0.2, 0.95] {
            assert_eq!(ind.eval(&[x], 1).unwrap(), reg.eval(&[x], 1).unwrap());
        }
        assert!(piecewise_weight(below(0, 0.1), 0.0, 0.0).is_err());
        assert!(piecewise_weight(below(0, 0.1), -1.0, 1.0).is_err());
    }

    #[test]
    fn sup_declared_bounds() {
        let d = Dataset::from_rows(&[vec![0.0]], vec![0.0]).unwrap();
        let w = region_weight(below(0, 1.0), Some(0.25)).unwrap();
        assert_eq!(
            weight_sup(&w, &d, 1).unwrap(),
            WeightSup {
                value: 4.0,
                empirical: false
            }
        );
        let w = piecewise_weight(below(0, 1.0), 0.8, 0.2).unwrap();
        assert_eq!(weight_sup(&w, &d, 1).unwrap().value, 0.8);
    }

    #[test]
    fn sup_empirical_is_grid_max() {
        let grid: Vec<Vec<f64>> = (0..=40).map(|i| vec![i as f64 / 40.0 - 0.37]).collect();
        let d = Dataset::from_rows(&grid, vec![0.0; grid.len()]).unwrap();
        let w = variance_weight(|x| 1.0 + x[0] * x[0], 1.0).unwrap();
        let brute = grid
            .iter()
            .map(|r| 1.0 / (1.0 + r[0] * r[0]))
            .fold(f64::NEG_INFINITY, f64::max);
        let sup = weight_sup(&w, &d, 1).unwrap();
        assert!(sup.empirical);
        assert_eq!(sup.value, brute);
    }

    #[test]
    fn scaling_scales_values_and_bound() {
        let w = piecewise_weight(below(0, 0.1), 0.9, 0.1).unwrap();
        let k = w.scaled(3.0).unwrap();
        assert!((k.eval(&[0.0], 1).unwrap() - 2.7).abs() < 1e-15);
        assert!((k.sup_bound(1).unwrap() - 2.7).abs() < 1e-15);
        assert!(w.scaled(0.0).is_err());
    }

    #[test]
    fn exact_normalization_monte_carlo() {
        let m = 100_000;
        let mut rng = crate::rng::RngSpec::new(99).rng();
        // Standard normal design, region x < 0: probability 1/2.
        let w = region_weight(below(0, 0.0), Some(0.5)).unwrap();
        let mean = (0..m)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                w.eval(&[x], m).unwrap()
            })
            .sum::<f64>()
            / m as f64;
        assert!((mean - 1.0).abs() < 5.0 / (m as f64).sqrt(), "mean {mean}");

        // Uniform design, shrinking window.
        let n = 10_000;
        let win = window_weight(0, -1.0 / 8.0).unwrap();
        let mean = (0..m)
            .map(|_| win.eval(&[rng.gen::<f64>()], n).unwrap())
            .sum::<f64>()
            / m as f64;
        assert!((mean - 1.0).abs() < 5.0 / (m as f64).sqrt(), "window mean {mean}");
    }

    #[test]
    fn spec_round_trip() {
        let spec = WeightSpec::Piecewise {
            region: Region::Below {
                column: 0.into(),
                threshold: 0.1,
            },
            inside: 0.9,
            outside: 0.1,
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: WeightSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        let bad = r#"{"type":"constant","value":1.0,"extra":2}"#;
        assert!(serde_json::from_str::<WeightSpec>(bad).is_err());
    }
}
