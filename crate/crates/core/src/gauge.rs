//! Regularizers (gauges) with their duals and proximal maps.
//!
//! Every variant is definite (`u(M) = 0` iff `M = 0`) and positively
//! homogeneous of degree one. The dual is
//! `dual(M) = sup { <M, M'> : u(M') <= 1 }`, in closed form for each variant.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Rounding slack of [`GaugeSpec::holder_check`].
pub const HOLDER_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum GaugeSpec {
    /// Sum of absolute values.
    L1,
    /// `sum w |m|` with strictly positive weights of the argument's shape.
    WeightedL1 { weights: Tensor },
    /// Sum of Euclidean norms of the fibers along `mode`.
    FiberGroupL2 { mode: usize },
    /// Sum of Frobenius norms of the slices obtained by fixing the index of
    /// `mode`.
    SliceFrobenius { mode: usize },
    /// `(sum |m|^q)^(1/q)` for `q` in `(0, 1]`; non-convex for `q < 1`.
    Lq { q: f64 },
}

impl GaugeSpec {
    pub fn weighted_l1(weights: Tensor) -> Result<Self> {
        if weights.data().iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "weighted-L1 weights must be positive and finite".into(),
            ));
        }
        Ok(GaugeSpec::WeightedL1 { weights })
    }

    pub fn lq(q: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidParameter(format!("q = {q} outside (0, 1]")));
        }
        Ok(GaugeSpec::Lq { q })
    }

    pub fn is_convex(&self) -> bool {
        match self {
            GaugeSpec::Lq { q } => *q >= 1.0,
            _ => true,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GaugeSpec::L1 => "l1",
            GaugeSpec::WeightedL1 { .. } => "weighted-l1",
            GaugeSpec::FiberGroupL2 { .. } => "fiber-group-l2",
            GaugeSpec::SliceFrobenius { .. } => "slice-frobenius",
            GaugeSpec::Lq { .. } => "lq",
        }
    }

    /// Checks that `m` has a shape this gauge can act on.
    pub fn check_compatible(&self, m: &Tensor) -> Result<()> {
        match self {
            GaugeSpec::WeightedL1 { weights } if weights.dims() != m.dims() => {
                Err(Error::ShapeMismatch {
                    expected: weights.dims().to_vec(),
                    actual: m.dims().to_vec(),
                })
            }
            GaugeSpec::FiberGroupL2 { mode } | GaugeSpec::SliceFrobenius { mode } => {
                m.shape().check_mode(*mode)
            }
            _ => Ok(()),
        }
    }

    /// Group label of every flat offset plus the group count, for the grouped
    /// variants.
    fn groups(&self, m: &Tensor) -> Option<(usize, Vec<usize>)> {
        match *self {
            GaugeSpec::FiberGroupL2 { mode } => {
                let (outer, bk, inner) = m.shape().split(mode);
                let ids = (0..m.len())
                    .map(|off| (off / (bk * inner)) * inner + off % inner)
                    .collect();
                Some((outer * inner, ids))
            }
            GaugeSpec::SliceFrobenius { mode } => {
                let (_, bk, inner) = m.shape().split(mode);
                let ids = (0..m.len()).map(|off| (off / inner) % bk).collect();
                Some((bk, ids))
            }
            _ => None,
        }
    }

    fn group_norms(n_groups: usize, ids: &[usize], data: &[f64]) -> Vec<f64> {
        let mut sq = vec![0.0; n_groups];
        for (&g, &v) in ids.iter().zip(data) {
            sq[g] += v * v;
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// `u(M)`.
    pub fn evaluate(&self, m: &Tensor) -> Result<f64> {
        self.check_compatible(m)?;
        let data = m.data();
        Ok(match self {
            GaugeSpec::L1 => data.iter().map(|v| v.abs()).sum(),
            GaugeSpec::WeightedL1 { weights } => data
                .iter()
                .zip(weights.data())
                .map(|(v, w)| w * v.abs())
                .sum(),
            GaugeSpec::FiberGroupL2 { .. } | GaugeSpec::SliceFrobenius { .. } => {
                let (n, ids) = self.groups(m).expect("grouped variant");
                Self::group_norms(n, &ids, data).iter().sum()
            }
            GaugeSpec::Lq { q } => {
                let scale = m.max_abs();
                if scale == 0.0 {
                    0.0
                } else {
                    let s: f64 = data.iter().map(|v| (v.abs() / scale).powf(*q)).sum();
                    scale * s.powf(1.0 / q)
                }
            }
        })
    }

    /// `u(A) - u(B)` summed term by term so that nearby arguments do not lose
    /// the difference to cancellation.
    pub fn difference(&self, a: &Tensor, b: &Tensor) -> Result<f64> {
        self.check_compatible(a)?;
        self.check_compatible(b)?;
        if a.dims() != b.dims() {
            return Err(Error::ShapeMismatch {
                expected: a.dims().to_vec(),
                actual: b.dims().to_vec(),
            });
        }
        let (da, db) = (a.data(), b.data());
        Ok(match self {
            GaugeSpec::L1 => da.iter().zip(db).map(|(x, y)| x.abs() - y.abs()).sum(),
            GaugeSpec::Lq { q } if *q == 1.0 => {
                da.iter().zip(db).map(|(x, y)| x.abs() - y.abs()).sum()
            }
            GaugeSpec::WeightedL1 { weights } => da
                .iter()
                .zip(db)
                .zip(weights.data())
                .map(|((x, y), w)| w * (x.abs() - y.abs()))
                .sum(),
            GaugeSpec::FiberGroupL2 { .. } | GaugeSpec::SliceFrobenius { .. } => {
                let (n, ids) = self.groups(a).expect("grouped variant");
                let na = Self::group_norms(n, &ids, da);
                let nb = Self::group_norms(n, &ids, db);
                // |a| - |b| = <a - b, a + b> / (|a| + |b|)
                let mut cross = vec![0.0; n];
                for ((&g, x), y) in ids.iter().zip(da).zip(db) {
                    cross[g] += (x - y) * (x + y);
                }
                cross
                    .iter()
                    .zip(na.iter().zip(&nb))
                    .map(|(c, (p, q))| if p + q > 0.0 { c / (p + q) } else { 0.0 })
                    .sum()
            }
            GaugeSpec::Lq { .. } => self.evaluate(a)? - self.evaluate(b)?,
        })
    }

    /// The dual gauge `sup { <M, M'> : u(M') <= 1 }`.
    pub fn dual_evaluate(&self, m: &Tensor) -> Result<f64> {
        self.check_compatible(m)?;
        let data = m.data();
        Ok(match self {
            // On the l_q ball with q <= 1 every point has l_1 norm at most one,
            // so the supremum sits at a signed coordinate vector.
            GaugeSpec::L1 | GaugeSpec::Lq { .. } => m.max_abs(),
            GaugeSpec::WeightedL1 { weights } => data
                .iter()
                .zip(weights.data())
                .fold(0.0, |acc, (v, w)| acc.max(v.abs() / w)),
            GaugeSpec::FiberGroupL2 { .. } | GaugeSpec::SliceFrobenius { .. } => {
                let (n, ids) = self.groups(m).expect("grouped variant");
                Self::group_norms(n, &ids, data)
                    .into_iter()
                    .fold(0.0, f64::max)
            }
        })
    }

    /// `u(M) + u(-M)`.
    pub fn symmetrized_size(&self, m: &Tensor) -> Result<f64> {
        Ok(self.evaluate(m)? + self.evaluate(&m.scale(-1.0))?)
    }

    /// `argmin_X 0.5 ||X - M||^2 + tau u(X)` for the convex variants.
    pub fn prox(&self, m: &Tensor, tau: f64) -> Result<Tensor> {
        if !self.is_convex() {
            return Err(Error::Unsupported(format!(
                "proximal map of non-convex {} gauge",
                self.name()
            )));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!("prox threshold {tau}")));
        }
        self.check_compatible(m)?;
        let soft = |v: f64, t: f64| v.signum() * (v.abs() - t).max(0.0);
        Ok(match self {
            GaugeSpec::L1 | GaugeSpec::Lq { .. } => m.map(|v| soft(v, tau)),
            GaugeSpec::WeightedL1 { weights } => {
                let mut out = m.clone();
                for (v, w) in out.data_mut().iter_mut().zip(weights.data()) {
                    *v = soft(*v, tau * w);
                }
                out
            }
            GaugeSpec::FiberGroupL2 { .. } | GaugeSpec::SliceFrobenius { .. } => {
                let (n, ids) = self.groups(m).expect("grouped variant");
                let norms = Self::group_norms(n, &ids, m.data());
                let factors: Vec<f64> = norms
                    .iter()
                    .map(|&nrm| if nrm > tau { 1.0 - tau / nrm } else { 0.0 })
                    .collect();
                let mut out = m.clone();
                for (v, &g) in out.data_mut().iter_mut().zip(&ids) {
                    *v *= factors[g];
                }
                out
            }
        })
    }

    /// Whether `<M, M'> <= dual(M) u(M') + 1e-9`.
    pub fn holder_check(&self, m: &Tensor, m_prime: &Tensor) -> Result<bool> {
        let lhs = m.inner(m_prime)?;
        let rhs = self.dual_evaluate(m)? * self.evaluate(m_prime)?;
        Ok(lhs <= rhs + HOLDER_SLACK)
    }

    /// Euclidean norm of the minimum-norm element of `grad + r * du(x)`, the
    /// subdifferential of `f + r u` at `x` when `grad = grad f(x)`.
    pub fn min_subgradient_norm(&self, x: &Tensor, grad: &Tensor, r: f64) -> Result<f64> {
        if !self.is_convex() {
            return Err(Error::Unsupported(format!(
                "subdifferential of non-convex {} gauge",
                self.name()
            )));
        }
        self.check_compatible(x)?;
        if x.dims() != grad.dims() {
            return Err(Error::ShapeMismatch {
                expected: x.dims().to_vec(),
                actual: grad.dims().to_vec(),
            });
        }
        let coord = |xv: f64, gv: f64, t: f64| {
            if xv != 0.0 {
                gv + t * xv.signum()
            } else {
                gv.signum() * (gv.abs() - t).max(0.0)
            }
        };
        let sq: f64 = match self {
            GaugeSpec::L1 | GaugeSpec::Lq { .. } => x
                .data()
                .iter()
                .zip(grad.data())
                .map(|(&xv, &gv)| coord(xv, gv, r).powi(2))
                .sum(),
            GaugeSpec::WeightedL1 { weights } => x
                .data()
                .iter()
                .zip(grad.data())
                .zip(weights.data())
                .map(|((&xv, &gv), &w)| coord(xv, gv, r * w).powi(2))
                .sum(),
            GaugeSpec::FiberGroupL2 { .. } | GaugeSpec::SliceFrobenius { .. } => {
                let (n, ids) = self.groups(x).expect("grouped variant");
                let xn = Self::group_norms(n, &ids, x.data());
                let gn = Self::group_norms(n, &ids, grad.data());
                let mut active = vec![0.0; n];
                for ((&g, &xv), &gv) in ids.iter().zip(x.data()).zip(grad.data()) {
                    if xn[g] > 0.0 {
                        active[g] += (gv + r * xv / xn[g]).powi(2);
                    }
                }
                (0..n)
                    .map(|g| {
                        if xn[g] > 0.0 {
                            active[g]
                        } else {
                            (gn[g] - r).max(0.0).powi(2)
                        }
                    })
                    .sum()
            }
        };
        Ok(sq.sqrt())
    }
}
