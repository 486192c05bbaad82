//! Truncated Fock-space oracle for the quadratic Liouvillian.
//!
//! Superoperators act on density matrices of dimension `cutoff + 1`. The
//! actions are exact on operators supported on levels `<= cutoff - 2`, which
//! is the regime every comparison in this crate stays in.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;

use super::Generator;
use crate::error::{Error, Result};
use crate::ode::C64;
use crate::protocol::CycleProtocol;

pub const DEFAULT_DYNAMICS_CUTOFF: usize = 60;
pub const DEFAULT_SPECTRUM_CUTOFF: usize = 15;
/// Largest cutoff for which dense `(cutoff+1)^2` superoperator matrices are built.
pub const MAX_DENSE_CUTOFF: usize = 40;
const MIN_CUTOFF: usize = 8;

/// The seven generators `H0, H1, H2, D1..D4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Super {
    H0,
    H1,
    H2,
    D1,
    D2,
    D3,
    D4,
}

impl Super {
    pub const ALL: [Super; 7] = [Super::H0, Super::H1, Super::H2, Super::D1, Super::D2, Super::D3, Super::D4];
}

#[derive(Debug, Clone)]
pub struct FockOracle {
    cutoff: usize,
    a: DMatrix<C64>,
    ad: DMatrix<C64>,
    num: DMatrix<C64>,
    aa: DMatrix<C64>,
    adad: DMatrix<C64>,
}

fn lowering(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

impl FockOracle {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff < MIN_CUTOFF {
            return Err(Error::Cutoff {
                cutoff,
                reason: format!("need at least {MIN_CUTOFF}"),
            });
        }
        let dim = cutoff + 1;
        let a = lowering(dim);
        let ad = a.adjoint();
        let num = DMatrix::from_fn(dim, dim, |r, c| C64::new(if r == c { r as f64 } else { 0.0 }, 0.0));
        let aa = &a * &a;
        let adad = &ad * &ad;
        Ok(FockOracle { cutoff, a, ad, num, aa, adad })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    /// `S(rho)` for one of the seven generators.
    pub fn apply(&self, s: Super, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mi = C64::new(0.0, -1.0);
        let comm = |x: &DMatrix<C64>| (x * rho - rho * x) * mi;
        let anti = |x: &DMatrix<C64>| (x * rho + rho * x) * C64::new(0.5, 0.0);
        match s {
            Super::H0 => comm(&self.num),
            Super::H1 => comm(&self.aa),
            Super::H2 => comm(&self.adad),
            Super::D1 => &self.a * rho * &self.ad - anti(&self.num),
            Super::D2 => {
                // a a^dag = a^dag a + 1 holds exactly, unlike the truncated product.
                &self.ad * rho * &self.a - anti(&self.num) - rho
            }
            Super::D3 => &self.ad * rho * &self.ad - anti(&self.adad),
            Super::D4 => &self.a * rho * &self.a - anti(&self.aa),
        }
    }

    /// Coefficient of each generator in `g`.
    pub fn coefficients(g: &Generator) -> [(Super, C64); 7] {
        [
            (Super::H0, g.omega),
            (Super::H1, g.lambda * 0.5),
            (Super::H2, g.lambda_p * 0.5),
            (Super::D1, (g.n + 1.0) * g.gamma),
            (Super::D2, g.n * g.gamma),
            (Super::D3, -g.m * g.gamma),
            (Super::D4, -g.m_p * g.gamma),
        ]
    }

    pub fn apply_generator(&self, g: &Generator, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for (s, c) in Self::coefficients(g) {
            if c != C64::new(0.0, 0.0) {
                out += self.apply(s, rho) * c;
            }
        }
        out
    }

    /// `(tr(a^dag a X), tr(aa X), tr(a^dag a^dag X))`.
    pub fn expectations(&self, x: &DMatrix<C64>) -> [C64; 3] {
        let tr = |o: &DMatrix<C64>| (o * x).trace();
        [tr(&self.num), tr(&self.aa), tr(&self.adad)]
    }

    /// Moment derivatives `tr(O L(rho))`.
    pub fn moment_derivatives(&self, g: &Generator, rho: &DMatrix<C64>) -> [C64; 3] {
        self.expectations(&self.apply_generator(g, rho))
    }

    fn check_dense(&self) -> Result<()> {
        if self.cutoff > MAX_DENSE_CUTOFF {
            return Err(Error::Cutoff {
                cutoff: self.cutoff,
                reason: format!("dense superoperators are limited to cutoff {MAX_DENSE_CUTOFF}"),
            });
        }
        Ok(())
    }

    fn dense_from<F: Fn(&DMatrix<C64>) -> DMatrix<C64>>(&self, f: F) -> DMatrix<C64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d * d, d * d);
        let mut e = DMatrix::zeros(d, d);
        for j in 0..d {
            for k in 0..d {
                e[(j, k)] = C64::new(1.0, 0.0);
                let img = f(&e);
                e[(j, k)] = C64::new(0.0, 0.0);
                let col = j * d + k;
                for r in 0..d {
                    for s in 0..d {
                        let v = img[(r, s)];
                        if v != C64::new(0.0, 0.0) {
                            out[(r * d + s, col)] = v;
                        }
                    }
                }
            }
        }
        out
    }

    /// Dense matrix of one generator on row-major vectorized operators.
    pub fn superoperator(&self, s: Super) -> Result<DMatrix<C64>> {
        self.check_dense()?;
        Ok(self.dense_from(|e| self.apply(s, e)))
    }

    pub fn generator_matrix(&self, g: &Generator) -> Result<DMatrix<C64>> {
        self.check_dense()?;
        Ok(self.dense_from(|e| self.apply_generator(g, e)))
    }

    /// Eigenvalues of a dense superoperator.
    pub fn spectrum(matrix: &DMatrix<C64>) -> Result<Vec<C64>> {
        matrix
            .clone()
            .eigenvalues()
            .map(|v| v.iter().copied().collect())
            .ok_or_else(|| Error::Eigen("Schur decomposition did not converge".into()))
    }

    /// Largest entry of `[A, B](E_jk) - sum c_i S_i(E_jk)` over basis operators
    /// `E_jk = |j><k|` with `j, k <= cutoff - margin`.
    pub fn commutator_defect(&self, a: Super, b: Super, rhs: &[(C64, Super)], margin: usize) -> f64 {
        let d = self.dim();
        let top = d.saturating_sub(margin);
        let mut worst: f64 = 0.0;
        let mut e = DMatrix::zeros(d, d);
        for j in 0..top {
            for k in 0..top {
                e[(j, k)] = C64::new(1.0, 0.0);
                let mut diff = self.apply(a, &self.apply(b, &e)) - self.apply(b, &self.apply(a, &e));
                for (c, s) in rhs {
                    diff -= self.apply(*s, &e) * *c;
                }
                e[(j, k)] = C64::new(0.0, 0.0);
                worst = worst.max(diff.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }

    /// Squeezed thermal state `S(xi) rho_th S(xi)^dag`, `xi = r e^{i theta}`,
    /// built with headroom, then restricted to levels `<= cutoff - 2` and renormalized.
    pub fn squeezed_thermal_state(&self, n_th: f64, r: f64, theta: f64) -> DMatrix<C64> {
        let big = self.dim() + 60;
        let a = lowering(big);
        let ad = a.adjoint();
        let xi = C64::from_polar(r, theta);
        let gen = (&a * &a * xi.conj() - &ad * &ad * xi) * C64::new(0.5, 0.0);
        let s = gen.exp();
        let q = n_th / (n_th + 1.0);
        let rho_th = DMatrix::from_fn(big, big, |i, j| {
            if i == j {
                C64::new((1.0 - q) * q.powi(i as i32), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let rho = &s * rho_th * s.adjoint();
        let keep = self.dim() - 2;
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        out.view_mut((0, 0), (keep, keep)).copy_from(&rho.view((0, 0), (keep, keep)));
        let tr = out.trace();
        out / tr
    }
}

type CacheKey = (String, u64, usize);

/// Memoized dense Liouvillians keyed by protocol, time and cutoff.
#[derive(Debug, Default)]
pub struct FockCache {
    inner: RwLock<HashMap<CacheKey, Arc<DMatrix<C64>>>>,
}

impl FockCache {
    pub fn new() -> Self {
        FockCache::default()
    }

    /// Dense Liouvillian of `p` at time `t`.
    pub fn liouvillian(&self, p: &CycleProtocol, t: f64, cutoff: usize) -> Result<Arc<DMatrix<C64>>> {
        let id = serde_json::to_string(p).map_err(|e| Error::InvalidRequest(e.to_string()))?;
        let key = (id, t.to_bits(), cutoff);
        if let Some(m) = self.inner.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(m));
        }
        let oracle = FockOracle::new(cutoff)?;
        let m = Arc::new(oracle.generator_matrix(&Generator::physical(&p.params(t)))?);
        self.inner.write().expect("cache lock").entry(key).or_insert_with(|| Arc::clone(&m));
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
