//! Energy functionals on the simplex and the smooth potentials used by the
//! extended flow.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::registry::{Named, Registry};

/// Smooth potential V with derivative, evaluated at component means.
pub trait SmoothPotential: Named + Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

/// V(x) = sin x.
pub struct SinPotential;

impl Named for SinPotential {
    fn name(&self) -> &'static str {
        "sin"
    }
}

impl SmoothPotential for SinPotential {
    fn value(&self, x: f64) -> f64 {
        x.sin()
    }
    fn derivative(&self, x: f64) -> f64 {
        x.cos()
    }
}

/// V(x) = x²/2.
pub struct QuadraticPotential;

impl Named for QuadraticPotential {
    fn name(&self) -> &'static str {
        "quadratic"
    }
}

impl SmoothPotential for QuadraticPotential {
    fn value(&self, x: f64) -> f64 {
        0.5 * x * x
    }
    fn derivative(&self, x: f64) -> f64 {
        x
    }
}

/// V ≡ 0.
pub struct ZeroPotential;

impl Named for ZeroPotential {
    fn name(&self) -> &'static str {
        "zero"
    }
}

impl SmoothPotential for ZeroPotential {
    fn value(&self, _x: f64) -> f64 {
        0.0
    }
    fn derivative(&self, _x: f64) -> f64 {
        0.0
    }
}

pub fn potential_registry() -> &'static Registry<dyn SmoothPotential> {
    static REG: OnceLock<Registry<dyn SmoothPotential>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut r: Registry<dyn SmoothPotential> = Registry::new("potential");
        r.register(Arc::new(SinPotential))
            .register(Arc::new(QuadraticPotential))
            .register(Arc::new(ZeroPotential));
        r
    })
}

/// Internal energy density U(p) and its derivative.
pub trait InternalDensity: Named + Send + Sync {
    fn u(&self, p: f64) -> f64;
    fn u_prime(&self, p: f64) -> f64;

    /// U′(b) − U′(a). Override when a cancellation-free form exists.
    fn u_prime_difference(&self, a: f64, b: f64) -> f64 {
        self.u_prime(b) - self.u_prime(a)
    }
}

/// U(p) = p log p, the discrete entropy.
pub struct Entropy;

impl Named for Entropy {
    fn name(&self) -> &'static str {
        "entropy"
    }
}

impl InternalDensity for Entropy {
    fn u(&self, p: f64) -> f64 {
        p * p.ln()
    }
    fn u_prime(&self, p: f64) -> f64 {
        p.ln() + 1.0
    }
    fn u_prime_difference(&self, a: f64, b: f64) -> f64 {
        (b / a).ln()
    }
}

/// U(p) = p²/2 (porous-medium type).
pub struct QuadraticDensity;

impl Named for QuadraticDensity {
    fn name(&self) -> &'static str {
        "quadratic"
    }
}

impl InternalDensity for QuadraticDensity {
    fn u(&self, p: f64) -> f64 {
        0.5 * p * p
    }
    fn u_prime(&self, p: f64) -> f64 {
        p
    }
}

pub fn internal_registry() -> &'static Registry<dyn InternalDensity> {
    static REG: OnceLock<Registry<dyn InternalDensity>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut r: Registry<dyn InternalDensity> = Registry::new("internal energy");
        r.register(Arc::new(Entropy)).register(Arc::new(QuadraticDensity));
        r
    })
}

const SYMMETRY_TOL: f64 = 1e-12;

/// Energy functional F(p) on the simplex.
#[derive(Clone)]
pub enum EnergyFunctional {
    /// F = Σ Vᵢpᵢ. `smooth` supplies V and V′ for the extended flow.
    Potential {
        nodes: Vec<f64>,
        smooth: Option<Arc<dyn SmoothPotential>>,
    },
    /// F = Σ U(pᵢ).
    Internal(Arc<dyn InternalDensity>),
    /// F = ½ pᵀWp with W symmetric.
    Interaction(DMatrix<f64>),
}

impl fmt::Debug for EnergyFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyFunctional::Potential { nodes, smooth } => f
                .debug_struct("Potential")
                .field("nodes", nodes)
                .field("smooth", &smooth.as_ref().map(|s| s.name()))
                .finish(),
            EnergyFunctional::Internal(u) => write!(f, "Internal({})", u.name()),
            EnergyFunctional::Interaction(w) => write!(f, "Interaction({}x{})", w.nrows(), w.ncols()),
        }
    }
}

impl EnergyFunctional {
    pub fn potential(nodes: Vec<f64>) -> Result<Self> {
        if nodes.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("potential node values must be finite".into()));
        }
        Ok(EnergyFunctional::Potential { nodes, smooth: None })
    }

    /// Potential given only through a smooth V; node values are taken at
    /// the means of the extended state.
    pub fn smooth_potential(v: Arc<dyn SmoothPotential>) -> Self {
        EnergyFunctional::Potential {
            nodes: Vec::new(),
            smooth: Some(v),
        }
    }

    pub fn entropy() -> Self {
        EnergyFunctional::Internal(Arc::new(Entropy))
    }

    pub fn interaction(w: DMatrix<f64>) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::InvalidArgument(format!(
                "interaction kernel must be square, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        let asym = (&w - w.transpose()).abs().max();
        if asym > SYMMETRY_TOL || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "interaction kernel must be finite and symmetric (asymmetry {asym:e})"
            )));
        }
        Ok(EnergyFunctional::Interaction(w))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            EnergyFunctional::Potential { .. } => "potential",
            EnergyFunctional::Internal(_) => "internal",
            EnergyFunctional::Interaction(_) => "interaction",
        }
    }

    pub fn smooth(&self) -> Option<&Arc<dyn SmoothPotential>> {
        match self {
            EnergyFunctional::Potential { smooth, .. } => smooth.as_ref(),
            _ => None,
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        let m = match self {
            EnergyFunctional::Potential { nodes, .. } => nodes.len(),
            EnergyFunctional::Interaction(w) => w.nrows(),
            EnergyFunctional::Internal(_) => return Ok(()),
        };
        if m != n {
            return Err(Error::ShapeMismatch(format!(
                "{} energy has {m} nodes but the state has {n}",
                self.kind()
            )));
        }
        Ok(())
    }

    /// F(p).
    pub fn value(&self, p: &[f64]) -> Result<f64> {
        self.check_len(p.len())?;
        let v = match self {
            EnergyFunctional::Potential { nodes, .. } => nodes.iter().zip(p).map(|(v, q)| v * q).sum(),
            EnergyFunctional::Internal(u) => p.iter().map(|&q| u.u(q)).sum(),
            EnergyFunctional::Interaction(w) => {
                let pv = nalgebra::DVector::from_column_slice(p);
                0.5 * pv.dot(&(w * &pv))
            }
        };
        if !v.is_finite() {
            return Err(Error::EvaluationError(format!("energy is {v}")));
        }
        Ok(v)
    }

    /// ∂F/∂pᵢ for every node.
    pub fn node_gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_len(p.len())?;
        let g: Vec<f64> = match self {
            EnergyFunctional::Potential { nodes, .. } => nodes.clone(),
            EnergyFunctional::Internal(u) => p.iter().map(|&q| u.u_prime(q)).collect(),
            EnergyFunctional::Interaction(w) => {
                (w * nalgebra::DVector::from_column_slice(p)).iter().copied().collect()
            }
        };
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::EvaluationError(format!("∂F/∂p[{i}] undefined at p = {}", p[i])));
        }
        Ok(g)
    }

    /// (∇_θF)ᵢ = ∂F/∂pᵢ₊₁ − ∂F/∂pᵢ, i = 0..N−1.
    pub fn gap_gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        let g = match self {
            EnergyFunctional::Internal(u) => {
                self.check_len(p.len())?;
                p.windows(2).map(|w| u.u_prime_difference(w[0], w[1])).collect::<Vec<_>>()
            }
            _ => self.node_gradient(p)?.windows(2).map(|w| w[1] - w[0]).collect(),
        };
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::EvaluationError(format!("θ-gradient undefined at gap {i}")));
        }
        Ok(g)
    }
}
