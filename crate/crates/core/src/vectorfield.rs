//! Vector fields on ℝⁿ and their Lie algebra.
//!
//! A [`VectorField`] wraps an evaluator `x ↦ F(x)` and, optionally, its
//! analytic Jacobian. The Lie bracket of two fields is
//!
//! ```text
//! [f, g](x) = Jg(x)·f(x) − Jf(x)·g(x)
//! ```
//!
//! Jacobians fall back to central differences when no analytic form is
//! attached. Brackets can themselves be wrapped as derived fields, which is
//! how nested brackets (Jacobi identity, span diagnostics) are evaluated.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{contract, Error, Result};

/// Finite-difference step for Jacobians of unit-scale fields.
pub const DEFAULT_STEP: f64 = 1e-5;
/// Step used when differentiating fields that are themselves brackets.
pub const DEFAULT_NESTED_STEP: f64 = 1e-4;
/// Relative singular-value cutoff for [`lie_span_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

type EvalFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type JacobianFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// A smooth vector field on ℝⁿ.
///
/// Handles are cheap to clone and share. Evaluators must be pure.
#[derive(Clone)]
pub struct VectorField {
    label: String,
    dim: usize,
    eval: Arc<EvalFn>,
    jacobian: Option<Arc<JacobianFn>>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl VectorField {
    pub fn new<F>(label: impl Into<String>, dim: usize, eval: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        assert!(dim > 0, "vector field dimension must be positive");
        Self {
            label: label.into(),
            dim,
            eval: Arc::new(eval),
            jacobian: None,
        }
    }

    /// Attaches an analytic Jacobian `x ↦ dF/dx`.
    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    /// The constant field `x ↦ v`, with a zero Jacobian.
    pub fn constant(label: impl Into<String>, value: DVector<f64>) -> Self {
        let dim = value.len();
        Self::new(label, dim, move |_| value.clone())
            .with_jacobian(move |_| DMatrix::zeros(dim, dim))
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant("0", DVector::zeros(dim))
    }

    /// The linear field `x ↦ A·x`.
    pub fn linear(label: impl Into<String>, a: DMatrix<f64>) -> Self {
        assert!(a.is_square(), "linear field needs a square matrix");
        let dim = a.nrows();
        let jac = a.clone();
        Self::new(label, dim, move |x| &a * x).with_jacobian(move |_| jac.clone())
    }

    /// `x ↦ c·F(x)`. The analytic Jacobian, if any, is scaled alongside.
    pub fn scaled(&self, c: f64) -> Self {
        let eval = Arc::clone(&self.eval);
        let mut out = Self::new(format!("{c}·{}", self.label), self.dim, move |x| {
            eval(x) * c
        });
        if let Some(jac) = &self.jacobian {
            let jac = Arc::clone(jac);
            out = out.with_jacobian(move |x| jac(x) * c);
        }
        out
    }

    /// The bracket `[f, g]` as a field of its own, evaluated through
    /// [`lie_bracket`] with the given step. It carries no analytic Jacobian.
    ///
    /// Evaluation failures inside the derived field surface as non-finite
    /// output, which [`VectorField::eval`] reports.
    pub fn bracket(f: &VectorField, g: &VectorField, step: f64) -> Result<Self> {
        check_same_dim(f, g)?;
        check_step(step)?;
        let (f, g) = (f.clone(), g.clone());
        let dim = f.dim;
        let label = format!("[{},{}]", f.label, g.label);
        Ok(Self::new(label, dim, move |x| {
            lie_bracket(&f, &g, x, step)
                .unwrap_or_else(|_| DVector::from_element(dim, f64::NAN))
        }))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// Raw evaluation without dimension or finiteness checks.
    pub fn call(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.eval)(x)
    }

    /// Checked evaluation.
    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(x)?;
        let v = (self.eval)(x);
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "vector field output",
                expected: self.dim,
                got: v.len(),
            });
        }
        if v.iter().all(|c| c.is_finite()) {
            Ok(v)
        } else {
            Err(self.failure(x))
        }
    }

    fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "vector field input",
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn failure(&self, x: &DVector<f64>) -> Error {
        Error::Evaluation {
            label: self.label.clone(),
            x: x.iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffScheme {
    Analytic,
    Central,
}

/// A Jacobian of a field at a point, with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianEstimate {
    pub matrix: DMatrix<f64>,
    pub step: f64,
    pub scheme: DiffScheme,
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(contract(format!("step must be positive and finite, got {step}")))
    }
}

fn check_same_dim(f: &VectorField, g: &VectorField) -> Result<()> {
    if f.dim != g.dim {
        return Err(Error::DimensionMismatch {
            context: "bracket operands",
            expected: f.dim,
            got: g.dim,
        });
    }
    Ok(())
}

/// Jacobian of `field` at `x`: analytic when available, otherwise central
/// differences with step `step`.
pub fn jacobian_at(field: &VectorField, x: &DVector<f64>, step: f64) -> Result<JacobianEstimate> {
    check_step(step)?;
    field.check_point(x)?;
    let n = field.dim;

    if let Some(jac) = &field.jacobian {
        let matrix = jac(x);
        if matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                context: "analytic jacobian",
                expected: n,
                got: matrix.nrows(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(field.failure(x));
        }
        return Ok(JacobianEstimate {
            matrix,
            step,
            scheme: DiffScheme::Analytic,
        });
    }

    let mut matrix = DMatrix::zeros(n, n);
    let mut probe = x.clone();
    for j in 0..n {
        probe[j] = x[j] + step;
        let forward = field.eval(&probe).map_err(|_| field.failure(x))?;
        probe[j] = x[j] - step;
        let backward = field.eval(&probe).map_err(|_| field.failure(x))?;
        probe[j] = x[j];
        matrix.set_column(j, &((forward - backward) / (2.0 * step)));
    }
    Ok(JacobianEstimate {
        matrix,
        step,
        scheme: DiffScheme::Central,
    })
}

/// `[f, g](x) = Jg(x)·f(x) − Jf(x)·g(x)`.
pub fn lie_bracket(
    f: &VectorField,
    g: &VectorField,
    x: &DVector<f64>,
    step: f64,
) -> Result<DVector<f64>> {
    check_same_dim(f, g)?;
    let fx = f.eval(x)?;
    let gx = g.eval(x)?;
    let jf = jacobian_at(f, x, step)?;
    let jg = jacobian_at(g, x, step)?;
    let out = jg.matrix * fx - jf.matrix * gx;
    if out.iter().all(|c| c.is_finite()) {
        Ok(out)
    } else {
        Err(Error::Evaluation {
            label: format!("[{},{}]", f.label, g.label),
            x: x.iter().copied().collect(),
        })
    }
}

/// `[f,[g,h]] + [h,[f,g]] + [g,[h,f]]` at `x`; zero up to discretization
/// error for smooth fields.
pub fn jacobi_residual(
    f: &VectorField,
    g: &VectorField,
    h: &VectorField,
    x: &DVector<f64>,
    step: f64,
) -> Result<DVector<f64>> {
    check_same_dim(f, g)?;
    check_same_dim(f, h)?;
    let gh = VectorField::bracket(g, h, step)?;
    let fg = VectorField::bracket(f, g, step)?;
    let hf = VectorField::bracket(h, f, step)?;
    Ok(lie_bracket(f, &gh, x, step)? + lie_bracket(h, &fg, x, step)? + lie_bracket(g, &hf, x, step)?)
}

/// Numerical rank at `x` of the given fields together with all iterated
/// brackets `[fᵢ, B]` up to `depth` levels, where `B` ranges over the
/// previous level.
///
/// Singular values below `tol · σ_max` count as zero.
pub fn lie_span_rank(
    fields: &[VectorField],
    x: &DVector<f64>,
    depth: usize,
    step: f64,
    tol: f64,
) -> Result<usize> {
    let first = fields
        .first()
        .ok_or_else(|| contract("lie_span_rank needs at least one field"))?;
    if depth == 0 {
        return Err(contract("bracket depth must be at least 1"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(contract(format!("rank tolerance must be positive, got {tol}")));
    }
    for field in &fields[1..] {
        check_same_dim(first, field)?;
    }

    let mut generated: Vec<VectorField> = fields.to_vec();
    let mut level: Vec<VectorField> = fields.to_vec();
    for _ in 0..depth {
        let mut next = Vec::with_capacity(fields.len() * level.len());
        for a in fields {
            for b in &level {
                next.push(VectorField::bracket(a, b, step)?);
            }
        }
        generated.extend(next.iter().cloned());
        level = next;
    }

    let columns = generated
        .iter()
        .map(|field| field.eval(x))
        .collect::<Result<Vec<_>>>()?;
    let stacked = DMatrix::from_columns(&columns);
    let singular = stacked.singular_values();
    let largest = singular.iter().copied().fold(0.0_f64, f64::max);
    if largest == 0.0 {
        return Ok(0);
    }
    Ok(singular.iter().filter(|&&s| s > tol * largest).count())
}
