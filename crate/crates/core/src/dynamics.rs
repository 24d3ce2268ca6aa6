//! Cartesian dynamical systems and the standard constructions on them.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::eval::{CarrierKind, EvalError, Expr, Value};
use crate::number::Number;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state has dimension {found}, system has dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("a recurrence needs at least one initial value")]
    EmptyInits,
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Hidden state: one carrier value per coordinate.
pub type StateVector = Vec<Value>;

/// Matrix and functional of a linear system, kept for reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParts {
    pub matrix: Vec<Vec<Number>>,
    pub functional: Vec<Number>,
}

impl LinearParts {
    pub fn matrix_f64(&self) -> Vec<Vec<f64>> {
        self.matrix
            .iter()
            .map(|row| row.iter().map(Number::to_f64).collect())
            .collect()
    }

    pub fn functional_f64(&self) -> Vec<f64> {
        self.functional.iter().map(Number::to_f64).collect()
    }
}

/// A system on X^d: `transition[i]` computes coordinate `i` of G from the
/// whole state, `output` is f.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianDynamicalSystem {
    carrier: CarrierKind,
    transition: Vec<Expr>,
    output: Expr,
    linear: Option<LinearParts>,
}

impl CartesianDynamicalSystem {
    pub fn new(carrier: CarrierKind, transition: Vec<Expr>, output: Expr) -> Result<Self, DynamicsError> {
        let d = transition.len();
        if d == 0 {
            return Err(DynamicsError::Shape("system dimension must be at least 1".into()));
        }
        for (i, e) in transition.iter().chain(std::iter::once(&output)).enumerate() {
            e.validate().map_err(DynamicsError::Shape)?;
            if let Some(m) = e.max_proj() {
                if m > d {
                    let what = if i < d {
                        format!("transition component {}", i + 1)
                    } else {
                        "output".to_string()
                    };
                    return Err(DynamicsError::Shape(format!(
                        "{what} reads proj({m}) but the state has dimension {d}"
                    )));
                }
            }
        }
        Ok(CartesianDynamicalSystem {
            carrier,
            transition,
            output,
            linear: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.transition.len()
    }

    pub fn carrier(&self) -> CarrierKind {
        self.carrier
    }

    pub fn transition(&self) -> &[Expr] {
        &self.transition
    }

    pub fn output(&self) -> &Expr {
        &self.output
    }

    pub fn linear(&self) -> Option<&LinearParts> {
        self.linear.as_ref()
    }

    /// Same maps read over another carrier (rational ↔ float).
    pub fn with_carrier(&self, carrier: CarrierKind) -> Self {
        CartesianDynamicalSystem {
            carrier,
            ..self.clone()
        }
    }

    /// Replaces the output map by `outer ∘ output`.
    pub fn map_output(mut self, outer: Expr) -> Self {
        self.output = Expr::compose(outer, vec![self.output]);
        self.linear = None;
        self
    }

    /// Swaps two transition coordinates. Used to build deliberately broken
    /// systems for negative controls. Out-of-range indices leave the system
    /// unchanged.
    pub fn swap_transition(&mut self, i: usize, j: usize) {
        if i < self.dim() && j < self.dim() && i != j {
            self.transition.swap(i, j);
            self.linear = None;
        }
    }

    fn check_dim(&self, y: &[Value]) -> Result<(), DynamicsError> {
        if y.len() != self.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: self.dim(),
                found: y.len(),
            });
        }
        Ok(())
    }

    /// G(y).
    pub fn step(&self, y: &[Value]) -> Result<StateVector, DynamicsError> {
        self.check_dim(y)?;
        self.transition
            .iter()
            .map(|e| e.apply(y, self.carrier).map_err(DynamicsError::from))
            .collect()
    }

    /// f(y).
    pub fn observe(&self, y: &[Value]) -> Result<Value, DynamicsError> {
        self.check_dim(y)?;
        Ok(self.output.apply(y, self.carrier)?)
    }

    /// Hidden states y₀, G(y₀), G²(y₀), ...
    pub fn states(&self, y0: StateVector) -> States<'_> {
        States {
            sys: self,
            next: Some(Ok(y0)),
        }
    }

    pub fn trajectory(&self, y0: &[Value], n: usize) -> Result<Trajectory, DynamicsError> {
        trajectory(self, y0, n)
    }
}

pub struct States<'a> {
    sys: &'a CartesianDynamicalSystem,
    next: Option<Result<StateVector, DynamicsError>>,
}

impl Iterator for States<'_> {
    type Item = Result<StateVector, DynamicsError>;

    fn next(&mut self) -> Option<Self::Item> {
        let cur = self.next.take()?;
        if let Ok(y) = &cur {
            self.next = Some(self.sys.step(y));
        }
        Some(cur)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `outputs[k] = f(Gᵏ(y₀))`.
    pub outputs: Vec<Value>,
    /// `hidden[k] = Gᵏ(y₀)`.
    pub hidden: Vec<StateVector>,
}

/// `[f(y₀), f(G(y₀)), ..., f(Gⁿ(y₀))]` together with the hidden states.
pub fn trajectory(
    sys: &CartesianDynamicalSystem,
    y0: &[Value],
    n: usize,
) -> Result<Trajectory, DynamicsError> {
    let mut outputs = Vec::with_capacity(n + 1);
    let mut hidden = Vec::with_capacity(n + 1);
    for y in sys.states(y0.to_vec()).take(n + 1) {
        let y = y?;
        outputs.push(sys.observe(&y)?);
        hidden.push(y);
    }
    Ok(Trajectory { outputs, hidden })
}

/// Lifts `s_n = g(s_{n−1}, ..., s_{n−d})` with initial values `s₀..s_{d−1}`
/// to the shift system `(x₁..x_d) ↦ (g(x₁..x_d), x₁..x_{d−1})` read by π₁.
/// The state is most-recent-first, so the trajectory emits s_{d−1}, s_d, ...
pub fn from_recurrence(
    carrier: CarrierKind,
    g: Expr,
    inits: Vec<Value>,
) -> Result<(CartesianDynamicalSystem, StateVector), DynamicsError> {
    let d = inits.len();
    if d == 0 {
        return Err(DynamicsError::EmptyInits);
    }
    let mut transition = Vec::with_capacity(d);
    transition.push(g);
    transition.extend((1..d).map(Expr::Proj));
    let sys = CartesianDynamicalSystem::new(carrier, transition, Expr::Proj(1))?;
    let mut y0 = inits;
    y0.reverse();
    Ok((sys, y0))
}

/// `x ↦ A x` observed through `x ↦ b · x`.
pub fn linear_system(
    carrier: CarrierKind,
    matrix: Vec<Vec<Number>>,
    functional: Vec<Number>,
) -> Result<CartesianDynamicalSystem, DynamicsError> {
    let d = matrix.len();
    if d == 0 {
        return Err(DynamicsError::Shape("matrix has no rows".into()));
    }
    if let Some((i, row)) = matrix.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(DynamicsError::Shape(format!(
            "matrix must be square: row {} has {} entries, expected {d}",
            i + 1,
            row.len()
        )));
    }
    if functional.len() != d {
        return Err(DynamicsError::Shape(format!(
            "functional has length {}, expected {d}",
            functional.len()
        )));
    }
    let transition = matrix
        .iter()
        .map(|row| Expr::linear(row.clone(), Number::zero()))
        .collect();
    let output = Expr::linear(functional.clone(), Number::zero());
    let mut sys = CartesianDynamicalSystem::new(carrier, transition, output)?;
    sys.linear = Some(LinearParts { matrix, functional });
    Ok(sys)
}

/// A message-passing network with fixed edge labels.
///
/// `message` has one expression per hidden coordinate over the arguments
/// `(h_v, h_w, e_vw)`; `update` has one per coordinate over `(h_v, m_v)`;
/// `readout` reads the whole state `(h_1, ..., h_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MpnnSpec {
    pub carrier: CarrierKind,
    pub hidden_dim: usize,
    pub neighbors: Vec<Vec<usize>>,
    pub label_dim: usize,
    pub edge_labels: BTreeMap<(usize, usize), Vec<Number>>,
    pub message: Vec<Expr>,
    pub update: Vec<Expr>,
    pub readout: Expr,
}

impl MpnnSpec {
    pub fn vertices(&self) -> usize {
        self.neighbors.len()
    }

    pub fn label(&self, v: usize, w: usize) -> Vec<Number> {
        self.edge_labels
            .get(&(v, w))
            .cloned()
            .unwrap_or_else(|| vec![Number::zero(); self.label_dim])
    }
}

/// The cartesian system on X^{nk} whose transition aggregates messages and
/// applies the update at every vertex, read out by `readout`.
pub fn mpnn_system(spec: &MpnnSpec) -> Result<CartesianDynamicalSystem, DynamicsError> {
    let n = spec.vertices();
    let k = spec.hidden_dim;
    let l = spec.label_dim;
    if n == 0 || k == 0 {
        return Err(DynamicsError::Shape("need at least one vertex and hidden coordinate".into()));
    }
    let check = |what: &str, exprs: &[Expr], want: usize, width: usize| {
        if exprs.len() != want {
            return Err(DynamicsError::Shape(format!(
                "{what} has {} component(s), hidden dimension is {want}",
                exprs.len()
            )));
        }
        for e in exprs {
            e.validate().map_err(DynamicsError::Shape)?;
            if let Some(m) = e.max_proj() {
                if m > width {
                    return Err(DynamicsError::Shape(format!(
                        "{what} reads proj({m}) but receives {width} argument(s)"
                    )));
                }
            }
        }
        Ok(())
    };
    check("message", &spec.message, k, 2 * k + l)?;
    check("update", &spec.update, k, 2 * k)?;
    check("readout", std::slice::from_ref(&spec.readout), 1, n * k)?;
    for ((v, w), label) in &spec.edge_labels {
        if *v >= n || *w >= n || label.len() != l {
            return Err(DynamicsError::Shape(format!(
                "edge label ({v},{w}) has length {} or names a missing vertex",
                label.len()
            )));
        }
    }

    let hidden = |v: usize| (1..=k).map(move |j| Expr::Proj(v * k + j));
    let mut transition = Vec::with_capacity(n * k);
    for v in 0..n {
        if let Some(&w) = spec.neighbors[v].iter().find(|&&w| w >= n) {
            return Err(DynamicsError::Shape(format!("vertex {v} lists missing neighbour {w}")));
        }
        let messages: Vec<Expr> = (0..k)
            .map(|i| {
                let terms: Vec<Expr> = spec.neighbors[v]
                    .iter()
                    .map(|&w| {
                        let mut args: Vec<Expr> = hidden(v).chain(hidden(w)).collect();
                        args.extend(spec.label(v, w).into_iter().map(Expr::Num));
                        Expr::compose(spec.message[i].clone(), args)
                    })
                    .collect();
                if terms.is_empty() {
                    Expr::num(0)
                } else {
                    Expr::Add(terms)
                }
            })
            .collect();
        for j in 0..k {
            let mut args: Vec<Expr> = hidden(v).collect();
            args.extend(messages.iter().cloned());
            transition.push(Expr::compose(spec.update[j].clone(), args));
        }
    }
    CartesianDynamicalSystem::new(spec.carrier, transition, spec.readout.clone())
}
