//! Binary quadratic models in spin and binary form.
//!
//! `H(x) = Σ h_i x_i + Σ_{i<j} J_ij x_i x_j + offset`, with `x_i ∈ {-1, +1}`
//! for [`IsingModel`] and `x_i ∈ {0, 1}` for [`QuboModel`]. The two forms
//! are distinct types so that spin-only operations cannot be applied to a
//! QUBO by accident.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::marker::PhantomData;

use crate::error::{Error, Result};

pub type Var = u32;

/// Normalized `(lo, hi)` key of a quadratic term.
pub fn edge(u: Var, v: Var) -> (Var, Var) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

pub trait Vartype: Copy + core::fmt::Debug + PartialEq + 'static {
    const VALUES: [i8; 2];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Spin;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Binary;

impl Vartype for Spin {
    const VALUES: [i8; 2] = [-1, 1];
}

impl Vartype for Binary {
    const VALUES: [i8; 2] = [0, 1];
}

/// Assignment of values to variables.
pub type Assignment = BTreeMap<Var, i8>;

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T: Vartype> {
    linear: BTreeMap<Var, f64>,
    quadratic: BTreeMap<(Var, Var), f64>,
    offset: f64,
    _vartype: PhantomData<T>,
}

pub type IsingModel = Model<Spin>;
pub type QuboModel = Model<Binary>;

impl<T: Vartype> Default for Model<T> {
    fn default() -> Self {
        Self {
            linear: BTreeMap::new(),
            quadratic: BTreeMap::new(),
            offset: 0.0,
            _vartype: PhantomData,
        }
    }
}

impl<T: Vartype> Model<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, v: Var) {
        self.linear.entry(v).or_insert(0.0);
    }

    pub fn add_linear(&mut self, v: Var, bias: f64) {
        *self.linear.entry(v).or_insert(0.0) += bias;
    }

    pub fn set_linear(&mut self, v: Var, bias: f64) {
        self.linear.insert(v, bias);
    }

    /// Accumulates onto the `(u, v)` coupler. Self-loops are rejected.
    pub fn add_quadratic(&mut self, u: Var, v: Var, bias: f64) -> Result<()> {
        if u == v {
            return Err(Error::InvalidInput(alloc::format!("self-loop on variable {u}")));
        }
        self.add_variable(u);
        self.add_variable(v);
        *self.quadratic.entry(edge(u, v)).or_insert(0.0) += bias;
        Ok(())
    }

    pub fn set_quadratic(&mut self, u: Var, v: Var, bias: f64) -> Result<()> {
        if u == v {
            return Err(Error::InvalidInput(alloc::format!("self-loop on variable {u}")));
        }
        self.add_variable(u);
        self.add_variable(v);
        self.quadratic.insert(edge(u, v), bias);
        Ok(())
    }

    pub fn add_offset(&mut self, c: f64) {
        self.offset += c;
    }

    pub fn set_offset(&mut self, c: f64) {
        self.offset = c;
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn linear(&self, v: Var) -> Option<f64> {
        self.linear.get(&v).copied()
    }

    pub fn quadratic(&self, u: Var, v: Var) -> Option<f64> {
        self.quadratic.get(&edge(u, v)).copied()
    }

    pub fn linear_terms(&self) -> &BTreeMap<Var, f64> {
        &self.linear
    }

    pub fn quadratic_terms(&self) -> &BTreeMap<(Var, Var), f64> {
        &self.quadratic
    }

    pub(crate) fn linear_mut(&mut self) -> impl Iterator<Item = (&Var, &mut f64)> {
        self.linear.iter_mut()
    }

    pub(crate) fn quadratic_mut(&mut self) -> impl Iterator<Item = (&(Var, Var), &mut f64)> {
        self.quadratic.iter_mut()
    }

    /// Variables in ascending order.
    pub fn variables(&self) -> impl ExactSizeIterator<Item = Var> + '_ {
        self.linear.keys().copied()
    }

    pub fn num_variables(&self) -> usize {
        self.linear.len()
    }

    pub fn contains(&self, v: Var) -> bool {
        self.linear.contains_key(&v)
    }

    /// Evaluates the model. Every variable must be assigned.
    pub fn energy(&self, assignment: &Assignment) -> Result<f64> {
        let value = |v: Var| assignment.get(&v).copied().ok_or(Error::MissingVariable(v));
        let mut e = self.offset;
        for (&v, &h) in &self.linear {
            e += h * f64::from(value(v)?);
        }
        for (&(u, v), &j) in &self.quadratic {
            e += j * f64::from(value(u)?) * f64::from(value(v)?);
        }
        Ok(e)
    }

    /// Evaluates the model on values listed in [`Model::variables`] order.
    pub fn energy_ordered(&self, values: &[i8]) -> f64 {
        debug_assert_eq!(values.len(), self.linear.len());
        self.compile().energy(values)
    }

    pub fn compile(&self) -> CompiledModel {
        CompiledModel::new(self)
    }

    /// Largest absolute linear and quadratic coefficients.
    pub fn max_abs_biases(&self) -> (f64, f64) {
        let h = self.linear.values().fold(0.0_f64, |m, b| m.max(b.abs()));
        let j = self.quadratic.values().fold(0.0_f64, |m, b| m.max(b.abs()));
        (h, j)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.linear.values_mut().for_each(|b| *b *= factor);
        out.quadratic.values_mut().for_each(|b| *b *= factor);
        out.offset *= factor;
        out
    }
}

/// Dense form of a model for hot loops: variables are renumbered
/// `0..n` in ascending id order and couplers stored as adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledModel {
    pub variables: Vec<Var>,
    pub linear: Vec<f64>,
    pub adjacency: Vec<Vec<(usize, f64)>>,
    pub edges: Vec<(usize, usize, f64)>,
    pub offset: f64,
}

impl CompiledModel {
    fn new<T: Vartype>(model: &Model<T>) -> Self {
        let variables: Vec<Var> = model.variables().collect();
        let index = |v: Var| variables.binary_search(&v).expect("coupler variable is registered");
        let linear = model.linear.values().copied().collect();
        let mut adjacency = alloc::vec![Vec::new(); variables.len()];
        let mut edges = Vec::with_capacity(model.quadratic.len());
        for (&(u, v), &j) in &model.quadratic {
            let (a, b) = (index(u), index(v));
            adjacency[a].push((b, j));
            adjacency[b].push((a, j));
            edges.push((a, b, j));
        }
        Self {
            variables,
            linear,
            adjacency,
            edges,
            offset: model.offset,
        }
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn energy(&self, values: &[i8]) -> f64 {
        let mut e = self.offset;
        for (h, &x) in self.linear.iter().zip(values) {
            e += h * f64::from(x);
        }
        for &(a, b, j) in &self.edges {
            e += j * f64::from(values[a]) * f64::from(values[b]);
        }
        e
    }

    /// `h_i + Σ_j J_ij x_j`.
    pub fn local_field(&self, i: usize, values: &[i8]) -> f64 {
        self.adjacency[i]
            .iter()
            .fold(self.linear[i], |acc, &(j, w)| acc + w * f64::from(values[j]))
    }
}

/// Substitute `x = (s + 1) / 2`; values agree pointwise.
pub fn qubo_to_ising(q: &QuboModel) -> IsingModel {
    let mut out = IsingModel::new();
    out.set_offset(q.offset());
    for (&v, &a) in q.linear_terms() {
        out.add_linear(v, a / 2.0);
        out.add_offset(a / 2.0);
    }
    for (&(u, v), &b) in q.quadratic_terms() {
        out.add_quadratic(u, v, b / 4.0).expect("normalized edge");
        out.add_linear(u, b / 4.0);
        out.add_linear(v, b / 4.0);
        out.add_offset(b / 4.0);
    }
    out
}

/// Substitute `s = 2x - 1`; values agree pointwise.
pub fn ising_to_qubo(i: &IsingModel) -> QuboModel {
    let mut out = QuboModel::new();
    out.set_offset(i.offset());
    for (&v, &h) in i.linear_terms() {
        out.add_linear(v, 2.0 * h);
        out.add_offset(-h);
    }
    for (&(u, v), &j) in i.quadratic_terms() {
        out.add_quadratic(u, v, 4.0 * j).expect("normalized edge");
        out.add_linear(u, -2.0 * j);
        out.add_linear(v, -2.0 * j);
        out.add_offset(j);
    }
    out
}
