//! Scalar reverse-mode tape.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::ops::{Add, Div, Mul, Neg, Sub};

use super::Scalar;
use crate::caputo::CaputoScheme;
use crate::error::Result;

#[derive(Debug, Clone, Copy)]
struct Node {
    start: usize,
    len: usize,
}

#[derive(Debug, Default)]
struct Records {
    nodes: Vec<Node>,
    // (parent index, local partial)
    edges: Vec<(usize, f64)>,
}

/// Append-only record of a forward computation.
#[derive(Debug, Default)]
pub struct Tape {
    records: RefCell<Records>,
}

/// A value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: usize,
    value: f64,
}

impl core::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Var").field("index", &self.index).field("value", &self.value).finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// A differentiable leaf (parameter slot).
    pub fn var(&self, value: f64) -> Var<'_> {
        self.push(value, &[])
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        self.push(value, &[])
    }

    /// Total number of recorded nodes, leaves included.
    pub fn len(&self) -> usize {
        self.records.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of recorded primitive operations (nodes with parents).
    pub fn op_count(&self) -> usize {
        self.records.borrow().nodes.iter().filter(|n| n.len > 0).count()
    }

    fn push(&self, value: f64, parents: &[(usize, f64)]) -> Var<'_> {
        let mut rec = self.records.borrow_mut();
        let start = rec.edges.len();
        rec.edges.extend_from_slice(parents);
        let index = rec.nodes.len();
        rec.nodes.push(Node { start, len: parents.len() });
        Var { tape: self, index, value }
    }

    /// Fixed linear functional `Σ weights[i]·terms[i]` recorded as one node.
    pub fn weighted_sum<'t>(&'t self, terms: &[Var<'t>], weights: &[f64]) -> Var<'t> {
        assert_eq!(terms.len(), weights.len(), "weighted_sum: length mismatch");
        let value = terms.iter().zip(weights).map(|(v, w)| v.value * w).sum();
        self.linear_node(value, terms, weights)
    }

    fn linear_node<'t>(&'t self, value: f64, terms: &[Var<'t>], weights: &[f64]) -> Var<'t> {
        let parents: Vec<(usize, f64)> = terms
            .iter()
            .zip(weights)
            .map(|(v, &w)| {
                debug_assert!(core::ptr::eq(v.tape, self));
                (v.index, w)
            })
            .collect();
        self.push(value, &parents)
    }

    /// Discrete Caputo derivative at `t_r` of a recorded history `f_0..=f_r`.
    ///
    /// One node whose partials are the scheme's folded weights, so the
    /// upstream adjoint is distributed over every history evaluation.
    pub fn caputo<'t>(&'t self, scheme: &CaputoScheme, history: &[Var<'t>]) -> Result<Var<'t>> {
        let values: Vec<f64> = history.iter().map(|v| v.value).collect();
        let value = scheme.apply_history(&values)?;
        let row = scheme.row(history.len() - 1)?;
        Ok(self.linear_node(value, history, row))
    }
}

/// Adjoints of every recorded node with respect to one output.
#[derive(Debug, Clone)]
pub struct Gradients {
    adjoints: Vec<f64>,
}

impl Gradients {
    pub fn wrt(&self, v: &Var<'_>) -> f64 {
        self.adjoints[v.index]
    }
}

impl<'t> Var<'t> {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    /// Replays the tape backwards from `self`.
    pub fn backward(&self) -> Gradients {
        let rec = self.tape.records.borrow();
        let mut adjoints = vec![0.0; rec.nodes.len()];
        adjoints[self.index] = 1.0;
        for i in (0..=self.index).rev() {
            let a = adjoints[i];
            if a == 0.0 {
                continue;
            }
            let node = rec.nodes[i];
            for &(p, w) in &rec.edges[node.start..node.start + node.len] {
                adjoints[p] += w * a;
            }
        }
        Gradients { adjoints }
    }

    #[inline]
    fn unary(self, value: f64, partial: f64) -> Self {
        self.tape.push(value, &[(self.index, partial)])
    }

    #[inline]
    fn binary(self, other: Self, value: f64, da: f64, db: f64) -> Self {
        debug_assert!(core::ptr::eq(self.tape, other.tape), "vars from different tapes");
        self.tape.push(value, &[(self.index, da), (other.index, db)])
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.binary(o, self.value + o.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.binary(o, self.value - o.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.binary(o, self.value * o.value, o.value, self.value)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.value;
        self.binary(o, self.value * inv, inv, -self.value * inv * inv)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(-self.value, -1.0)
    }
}

impl<'t> Scalar for Var<'t> {
    fn constant_like(&self, c: f64) -> Self {
        self.tape.constant(c)
    }

    fn primal(&self) -> f64 {
        self.value
    }

    fn scale(self, c: f64) -> Self {
        self.unary(self.value * c, c)
    }

    fn add_const(self, c: f64) -> Self {
        self.unary(self.value + c, 1.0)
    }

    fn exp(self) -> Self {
        let e = libm::exp(self.value);
        self.unary(e, e)
    }

    fn tanh(self) -> Self {
        let s = libm::tanh(self.value);
        self.unary(s, 1.0 - s * s)
    }

    fn powi(self, n: i32) -> Self {
        let nf = n as f64;
        self.unary(libm::pow(self.value, nf), nf * libm::pow(self.value, nf - 1.0))
    }

    fn powf(self, p: f64) -> Self {
        self.unary(libm::pow(self.value, p), p * libm::pow(self.value, p - 1.0))
    }
}

/// Value and gradient of a scalar function of `params`.
///
/// `loss` receives a fresh tape and one leaf per parameter.
pub fn grad<F>(loss: F, params: &[f64]) -> (f64, Vec<f64>)
where
    F: for<'t> FnOnce(&'t Tape, &[Var<'t>]) -> Var<'t>,
{
    let tape = Tape::new();
    let leaves: Vec<Var<'_>> = params.iter().map(|&p| tape.var(p)).collect();
    let out = loss(&tape, &leaves);
    let g = out.backward();
    let grads = leaves.iter().map(|v| g.wrt(v)).collect();
    (out.value, grads)
}
