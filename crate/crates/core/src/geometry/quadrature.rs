use super::Point;
use crate::error::{Error, Result};
use crate::numerics::pairwise_sum;

#[derive(Clone, Copy, Debug)]
pub struct QuadNode<const D: usize> {
    pub point: Point<D>,
    /// Full weight: cell measure × partition weight × √|h|.
    pub weight: f64,
    /// Squared partition weight `α_j²` of the owning chart at this node.
    pub pou: f64,
    pub sqrt_det: f64,
}

#[derive(Clone, Debug)]
pub struct Quadrature<const D: usize> {
    pub nodes: Vec<QuadNode<D>>,
    pub n_per_axis: usize,
    pub spacing: f64,
}

impl<const D: usize> Quadrature<D> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ f dV`. A non-finite node value is reported with its chart and index.
    pub fn integrate<F: Fn(&Point<D>) -> f64>(&self, f: F) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            let v = f(&n.point);
            if !v.is_finite() {
                return Err(Error::NonFinite { chart: n.point.chart, node: i, value: v });
            }
            terms.push(v * n.weight);
        }
        Ok(pairwise_sum(&terms))
    }

    /// `∫ f dV` from values already sampled at the nodes, in node order.
    pub fn integrate_values(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.nodes.len() {
            return Err(Error::Usage(format!(
                "expected {} nodal values, got {}",
                self.nodes.len(),
                values.len()
            )));
        }
        self.integrate_indexed(|i| values[i])
    }

    pub fn integrate_indexed<F: Fn(usize) -> f64>(&self, f: F) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            let v = f(i);
            if !v.is_finite() {
                return Err(Error::NonFinite { chart: n.point.chart, node: i, value: v });
            }
            terms.push(v * n.weight);
        }
        Ok(pairwise_sum(&terms))
    }

    pub fn volume(&self) -> f64 {
        let w: Vec<f64> = self.nodes.iter().map(|n| n.weight).collect();
        pairwise_sum(&w)
    }
}
