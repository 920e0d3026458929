//! Tensor values and the backward graph.
//!
//! A [`Tensor`] is an immutable, reference-counted value. Tracked tensors
//! remember the operation that produced them; [`Tensor::backward`] walks that
//! record in reverse topological order and deposits gradients into every
//! tracked tensor reachable from the loss. Gradients accumulate across calls
//! until [`Tensor::zero_grad`] is invoked.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::error::{shape_err, NdError, Result};
use crate::scalar::Scalar;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Maps the gradient of an op's output to gradients of its parents
/// (`None` for parents that need none).
pub(crate) type BackwardFn<T> = Box<dyn Fn(&[T]) -> Vec<Option<Vec<T>>> + Send + Sync>;

pub(crate) struct Node<T: Scalar> {
    pub(crate) op: &'static str,
    pub(crate) parents: Vec<Tensor<T>>,
    pub(crate) backward: BackwardFn<T>,
}

struct Inner<T: Scalar> {
    id: u64,
    shape: Vec<usize>,
    data: Arc<Vec<T>>,
    tracked: bool,
    node: Option<Node<T>>,
    grad: Mutex<Option<Vec<T>>>,
}

pub struct Tensor<T: Scalar> {
    inner: Arc<Inner<T>>,
}

impl<T: Scalar> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Self {
            inner: Arc::clone(&self.inner),
        }
    }
}

impl<T: Scalar> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.inner.shape)
            .field("tracked", &self.inner.tracked)
            .field("op", &self.inner.node.as_ref().map(|n| n.op))
            .finish()
    }
}

pub fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl<T: Scalar> Tensor<T> {
    fn build(shape: Vec<usize>, data: Arc<Vec<T>>, tracked: bool, node: Option<Node<T>>) -> Self {
        Self {
            inner: Arc::new(Inner {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape,
                data,
                tracked,
                node,
                grad: Mutex::new(None),
            }),
        }
    }

    /// Untracked constant.
    pub fn new(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if numel(shape) != data.len() {
            return Err(shape_err(
                "tensor",
                format!("shape {shape:?} needs {} values, got {}", numel(shape), data.len()),
            ));
        }
        Ok(Self::build(shape.to_vec(), Arc::new(data), false, None))
    }

    /// Tracked leaf (a trainable parameter or an input under differentiation).
    pub fn leaf(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let t = Self::new(shape, data)?;
        Ok(Self::build(t.inner.shape.clone(), Arc::clone(&t.inner.data), true, None))
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::build(shape.to_vec(), Arc::new(vec![T::zero(); numel(shape)]), false, None)
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Self::build(shape.to_vec(), Arc::new(vec![value; numel(shape)]), false, None)
    }

    pub fn scalar(value: T) -> Self {
        Self::build(Vec::new(), Arc::new(vec![value]), false, None)
    }

    pub fn from_f64(shape: &[usize], data: &[f64]) -> Result<Self> {
        Self::new(shape, data.iter().map(|&v| T::lit(v)).collect())
    }

    /// Output of an op. Tracked (with a graph node) iff any parent is tracked.
    pub(crate) fn from_op(
        op: &'static str,
        shape: Vec<usize>,
        data: Vec<T>,
        parents: Vec<Tensor<T>>,
        backward: impl Fn(&[T]) -> Vec<Option<Vec<T>>> + Send + Sync + 'static,
    ) -> Self {
        debug_assert_eq!(numel(&shape), data.len());
        let tracked = parents.iter().any(Tensor::is_tracked);
        let node = tracked.then(|| Node {
            op,
            parents,
            backward: Box::new(backward),
        });
        Self::build(shape, Arc::new(data), tracked, node)
    }

    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn rank(&self) -> usize {
        self.inner.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.inner.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.inner.data
    }

    pub(crate) fn data_arc(&self) -> Arc<Vec<T>> {
        Arc::clone(&self.inner.data)
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.inner.data.to_vec()
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.inner
            .data
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> T {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape());
        self.inner.data[0]
    }

    pub fn is_tracked(&self) -> bool {
        self.inner.tracked
    }

    pub fn op_name(&self) -> Option<&'static str> {
        self.inner.node.as_ref().map(|n| n.op)
    }

    /// Same values, no graph, no tracking. Shares storage.
    pub fn detach(&self) -> Self {
        Self::build(self.inner.shape.clone(), self.data_arc(), false, None)
    }

    /// Same values as a fresh tracked leaf. Shares storage.
    pub fn as_leaf(&self) -> Self {
        Self::build(self.inner.shape.clone(), self.data_arc(), true, None)
    }

    pub fn grad(&self) -> Option<Vec<T>> {
        self.inner.grad.lock().expect("grad lock poisoned").clone()
    }

    pub fn zero_grad(&self) {
        *self.inner.grad.lock().expect("grad lock poisoned") = None;
    }

    fn accumulate_grad(&self, g: &[T]) {
        let mut slot = self.inner.grad.lock().expect("grad lock poisoned");
        match slot.as_mut() {
            Some(existing) => {
                for (e, v) in existing.iter_mut().zip(g) {
                    *e += *v;
                }
            }
            None => *slot = Some(g.to_vec()),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.inner.data.iter().all(|v| v.is_finite())
    }

    /// Reverse-mode sweep from a scalar loss. Every tracked tensor reachable
    /// from `self` receives (accumulates) its gradient.
    pub fn backward(&self) -> Result<()> {
        if self.numel() != 1 {
            return Err(NdError::NotScalar(self.shape().to_vec()));
        }
        if !self.is_tracked() {
            return Err(NdError::Untracked);
        }

        // Iterative post-order DFS over tracked tensors.
        let mut order: Vec<Tensor<T>> = Vec::new();
        let mut visited: HashSet<u64> = HashSet::new();
        let mut stack: Vec<(Tensor<T>, bool)> = vec![(self.clone(), false)];
        while let Some((t, expanded)) = stack.pop() {
            if expanded {
                order.push(t);
                continue;
            }
            if !visited.insert(t.id()) {
                continue;
            }
            stack.push((t.clone(), true));
            if let Some(node) = &t.inner.node {
                for p in &node.parents {
                    if p.is_tracked() && !visited.contains(&p.id()) {
                        stack.push((p.clone(), false));
                    }
                }
            }
        }

        let mut pending: HashMap<u64, Vec<T>> = HashMap::new();
        pending.insert(self.id(), vec![T::one()]);
        for t in order.iter().rev() {
            let Some(g) = pending.remove(&t.id()) else {
                continue;
            };
            t.accumulate_grad(&g);
            let Some(node) = &t.inner.node else {
                continue;
            };
            let parent_grads = (node.backward)(&g);
            debug_assert_eq!(parent_grads.len(), node.parents.len());
            for (p, pg) in node.parents.iter().zip(parent_grads) {
                let Some(pg) = pg else { continue };
                if !p.is_tracked() {
                    continue;
                }
                debug_assert_eq!(pg.len(), p.numel(), "grad size for {:?}", node.op);
                match pending.get_mut(&p.id()) {
                    Some(acc) => {
                        for (a, v) in acc.iter_mut().zip(&pg) {
                            *a += *v;
                        }
                    }
                    None => {
                        pending.insert(p.id(), pg);
                    }
                }
            }
        }
        Ok(())
    }

    /// View with a new shape (same element count).
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        if numel(shape) != self.numel() {
            return Err(shape_err(
                "reshape",
                format!("{:?} -> {:?}", self.shape(), shape),
            ));
        }
        let data = self.to_vec();
        Ok(Self::from_op("reshape", shape.to_vec(), data, vec![self.clone()], |g| {
            vec![Some(g.to_vec())]
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks_element_count() {
        assert!(Tensor::<f64>::new(&[2, 3], vec![0.0; 5]).is_err());
        let t = Tensor::<f64>::new(&[2, 3], vec![0.0; 6]).unwrap();
        assert_eq!(t.numel(), 6);
        assert!(!t.is_tracked());
    }

    #[test]
    fn backward_on_non_scalar_is_rejected() {
        let x = Tensor::<f64>::leaf(&[2], vec![1.0, 2.0]).unwrap();
        assert!(matches!(x.backward(), Err(NdError::NotScalar(_))));
    }

    #[test]
    fn backward_on_constant_graph_is_rejected() {
        let x = Tensor::<f64>::scalar(3.0);
        assert!(matches!(x.backward(), Err(NdError::Untracked)));
    }

    #[test]
    fn detach_shares_values_but_drops_tracking() {
        let x = Tensor::<f32>::leaf(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        let d = x.detach();
        assert_eq!(d.data(), x.data());
        assert!(!d.is_tracked());
    }
}
