use crate::checkpoint::Record;
use crate::error::{shape_err, NdError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Ordered, named collection of trainable leaves.
#[derive(Debug, Clone, Default)]
pub struct ParamSet<T: Scalar> {
    entries: Vec<(String, Tensor<T>)>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    /// Registers a parameter and returns its index.
    pub fn push(&mut self, name: impl Into<String>, shape: &[usize], values: Vec<T>) -> Result<usize> {
        let name = name.into();
        if self.index_of(&name).is_some() {
            return Err(NdError::InvalidArgument(format!("duplicate parameter {name}")));
        }
        self.entries.push((name, Tensor::leaf(shape, values)?));
        Ok(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }

    pub fn name(&self, i: usize) -> &str {
        &self.entries[i].0
    }

    pub fn tensor(&self, i: usize) -> &Tensor<T> {
        &self.entries[i].1
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.index_of(name).map(|i| &self.entries[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn num_values(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    /// Replaces a parameter's values with a fresh tracked leaf.
    pub fn set(&mut self, i: usize, values: Vec<T>) -> Result<()> {
        let shape = self.entries[i].1.shape().to_vec();
        self.entries[i].1 = Tensor::leaf(&shape, values)?;
        Ok(())
    }

    pub fn set_by_name(&mut self, name: &str, values: Vec<T>) -> Result<()> {
        let i = self
            .index_of(name)
            .ok_or_else(|| NdError::InvalidArgument(format!("unknown parameter {name}")))?;
        self.set(i, values)
    }

    /// Current gradients; parameters that received none contribute zeros.
    pub fn grads(&self) -> Vec<Vec<T>> {
        self.entries
            .iter()
            .map(|(_, t)| t.grad().unwrap_or_else(|| vec![T::zero(); t.numel()]))
            .collect()
    }

    pub fn zero_grad(&self) {
        for (_, t) in &self.entries {
            t.zero_grad();
        }
    }

    /// Untracked copies, for using a network as a frozen function.
    pub fn frozen(&self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), t.detach()))
                .collect(),
        }
    }

    pub fn to_records(&self, prefix: &str) -> Vec<Record> {
        self.entries
            .iter()
            .map(|(n, t)| Record::new(format!("{prefix}{n}"), t.shape().to_vec(), t.to_f64_vec()))
            .collect()
    }

    /// Loads every parameter from `records` (names prefixed by `prefix`);
    /// shapes must match exactly.
    pub fn load_records(&mut self, prefix: &str, records: &[Record]) -> Result<()> {
        for i in 0..self.entries.len() {
            let full = format!("{prefix}{}", self.entries[i].0);
            let rec = records
                .iter()
                .find(|r| r.name == full)
                .ok_or_else(|| NdError::Format(format!("missing parameter record {full}")))?;
            if rec.shape != self.entries[i].1.shape() {
                return Err(shape_err(
                    "load_records",
                    format!("{full}: stored {:?}, expected {:?}", rec.shape, self.entries[i].1.shape()),
                ));
            }
            let values = rec.values.iter().map(|&v| T::lit(v)).collect();
            self.set(i, values)?;
        }
        Ok(())
    }
}
