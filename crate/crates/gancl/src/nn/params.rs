//! Flat parameter storage shared by every per-parameter quantity.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::network::LayerSpec;

/// Whether a layout entry covers a layer's weight matrix or its bias vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Weight,
    Bias,
}

/// One contiguous span of the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub layer: usize,
    pub kind: ParamKind,
    pub offset: usize,
    pub len: usize,
}

/// Address map from (layer, weight/bias) to spans of the flat vector.
///
/// Weight matrices are row-major `(output_width, input_width)`; each layer
/// contributes its weights followed by its biases, layers in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    entries: Vec<LayoutEntry>,
    total: usize,
}

impl ParamLayout {
    pub fn for_layers(specs: &[LayerSpec]) -> Self {
        let mut entries = Vec::with_capacity(specs.len() * 2);
        let mut offset = 0;
        for (layer, spec) in specs.iter().enumerate() {
            let w_len = spec.input_width * spec.output_width;
            entries.push(LayoutEntry { layer, kind: ParamKind::Weight, offset, len: w_len });
            offset += w_len;
            entries.push(LayoutEntry { layer, kind: ParamKind::Bias, offset, len: spec.output_width });
            offset += spec.output_width;
        }
        ParamLayout { entries, total: offset }
    }

    pub fn total_len(&self) -> usize {
        self.total
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    /// Span of the given layer's weights or biases.
    pub fn span(&self, layer: usize, kind: ParamKind) -> Option<(usize, usize)> {
        self.entries
            .iter()
            .find(|e| e.layer == layer && e.kind == kind)
            .map(|e| (e.offset, e.len))
    }
}

/// Contiguous `f64` parameter vector plus its address map.
#[derive(Debug, Clone)]
pub struct FlatParams {
    values: Vec<f64>,
    layout: Arc<ParamLayout>,
}

impl FlatParams {
    pub fn zeros(layout: Arc<ParamLayout>) -> Self {
        let values = vec![0.0; layout.total_len()];
        FlatParams { values, layout }
    }

    /// Wraps an existing value vector, validating length and finiteness.
    pub fn from_values(layout: Arc<ParamLayout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.total_len() {
            return Err(Error::Config(format!(
                "parameter vector has length {} but layout requires {}",
                values.len(),
                layout.total_len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite parameter at index {i}")));
        }
        Ok(FlatParams { values, layout })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn layout(&self) -> &Arc<ParamLayout> {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Slice covering one layer's weights or biases.
    pub fn slice(&self, layer: usize, kind: ParamKind) -> &[f64] {
        let (offset, len) = self
            .layout
            .span(layer, kind)
            .expect("layer/kind not present in layout");
        &self.values[offset..offset + len]
    }

    pub fn slice_mut(&mut self, layer: usize, kind: ParamKind) -> &mut [f64] {
        let (offset, len) = self
            .layout
            .span(layer, kind)
            .expect("layer/kind not present in layout");
        &mut self.values[offset..offset + len]
    }
}

/// Gradient with the same length and layout as its associated [`FlatParams`].
#[derive(Debug, Clone)]
pub struct GradientVector {
    values: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        GradientVector { values: vec![0.0; len] }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        GradientVector { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Index of the first non-finite component, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }
}
