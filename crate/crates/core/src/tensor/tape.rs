use std::collections::BTreeMap;

use super::{numel, Result, Tensor, TensorError};

/// Epsilon added to the variance inside layer normalization.
pub const LAYER_NORM_EPS: f64 = 1e-5;
/// ELU slope parameter for negative inputs.
pub const ELU_ALPHA: f64 = 1.0;

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Constant,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Concat { inputs: Vec<Var>, axis: usize },
    Slice { input: Var, axis: usize, start: usize },
    Elu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Softmax(Var),
    LayerNorm { input: Var, inv_std: Vec<f64> },
    Dropout { input: Var, mask: Vec<f64> },
    Embedding { table: Var, indices: Vec<usize> },
    Transpose(Var),
    Reshape(Var),
    Sum(Var),
    Mean(Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    name: Option<String>,
}

/// Linear record of primitive applications, in topological order by
/// construction: a node can only reference nodes created before it.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], indexed by node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
    names: Vec<(String, usize)>,
}

impl Gradients {
    /// Gradient with respect to `var`; zeros when `var` does not influence the loss.
    pub fn wrt(&self, var: Var) -> Tensor {
        let shape = self.shapes[var.0].clone();
        match &self.grads[var.0] {
            Some(g) => Tensor::raw(shape, g.clone()),
            None => Tensor::zeros(&shape),
        }
    }

    /// Gradients of every named leaf, keyed by name.
    pub fn named(&self) -> BTreeMap<String, Tensor> {
        self.names
            .iter()
            .map(|(name, idx)| (name.clone(), self.wrt(Var(*idx))))
            .collect()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Registers a differentiable input under `name`.
    pub fn leaf(&mut self, name: impl Into<String>, value: Tensor) -> Result<Var> {
        value.check_finite("leaf")?;
        Ok(self.push_named(value, Op::Leaf, true, Some(name.into())))
    }

    /// Registers a non-differentiable input.
    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        value.check_finite("constant")?;
        Ok(self.push_named(value, Op::Constant, false, None))
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn shape(&self, var: Var) -> &[usize] {
        self.nodes[var.0].value.shape()
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    fn push_named(&mut self, value: Tensor, op: Op, requires_grad: bool, name: Option<String>) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            name,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, op_name: &'static str, value: Tensor, op: Op, inputs: &[Var]) -> Result<Var> {
        value.check_finite(op_name)?;
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        Ok(self.push_named(value, op, requires_grad, None))
    }

    fn shape_err(&self, op: &'static str, vars: &[Var]) -> TensorError {
        TensorError::Shape {
            op,
            shapes: vars.iter().map(|v| self.shape(*v).to_vec()).collect(),
        }
    }

    // ---- primitives ----------------------------------------------------

    /// `[m, k] × [k, n] → [m, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(self.shape_err("matmul", &[a, b]));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let out = matmul_raw(self.value(a).data(), self.value(b).data(), m, k, n);
        self.push("matmul", Tensor::raw(vec![m, n], out), Op::MatMul(a, b), &[a, b])
    }

    /// Elementwise sum with trailing-dimension broadcasting.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.broadcast_binary("add", a, b, |x, y| x + y)?;
        self.push("add", value, Op::Add(a, b), &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.broadcast_binary("sub", a, b, |x, y| x - y)?;
        self.push("sub", value, Op::Sub(a, b), &[a, b])
    }

    /// Elementwise (Hadamard) product with broadcasting.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.broadcast_binary("mul", a, b, |x, y| x * y)?;
        self.push("mul", value, Op::Mul(a, b), &[a, b])
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        let t = self.value(a);
        let value = Tensor::raw(t.shape().to_vec(), t.data().iter().map(|x| x * factor).collect());
        self.push("scale", value, Op::Scale(a, factor), &[a])
    }

    /// Concatenation along `axis`; all other dimensions must agree.
    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var> {
        let first = inputs.first().ok_or(TensorError::Invalid {
            op: "concat",
            msg: "no inputs".into(),
        })?;
        let base = self.shape(*first).to_vec();
        if axis >= base.len() {
            return Err(self.shape_err("concat", inputs));
        }
        let mut total = 0;
        for v in inputs {
            let s = self.shape(*v);
            let compatible = s.len() == base.len()
                && s.iter().zip(&base).enumerate().all(|(d, (x, y))| d == axis || x == y);
            if !compatible {
                return Err(self.shape_err("concat", inputs));
            }
            total += s[axis];
        }
        let outer: usize = base[..axis].iter().product();
        let inner: usize = base[axis + 1..].iter().product();
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for v in inputs {
                let t = self.value(*v);
                let chunk = t.shape()[axis] * inner;
                data.extend_from_slice(&t.data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        self.push(
            "concat",
            Tensor::raw(shape, data),
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
            inputs,
        )
    }

    /// `len` entries along `axis` starting at `start`.
    pub fn slice(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let s = self.shape(a).to_vec();
        if axis >= s.len() || len == 0 || start + len > s[axis] {
            return Err(TensorError::Invalid {
                op: "slice",
                msg: format!("range {start}..{} on axis {axis} of shape {s:?}", start + len),
            });
        }
        let outer: usize = s[..axis].iter().product();
        let inner: usize = s[axis + 1..].iter().product();
        let src = self.value(a).data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * s[axis] + start) * inner;
            data.extend_from_slice(&src[base..base + len * inner]);
        }
        let mut shape = s;
        shape[axis] = len;
        self.push(
            "slice",
            Tensor::raw(shape, data),
            Op::Slice { input: a, axis, start },
            &[a],
        )
    }

    pub fn elu(&mut self, a: Var) -> Result<Var> {
        let value = self.map(a, |x| if x > 0.0 { x } else { ELU_ALPHA * x.exp_m1() });
        self.push("elu", value, Op::Elu(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let value = self.map(a, sigmoid);
        self.push("sigmoid", value, Op::Sigmoid(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let value = self.map(a, f64::tanh);
        self.push("tanh", value, Op::Tanh(a), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let value = self.map(a, |x| x.max(0.0));
        self.push("relu", value, Op::Relu(a), &[a])
    }

    /// Softmax over the last dimension.
    pub fn softmax_lastdim(&mut self, a: Var) -> Result<Var> {
        self.softmax_impl(a, None)
    }

    /// Softmax over the last dimension where entries with `keep[i] == false`
    /// are excluded and come out as exactly zero.
    pub fn masked_softmax_lastdim(&mut self, a: Var, keep: &[bool]) -> Result<Var> {
        if keep.len() != self.value(a).numel() {
            return Err(TensorError::Invalid {
                op: "masked_softmax",
                msg: format!("mask of {} entries for shape {:?}", keep.len(), self.shape(a)),
            });
        }
        self.softmax_impl(a, Some(keep))
    }

    fn softmax_impl(&mut self, a: Var, keep: Option<&[bool]>) -> Result<Var> {
        let t = self.value(a);
        let cols = t.cols();
        let mut out = vec![0.0; t.numel()];
        for (r, (row, dst)) in t.data().chunks(cols).zip(out.chunks_mut(cols)).enumerate() {
            let kept = |c: usize| keep.is_none_or(|k| k[r * cols + c]);
            let max = (0..cols)
                .filter(|&c| kept(c))
                .map(|c| row[c])
                .fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                return Err(TensorError::Invalid {
                    op: "masked_softmax",
                    msg: format!("row {r} has every entry masked"),
                });
            }
            let mut total = 0.0;
            for c in (0..cols).filter(|&c| kept(c)) {
                dst[c] = (row[c] - max).exp();
                total += dst[c];
            }
            for v in dst.iter_mut() {
                *v /= total;
            }
        }
        let value = Tensor::raw(t.shape().to_vec(), out);
        self.push("softmax", value, Op::Softmax(a), &[a])
    }

    /// Normalizes each row of the last dimension to zero mean and unit
    /// variance (no affine transform).
    pub fn layer_norm_lastdim(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        let cols = t.cols();
        let mut out = vec![0.0; t.numel()];
        let mut inv_std = Vec::with_capacity(t.rows());
        for (row, dst) in t.data().chunks(cols).zip(out.chunks_mut(cols)) {
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / cols as f64;
            let s = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            for (d, x) in dst.iter_mut().zip(row) {
                *d = (x - mean) * s;
            }
            inv_std.push(s);
        }
        let value = Tensor::raw(t.shape().to_vec(), out);
        self.push("layer_norm", value, Op::LayerNorm { input: a, inv_std }, &[a])
    }

    /// Multiplies by a caller-drawn mask (already scaled by the inverse keep
    /// probability when used as inverted dropout).
    pub fn dropout_with_mask(&mut self, a: Var, mask: &Tensor) -> Result<Var> {
        if mask.shape() != self.shape(a) {
            return Err(TensorError::Shape {
                op: "dropout",
                shapes: vec![self.shape(a).to_vec(), mask.shape().to_vec()],
            });
        }
        mask.check_finite("dropout")?;
        let t = self.value(a);
        let data = t.data().iter().zip(mask.data()).map(|(x, m)| x * m).collect();
        let value = Tensor::raw(t.shape().to_vec(), data);
        let mask = mask.data().to_vec();
        self.push("dropout", value, Op::Dropout { input: a, mask }, &[a])
    }

    /// Gathers rows of a `[cardinality, width]` table → `[indices.len(), width]`.
    pub fn embedding_lookup(&mut self, table: Var, indices: &[usize]) -> Result<Var> {
        let s = self.shape(table).to_vec();
        if s.len() != 2 || indices.is_empty() {
            return Err(self.shape_err("embedding", &[table]));
        }
        if let Some(bad) = indices.iter().find(|&&i| i >= s[0]) {
            return Err(TensorError::Invalid {
                op: "embedding",
                msg: format!("index {bad} outside cardinality {}", s[0]),
            });
        }
        let src = self.value(table).data();
        let mut data = Vec::with_capacity(indices.len() * s[1]);
        for &i in indices {
            data.extend_from_slice(&src[i * s[1]..(i + 1) * s[1]]);
        }
        let value = Tensor::raw(vec![indices.len(), s[1]], data);
        let op = Op::Embedding {
            table,
            indices: indices.to_vec(),
        };
        self.push("embedding", value, op, &[table])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a).to_vec();
        if s.len() != 2 {
            return Err(self.shape_err("transpose", &[a]));
        }
        let data = transpose_raw(self.value(a).data(), s[0], s[1]);
        self.push("transpose", Tensor::raw(vec![s[1], s[0]], data), Op::Transpose(a), &[a])
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(a).reshape(shape)?;
        self.push("reshape", value, Op::Reshape(a), &[a])
    }

    /// Sum of all entries → shape `[1]`.
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let total = self.value(a).data().iter().sum();
        self.push("sum", Tensor::scalar(total), Op::Sum(a), &[a])
    }

    /// Mean of all entries → shape `[1]`.
    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        let m = t.data().iter().sum::<f64>() / t.numel() as f64;
        self.push("mean", Tensor::scalar(m), Op::Mean(a), &[a])
    }

    fn map(&self, a: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let t = self.value(a);
        Tensor::raw(t.shape().to_vec(), t.data().iter().map(|&x| f(x)).collect())
    }

    fn broadcast_binary(
        &self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        let shape = broadcast_shape(ta.shape(), tb.shape()).ok_or_else(|| self.shape_err(op, &[a, b]))?;
        let data = if ta.shape() == tb.shape() {
            ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect()
        } else {
            let ma = broadcast_map(ta.shape(), &shape);
            let mb = broadcast_map(tb.shape(), &shape);
            ma.iter()
                .zip(&mb)
                .map(|(&i, &j)| f(ta.data()[i], tb.data()[j]))
                .collect()
        };
        Ok(Tensor::raw(shape, data))
    }

    // ---- reverse pass --------------------------------------------------

    /// Reverse-mode sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let node = &self.nodes[loss.0];
        if node.value.numel() != 1 {
            return Err(TensorError::NonScalarLoss(node.value.shape().to_vec()));
        }
        if !node.requires_grad {
            return Err(TensorError::DetachedLoss);
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        grads.resize(self.nodes.len(), None);
        let names = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.name.as_ref().map(|s| (s.clone(), i)))
            .collect();
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
            names,
        })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let y = node.value.data();
        match &node.op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                if self.requires_grad(*a) {
                    let bt = transpose_raw(tb.data(), k, n);
                    let ga = matmul_raw(g, &bt, m, n, k);
                    self.accumulate(grads, *a, &ga);
                }
                if self.requires_grad(*b) {
                    let at = transpose_raw(ta.data(), m, k);
                    let gb = matmul_raw(&at, g, k, m, n);
                    self.accumulate(grads, *b, &gb);
                }
            }
            Op::Add(a, b) => {
                self.accumulate_broadcast(grads, *a, node, g, |_| 1.0, None);
                self.accumulate_broadcast(grads, *b, node, g, |_| 1.0, None);
            }
            Op::Sub(a, b) => {
                self.accumulate_broadcast(grads, *a, node, g, |_| 1.0, None);
                self.accumulate_broadcast(grads, *b, node, g, |_| -1.0, None);
            }
            Op::Mul(a, b) => {
                let sa = self.value(*a).shape().to_vec();
                let sb = self.value(*b).shape().to_vec();
                let out_shape = node.value.shape();
                let ma = broadcast_map(&sa, out_shape);
                let mb = broadcast_map(&sb, out_shape);
                let (da, db) = (self.value(*a).data(), self.value(*b).data());
                self.accumulate_broadcast(grads, *a, node, g, |i| db[mb[i]], Some(&ma));
                self.accumulate_broadcast(grads, *b, node, g, |i| da[ma[i]], Some(&mb));
            }
            Op::Scale(a, f) => {
                let ga: Vec<f64> = g.iter().map(|x| x * f).collect();
                self.accumulate(grads, *a, &ga);
            }
            Op::Concat { inputs, axis } => {
                let shape = node.value.shape();
                let outer: usize = shape[..*axis].iter().product();
                let inner: usize = shape[axis + 1..].iter().product();
                let total = shape[*axis];
                let mut offset = 0;
                for v in inputs {
                    let width = self.shape(*v)[*axis];
                    if self.requires_grad(*v) {
                        let mut gv = Vec::with_capacity(outer * width * inner);
                        for o in 0..outer {
                            let base = (o * total + offset) * inner;
                            gv.extend_from_slice(&g[base..base + width * inner]);
                        }
                        self.accumulate(grads, *v, &gv);
                    }
                    offset += width;
                }
            }
            Op::Slice { input, axis, start } => {
                let src_shape = self.shape(*input).to_vec();
                let outer: usize = src_shape[..*axis].iter().product();
                let inner: usize = src_shape[axis + 1..].iter().product();
                let len = node.value.shape()[*axis];
                let mut gi = vec![0.0; numel(&src_shape)];
                for o in 0..outer {
                    let dst = (o * src_shape[*axis] + start) * inner;
                    let src = o * len * inner;
                    gi[dst..dst + len * inner].copy_from_slice(&g[src..src + len * inner]);
                }
                self.accumulate(grads, *input, &gi);
            }
            Op::Elu(a) => {
                let x = self.value(*a).data();
                let ga: Vec<f64> = (0..g.len())
                    .map(|i| if x[i] > 0.0 { g[i] } else { g[i] * (y[i] + ELU_ALPHA) })
                    .collect();
                self.accumulate(grads, *a, &ga);
            }
            Op::Sigmoid(a) => {
                let ga: Vec<f64> = g.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect();
                self.accumulate(grads, *a, &ga);
            }
            Op::Tanh(a) => {
                let ga: Vec<f64> = g.iter().zip(y).map(|(g, y)| g * (1.0 - y * y)).collect();
                self.accumulate(grads, *a, &ga);
            }
            Op::Relu(a) => {
                let x = self.value(*a).data();
                let ga: Vec<f64> = g.iter().zip(x).map(|(g, x)| if *x > 0.0 { *g } else { 0.0 }).collect();
                self.accumulate(grads, *a, &ga);
            }
            Op::Softmax(a) => {
                let cols = node.value.cols();
                let mut ga = vec![0.0; g.len()];
                for ((gr, yr), dst) in g.chunks(cols).zip(y.chunks(cols)).zip(ga.chunks_mut(cols)) {
                    let dot: f64 = gr.iter().zip(yr).map(|(a, b)| a * b).sum();
                    for c in 0..cols {
                        dst[c] = yr[c] * (gr[c] - dot);
                    }
                }
                self.accumulate(grads, *a, &ga);
            }
            Op::LayerNorm { input, inv_std } => {
                let cols = node.value.cols();
                let n = cols as f64;
                let mut ga = vec![0.0; g.len()];
                for (r, ((gr, yr), dst)) in g.chunks(cols).zip(y.chunks(cols)).zip(ga.chunks_mut(cols)).enumerate() {
                    let mean_g = gr.iter().sum::<f64>() / n;
                    let mean_gy = gr.iter().zip(yr).map(|(a, b)| a * b).sum::<f64>() / n;
                    for c in 0..cols {
                        dst[c] = inv_std[r] * (gr[c] - mean_g - yr[c] * mean_gy);
                    }
                }
                self.accumulate(grads, *input, &ga);
            }
            Op::Dropout { input, mask } => {
                let ga: Vec<f64> = g.iter().zip(mask).map(|(g, m)| g * m).collect();
                self.accumulate(grads, *input, &ga);
            }
            Op::Embedding { table, indices } => {
                let width = node.value.cols();
                let mut gt = vec![0.0; self.value(*table).numel()];
                for (row, &i) in indices.iter().enumerate() {
                    for c in 0..width {
                        gt[i * width + c] += g[row * width + c];
                    }
                }
                self.accumulate(grads, *table, &gt);
            }
            Op::Transpose(a) => {
                let s = node.value.shape();
                let ga = transpose_raw(g, s[0], s[1]);
                self.accumulate(grads, *a, &ga);
            }
            Op::Reshape(a) => self.accumulate(grads, *a, g),
            Op::Sum(a) => {
                let ga = vec![g[0]; self.value(*a).numel()];
                self.accumulate(grads, *a, &ga);
            }
            Op::Mean(a) => {
                let n = self.value(*a).numel();
                let ga = vec![g[0] / n as f64; n];
                self.accumulate(grads, *a, &ga);
            }
        }
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], var: Var, g: &[f64]) {
        if !self.requires_grad(var) {
            return;
        }
        match &mut grads[var.0] {
            Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
            slot @ None => *slot = Some(g.to_vec()),
        }
    }

    /// Accumulates `g[i] * local(i)` into `var`, summing over broadcast dims.
    fn accumulate_broadcast(
        &self,
        grads: &mut [Option<Vec<f64>>],
        var: Var,
        node: &Node,
        g: &[f64],
        local: impl Fn(usize) -> f64,
        map: Option<&[usize]>,
    ) {
        if !self.requires_grad(var) {
            return;
        }
        let in_shape = self.shape(var);
        if in_shape == node.value.shape() {
            let gv: Vec<f64> = (0..g.len()).map(|i| g[i] * local(i)).collect();
            self.accumulate(grads, var, &gv);
            return;
        }
        let owned;
        let map = match map {
            Some(m) => m,
            None => {
                owned = broadcast_map(in_shape, node.value.shape());
                &owned
            }
        };
        let mut gv = vec![0.0; numel(in_shape)];
        for (i, &j) in map.iter().enumerate() {
            gv[j] += g[i] * local(i);
        }
        self.accumulate(grads, var, &gv);
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

fn transpose_raw(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}

/// Numpy-style broadcast of two shapes aligned at the trailing dimension.
fn broadcast_shape(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let n = a.len().max(b.len());
    let dim = |s: &[usize], i: usize| if i + s.len() >= n { s[i + s.len() - n] } else { 1 };
    (0..n)
        .map(|i| match (dim(a, i), dim(b, i)) {
            (x, y) if x == y => Some(x),
            (1, y) => Some(y),
            (x, 1) => Some(x),
            _ => None,
        })
        .collect()
}

/// For each flat index of `out_shape`, the flat index of the broadcast source.
fn broadcast_map(in_shape: &[usize], out_shape: &[usize]) -> Vec<usize> {
    let n = out_shape.len();
    let offset = n - in_shape.len();
    let mut strides = vec![0; n];
    let mut s = 1;
    for i in (0..in_shape.len()).rev() {
        strides[i + offset] = if in_shape[i] == 1 { 0 } else { s };
        s *= in_shape[i];
    }
    let total = numel(out_shape);
    let mut idx = vec![0; n];
    let mut cur = 0;
    let mut map = Vec::with_capacity(total);
    for _ in 0..total {
        map.push(cur);
        for d in (0..n).rev() {
            idx[d] += 1;
            cur += strides[d];
            if idx[d] < out_shape[d] {
                break;
            }
            cur -= strides[d] * idx[d];
            idx[d] = 0;
        }
    }
    map
}
