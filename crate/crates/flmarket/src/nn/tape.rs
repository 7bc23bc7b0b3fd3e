//! Tape-based reverse-mode autodiff.
//!
//! Operations append nodes to a [`Tape`]; [`Tape::backward`] walks the tape
//! in reverse from a scalar loss and accumulates gradients for every node
//! that transitively depends on a parameter leaf. All tensors are dense
//! row-major `f64` matrices. A tape instance is single-threaded; independent
//! tapes may run in parallel.

use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TensorId(usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(TensorId, TensorId),
    Add(TensorId, TensorId),
    Sub(TensorId, TensorId),
    MulElem(TensorId, TensorId),
    Scale(TensorId, f64),
    AddConst(TensorId, f64),
    Neg(TensorId),
    Relu(TensorId),
    Exp(TensorId),
    /// Column-wise sum: (n, c) -> (1, c).
    RowSum(TensorId),
    /// Tile a (1, c) row to (n, c).
    RepeatRows(TensorId),
    /// Concatenate tensors with equal row counts along columns.
    HStack(Vec<TensorId>),
    /// Extract row `r` of a (n, c) tensor as (1, c).
    PickRow(TensorId, usize),
    /// Sum of all entries, a (1, 1) scalar.
    SumAll(TensorId),
    /// Max over a list of scalar nodes; gradient routes to the recorded
    /// first-attaining index.
    MaxOver(Vec<TensorId>),
    /// Min over a list of scalar nodes, same gradient convention.
    MinOver(Vec<TensorId>),
}

struct Node {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    op: Op,
    requires_grad: bool,
    /// Argmax/argmin position for the reduction ops.
    arg: usize,
}

/// Gradients produced by one backward pass, indexed by tensor id.
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. the given node; `None` if the node does
    /// not require gradients.
    pub fn get(&self, id: TensorId) -> Option<&[f64]> {
        self.grads[id.0].as_deref()
    }
}

/// Records a computation graph and evaluates it eagerly.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
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

    fn push(&mut self, rows: usize, cols: usize, values: Vec<f64>, op: Op, requires_grad: bool) -> TensorId {
        debug_assert_eq!(values.len(), rows * cols);
        self.nodes.push(Node {
            rows,
            cols,
            values,
            op,
            requires_grad,
            arg: 0,
        });
        TensorId(self.nodes.len() - 1)
    }

    /// Constant input; no gradient is tracked through it.
    pub fn constant(&mut self, rows: usize, cols: usize, values: Vec<f64>) -> TensorId {
        self.push(rows, cols, values, Op::Leaf, false)
    }

    pub fn scalar(&mut self, value: f64) -> TensorId {
        self.constant(1, 1, vec![value])
    }

    /// Trainable leaf; gradients accumulate here.
    pub fn param(&mut self, rows: usize, cols: usize, values: Vec<f64>) -> TensorId {
        self.push(rows, cols, values, Op::Leaf, true)
    }

    pub fn shape(&self, id: TensorId) -> (usize, usize) {
        let n = &self.nodes[id.0];
        (n.rows, n.cols)
    }

    pub fn values(&self, id: TensorId) -> &[f64] {
        &self.nodes[id.0].values
    }

    pub fn scalar_value(&self, id: TensorId) -> f64 {
        debug_assert_eq!(self.shape(id), (1, 1));
        self.nodes[id.0].values[0]
    }

    fn rg(&self, id: TensorId) -> bool {
        self.nodes[id.0].requires_grad
    }

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> TensorId {
        let (n, m) = self.shape(a);
        let (m2, p) = self.shape(b);
        assert_eq!(m, m2, "matmul shape mismatch: ({n},{m}) x ({m2},{p})");
        let mut out = vec![0.0; n * p];
        let av = &self.nodes[a.0].values;
        let bv = &self.nodes[b.0].values;
        for i in 0..n {
            for k in 0..m {
                let aik = av[i * m + k];
                if aik == 0.0 {
                    continue;
                }
                let brow = &bv[k * p..(k + 1) * p];
                let orow = &mut out[i * p..(i + 1) * p];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += aik * b;
                }
            }
        }
        let rg = self.rg(a) || self.rg(b);
        self.push(n, p, out, Op::MatMul(a, b), rg)
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> TensorId {
        assert_eq!(self.shape(a), self.shape(b), "add shape mismatch");
        let (n, c) = self.shape(a);
        let out = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x + y)
            .collect();
        let rg = self.rg(a) || self.rg(b);
        self.push(n, c, out, Op::Add(a, b), rg)
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> TensorId {
        assert_eq!(self.shape(a), self.shape(b), "sub shape mismatch");
        let (n, c) = self.shape(a);
        let out = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x - y)
            .collect();
        let rg = self.rg(a) || self.rg(b);
        self.push(n, c, out, Op::Sub(a, b), rg)
    }

    pub fn mul_elem(&mut self, a: TensorId, b: TensorId) -> TensorId {
        assert_eq!(self.shape(a), self.shape(b), "mul shape mismatch");
        let (n, c) = self.shape(a);
        let out = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x * y)
            .collect();
        let rg = self.rg(a) || self.rg(b);
        self.push(n, c, out, Op::MulElem(a, b), rg)
    }

    pub fn scale(&mut self, a: TensorId, c: f64) -> TensorId {
        let (n, m) = self.shape(a);
        let out = self.nodes[a.0].values.iter().map(|x| x * c).collect();
        let rg = self.rg(a);
        self.push(n, m, out, Op::Scale(a, c), rg)
    }

    pub fn add_const(&mut self, a: TensorId, c: f64) -> TensorId {
        let (n, m) = self.shape(a);
        let out = self.nodes[a.0].values.iter().map(|x| x + c).collect();
        let rg = self.rg(a);
        self.push(n, m, out, Op::AddConst(a, c), rg)
    }

    pub fn neg(&mut self, a: TensorId) -> TensorId {
        let (n, m) = self.shape(a);
        let out = self.nodes[a.0].values.iter().map(|x| -x).collect();
        let rg = self.rg(a);
        self.push(n, m, out, Op::Neg(a), rg)
    }

    pub fn relu(&mut self, a: TensorId) -> TensorId {
        let (n, m) = self.shape(a);
        let out = self.nodes[a.0].values.iter().map(|x| x.max(0.0)).collect();
        let rg = self.rg(a);
        self.push(n, m, out, Op::Relu(a), rg)
    }

    pub fn exp(&mut self, a: TensorId) -> TensorId {
        let (n, m) = self.shape(a);
        let out = self.nodes[a.0].values.iter().map(|x| x.exp()).collect();
        let rg = self.rg(a);
        self.push(n, m, out, Op::Exp(a), rg)
    }

    /// Column sums: (n, c) -> (1, c).
    pub fn rowsum(&mut self, a: TensorId) -> TensorId {
        let (n, c) = self.shape(a);
        let mut out = vec![0.0; c];
        for i in 0..n {
            for j in 0..c {
                out[j] += self.nodes[a.0].values[i * c + j];
            }
        }
        let rg = self.rg(a);
        self.push(1, c, out, Op::RowSum(a), rg)
    }

    /// Tiles a (1, c) row vector to (rows, c).
    pub fn repeat_rows(&mut self, a: TensorId, rows: usize) -> TensorId {
        let (n, c) = self.shape(a);
        assert_eq!(n, 1, "repeat_rows expects a row vector");
        let mut out = Vec::with_capacity(rows * c);
        for _ in 0..rows {
            out.extend_from_slice(&self.nodes[a.0].values);
        }
        let rg = self.rg(a);
        self.push(rows, c, out, Op::RepeatRows(a), rg)
    }

    /// Concatenates tensors with equal row counts along the column axis.
    pub fn hstack(&mut self, parts: &[TensorId]) -> TensorId {
        assert!(!parts.is_empty());
        let rows = self.shape(parts[0]).0;
        let total: usize = parts.iter().map(|&p| {
            assert_eq!(self.shape(p).0, rows, "hstack row mismatch");
            self.shape(p).1
        }).sum();
        let mut out = vec![0.0; rows * total];
        let mut offset = 0;
        for &p in parts {
            let (_, c) = self.shape(p);
            for i in 0..rows {
                out[i * total + offset..i * total + offset + c]
                    .copy_from_slice(&self.nodes[p.0].values[i * c..(i + 1) * c]);
            }
            offset += c;
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        self.push(rows, total, out, Op::HStack(parts.to_vec()), rg)
    }

    /// Extracts row `r` as a (1, c) tensor.
    pub fn pick_row(&mut self, a: TensorId, r: usize) -> TensorId {
        let (n, c) = self.shape(a);
        assert!(r < n, "row {r} out of bounds for {n} rows");
        let out = self.nodes[a.0].values[r * c..(r + 1) * c].to_vec();
        let rg = self.rg(a);
        self.push(1, c, out, Op::PickRow(a, r), rg)
    }

    /// Sum of all entries as a scalar.
    pub fn sum_all(&mut self, a: TensorId) -> TensorId {
        let s: f64 = self.nodes[a.0].values.iter().sum();
        let rg = self.rg(a);
        self.push(1, 1, vec![s], Op::SumAll(a), rg)
    }

    /// Maximum over scalar nodes; gradient flows to the first index attaining
    /// the maximum.
    pub fn max_over(&mut self, items: &[TensorId]) -> TensorId {
        self.reduce_over(items, true)
    }

    /// Minimum over scalar nodes; gradient flows to the first index attaining
    /// the minimum.
    pub fn min_over(&mut self, items: &[TensorId]) -> TensorId {
        self.reduce_over(items, false)
    }

    fn reduce_over(&mut self, items: &[TensorId], is_max: bool) -> TensorId {
        assert!(!items.is_empty(), "reduction over empty list");
        let mut arg = 0;
        let mut best = self.scalar_value(items[0]);
        for (k, &id) in items.iter().enumerate().skip(1) {
            let v = self.scalar_value(id);
            if (is_max && v > best) || (!is_max && v < best) {
                best = v;
                arg = k;
            }
        }
        let rg = items.iter().any(|&p| self.rg(p));
        let op = if is_max {
            Op::MaxOver(items.to_vec())
        } else {
            Op::MinOver(items.to_vec())
        };
        let id = self.push(1, 1, vec![best], op, rg);
        self.nodes[id.0].arg = arg;
        id
    }

    /// Reverse pass from a scalar loss. Gradients are populated for every
    /// node on a path from a parameter to the loss.
    pub fn backward(&mut self, loss: TensorId) -> Result<Gradients> {
        if self.shape(loss) != (1, 1) {
            return Err(Error::InvalidInput(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = self
            .nodes
            .iter()
            .map(|n| n.requires_grad.then(|| vec![0.0; n.values.len()]))
            .collect();
        if grads[loss.0].is_none() {
            // Loss does not depend on any parameter.
            return Ok(Gradients { grads });
        }
        grads[loss.0].as_mut().unwrap()[0] = 1.0;

        for idx in (0..=loss.0).rev() {
            if grads[idx].is_none() {
                continue;
            }
            let gout = grads[idx].take().unwrap();
            let (rows, cols, op, arg) = {
                let n = &self.nodes[idx];
                (n.rows, n.cols, n.op.clone(), n.arg)
            };
            match op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (n, m) = self.shape(a);
                    let p = cols;
                    if let Some(ga) = grads[a.0].as_mut() {
                        let bv = &self.nodes[b.0].values;
                        // dA = dC * B^T
                        for i in 0..n {
                            for k in 0..m {
                                let mut acc = 0.0;
                                for j in 0..p {
                                    acc += gout[i * p + j] * bv[k * p + j];
                                }
                                ga[i * m + k] += acc;
                            }
                        }
                    }
                    if let Some(gb) = grads[b.0].as_mut() {
                        let av = &self.nodes[a.0].values;
                        // dB = A^T * dC
                        for k in 0..m {
                            for i in 0..n {
                                let aik = av[i * m + k];
                                if aik == 0.0 {
                                    continue;
                                }
                                for j in 0..p {
                                    gb[k * p + j] += aik * gout[i * p + j];
                                }
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    for id in [a, b] {
                        if let Some(g) = grads[id.0].as_mut() {
                            for (g, &d) in g.iter_mut().zip(&gout) {
                                *g += d;
                            }
                        }
                    }
                }
                Op::Sub(a, b) => {
                    if let Some(g) = grads[a.0].as_mut() {
                        for (g, &d) in g.iter_mut().zip(&gout) {
                            *g += d;
                        }
                    }
                    if let Some(g) = grads[b.0].as_mut() {
                        for (g, &d) in g.iter_mut().zip(&gout) {
                            *g -= d;
                        }
                    }
                }
                Op::MulElem(a, b) => {
                    if let Some(g) = grads[a.0].as_mut() {
                        for ((g, &d), &bv) in
                            g.iter_mut().zip(&gout).zip(&self.nodes[b.0].values)
                        {
                            *g += d * bv;
                        }
                    }
                    if let Some(g) = grads[b.0].as_mut() {
                        for ((g, &d), &av) in
                            g.iter_mut().zip(&gout).zip(&self.nodes[a.0].values)
                        {
                            *g += d * av;
                        }
                    }
                }
                Op::Scale(a, c) => {
                    if let Some(g) = grads[a.0].as_mut() {
                        for (g, &d) in g.iter_mut().zip(&gout) {
                            *g += c * d;
                        }
                    }
                }
                Op::AddConst(a, _) => {
                    if let Some(g) = grads[a.0].as_mut() {
                        for (g, &d) in g.iter_mut().zip(&gout) {
                            *g += d;
                        }
                    }
                }
                Op::Neg(a) => {
                    if let Some(g) = grads[a.0].as_mut() {
                        for (g, &d) in g.iter_mut().zip(&gout) {
                            *g -= d;
                        }
                    }
                }
                Op::Relu(a) => {
                    if let Some(g) = grads[a.0].as_mut() {
                        let av = &self.nodes[a.0].values;
                        for ((g, &d), &x) in g.iter_mut().zip(&gout).zip(av) {
                            if x > 0.0 {
                                *g += d;
                            }
                        }
                    }
                }
                Op::Exp(a) => {
                    let out = self.nodes[idx].values.clone();
                    if let Some(g) = grads[a.0].as_mut() {
                        for ((g, &d), &e) in g.iter_mut().zip(&gout).zip(&out) {
                            *g += d * e;
                        }
                    }
                }
                Op::RowSum(a) => {
                    if let Some(g) = grads[a.0].as_mut() {
                        let n = self.nodes[a.0].rows;
                        for i in 0..n {
                            for j in 0..cols {
                                g[i * cols + j] += gout[j];
                            }
                        }
                    }
                }
                Op::RepeatRows(a) => {
                    if let Some(g) = grads[a.0].as_mut() {
                        for i in 0..rows {
                            for j in 0..cols {
                                g[j] += gout[i * cols + j];
                            }
                        }
                    }
                }
                Op::HStack(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let (_, c) = self.shape(p);
                        if let Some(g) = grads[p.0].as_mut() {
                            for i in 0..rows {
                                for j in 0..c {
                                    g[i * c + j] += gout[i * cols + offset + j];
                                }
                            }
                        }
                        offset += c;
                    }
                }
                Op::PickRow(a, r) => {
                    if let Some(g) = grads[a.0].as_mut() {
                        for j in 0..cols {
                            g[r * cols + j] += gout[j];
                        }
                    }
                }
                Op::SumAll(a) => {
                    if let Some(g) = grads[a.0].as_mut() {
                        for g in g.iter_mut() {
                            *g += gout[0];
                        }
                    }
                }
                Op::MaxOver(items) | Op::MinOver(items) => {
                    let chosen = items[arg];
                    if let Some(g) = grads[chosen.0].as_mut() {
                        g[0] += gout[0];
                    }
                }
            }
            grads[idx] = Some(gout);
        }
        Ok(Gradients { grads })
    }
}
