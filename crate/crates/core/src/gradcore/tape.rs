use crate::error::{Error, Result};
use crate::Scalar;

use super::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Square,
    Exp,
    Log,
    Sqrt,
    Softplus,
    /// Exponential linear unit with unit scale.
    Elu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Binary(BinaryOp, Var, Var),
    Unary(UnaryOp, Var),
    Scale(Var, T),
    Offset(Var),
    Concat { a: Var, b: Var, axis: usize },
    Sum(Var),
    SumCols(Var),
    RepeatRows(Var),
}

#[derive(Debug, Clone)]
struct Node<T> {
    shape: Vec<usize>,
    value: Vec<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Linear record of executed operations.
///
/// Every operation appends one node whose operands precede it, so the
/// reverse pass is a single backwards sweep over the node list.
#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

/// Adjoints of the leaves that required gradients, produced by
/// [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Adds the adjoint of `v` into `tensor`'s gradient buffer. Leaves that
    /// were unreachable from the loss contribute nothing.
    pub fn accumulate_into(&self, v: Var, tensor: &mut Tensor<T>) -> Result<()> {
        match self.get(v) {
            Some(g) => tensor.accumulate_grad(g),
            None => Ok(()),
        }
    }
}

fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn elu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        x.exp_m1()
    }
}

fn dims2(shape: &[usize]) -> Option<(usize, usize)> {
    match *shape {
        [r, c] => Some((r, c)),
        _ => None,
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<T>, op: Op<T>, needs_grad: bool) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        self.nodes.push(Node {
            shape,
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> &Node<T> {
        &self.nodes[v.0]
    }

    /// Records a copy of `t`. Gradients flow to it iff `t.requires_grad()`.
    pub fn leaf(&mut self, t: &Tensor<T>) -> Var {
        self.push(
            t.shape().to_vec(),
            t.values().to_vec(),
            Op::Leaf,
            t.requires_grad(),
        )
    }

    /// Records a non-differentiable input.
    pub fn constant(&mut self, shape: Vec<usize>, values: Vec<T>) -> Result<Var> {
        let t = Tensor::new(shape, values)?;
        let (shape, value) = (t.shape().to_vec(), t.values().to_vec());
        Ok(self.push(shape, value, Op::Leaf, false))
    }

    pub fn value(&self, v: Var) -> &[T] {
        &self.node(v).value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.node(v).shape
    }

    /// Value of a single-element node.
    pub fn scalar(&self, v: Var) -> T {
        self.node(v).value[0]
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (na, nb) = (self.node(a), self.node(b));
        let (Some((m, k)), Some((k2, n))) = (dims2(&na.shape), dims2(&nb.shape)) else {
            return Err(Error::Dimension {
                op: "matmul",
                left: na.shape.clone(),
                right: nb.shape.clone(),
            });
        };
        if k != k2 {
            return Err(Error::Dimension {
                op: "matmul",
                left: na.shape.clone(),
                right: nb.shape.clone(),
            });
        }
        let mut out = vec![T::zero(); m * n];
        for i in 0..m {
            let row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let aip = na.value[i * k + p];
                if aip == T::zero() {
                    continue;
                }
                let brow = &nb.value[p * n..(p + 1) * n];
                for (o, &bv) in row.iter_mut().zip(brow) {
                    *o += aip * bv;
                }
            }
        }
        let ng = na.needs_grad || nb.needs_grad;
        Ok(self.push(vec![m, n], out, Op::MatMul(a, b), ng))
    }

    /// Elementwise binary operation. Operand shapes must agree unless one
    /// side holds a single element, which is broadcast.
    pub fn binary(&mut self, op: BinaryOp, a: Var, b: Var) -> Result<Var> {
        let (na, nb) = (self.node(a), self.node(b));
        let (la, lb) = (na.value.len(), nb.value.len());
        let shape = if na.shape == nb.shape || lb == 1 {
            na.shape.clone()
        } else if la == 1 {
            nb.shape.clone()
        } else {
            return Err(Error::Dimension {
                op: "elementwise",
                left: na.shape.clone(),
                right: nb.shape.clone(),
            });
        };
        let n = la.max(lb);
        let f = |x: T, y: T| match op {
            BinaryOp::Add => x + y,
            BinaryOp::Sub => x - y,
            BinaryOp::Mul => x * y,
            BinaryOp::Div => x / y,
        };
        let out: Vec<T> = (0..n)
            .map(|i| f(na.value[if la == 1 { 0 } else { i }], nb.value[if lb == 1 { 0 } else { i }]))
            .collect();
        let ng = na.needs_grad || nb.needs_grad;
        Ok(self.push(shape, out, Op::Binary(op, a, b), ng))
    }

    pub fn unary(&mut self, op: UnaryOp, a: Var) -> Result<Var> {
        let na = self.node(a);
        match op {
            UnaryOp::Log => {
                if let Some(bad) = na.value.iter().find(|&&v| !(v > T::zero())) {
                    return Err(Error::Domain {
                        op: "log",
                        detail: format!("non-positive entry {bad}"),
                    });
                }
            }
            UnaryOp::Sqrt => {
                if let Some(bad) = na.value.iter().find(|&&v| !(v >= T::zero())) {
                    return Err(Error::Domain {
                        op: "sqrt",
                        detail: format!("negative entry {bad}"),
                    });
                }
            }
            _ => {}
        }
        let f = |x: T| match op {
            UnaryOp::Neg => -x,
            UnaryOp::Square => x * x,
            UnaryOp::Exp => x.exp(),
            UnaryOp::Log => x.ln(),
            UnaryOp::Sqrt => x.sqrt(),
            UnaryOp::Softplus => softplus(x),
            UnaryOp::Elu => elu(x),
        };
        let out = na.value.iter().map(|&x| f(x)).collect();
        let (shape, ng) = (na.shape.clone(), na.needs_grad);
        Ok(self.push(shape, out, Op::Unary(op, a), ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Mul, a, b)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Div, a, b)
    }

    fn infallible(&mut self, op: UnaryOp, a: Var) -> Var {
        self.unary(op, a).expect("operation has no domain restriction")
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.infallible(UnaryOp::Neg, a)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.infallible(UnaryOp::Square, a)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.infallible(UnaryOp::Exp, a)
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        self.unary(UnaryOp::Log, a)
    }

    pub fn sqrt(&mut self, a: Var) -> Result<Var> {
        self.unary(UnaryOp::Sqrt, a)
    }

    /// `ln(1 + e^x)`, evaluated without overflow.
    pub fn softplus(&mut self, a: Var) -> Var {
        self.infallible(UnaryOp::Softplus, a)
    }

    pub fn elu(&mut self, a: Var) -> Var {
        self.infallible(UnaryOp::Elu, a)
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let na = self.node(a);
        let out = na.value.iter().map(|&x| x * c).collect();
        let (shape, ng) = (na.shape.clone(), na.needs_grad);
        self.push(shape, out, Op::Scale(a, c), ng)
    }

    pub fn offset(&mut self, a: Var, c: T) -> Var {
        let na = self.node(a);
        let out = na.value.iter().map(|&x| x + c).collect();
        let (shape, ng) = (na.shape.clone(), na.needs_grad);
        self.push(shape, out, Op::Offset(a), ng)
    }

    /// Concatenates along `axis`. An empty operand is passed through.
    pub fn concat(&mut self, a: Var, b: Var, axis: usize) -> Result<Var> {
        let (na, nb) = (self.node(a), self.node(b));
        let mismatch = || Error::Dimension {
            op: "concat",
            left: na.shape.clone(),
            right: nb.shape.clone(),
        };
        let shape = if na.value.is_empty() && na.shape.len() <= 1 {
            nb.shape.clone()
        } else if nb.value.is_empty() && nb.shape.len() <= 1 {
            na.shape.clone()
        } else {
            if na.shape.len() != nb.shape.len() || axis >= na.shape.len() {
                return Err(mismatch());
            }
            let other_axes_agree = na
                .shape
                .iter()
                .zip(&nb.shape)
                .enumerate()
                .all(|(i, (x, y))| i == axis || x == y);
            if !other_axes_agree {
                return Err(mismatch());
            }
            let mut s = na.shape.clone();
            s[axis] += nb.shape[axis];
            s
        };
        let (ca, cb) = concat_chunks(&na.shape, &nb.shape, axis);
        let mut out = Vec::with_capacity(na.value.len() + nb.value.len());
        let outer = na
            .value
            .len()
            .checked_div(ca)
            .or_else(|| nb.value.len().checked_div(cb))
            .unwrap_or(0);
        for o in 0..outer {
            if ca > 0 {
                out.extend_from_slice(&na.value[o * ca..(o + 1) * ca]);
            }
            if cb > 0 {
                out.extend_from_slice(&nb.value[o * cb..(o + 1) * cb]);
            }
        }
        let ng = na.needs_grad || nb.needs_grad;
        Ok(self.push(shape, out, Op::Concat { a, b, axis }, ng))
    }

    /// Sum of all entries, as a one-element tensor.
    pub fn sum(&mut self, a: Var) -> Var {
        let na = self.node(a);
        let s = na.value.iter().copied().sum();
        let ng = na.needs_grad;
        self.push(vec![1], vec![s], Op::Sum(a), ng)
    }

    /// Row sums of an `m×n` matrix, shaped `m×1`.
    pub fn sum_cols(&mut self, a: Var) -> Result<Var> {
        let na = self.node(a);
        let Some((m, n)) = dims2(&na.shape) else {
            return Err(Error::Dimension {
                op: "sum_cols",
                left: na.shape.clone(),
                right: vec![],
            });
        };
        let out = (0..m)
            .map(|i| na.value[i * n..(i + 1) * n].iter().copied().sum())
            .collect();
        let ng = na.needs_grad;
        Ok(self.push(vec![m, 1], out, Op::SumCols(a), ng))
    }

    /// Tiles a `1×n` row into `rows×n`. This is the only row expansion the
    /// tape offers; callers build batch shapes explicitly with it.
    pub fn repeat_rows(&mut self, a: Var, rows: usize) -> Result<Var> {
        let na = self.node(a);
        let n = match *na.shape {
            [1, n] => n,
            [n] => n,
            _ => {
                return Err(Error::Dimension {
                    op: "repeat_rows",
                    left: na.shape.clone(),
                    right: vec![rows],
                })
            }
        };
        let mut out = Vec::with_capacity(rows * n);
        for _ in 0..rows {
            out.extend_from_slice(&na.value);
        }
        let ng = na.needs_grad;
        Ok(self.push(vec![rows, n], out, Op::RepeatRows(a), ng))
    }

    /// Consumes the tape and propagates adjoints from the scalar `loss`.
    pub fn backward(self, loss: Var) -> Result<Gradients<T>> {
        let nodes = self.nodes;
        let Some(ln) = nodes.get(loss.0) else {
            return Err(Error::contract("loss is not on this tape"));
        };
        if ln.value.len() != 1 {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                ln.shape
            )));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; nodes.len()];
        grads[loss.0] = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            let node = &nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            match node.op {
                Op::Leaf => {
                    grads[i] = Some(g);
                }
                Op::MatMul(a, b) => {
                    let (na, nb) = (&nodes[a.0], &nodes[b.0]);
                    let (m, k) = (na.shape[0], na.shape[1]);
                    let n = nb.shape[1];
                    if na.needs_grad {
                        let ga = slot(&mut grads, a, m * k);
                        for r in 0..m {
                            let grow = &g[r * n..(r + 1) * n];
                            for p in 0..k {
                                let brow = &nb.value[p * n..(p + 1) * n];
                                let mut acc = T::zero();
                                for (&x, &y) in grow.iter().zip(brow) {
                                    acc += x * y;
                                }
                                ga[r * k + p] += acc;
                            }
                        }
                    }
                    if nb.needs_grad {
                        let gb = slot(&mut grads, b, k * n);
                        for r in 0..m {
                            let grow = &g[r * n..(r + 1) * n];
                            for p in 0..k {
                                let arp = na.value[r * k + p];
                                if arp == T::zero() {
                                    continue;
                                }
                                for (o, &x) in gb[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                    *o += arp * x;
                                }
                            }
                        }
                    }
                }
                Op::Binary(op, a, b) => {
                    let (na, nb) = (&nodes[a.0], &nodes[b.0]);
                    let (la, lb) = (na.value.len(), nb.value.len());
                    let ia = |j: usize| if la == 1 { 0 } else { j };
                    let ib = |j: usize| if lb == 1 { 0 } else { j };
                    if na.needs_grad {
                        let ga = slot(&mut grads, a, la);
                        for (j, &gj) in g.iter().enumerate() {
                            let d = match op {
                                BinaryOp::Add | BinaryOp::Sub => gj,
                                BinaryOp::Mul => gj * nb.value[ib(j)],
                                BinaryOp::Div => gj / nb.value[ib(j)],
                            };
                            ga[ia(j)] += d;
                        }
                    }
                    if nb.needs_grad {
                        let gb = slot(&mut grads, b, lb);
                        for (j, &gj) in g.iter().enumerate() {
                            let d = match op {
                                BinaryOp::Add => gj,
                                BinaryOp::Sub => -gj,
                                BinaryOp::Mul => gj * na.value[ia(j)],
                                BinaryOp::Div => {
                                    let y = nb.value[ib(j)];
                                    -gj * na.value[ia(j)] / (y * y)
                                }
                            };
                            gb[ib(j)] += d;
                        }
                    }
                }
                Op::Unary(op, a) => {
                    let na = &nodes[a.0];
                    let ga = slot(&mut grads, a, na.value.len());
                    for j in 0..g.len() {
                        let (x, y) = (na.value[j], node.value[j]);
                        let d = match op {
                            UnaryOp::Neg => -T::one(),
                            UnaryOp::Square => x + x,
                            UnaryOp::Exp => y,
                            UnaryOp::Log => T::one() / x,
                            UnaryOp::Sqrt => {
                                if y > T::zero() {
                                    T::one() / (y + y)
                                } else {
                                    T::zero()
                                }
                            }
                            UnaryOp::Softplus => sigmoid(x),
                            UnaryOp::Elu => {
                                if x > T::zero() {
                                    T::one()
                                } else {
                                    y + T::one()
                                }
                            }
                        };
                        ga[j] += g[j] * d;
                    }
                }
                Op::Scale(a, c) => {
                    let ga = slot(&mut grads, a, g.len());
                    for (o, &gj) in ga.iter_mut().zip(&g) {
                        *o += gj * c;
                    }
                }
                Op::Offset(a) => {
                    let ga = slot(&mut grads, a, g.len());
                    for (o, &gj) in ga.iter_mut().zip(&g) {
                        *o += gj;
                    }
                }
                Op::Concat { a, b, axis } => {
                    let (na, nb) = (&nodes[a.0], &nodes[b.0]);
                    let (ca, cb) = concat_chunks(&na.shape, &nb.shape, axis);
                    let stride = ca + cb;
                    let outer = g.len().checked_div(stride).unwrap_or(0);
                    if na.needs_grad && ca > 0 {
                        let ga = slot(&mut grads, a, na.value.len());
                        for o in 0..outer {
                            for j in 0..ca {
                                ga[o * ca + j] += g[o * stride + j];
                            }
                        }
                    }
                    if nb.needs_grad && cb > 0 {
                        let gb = slot(&mut grads, b, nb.value.len());
                        for o in 0..outer {
                            for j in 0..cb {
                                gb[o * cb + j] += g[o * stride + ca + j];
                            }
                        }
                    }
                }
                Op::Sum(a) => {
                    let ga = slot(&mut grads, a, nodes[a.0].value.len());
                    for o in ga.iter_mut() {
                        *o += g[0];
                    }
                }
                Op::SumCols(a) => {
                    let n = nodes[a.0].shape[1];
                    let ga = slot(&mut grads, a, nodes[a.0].value.len());
                    for (r, &gr) in g.iter().enumerate() {
                        for o in &mut ga[r * n..(r + 1) * n] {
                            *o += gr;
                        }
                    }
                }
                Op::RepeatRows(a) => {
                    let n = nodes[a.0].value.len();
                    let ga = slot(&mut grads, a, n);
                    for row in g.chunks(n) {
                        for (o, &x) in ga.iter_mut().zip(row) {
                            *o += x;
                        }
                    }
                }
            }
        }

        // Only leaves keep their adjoints.
        for (i, node) in nodes.iter().enumerate() {
            if !matches!(node.op, Op::Leaf) || !node.needs_grad {
                grads[i] = None;
            } else if grads[i].is_none() {
                grads[i] = Some(vec![T::zero(); node.value.len()]);
            }
        }
        Ok(Gradients { grads })
    }
}

/// Per-outer-index chunk lengths of the two concat operands.
fn concat_chunks(sa: &[usize], sb: &[usize], axis: usize) -> (usize, usize) {
    let chunk = |s: &[usize]| -> usize {
        if s.iter().product::<usize>() == 0 {
            0
        } else if axis < s.len() {
            s[axis..].iter().product()
        } else {
            s.iter().product()
        }
    };
    (chunk(sa), chunk(sb))
}

fn slot<T: Scalar>(grads: &mut [Option<Vec<T>>], v: Var, len: usize) -> &mut Vec<T> {
    grads[v.0].get_or_insert_with(|| vec![T::zero(); len])
}
