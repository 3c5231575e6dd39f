//! One Sparse Proximal SAGA iteration, generic over how the parameters are
//! stored. The sequential solver runs it on plain vectors and the
//! asynchronous solver on atomic cells, so both execute the same arithmetic.

use crate::problem::Problem;

/// Access to `x`, the running average and the memory scalars.
pub(crate) trait SagaAccess {
    fn read_x(&self, b: usize) -> f64;
    fn read_avg(&self, b: usize) -> f64;
    fn read_scalar(&self, i: usize) -> f64;
    /// Publishes the new value `z` of coordinate `b`, which was read as `xhat`.
    fn write_x(&mut self, b: usize, xhat: f64, z: f64);
    fn add_avg(&mut self, b: usize, delta: f64);
    fn store_scalar(&mut self, i: usize, value: f64);
    /// When `Some`, the new scalar is exchanged in before the average is
    /// updated and the returned previous value replaces the one read by
    /// [`gather`] in the average increment.
    fn swap_scalar(&mut self, _i: usize, _value: f64) -> Option<f64> {
        None
    }
}

const UNSET: usize = usize::MAX;

/// Per-worker scratch buffers for the sparse iteration. Allocated once per
/// solver; each iteration touches only `O(|T_i|)` entries.
#[derive(Debug, Clone)]
pub struct Workspace {
    pos: Vec<usize>,
    coords: Vec<usize>,
    weights: Vec<f64>,
    blocks: Vec<(usize, usize, usize)>,
    xhat: Vec<f64>,
    v: Vec<f64>,
    z: Vec<f64>,
    acoef: Vec<f64>,
    in_support: Vec<bool>,
    old_scalar: f64,
    new_scalar: f64,
}

impl Workspace {
    pub fn new(p: usize) -> Self {
        Self {
            pos: vec![UNSET; p],
            coords: Vec::new(),
            weights: Vec::new(),
            blocks: Vec::new(),
            xhat: Vec::new(),
            v: Vec::new(),
            z: Vec::new(),
            acoef: Vec::new(),
            in_support: Vec::new(),
            old_scalar: 0.0,
            new_scalar: 0.0,
        }
    }

    /// Coordinates of the extended support from the last gather.
    pub(crate) fn coords(&self) -> &[usize] {
        &self.coords
    }

    /// Gradient estimate on [`Self::coords`] from the last gather.
    pub(crate) fn estimate(&self) -> &[f64] {
        &self.v
    }

    pub(crate) fn new_scalar(&self) -> f64 {
        self.new_scalar
    }

    fn reset(&mut self) {
        for &b in &self.coords {
            self.pos[b] = UNSET;
        }
        self.coords.clear();
        self.weights.clear();
        self.blocks.clear();
    }
}

/// Reads `x` on `T_i`, the scalar of `i` and the average on `T_i`, then
/// forms the gradient estimate
/// `v = (l'(a_i^T xhat) - alpha_i) a_i + D_i (avg + lambda1 xhat)` on `T_i`.
pub(crate) fn gather<A: SagaAccess + ?Sized>(
    problem: &Problem<'_>,
    access: &A,
    ws: &mut Workspace,
    i: usize,
) {
    ws.reset();
    let partition = problem.partition();
    let index = problem.index();
    let weights = index.block_weights();
    for &block in index.extended_support(i) {
        let start = ws.coords.len();
        for &b in partition.block(block) {
            ws.pos[b] = ws.coords.len();
            ws.coords.push(b);
            ws.weights.push(weights[block]);
        }
        ws.blocks.push((block, start, ws.coords.len()));
    }
    let m = ws.coords.len();

    ws.xhat.clear();
    ws.xhat.extend(ws.coords.iter().map(|&b| access.read_x(b)));
    ws.old_scalar = access.read_scalar(i);

    let lambda1 = problem.loss().lambda1;
    ws.v.clear();
    for k in 0..m {
        let avg = access.read_avg(ws.coords[k]);
        ws.v.push(ws.weights[k] * (avg + lambda1 * ws.xhat[k]));
    }

    ws.acoef.clear();
    ws.acoef.resize(m, 0.0);
    ws.in_support.clear();
    ws.in_support.resize(m, false);
    let row = problem.data().features().row(i);
    let mut margin = 0.0;
    for (j, a) in row.iter() {
        let k = ws.pos[j];
        margin += a * ws.xhat[k];
        ws.acoef[k] = a;
        ws.in_support[k] = true;
    }
    ws.new_scalar = problem
        .loss()
        .kind
        .derivative(margin, problem.data().labels()[i]);
    let delta = ws.new_scalar - ws.old_scalar;
    for (j, a) in row.iter() {
        ws.v[ws.pos[j]] += delta * a;
    }
}

/// Completes the iteration started by [`gather`]: proximal step on every
/// block of `T_i` with step `gamma * d_B`, then the writes to `x`, the
/// average and the memory scalar, in that order (or with the scalar first
/// when the access swaps it, see [`SagaAccess::swap_scalar`]).
pub(crate) fn apply<A: SagaAccess + ?Sized>(
    problem: &Problem<'_>,
    access: &mut A,
    ws: &mut Workspace,
    i: usize,
    gamma: f64,
) -> usize {
    let m = ws.coords.len();
    ws.z.clear();
    ws.z.extend((0..m).map(|k| ws.xhat[k] - gamma * ws.v[k]));
    let penalty = problem.penalty();
    let weights = problem.index().block_weights();
    for &(block, start, end) in &ws.blocks {
        penalty.prox_block_in_place(&mut ws.z[start..end], gamma * weights[block]);
    }

    let swapped = access.swap_scalar(i, ws.new_scalar);
    let old_scalar = swapped.unwrap_or(ws.old_scalar);
    let avg_step = (ws.new_scalar - old_scalar) / problem.n_samples() as f64;
    for k in 0..m {
        let b = ws.coords[k];
        access.write_x(b, ws.xhat[k], ws.z[k]);
        if ws.in_support[k] {
            access.add_avg(b, avg_step * ws.acoef[k]);
        }
    }
    if swapped.is_none() {
        access.store_scalar(i, ws.new_scalar);
    }
    m
}

/// Sequential storage: owned vectors.
pub(crate) struct VecAccess<'a> {
    pub x: &'a mut [f64],
    pub avg: &'a mut [f64],
    pub scalars: &'a mut [f64],
}

impl SagaAccess for VecAccess<'_> {
    #[inline]
    fn read_x(&self, b: usize) -> f64 {
        self.x[b]
    }
    #[inline]
    fn read_avg(&self, b: usize) -> f64 {
        self.avg[b]
    }
    #[inline]
    fn read_scalar(&self, i: usize) -> f64 {
        self.scalars[i]
    }
    #[inline]
    fn write_x(&mut self, b: usize, _xhat: f64, z: f64) {
        self.x[b] = z;
    }
    #[inline]
    fn add_avg(&mut self, b: usize, delta: f64) {
        self.avg[b] += delta;
    }
    #[inline]
    fn store_scalar(&mut self, i: usize, value: f64) {
        self.scalars[i] = value;
    }
}

/// Read-only view used to evaluate the gradient estimate without stepping.
pub(crate) struct ReadOnly<'a> {
    pub x: &'a [f64],
    pub avg: &'a [f64],
    pub scalars: &'a [f64],
}

impl SagaAccess for ReadOnly<'_> {
    fn read_x(&self, b: usize) -> f64 {
        self.x[b]
    }
    fn read_avg(&self, b: usize) -> f64 {
        self.avg[b]
    }
    fn read_scalar(&self, i: usize) -> f64 {
        self.scalars[i]
    }
    fn write_x(&mut self, _: usize, _: f64, _: f64) {
        unreachable!("read-only access")
    }
    fn add_avg(&mut self, _: usize, _: f64) {
        unreachable!("read-only access")
    }
    fn store_scalar(&mut self, _: usize, _: f64) {
        unreachable!("read-only access")
    }
}
