use super::expr::HistoryView;
use super::ModelSpec;
use crate::error::{Result, SfdeError};
use crate::segment::{segment_quadrature, Integrand, Segment};

/// A model evaluated on a bare segment: fading kernels are integrated
/// once at construction.
pub struct SegmentView<'a> {
    seg: &'a Segment,
    fading: Vec<f64>,
    offsets: Vec<usize>,
    norm: f64,
}

impl<'a> SegmentView<'a> {
    pub fn new(model: &ModelSpec, seg: &'a Segment) -> Result<Self> {
        if seg.dim() != model.dim() {
            return Err(SfdeError::config(format!(
                "segment has dimension {}, model '{}' expects {}",
                seg.dim(),
                model.name(),
                model.dim()
            )));
        }
        let ks = model.kernels();
        let mut offsets = Vec::with_capacity(ks.len() + 1);
        let mut fading = vec![0.0; ks.total_dim()];
        let mut off = 0;
        for k in ks.kernels() {
            offsets.push(off);
            let m = k.g.out_dim();
            segment_quadrature(seg, k.kappa, &k.g, &mut fading[off..off + m]);
            off += m;
        }
        offsets.push(off);
        Ok(SegmentView { seg, fading, offsets, norm: seg.weighted_norm(model.rate()) })
    }

    pub fn segment(&self) -> &Segment {
        self.seg
    }
}

impl HistoryView for SegmentView<'_> {
    fn point(&self) -> &[f64] {
        self.seg.current()
    }
    fn delayed(&self, tau: f64, out: &mut [f64]) {
        // τ ≥ 0 is enforced at compile time, so θ = -τ is always valid.
        let _ = self.seg.value_at(-tau, out);
    }
    fn fading(&self, slot: usize) -> &[f64] {
        &self.fading[self.offsets[slot]..self.offsets[slot + 1]]
    }
    fn norm(&self) -> f64 {
        self.norm
    }
}

/// Stack `(x, y)` into one segment of twice the dimension.
pub fn stack_pair(x: &Segment, y: &Segment) -> Result<Segment> {
    if x.dim() != y.dim()
        || x.steps() != y.steps()
        || (x.dt() - y.dt()).abs() > 1e-12 * x.dt()
        || x.tail_mode() != y.tail_mode()
    {
        return Err(SfdeError::config("pair segments must share grid, dimension and tail"));
    }
    let n = x.dim();
    let mut values = Vec::with_capacity(2 * n * (x.steps() + 1));
    for k in 0..=x.steps() {
        values.extend_from_slice(x.row(k));
        values.extend_from_slice(y.row(k));
    }
    Segment::new(2 * n, x.dt(), values, x.tail_mode())
}
