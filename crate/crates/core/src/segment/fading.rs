use crate::error::{Result, SfdeError};

use super::{Segment, TailMode};

/// Pointwise map `g: R^d → R^m` integrated against a fading kernel.
pub trait Integrand {
    fn out_dim(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]);
}

/// `g(x) = x`.
#[derive(Clone, Copy, Debug)]
pub struct Identity(pub usize);

impl Integrand for Identity {
    fn out_dim(&self) -> usize {
        self.0
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FnIntegrand<F> {
    pub out_dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64])> Integrand for FnIntegrand<F> {
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

/// `(e^{-κ·dt}, (1 - e^{-κ·dt})/κ)`.
pub fn decay_weights(kappa: f64, dt: f64) -> (f64, f64) {
    let e = (-kappa * dt).exp();
    (e, -(-kappa * dt).exp_m1() / kappa)
}

/// `I(t) = ∫_{-∞}^0 e^{κθ} g(X(t+θ)) dθ`, advanced with the exponential
/// integrator of `dI/dt = g(X(t)) - κ·I`.
#[derive(Clone, Debug)]
pub struct FadingIntegralState<G> {
    kappa: f64,
    value: Vec<f64>,
    integrand: G,
}

impl<G: Integrand> FadingIntegralState<G> {
    /// Requires `κ > r`; otherwise the integral is unbounded on `C_r`.
    pub fn new(kappa: f64, rate: f64, integrand: G, value: Vec<f64>) -> Result<Self> {
        if !(kappa > rate) || !kappa.is_finite() {
            return Err(SfdeError::KernelRate { kappa, rate });
        }
        if value.len() != integrand.out_dim() {
            return Err(SfdeError::config("fading value does not match the integrand dimension"));
        }
        Ok(FadingIntegralState { kappa, value, integrand })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn value(&self) -> &[f64] {
        &self.value
    }

    pub fn integrand(&self) -> &G {
        &self.integrand
    }

    pub fn step_mut(&mut self, x_new: &[f64], dt: f64) {
        let (e, w) = decay_weights(self.kappa, dt);
        let m = self.value.len();
        let mut gx = smallvec::SmallVec::<[f64; 8]>::from_elem(0.0, m);
        self.integrand.eval(x_new, &mut gx);
        for (v, g) in self.value.iter_mut().zip(&gx) {
            *v = e * *v + w * g;
        }
    }

    pub fn fading_step(&self, x_new: &[f64], dt: f64) -> Self
    where
        G: Clone,
    {
        let mut next = self.clone();
        next.step_mut(x_new, dt);
        next
    }
}

/// Quadrature of `∫_{-∞}^0 e^{κθ} g(ξ(θ)) dθ` over a segment, written into `out`.
///
/// The window is summed with the same weights as the recursion (so stepping
/// a path and re-integrating its segment agree) and the tail is integrated
/// in closed form: `g(ξ(-T))·e^{-κT}/κ` under constant extension.
pub fn segment_quadrature<G: Integrand + ?Sized>(
    seg: &Segment,
    kappa: f64,
    g: &G,
    out: &mut [f64],
) {
    let m = g.out_dim();
    let (e, w) = decay_weights(kappa, seg.dt());
    let mut gx = smallvec::SmallVec::<[f64; 8]>::from_elem(0.0, m);
    out.fill(0.0);
    let mut weight = w;
    for k in 0..seg.steps() {
        if k > 0 && k % 64 == 0 {
            weight = w * (-kappa * seg.dt() * k as f64).exp();
        }
        g.eval(seg.row(k), &mut gx);
        for (o, v) in out.iter_mut().zip(&gx) {
            *o += weight * v;
        }
        weight *= e;
    }
    if seg.tail_mode() == TailMode::Constant {
        let tail = (-kappa * seg.window()).exp() / kappa;
        g.eval(seg.row(seg.steps()), &mut gx);
        for (o, v) in out.iter_mut().zip(&gx) {
            *o += tail * v;
        }
    }
}

pub fn init_fading_from_segment<G: Integrand>(
    seg: &Segment,
    rate: f64,
    kappa: f64,
    g: G,
) -> Result<FadingIntegralState<G>> {
    let mut value = vec![0.0; g.out_dim()];
    if kappa > rate {
        segment_quadrature(seg, kappa, &g, &mut value);
    }
    FadingIntegralState::new(kappa, rate, g, value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_decay_without_input() {
        let zero = FnIntegrand { out_dim: 1, f: |_: &[f64], o: &mut [f64]| o[0] = 0.0 };
        let mut st = FadingIntegralState::new(2.0, 1.0, zero, vec![3.0]).unwrap();
        for _ in 0..100 {
            st.step_mut(&[5.0], 0.01);
        }
        assert!((st.value()[0] - 3.0 * (-2.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn constant_input_reaches_fixed_point() {
        let mut st = FadingIntegralState::new(3.0, 1.0, Identity(1), vec![0.0]).unwrap();
        for _ in 0..20_000 {
            st.step_mut(&[2.0], 0.01);
        }
        assert!((st.value()[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_segment_integrates_exactly() {
        let seg = Segment::constant(&[1.5, -2.0], 0.07, 33, TailMode::Constant).unwrap();
        let st = init_fading_from_segment(&seg, 0.5, 1.25, Identity(2)).unwrap();
        assert!((st.value()[0] - 1.5 / 1.25).abs() < 1e-14);
        assert!((st.value()[1] + 2.0 / 1.25).abs() < 1e-14);
    }

    #[test]
    fn zero_extension_drops_tail() {
        let seg = Segment::constant(&[1.0], 0.1, 10, TailMode::Zero).unwrap();
        let st = init_fading_from_segment(&seg, 0.5, 1.0, Identity(1)).unwrap();
        assert!((st.value()[0] - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn slow_kernel_rejected() {
        let seg = Segment::constant(&[1.0], 0.1, 10, TailMode::Zero).unwrap();
        assert!(matches!(
            init_fading_from_segment(&seg, 1.0, 1.0, Identity(1)),
            Err(SfdeError::KernelRate { .. })
        ));
    }
}
