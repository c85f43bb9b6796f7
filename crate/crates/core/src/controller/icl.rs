//! Integral concurrent learning data: windowed integrals of the regressor and
//! gyroscopic terms, and the history stack that monitors finite excitation.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, Matrix3xX, Vector3};

use crate::linalg::min_eigenvalue;
use crate::plant::RwaConfig;
use crate::scalar::Real;

/// Measurements recorded at one control instant. `y` is the regressor of
/// the torque held over the interval that starts at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct IclSample<T: Real> {
    pub t: T,
    pub omega: Vector3<T>,
    pub wheel_speeds: DVector<T>,
    pub y: Matrix3xX<T>,
}

/// One input/output data pair of the history stack.
#[derive(Debug, Clone, PartialEq)]
pub struct IclPair<T: Real> {
    /// Integrated regressor over the window, N·m·s.
    pub script_y: Matrix3xX<T>,
    /// Integrated gyroscopic term `ω × (Jω + J_RW G Ω)`, N·m·s.
    pub script_u: Vector3<T>,
    /// `Jω(tᵢ) - Jω(tᵢ - Δt)`, kg·m²/s.
    pub delta_h: Vector3<T>,
    pub t_i: T,
}

impl<T: Real> IclPair<T> {
    /// `delta_h + 𝒰 - 𝒴 θ`; zero for exact data and the true θ.
    pub fn residual(&self, theta: &DVector<T>) -> Vector3<T> {
        self.delta_h + self.script_u - &self.script_y * theta
    }

    pub fn has_information(&self) -> bool {
        self.script_y.iter().any(|&x| x != T::zero())
    }
}

/// Rolling buffer of samples for the window currently being integrated.
#[derive(Debug, Clone, Default)]
pub struct IclBuffer<T: Real> {
    samples: VecDeque<IclSample<T>>,
}

impl<T: Real> IclBuffer<T> {
    pub fn new() -> Self {
        IclBuffer {
            samples: VecDeque::new(),
        }
    }

    pub fn push(&mut self, s: IclSample<T>) {
        self.samples.push_back(s);
    }

    /// Drops every sample older than `t`.
    pub fn discard_before(&mut self, t: T) {
        while self.samples.front().is_some_and(|s| s.t < t) {
            self.samples.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = &IclSample<T>> {
        self.samples.iter()
    }
}

/// Integrates the buffered samples over `[t_i - delta_t, t_i]`.
///
/// `𝒴` is summed exactly for a regressor held constant between samples;
/// `𝒰` uses the composite trapezoidal rule. Returns `None` unless samples
/// exist at both window ends.
pub fn icl_accumulate<T: Real>(
    buffer: &IclBuffer<T>,
    t_i: T,
    delta_t: T,
    cfg: &RwaConfig<T>,
) -> Option<IclPair<T>> {
    let tol = delta_t * T::lit(1e-6);
    let start = t_i - delta_t;
    let window: Vec<&IclSample<T>> = buffer
        .samples()
        .filter(|s| s.t >= start - tol && s.t <= t_i + tol)
        .collect();
    let first = window.first()?;
    let last = window.last()?;
    if window.len() < 2 || (first.t - start).abs() > tol || (last.t - t_i).abs() > tol {
        return None;
    }

    let n = cfg.n_wheels();
    let gyro = |s: &IclSample<T>| {
        let h = cfg.j_body * s.omega + &cfg.g * &s.wheel_speeds * cfg.j_rw;
        s.omega.cross(&h)
    };
    let half = T::lit(0.5);
    let mut script_y = Matrix3xX::zeros(n);
    let mut script_u = Vector3::zeros();
    for pair in window.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let h = b.t - a.t;
        script_y += &a.y * h;
        script_u += (gyro(a) + gyro(b)) * (h * half);
    }
    Some(IclPair {
        script_y,
        script_u,
        delta_h: cfg.j_body * (last.omega - first.omega),
        t_i: last.t,
    })
}

/// Fixed-capacity set of data pairs, managed to grow the minimum eigenvalue
/// of `Σ 𝒴ᵢᵀ 𝒴ᵢ`.
#[derive(Debug, Clone)]
pub struct HistoryStack<T: Real> {
    pairs: Vec<IclPair<T>>,
    capacity: usize,
    n_wheels: usize,
    lambda_bar: T,
    fe_matrix: DMatrix<T>,
    /// `Σ 𝒴ᵢᵀ (delta_hᵢ + 𝒰ᵢ)`
    fe_target: DVector<T>,
    lambda_min: T,
    fe_satisfied: bool,
    fe_time: Option<T>,
}

/// Minimum eigenvalue, latch state and first crossing time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeStatus<T: Real> {
    pub lambda_min: T,
    pub satisfied: bool,
    pub fe_time: Option<T>,
}

impl<T: Real> HistoryStack<T> {
    pub fn new(n_wheels: usize, capacity: usize, lambda_bar: T) -> Self {
        HistoryStack {
            pairs: Vec::with_capacity(capacity),
            capacity,
            n_wheels,
            lambda_bar,
            fe_matrix: DMatrix::zeros(n_wheels, n_wheels),
            fe_target: DVector::zeros(n_wheels),
            lambda_min: T::zero(),
            fe_satisfied: false,
            fe_time: None,
        }
    }

    pub fn pairs(&self) -> &[IclPair<T>] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn fe_matrix(&self) -> &DMatrix<T> {
        &self.fe_matrix
    }

    pub fn lambda_min(&self) -> T {
        self.lambda_min
    }

    pub fn status(&self) -> FeStatus<T> {
        FeStatus {
            lambda_min: self.lambda_min,
            satisfied: self.fe_satisfied,
            fe_time: self.fe_time,
        }
    }

    /// `Σ 𝒴ᵢᵀ (delta_hᵢ + 𝒰ᵢ - 𝒴ᵢ θ)` over the stored pairs.
    pub fn icl_sum(&self, theta: &DVector<T>) -> DVector<T> {
        &self.fe_target - &self.fe_matrix * theta
    }

    /// Adds a pair while there is room. Once full, swaps out the stored pair
    /// whose replacement yields the largest minimum eigenvalue, provided that
    /// strictly improves on the current one; otherwise the candidate is
    /// dropped. Returns whether the stack changed.
    pub fn insert(&mut self, pair: IclPair<T>) -> bool {
        debug_assert_eq!(pair.script_y.ncols(), self.n_wheels);
        if self.capacity == 0 {
            return false;
        }
        let t_i = pair.t_i;
        if self.pairs.len() < self.capacity {
            self.pairs.push(pair);
        } else {
            let candidate = gram(&pair.script_y);
            let grams: Vec<DMatrix<T>> = self.pairs.iter().map(|p| gram(&p.script_y)).collect();
            let mut best: Option<(usize, T)> = None;
            for j in 0..self.pairs.len() {
                let mut m = candidate.clone();
                for (k, g) in grams.iter().enumerate() {
                    if k != j {
                        m += g;
                    }
                }
                let lam = min_eigenvalue(&m);
                if best.is_none_or(|(_, b)| lam > b) {
                    best = Some((j, lam));
                }
            }
            match best {
                Some((j, lam)) if lam > self.lambda_min => self.pairs[j] = pair,
                _ => return false,
            }
        }
        self.refresh(t_i);
        true
    }

    fn refresh(&mut self, t: T) {
        let n = self.n_wheels;
        let mut m = DMatrix::zeros(n, n);
        let mut v = DVector::zeros(n);
        for p in &self.pairs {
            let yt = p.script_y.transpose();
            m += &yt * &p.script_y;
            v += &yt * (p.delta_h + p.script_u);
        }
        self.fe_matrix = m;
        self.fe_target = v;
        // Symmetric PSD by construction; clip round-off below zero.
        self.lambda_min = min_eigenvalue(&self.fe_matrix).max(T::zero());
        if !self.fe_satisfied && self.lambda_min >= self.lambda_bar {
            self.fe_satisfied = true;
            self.fe_time = Some(t);
        }
    }
}

fn gram<T: Real>(y: &Matrix3xX<T>) -> DMatrix<T> {
    let yt = y.transpose();
    let g: DMatrix<T> = &yt * y;
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn cfg(n: usize) -> RwaConfig<f64> {
        RwaConfig {
            g: Matrix3xX::from_fn(n, |r, c| if r == c % 3 { 1.0 } else { 0.0 }),
            j_rw: 1e-3,
            max_torque: 0.02,
            max_speed: 1000.0,
            j_body: Matrix3::from_diagonal(&Vector3::new(1.0, 2.0, 3.0)),
        }
    }

    fn sample(t: f64, y: &Matrix3xX<f64>, omega: Vector3<f64>) -> IclSample<f64> {
        IclSample {
            t,
            omega,
            wheel_speeds: DVector::zeros(y.ncols()),
            y: y.clone(),
        }
    }

    #[test]
    fn constant_regressor_integrates_to_window_times_y() {
        let c = cfg(4);
        let y = Matrix3xX::from_fn(4, |r, k| (r + 2 * k) as f64 * 0.01);
        let mut buf = IclBuffer::new();
        for k in 0..=10 {
            buf.push(sample(k as f64 * 0.1, &y, Vector3::zeros()));
        }
        let p = icl_accumulate(&buf, 1.0, 1.0, &c).unwrap();
        assert!((p.script_y - &y * 1.0).abs().max() < 1e-15);
        assert_eq!(p.delta_h, Vector3::zeros());
        assert_eq!(p.script_u, Vector3::zeros());
    }

    #[test]
    fn constant_rate_gives_zero_momentum_change() {
        let c = cfg(3);
        let y = Matrix3xX::zeros(3);
        let w = Vector3::new(0.01, -0.02, 0.005);
        let mut buf = IclBuffer::new();
        for k in 0..=4 {
            buf.push(sample(k as f64 * 0.25, &y, w));
        }
        let p = icl_accumulate(&buf, 1.0, 1.0, &c).unwrap();
        assert_eq!(p.delta_h, Vector3::zeros());
        assert!(!p.has_information());
    }

    #[test]
    fn not_ready_without_coverage() {
        let c = cfg(3);
        let y = Matrix3xX::zeros(3);
        let mut buf = IclBuffer::new();
        for k in 3..=10 {
            buf.push(sample(k as f64 * 0.1, &y, Vector3::zeros()));
        }
        assert!(icl_accumulate(&buf, 1.0, 1.0, &c).is_none());
        assert!(icl_accumulate(&IclBuffer::new(), 1.0, 1.0, &c).is_none());
    }

    fn pair(ys: &[f64], n: usize) -> IclPair<f64> {
        assert_eq!(ys.len(), 3 * n);
        IclPair {
            script_y: Matrix3xX::from_column_slice(ys),
            script_u: Vector3::zeros(),
            delta_h: Vector3::zeros(),
            t_i: 0.0,
        }
    }

    #[test]
    fn first_insert_sets_fe_matrix() {
        let mut s = HistoryStack::new(2, 3, 1e-3);
        assert_eq!(
            s.status(),
            FeStatus {
                lambda_min: 0.0,
                satisfied: false,
                fe_time: None
            }
        );
        let p = pair(&[1.0, 0.0, 0.0, 2.0, 0.0, 0.0], 2);
        assert!(s.insert(p.clone()));
        assert_eq!(s.len(), 1);
        assert_eq!(s.fe_matrix(), &(p.script_y.transpose() * &p.script_y));
    }

    #[test]
    fn full_stack_rejects_useless_pair() {
        let mut s = HistoryStack::new(2, 2, 1e3);
        s.insert(pair(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 2));
        s.insert(pair(&[0.0, 0.0, 0.0, 0.5, 0.0, 0.0], 2));
        let before = s.fe_matrix().clone();
        assert!(!s.insert(pair(&[0.1, 0.0, 0.0, 0.0, 0.0, 0.0], 2)));
        assert_eq!(s.fe_matrix(), &before);
        // a stronger pair along wheel 2 improves the weak direction
        assert!(s.insert(pair(&[0.0, 0.0, 0.0, 3.0, 0.0, 0.0], 2)));
        assert!(s.lambda_min() > 1.0 - 1e-12);
    }

    #[test]
    fn latch_fires_once() {
        let mut s = HistoryStack::new(1, 1, 0.5);
        let mut p = pair(&[1.0, 0.0, 0.0], 1);
        p.t_i = 7.0;
        s.insert(p);
        assert_eq!(s.status().fe_time, Some(7.0));
        assert!(s.status().satisfied);
    }

    #[test]
    fn icl_sum_vanishes_at_true_parameters() {
        let theta = DVector::from_vec(vec![0.3, 1.0]);
        let mut p = pair(&[1.0, 0.5, 0.2, 0.0, 0.0, 1.0], 2);
        p.delta_h = &p.script_y * &theta;
        let mut s = HistoryStack::new(2, 4, 1.0);
        s.insert(p);
        assert!(s.icl_sum(&theta).norm() < 1e-15);
    }
}
