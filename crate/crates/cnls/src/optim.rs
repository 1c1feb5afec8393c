//! Derivative-free search utilities: a low-discrepancy direction
//! sequence on the unit sphere of `R^d` and a compact Nelder–Mead
//! simplex minimizer.  Both are deterministic given their seeds.

/// Additive-recurrence (Kronecker) low-discrepancy sequence in `[0,1)^d`
/// using the generalized golden-ratio constants, mapped to unit-sphere
/// directions through paired Box–Muller transforms.
pub struct SphereSequence {
    alphas: Vec<f64>,
    state: Vec<f64>,
    dim: usize,
}

impl SphereSequence {
    /// `dim` must be even (it is `2N` for the complex sphere in `C^N`).
    /// The seed offsets the recurrence start.
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 2 && dim % 2 == 0);
        // x_{d} solves x^{d+1} = x + 1; alphas_j = x^{-(j+1)} mod 1.
        let mut x = 1.5f64;
        for _ in 0..64 {
            x = (1.0 + x).powf(1.0 / (dim as f64 + 1.0));
        }
        let alphas: Vec<f64> = (0..dim).map(|j| x.powi(-(j as i32 + 1)) % 1.0).collect();
        // Deterministic seed-dependent start point.
        let mut state: Vec<f64> = (0..dim)
            .map(|j| {
                let h = seed
                    .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                    .wrapping_add(j as u64 + 1);
                (h >> 11) as f64 / (1u64 << 53) as f64 + 0.5
            })
            .map(|v| v % 1.0)
            .collect();
        for s in &mut state {
            if *s <= 0.0 {
                *s += 1.0;
            }
        }
        SphereSequence {
            alphas,
            state,
            dim,
        }
    }

    fn next_cube(&mut self) -> Vec<f64> {
        for (s, a) in self.state.iter_mut().zip(&self.alphas) {
            *s += a;
            if *s >= 1.0 {
                *s -= 1.0;
            }
        }
        self.state.clone()
    }

    /// Next unit vector in `R^dim`.
    pub fn next_direction(&mut self) -> Vec<f64> {
        loop {
            let u = self.next_cube();
            let mut v = Vec::with_capacity(self.dim);
            for pair in u.chunks_exact(2) {
                let r = (-2.0 * (1.0 - pair[0]).max(1e-300).ln()).sqrt();
                let phi = std::f64::consts::TAU * pair[1];
                v.push(r * phi.cos());
                v.push(r * phi.sin());
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for x in &mut v {
                    *x /= norm;
                }
                return v;
            }
        }
    }
}

/// Options for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iters: usize,
    /// Stop when the simplex function spread falls below this.
    pub f_tol: f64,
    /// Initial simplex edge length.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iters: 400,
            f_tol: 1e-13,
            initial_step: 0.05,
        }
    }
}

/// Minimize `f` from `x0` with the standard Nelder–Mead moves
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
/// Returns the best point and value seen.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: NelderMeadOptions) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.initial_step * if x0[i].abs() > 1.0 { x0[i].abs() } else { 1.0 };
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    for _ in 0..opts.max_iters {
        // Order best..worst.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        if (values[worst] - values[best]).abs() <= opts.f_tol {
            break;
        }

        // Centroid of all but the worst.
        let mut centroid = vec![0.0; n];
        for &i in order.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / n as f64;
            }
        }
        let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        };

        let reflected = lerp(&centroid, &simplex[worst], -1.0);
        let f_reflected = f(&reflected);
        if f_reflected < values[best] {
            let expanded = lerp(&centroid, &simplex[worst], -2.0);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            let contracted = if f_reflected < values[worst] {
                lerp(&centroid, &simplex[worst], -0.5)
            } else {
                lerp(&centroid, &simplex[worst], 0.5)
            };
            let f_contracted = f(&contracted);
            if f_contracted < values[worst].min(f_reflected) {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // Shrink toward the best vertex.
                let best_point = simplex[best].clone();
                for i in 0..=n {
                    if i == best {
                        continue;
                    }
                    simplex[i] = lerp(&best_point, &simplex[i], 0.5);
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2) + 2.0;
        let (x, v) = nelder_mead(f, &[0.0, 0.0], NelderMeadOptions::default());
        assert!((x[0] - 1.5).abs() < 1e-5);
        assert!((x[1] + 0.5).abs() < 1e-5);
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn nelder_mead_handles_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            max_iters: 4000,
            ..Default::default()
        };
        let (x, _) = nelder_mead(f, &[-1.2, 1.0], opts);
        assert!((x[0] - 1.0).abs() < 1e-3);
        assert!((x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sphere_sequence_yields_unit_vectors() {
        let mut seq = SphereSequence::new(4, 0);
        let mut mean = vec![0.0; 4];
        for _ in 0..2000 {
            let v = seq.next_direction();
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>();
            assert!((norm - 1.0).abs() < 1e-12);
            for (m, x) in mean.iter_mut().zip(&v) {
                *m += x / 2000.0;
            }
        }
        // Directions should be roughly balanced.
        for m in mean {
            assert!(m.abs() < 0.05, "mean component {m}");
        }
    }

    #[test]
    fn sphere_sequence_deterministic_per_seed() {
        let mut a = SphereSequence::new(6, 3);
        let mut b = SphereSequence::new(6, 3);
        let mut c = SphereSequence::new(6, 4);
        let va = a.next_direction();
        let vb = b.next_direction();
        let vc = c.next_direction();
        assert_eq!(va, vb);
        assert_ne!(va, vc);
    }
}
