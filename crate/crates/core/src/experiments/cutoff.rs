use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, ExperimentReport, MetricRow};
use crate::error::{Error, Result};
use crate::function_space::{BasisSpec, DomainSpec};
use crate::net::{ShallowNet, Weights};
use crate::zoo::FunctionalSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    /// `N`: inputs kept by the truncated network.
    pub n_cut: usize,
    /// Tail bounds `δ`, decreasing. `0` is allowed and means a zero tail.
    pub deltas: Vec<f64>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    /// Monte Carlo points per unit for the H¹ box norms.
    #[serde(default = "default_samples")]
    pub h1_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    10_000
}

/// Compares a trained dense network `f_m` over `N_full` inputs with `f*_m`,
/// the same network with every weight on inputs beyond `n_cut` removed.
///
/// For each `δ` the largest gap `|f*_m(v) − f_m(v)|` over samples of the cut
/// domain is compared with the certified bound `(Σ_j |γ_j|)·δ`, computed after
/// rescaling every unit to `|w_j|₁ = 1`. The network obtained by dropping the
/// units that read beyond `n_cut` is checked against the per-unit bound
/// `(√13/2)|γ_j|(2δ)^{(N_j − N)/2}` on the H¹ norm over the box
/// `(−1/2, 1/2)^N × (−δ, δ)^{N_j − N}`; that bound presumes `|t_j| ≤ 1`.
pub fn cutoff_study(f: &FunctionalSpec, net: &ShallowNet, cfg: &CutoffConfig) -> Result<ExperimentReport> {
    let n_full = net.n_inputs();
    if cfg.n_cut == 0 || cfg.n_cut >= n_full {
        return Err(Error::InvalidArgument(format!(
            "n_cut must lie in 1..{n_full}, got {}",
            cfg.n_cut
        )));
    }
    if cfg.deltas.is_empty() || cfg.deltas.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidArgument("deltas must be nonempty and strictly decreasing".into()));
    }
    if cfg.n_samples == 0 || cfg.h1_samples == 0 {
        return Err(Error::InvalidArgument("sample counts must be positive".into()));
    }
    for &d in &cfg.deltas {
        if d != 0.0 {
            DomainSpec::Cut { n: cfg.n_cut, delta: d }.validate()?;
        } else if d.is_sign_negative() {
            return Err(Error::InvalidDomain("delta must be nonnegative".into()));
        }
    }

    let mut fm = net.to_dense();
    fm.normalize();
    let fstar = fm.truncate_inputs(cfg.n_cut);
    let gamma_l1 = fm.gamma_l1();
    let tail_l1: Vec<f64> = fm
        .units()
        .iter()
        .map(|u| match &u.weights {
            Weights::Dense { w } => w[cfg.n_cut..].iter().map(|x| x.abs()).sum(),
            Weights::Coordinate { .. } => unreachable!("dense form"),
        })
        .collect();
    let dropped: Vec<usize> = (0..fm.width()).filter(|&j| fm.unit_support(j) > cfg.n_cut).collect();
    let t_in_range = dropped.iter().all(|&j| fm.units()[j].t.abs() <= 1.0);

    let mut report = ExperimentReport::new("cutoff", &f.name);
    report.notes.push(format!(
        "network normalized to |w_j|_1 = 1; sum |gamma_j| = {gamma_l1}; {} of {} units read beyond N = {}",
        dropped.len(),
        fm.width(),
        cfg.n_cut
    ));
    if !t_in_range {
        report.notes.push(
            "some dropped units have |t_j| > 1 after normalization; the H1 bound does not apply to them"
                .into(),
        );
    }

    let mut first_ok = true;
    let mut second_ok = true;
    for (di, &delta) in cfg.deltas.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, di as u64));
        let mut max_gap = 0.0f64;
        let domain = DomainSpec::Cut {
            n: cfg.n_cut,
            delta: if delta > 0.0 { delta } else { 0.25 },
        };
        for _ in 0..cfg.n_samples {
            let mut b = domain.sample_rng(BasisSpec::default(), n_full, &mut rng)?.coeffs().to_vec();
            if delta == 0.0 {
                b[cfg.n_cut..].iter_mut().for_each(|x| *x = 0.0);
            }
            let gap = (fstar.forward(&b)? - fm.forward(&b)?).abs();
            max_gap = max_gap.max(gap);
        }
        let certified = gamma_l1 * delta;
        let tail_bound: f64 = fm
            .units()
            .iter()
            .zip(&tail_l1)
            .map(|(u, t)| u.gamma.abs() * t * delta)
            .sum();
        first_ok &= max_gap <= certified;

        let mut h1_est = 0.0;
        let mut h1_bound = 0.0;
        if delta > 0.0 {
            for (k, &j) in dropped.iter().enumerate() {
                let nj = fm.unit_support(j);
                let est = h1_box_norm_estimate(
                    &fm,
                    &[j],
                    cfg.n_cut,
                    nj,
                    delta,
                    cfg.h1_samples,
                    derive_seed(cfg.seed, 1_000_000 + (di * fm.width() + k) as u64),
                )?;
                let bound = 13f64.sqrt() / 2.0
                    * fm.units()[j].gamma.abs()
                    * (2.0 * delta).powf((nj - cfg.n_cut) as f64 / 2.0);
                if fm.units()[j].t.abs() <= 1.0 {
                    second_ok &= est <= bound;
                }
                h1_est += est;
                h1_bound += bound;
            }
        }

        let mut row = MetricRow::labeled(format!("delta={delta}"))
            .with("observed_max_gap", max_gap)
            .with("certified_bound", certified)
            .with("tail_weight_bound", tail_bound)
            .with("h1_dropped_estimate", h1_est)
            .with("h1_dropped_bound", h1_bound)
            .with("dropped_units", dropped.len() as f64);
        row.delta = Some(delta);
        row.m = Some(fm.width());
        row.n_inputs = Some(n_full);
        row.path_norm = Some(fm.path_norm());
        report.rows.push(row);
    }
    report.checks.insert("first_inequality".into(), first_ok);
    report.checks.insert("second_inequality_constructive".into(), second_ok);
    Ok(report)
}

/// Monte Carlo estimate of the H¹ norm of `Σ_{j ∈ units} γ_j ReLU(w_j·b − t_j)`
/// over the box `(−1/2, 1/2)^{n_head} × (−δ, δ)^{n_total − n_head}` (Lebesgue
/// measure), reading only the first `n_total` inputs.
pub fn h1_box_norm_estimate(
    net: &ShallowNet,
    units: &[usize],
    n_head: usize,
    n_total: usize,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if n_total > net.n_inputs() || n_head > n_total {
        return Err(Error::InvalidArgument("box dimensions exceed the network inputs".into()));
    }
    let dense = net.to_dense();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = vec![0.0; net.n_inputs()];
    let mut grad = vec![0.0; n_total];
    let mut acc = 0.0;
    for _ in 0..samples {
        for (i, x) in b.iter_mut().enumerate().take(n_total) {
            let h = if i < n_head { 0.5 } else { delta };
            *x = rng.gen_range(-h..h);
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        for &j in units {
            let u = &dense.units()[j];
            let Weights::Dense { w } = &u.weights else {
                unreachable!("dense form")
            };
            let z: f64 = w[..n_total].iter().zip(&b).map(|(w, b)| w * b).sum::<f64>() - u.t;
            if z > 0.0 {
                value += u.gamma * z;
                for (g, wi) in grad.iter_mut().zip(w) {
                    *g += u.gamma * wi;
                }
            }
        }
        acc += value * value + grad.iter().map(|g| g * g).sum::<f64>();
    }
    let volume = (2.0 * delta).powi((n_total - n_head) as i32);
    Ok((volume * acc / samples as f64).sqrt())
}
