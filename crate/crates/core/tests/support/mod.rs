//! Shared test oracles: an independent projected-gradient solver for the
//! weight problem and a no-index brute-force scoring pipeline.

use brdad::{
    apply_scale, brute_force_knn, fit_scale, solve_srm, AvgDistanceProfile, BagPartition, Dataset,
    WeightVector,
};
use rand::Rng;

/// `reg * ||w||_2 + <r, w>`.
pub fn objective(reg: f64, r: &[f64], w: &[f64]) -> f64 {
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    reg * norm + w.iter().zip(r).map(|(wi, ri)| wi * ri).sum::<f64>()
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&vi| (vi - theta).max(0.0)).collect()
}

/// Projected (sub)gradient descent over the simplex with a 1/L step and
/// best-iterate tracking. The objective is smooth on the simplex, so the
/// subgradient is the gradient everywhere the iterates go.
pub fn oracle_minimize(reg: f64, r: &[f64], max_iters: usize) -> (Vec<f64>, f64) {
    let s = r.len();
    let mut w = vec![1.0 / s as f64; s];
    let step = 1.0 / (reg * (s as f64).sqrt()).max(1e-12);
    let mut best = objective(reg, r, &w);
    let mut best_w = w.clone();
    let mut stalled = 0usize;
    for _ in 0..max_iters {
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        let moved: Vec<f64> = w
            .iter()
            .zip(r)
            .map(|(wi, ri)| wi - step * (reg * wi / norm + ri))
            .collect();
        w = project_simplex(&moved);
        let obj = objective(reg, r, &w);
        if obj < best - 1e-15 {
            best = obj;
            best_w = w.clone();
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 500 {
                break;
            }
        }
    }
    (best_w, best)
}

/// Uniform sample from the simplex via normalized exponentials.
pub fn random_simplex<R: Rng>(rng: &mut R, s: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..s)
        .map(|_| -(rng.random_range(1e-12..1.0f64).ln()))
        .collect();
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v
}

/// Dense copy of a weight vector padded with zeros to length `s`.
pub fn dense_weights(w: &WeightVector, s: usize) -> Vec<f64> {
    let mut out = vec![0.0; s];
    out[..w.cutoff()].copy_from_slice(w.weights());
    out
}

/// From-scratch scoring pipeline that never builds a spatial index:
/// leave-one-out profiles and all reference distances come from full
/// scans. Shares only the weight solver with the library path.
pub fn brute_pipeline_scores(data: &Dataset, partition: &BagPartition, scale: bool) -> Vec<f64> {
    let transform = scale.then(|| fit_scale(data));
    let working = match &transform {
        Some(t) => apply_scale(t, data),
        None => data.clone(),
    };
    let d = working.d();
    let b = partition.bag_count();

    struct OracleBag {
        weights: WeightVector,
        refs: Vec<f64>,
        rows: Vec<usize>,
    }

    let bags: Vec<OracleBag> = partition
        .pairs()
        .iter()
        .map(|(fit_idx, ref_idx)| {
            let pts = working.gather(fit_idx);
            let s = fit_idx.len();
            let mut sums = vec![0.0; s - 1];
            for j in 0..s {
                let hits = brute_force_knn(&pts, d, &pts[j * d..(j + 1) * d], s - 1, Some(j))
                    .expect("oracle knn");
                for (i, h) in hits.iter().enumerate() {
                    sums[i] += h.distance;
                }
            }
            for v in &mut sums {
                *v /= s as f64;
            }
            let profile = AvgDistanceProfile::new(sums).expect("oracle profile");
            OracleBag {
                weights: solve_srm(&profile, b).expect("oracle weights"),
                refs: working.gather(ref_idx),
                rows: ref_idx.clone(),
            }
        })
        .collect();

    (0..working.n())
        .map(|i| {
            let q = working.row(i);
            let total: f64 = bags
                .iter()
                .map(|bag| {
                    let s = bag.rows.len();
                    let pos = bag.rows.iter().position(|&r| r == i);
                    let effective = s - usize::from(pos.is_some());
                    let cutoff = bag.weights.cutoff();
                    let k = cutoff.min(effective);
                    let hits = brute_force_knn(&bag.refs, d, q, k, pos).expect("oracle scan");
                    let w = bag.weights.weights();
                    let mut acc = 0.0;
                    for t in 0..k {
                        acc += w[t] * hits[t].distance;
                    }
                    if k < cutoff {
                        acc += w[k..].iter().sum::<f64>() * hits[k - 1].distance;
                    }
                    acc
                })
                .sum();
            total / b as f64
        })
        .collect()
}
