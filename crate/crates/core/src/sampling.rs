//! Reproducible point clouds and deterministic evaluation grids.
//!
//! Sampling uses ChaCha8 (pinned via `rand_chacha` 0.3; its output is
//! version-stable) with one substream per fixed-size index chunk, so a cloud
//! is a pure function of `(manifold, density, n, seed)` no matter how many
//! threads participate. Substream seeds are `seed ^ splitmix64(chunk)`; the
//! mixer keeps substreams of adjacent integer seeds from colliding.
//!
//! Proposals are uniform on the manifold (normalized Gaussians on spheres,
//! uniform angles on the torus); the target density is reached by rejection
//! with acceptance ratio `p / p_max`.

use rayon::prelude::*;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geom::{self, Point, ZERO_POINT};
use crate::manifolds::{Density, Manifold, ManifoldSpec};

const CHUNK: usize = 4096;

/// An immutable cloud of `n` on-manifold points with its seed provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    pub manifold: Manifold,
    pub density_id: String,
    pub seed: u64,
    pub points: Vec<Point>,
}

/// Rejection-sampler bookkeeping for diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct SampleStats {
    pub proposals: u64,
    pub accepted: u64,
}

impl SampleStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

impl SampleCloud {
    pub fn n(&self) -> usize {
        self.points.len()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn substream(seed: u64, chunk: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ splitmix64(chunk))
}

/// Draw `n` i.i.d. points from `p` times the volume measure.
pub fn sample(m: &Manifold, p: &Density, n: usize, seed: u64) -> Result<SampleCloud> {
    sample_with_stats(m, p, n, seed).map(|(cloud, _)| cloud)
}

/// [`sample`] returning rejection-sampler statistics as well.
pub fn sample_with_stats(
    m: &Manifold,
    p: &Density,
    n: usize,
    seed: u64,
) -> Result<(SampleCloud, SampleStats)> {
    if n == 0 {
        return Err(Error::domain("sample size must be >= 1"));
    }
    m.validate()?;
    let n_chunks = n.div_ceil(CHUNK);
    let parts: Vec<(Vec<Point>, SampleStats)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            let mut rng = substream(seed, c as u64);
            let mut pts = Vec::with_capacity(hi - lo);
            let mut stats = SampleStats::default();
            for _ in lo..hi {
                pts.push(draw_point(m, p, &mut rng, &mut stats));
            }
            (pts, stats)
        })
        .collect();
    let mut points = Vec::with_capacity(n);
    let mut stats = SampleStats::default();
    for (pts, s) in parts {
        points.extend(pts);
        stats.proposals += s.proposals;
        stats.accepted += s.accepted;
    }
    Ok((
        SampleCloud {
            manifold: *m,
            density_id: p.id(),
            seed,
            points,
        },
        stats,
    ))
}

fn draw_point(m: &Manifold, p: &Density, rng: &mut ChaCha8Rng, stats: &mut SampleStats) -> Point {
    loop {
        let x = uniform_proposal(m, rng);
        let u: f64 = rng.gen();
        stats.proposals += 1;
        if u < p.acceptance_ratio(m, &x) {
            stats.accepted += 1;
            return x;
        }
    }
}

fn uniform_proposal(m: &Manifold, rng: &mut ChaCha8Rng) -> Point {
    match *m {
        Manifold::Sphere { dim, radius } => loop {
            let mut x = ZERO_POINT;
            let mut n2 = 0.0;
            for c in x.iter_mut().take(dim + 1) {
                let g: f64 = rng.sample(StandardNormal);
                *c = g;
                n2 += g * g;
            }
            if n2 > 1e-200 {
                return geom::scale(&x, radius / n2.sqrt());
            }
        },
        Manifold::FlatTorus { r1, r2 } => {
            let a = rng.gen::<f64>() * std::f64::consts::TAU;
            let b = rng.gen::<f64>() * std::f64::consts::TAU;
            [r1 * a.cos(), r1 * a.sin(), r2 * b.cos(), r2 * b.sin()]
        }
    }
}

/// Deterministic quasi-uniform evaluation points.
///
/// Fibonacci lattice on `S^2`, uniform angles on `S^1`, a `k x k` angle
/// lattice on the torus (`count` is rounded to the nearest square), and a
/// Kronecker sequence mapped through the area-preserving chart on `S^3`.
pub fn eval_grid(m: &Manifold, count: usize) -> Result<Vec<Point>> {
    if count == 0 {
        return Err(Error::domain("evaluation grid needs at least one point"));
    }
    m.validate()?;
    let pts = match *m {
        Manifold::Sphere { dim: 1, radius } => (0..count)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / count as f64;
                [radius * t.cos(), radius * t.sin(), 0.0, 0.0]
            })
            .collect(),
        Manifold::Sphere { dim: 2, radius } => {
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    let phi = std::f64::consts::TAU * (i as f64 / golden).fract();
                    [radius * s * phi.cos(), radius * s * phi.sin(), radius * z, 0.0]
                })
                .collect()
        }
        Manifold::Sphere { dim: 3, radius } => {
            // Kronecker/R3 sequence pushed through the uniform chart
            let g = 1.220_744_084_605_759_5_f64; // root of x^4 = x + 1
            let alphas = [1.0 / g, 1.0 / (g * g), 1.0 / (g * g * g)];
            (0..count)
                .map(|i| {
                    let u = |k: usize| ((i as f64 + 0.5) * alphas[k]).fract();
                    let psi = inverse_sin2_cdf(u(0));
                    let z = 2.0 * u(1) - 1.0;
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    let phi = std::f64::consts::TAU * u(2);
                    let (sp, cp) = (psi.sin(), psi.cos());
                    [
                        radius * cp,
                        radius * sp * s * phi.cos(),
                        radius * sp * s * phi.sin(),
                        radius * sp * z,
                    ]
                })
                .collect()
        }
        Manifold::Sphere { .. } => unreachable!("validated dimensions are 1..=3"),
        Manifold::FlatTorus { r1, r2 } => {
            let k = (count as f64).sqrt().round().max(1.0) as usize;
            let mut pts = Vec::with_capacity(k * k);
            for i in 0..k {
                let a = std::f64::consts::TAU * i as f64 / k as f64;
                for j in 0..k {
                    let b = std::f64::consts::TAU * j as f64 / k as f64;
                    pts.push([r1 * a.cos(), r1 * a.sin(), r2 * b.cos(), r2 * b.sin()]);
                }
            }
            pts
        }
    };
    Ok(pts)
}

/// Inverse CDF of the `S^3` polar angle density `(2/pi) sin^2`.
fn inverse_sin2_cdf(u: f64) -> f64 {
    let target = u * std::f64::consts::PI / 2.0;
    let mut lo = 0.0;
    let mut hi = std::f64::consts::PI;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let f = 0.5 * (mid - mid.sin() * mid.cos());
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Write a cloud as CSV: metadata comment lines, a coordinate header, one
/// point per row. Floats use the shortest round-trip decimal form.
pub fn write_cloud_csv<W: Write>(cloud: &SampleCloud, mut w: W) -> Result<()> {
    writeln!(
        w,
        "# manifold: {}",
        serde_json::to_string(&cloud.manifold.spec())?
    )?;
    writeln!(w, "# density: {}", cloud.density_id)?;
    writeln!(w, "# seed: {}", cloud.seed)?;
    writeln!(w, "# n: {}", cloud.n())?;
    let m = cloud.manifold.ambient_dim();
    let header: Vec<String> = (0..m).map(|i| format!("x{i}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for pt in &cloud.points {
        let row: Vec<String> = pt.iter().take(m).map(|c| format!("{c}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Read a cloud written by [`write_cloud_csv`], re-validating the embedding
/// constraint.
pub fn read_cloud_csv<R: BufRead>(r: R) -> Result<SampleCloud> {
    let mut manifold: Option<Manifold> = None;
    let mut density_id = String::new();
    let mut seed = 0u64;
    let mut points = Vec::new();
    let mut header_seen = false;
    for line in r.lines() {
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("manifold:") {
                let spec: ManifoldSpec = serde_json::from_str(v.trim())?;
                manifold = Some(spec.build()?);
            } else if let Some(v) = rest.strip_prefix("density:") {
                density_id = v.trim().to_string();
            } else if let Some(v) = rest.strip_prefix("seed:") {
                seed = v
                    .trim()
                    .parse()
                    .map_err(|e| Error::config(format!("bad seed in cloud csv: {e}")))?;
            }
            continue;
        }
        if !header_seen {
            header_seen = true; // coordinate header row
            continue;
        }
        let mut pt = ZERO_POINT;
        for (i, field) in line.split(',').enumerate() {
            if i >= 4 {
                return Err(Error::config("cloud csv row has too many columns"));
            }
            pt[i] = field
                .trim()
                .parse()
                .map_err(|e| Error::config(format!("bad coordinate in cloud csv: {e}")))?;
        }
        points.push(pt);
    }
    let manifold =
        manifold.ok_or_else(|| Error::config("cloud csv missing manifold metadata"))?;
    for pt in &points {
        if !manifold.contains(pt, 1e-9) {
            return Err(Error::OffManifold {
                distance: manifold.embedding_defect(pt),
                tolerance: 1e-9,
            });
        }
    }
    Ok(SampleCloud {
        manifold,
        density_id,
        seed,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::chi_square_sf;

    #[test]
    fn cloud_is_deterministic() {
        let m = Manifold::unit_sphere2();
        let a = sample(&m, &Density::Uniform, 2000, 42).unwrap();
        let b = sample(&m, &Density::Uniform, 2000, 42).unwrap();
        assert_eq!(a, b);
        let c = sample(&m, &Density::Uniform, 2000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn points_satisfy_embedding_constraint() {
        for m in [
            Manifold::unit_sphere2(),
            Manifold::unit_circle(),
            Manifold::Sphere { dim: 3, radius: 2.0 },
            Manifold::FlatTorus { r1: 1.0, r2: 0.5 },
        ] {
            let cloud = sample(&m, &Density::Tilted { beta: 0.3 }, 5000, 7).unwrap();
            for pt in &cloud.points {
                assert!(m.contains(pt, 1e-12));
            }
        }
    }

    #[test]
    fn single_point_cloud() {
        let m = Manifold::unit_torus();
        let cloud = sample(&m, &Density::Uniform, 1, 0).unwrap();
        assert_eq!(cloud.n(), 1);
        assert!(m.contains(&cloud.points[0], 1e-12));
    }

    #[test]
    fn uniform_sphere_coordinate_means() {
        let n = 100_000;
        let m = Manifold::unit_sphere2();
        let cloud = sample(&m, &Density::Uniform, n, 123).unwrap();
        let bound = 4.0 / (n as f64).sqrt();
        for axis in 0..3 {
            let mean: f64 =
                cloud.points.iter().map(|p| p[axis]).sum::<f64>() / n as f64;
            assert!(mean.abs() < bound, "axis {axis}: mean {mean} vs {bound}");
        }
    }

    #[test]
    fn tilted_sphere_first_moment() {
        // E[x^0] = beta R/3; 4 standard errors of slack
        let n = 100_000;
        let beta = 0.5;
        let m = Manifold::unit_sphere2();
        let cloud = sample(&m, &Density::Tilted { beta }, n, 99).unwrap();
        let xs: Vec<f64> = cloud.points.iter().map(|p| p[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        let expect = beta / 3.0;
        assert!(
            (mean - expect).abs() < 4.0 * se,
            "mean {mean} vs {expect} (se {se})"
        );
    }

    #[test]
    fn rejection_acceptance_rate_matches_closed_form() {
        let m = Manifold::unit_sphere2();
        let p = Density::Tilted { beta: 0.5 };
        let (_, stats) = sample_with_stats(&m, &p, 70_000, 11).unwrap();
        assert!(stats.proposals > 100_000, "want >= 1e5 proposals");
        let got = stats.acceptance_rate();
        let expect = p.expected_acceptance_rate(&m);
        assert!(
            (got - expect).abs() < 0.1 * expect,
            "acceptance {got} vs {expect}"
        );
    }

    #[test]
    fn uniform_z_coordinate_is_uniform() {
        // chi-square goodness of fit of z against U[-1, 1], 20 bins
        let n = 100_000;
        let m = Manifold::unit_sphere2();
        let cloud = sample(&m, &Density::Uniform, n, 2024).unwrap();
        let bins = 20usize;
        let mut counts = vec![0usize; bins];
        for p in &cloud.points {
            let u = (p[2] + 1.0) / 2.0;
            let b = ((u * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let expect = n as f64 / bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        let p_value = chi_square_sf(bins - 1, chi2);
        assert!(p_value > 0.001, "chi2 {chi2}, p {p_value}");
    }

    #[test]
    fn eval_grid_properties() {
        let m = Manifold::unit_sphere2();
        let a = eval_grid(&m, 2).unwrap();
        let b = eval_grid(&m, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        // antipodal-ish: opposite hemispheres
        assert!(a[0][2] > 0.0 && a[1][2] < 0.0);

        let g = eval_grid(&m, 300).unwrap();
        let mut min_d = f64::INFINITY;
        for i in 0..g.len() {
            for j in (i + 1)..g.len() {
                min_d = min_d.min(geom::dist(&g[i], &g[j]));
            }
        }
        assert!(min_d > 0.0);
        for p in &g {
            assert!(m.contains(p, 1e-12));
        }

        let t = Manifold::unit_torus();
        let g = eval_grid(&t, 49).unwrap();
        assert_eq!(g.len(), 49); // 7 x 7 lattice

        for m in [Manifold::unit_circle(), Manifold::Sphere { dim: 3, radius: 1.0 }] {
            let g = eval_grid(&m, 100).unwrap();
            assert_eq!(g.len(), 100);
            for p in &g {
                assert!(m.contains(p, 1e-12));
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let m = Manifold::FlatTorus { r1: 1.0, r2: 0.5 };
        let cloud = sample(&m, &Density::Uniform, 200, 5).unwrap();
        let mut buf = Vec::new();
        write_cloud_csv(&cloud, &mut buf).unwrap();
        let back = read_cloud_csv(std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(cloud, back);
    }

    #[test]
    fn parallel_and_serial_sampling_agree() {
        let m = Manifold::unit_sphere2();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| sample(&m, &Density::Uniform, 10_000, 314).unwrap());
        let parallel = sample(&m, &Density::Uniform, 10_000, 314).unwrap();
        assert_eq!(serial, parallel);
    }
}
