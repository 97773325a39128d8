//! Minimum enclosing balls of small point sets.

/// Relative slack used when testing whether a point lies in a candidate ball.
const CONTAIN_TOL: f64 = 1e-12;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Smallest ball containing `points`, as `(center, radius)`.
///
/// Welzl's recursion on the points in the given order. Support sets are
/// solved through their Gram system, so any ambient dimension works.
pub fn min_enclosing_ball(points: &[&[f64]]) -> (Vec<f64>, f64) {
    match points.len() {
        0 => (Vec::new(), 0.0),
        1 => (points[0].to_vec(), 0.0),
        _ => {
            let mut support: Vec<&[f64]> = Vec::with_capacity(points[0].len() + 1);
            let (c, r2) = welzl(points, &mut support, points[0].len());
            (c, r2.sqrt())
        }
    }
}

/// Twice the minimum enclosing radius: the smallest `t` at which balls of
/// radius `t/2` around `points` share a common point.
///
/// Never below the largest pairwise distance, so the pair rule holds
/// bit-exactly and faces never exceed their cofaces through rounding.
pub fn enclosing_diameter(points: &[&[f64]]) -> f64 {
    match points.len() {
        0 | 1 => 0.0,
        2 => dist2(points[0], points[1]).sqrt(),
        3 => triangle_diameter(points[0], points[1], points[2]),
        _ => {
            let mut pair_max: f64 = 0.0;
            for i in 0..points.len() {
                for j in i + 1..points.len() {
                    pair_max = pair_max.max(dist2(points[i], points[j]));
                }
            }
            let (_, r) = min_enclosing_ball(points);
            (2.0 * r).max(pair_max.sqrt())
        }
    }
}

fn triangle_diameter(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let ab = dist2(a, b);
    let ac = dist2(a, c);
    let bc = dist2(b, c);
    let longest = ab.max(ac).max(bc);
    if 2.0 * longest >= ab + ac + bc {
        // right or obtuse: the longest side is a diameter
        return longest.sqrt();
    }
    let dot: f64 = a.iter().zip(b).zip(c).map(|((x, y), z)| (y - x) * (z - x)).sum();
    let gram = ab * ac - dot * dot;
    if gram <= 0.0 {
        return longest.sqrt();
    }
    // 2R = |ab||ac||bc| / (2 * area), and 2 * area = sqrt(gram)
    ((ab * ac * bc) / gram).sqrt().max(longest.sqrt())
}

fn welzl<'a>(points: &[&'a [f64]], support: &mut Vec<&'a [f64]>, d: usize) -> (Vec<f64>, f64) {
    if points.is_empty() || support.len() == d + 1 {
        return circumball(support, d);
    }
    let (p, rest) = points.split_last().expect("nonempty");
    let (c, r2) = welzl(rest, support, d);
    if !c.is_empty() && dist2(&c, p) <= r2 * (1.0 + CONTAIN_TOL) + f64::MIN_POSITIVE {
        return (c, r2);
    }
    support.push(p);
    let out = welzl(rest, support, d);
    support.pop();
    out
}

/// Smallest ball with every support point on its boundary.
fn circumball(support: &[&[f64]], d: usize) -> (Vec<f64>, f64) {
    match support.len() {
        0 => (Vec::new(), -1.0),
        1 => (support[0].to_vec(), 0.0),
        2 => {
            let c: Vec<f64> = support[0].iter().zip(support[1]).map(|(a, b)| 0.5 * (a + b)).collect();
            let r2 = dist2(&c, support[0]);
            (c, r2)
        }
        m => match affine_circumcenter(support, d) {
            Some(c) => {
                let r2 = support.iter().map(|p| dist2(&c, p)).fold(0.0, f64::max);
                (c, r2)
            }
            None => degenerate_circumball(support, d, m),
        },
    }
}

/// Center in the affine hull of `support`, equidistant from all its points.
fn affine_circumcenter(support: &[&[f64]], d: usize) -> Option<Vec<f64>> {
    let p0 = support[0];
    let m = support.len() - 1;
    let v: Vec<Vec<f64>> = support[1..]
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    // 2 G lambda = diag(G) with G the Gram matrix of the edge vectors
    let mut a = vec![0.0; m * (m + 1)];
    let mut scale: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let g: f64 = v[i].iter().zip(&v[j]).map(|(x, y)| x * y).sum();
            a[i * (m + 1) + j] = 2.0 * g;
            if i == j {
                a[i * (m + 1) + m] = g;
                scale = scale.max(g);
            }
        }
    }
    let lambda = solve_augmented(&mut a, m, scale)?;
    let mut c = p0.to_vec();
    for (l, vj) in lambda.iter().zip(&v) {
        for k in 0..d {
            c[k] += l * vj[k];
        }
    }
    Some(c)
}

/// Gaussian elimination with partial pivoting on an `m x (m+1)` system.
fn solve_augmented(a: &mut [f64], m: usize, scale: f64) -> Option<Vec<f64>> {
    let w = m + 1;
    let tiny = 1e-13 * scale.max(f64::MIN_POSITIVE);
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| a[i * w + col].abs().total_cmp(&a[j * w + col].abs()))?;
        if a[pivot * w + col].abs() <= tiny {
            return None;
        }
        if pivot != col {
            for k in 0..w {
                a.swap(pivot * w + k, col * w + k);
            }
        }
        for row in col + 1..m {
            let f = a[row * w + col] / a[col * w + col];
            if f != 0.0 {
                for k in col..w {
                    a[row * w + k] -= f * a[col * w + k];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let mut s = a[row * w + m];
        for k in row + 1..m {
            s -= a[row * w + k] * x[k];
        }
        x[row] = s / a[row * w + row];
    }
    Some(x)
}

/// Affinely dependent support: fall back to the smallest ball through a
/// sub-support that still encloses all of it.
fn degenerate_circumball(support: &[&[f64]], d: usize, m: usize) -> (Vec<f64>, f64) {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for skip in 0..m {
        let sub: Vec<&[f64]> = (0..m).filter(|&i| i != skip).map(|i| support[i]).collect();
        let (c, r2) = circumball(&sub, d);
        if c.is_empty() {
            continue;
        }
        let fits = support.iter().all(|p| dist2(&c, p) <= r2 * (1.0 + 1e-9));
        if fits && best.as_ref().is_none_or(|b| r2 < b.1) {
            best = Some((c, r2));
        }
    }
    best.unwrap_or_else(|| {
        // nothing fits: use the farthest pair, then grow to cover the rest
        let mut far = (0, 1, -1.0);
        for i in 0..m {
            for j in i + 1..m {
                let q = dist2(support[i], support[j]);
                if q > far.2 {
                    far = (i, j, q);
                }
            }
        }
        let (c, _) = circumball(&[support[far.0], support[far.1]], d);
        let r2 = support.iter().map(|p| dist2(&c, p)).fold(0.0, f64::max);
        (c, r2)
    })
}
