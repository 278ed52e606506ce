//! Shape metrics of the region `{phi > threshold}`.

use crate::grid::ScalarField;

/// Connected components of `{phi > threshold}` under 4-connectivity; returns
/// the cell count of each component, largest first.
pub fn components(phi: &ScalarField, threshold: f64) -> Vec<usize> {
    let g = *phi.grid();
    let inside: Vec<bool> = phi.values().iter().map(|&v| v > threshold).collect();
    let mut label = vec![usize::MAX; g.n_cells()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..g.n_cells() {
        if !inside[start] || label[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        label[start] = id;
        stack.push(start);
        while let Some(k) = stack.pop() {
            size += 1;
            let (i, j) = (k % g.nx, k / g.nx);
            let mut visit = |n: usize| {
                if inside[n] && label[n] == usize::MAX {
                    label[n] = id;
                    stack.push(n);
                }
            };
            if i > 0 {
                visit(k - 1);
            }
            if i + 1 < g.nx {
                visit(k + 1);
            }
            if j > 0 {
                visit(k - g.nx);
            }
            if j + 1 < g.ny {
                visit(k + g.nx);
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Area and perimeter of `{phi > threshold}` from the piecewise-linear level
/// set through the cell centers (marching squares). The half cell next to
/// the walls is left out.
pub fn area_perimeter(phi: &ScalarField, threshold: f64) -> (f64, f64) {
    let g = *phi.grid();
    let (hx, hy) = (g.hx, g.hy);
    let mut area = 0.0;
    let mut perim = 0.0;
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            // corners counter-clockwise, relative to the lower-left center
            let c = [
                (0.0, 0.0, phi.at(i, j) - threshold),
                (hx, 0.0, phi.at(i + 1, j) - threshold),
                (hx, hy, phi.at(i + 1, j + 1) - threshold),
                (0.0, hy, phi.at(i, j + 1) - threshold),
            ];
            let mut poly: Vec<(f64, f64)> = Vec::with_capacity(8);
            let mut cuts: Vec<(f64, f64)> = Vec::with_capacity(4);
            for e in 0..4 {
                let (x0, y0, v0) = c[e];
                let (x1, y1, v1) = c[(e + 1) % 4];
                if v0 > 0.0 {
                    poly.push((x0, y0));
                }
                if (v0 > 0.0) != (v1 > 0.0) {
                    let s = v0 / (v0 - v1);
                    let p = (x0 + s * (x1 - x0), y0 + s * (y1 - y0));
                    poly.push(p);
                    cuts.push(p);
                }
            }
            area += shoelace(&poly);
            let seg = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
            match cuts.len() {
                2 => perim += seg(cuts[0], cuts[1]),
                4 => {
                    // saddle: pair crossings according to the center value
                    let center: f64 = c.iter().map(|p| p.2).sum::<f64>() / 4.0;
                    let inside_first = c[0].2 > 0.0;
                    if (center > 0.0) == inside_first {
                        perim += seg(cuts[0], cuts[1]) + seg(cuts[2], cuts[3]);
                    } else {
                        perim += seg(cuts[3], cuts[0]) + seg(cuts[1], cuts[2]);
                    }
                }
                _ => {}
            }
        }
    }
    (area, perim)
}

fn shoelace(p: &[(f64, f64)]) -> f64 {
    if p.len() < 3 {
        return 0.0;
    }
    let mut a = 0.0;
    for k in 0..p.len() {
        let (x0, y0) = p[k];
        let (x1, y1) = p[(k + 1) % p.len()];
        a += x0 * y1 - x1 * y0;
    }
    0.5 * a.abs()
}

/// `P^2 / (4 pi A)`: 1 for a disk, larger for any other shape.
pub fn isoperimetric_ratio(phi: &ScalarField, threshold: f64) -> f64 {
    let (a, p) = area_perimeter(phi, threshold);
    if a > 0.0 {
        p * p / (4.0 * std::f64::consts::PI * a)
    } else {
        f64::NAN
    }
}
