//! Brute-force reference evaluations, written independently of the library
//! code paths: direct 2-D windows, explicit per-pixel loops, no shared helpers.

#![allow(dead_code)]

/// Mean SSIM of one plane using an explicit 11x11 Gaussian window per position.
pub fn naive_ssim_plane(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    const WIN: usize = 11;
    let sigma = 1.5f64;
    let mut kernel = [[0.0f64; WIN]; WIN];
    let mut norm = 0.0;
    for (j, row) in kernel.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            let dy = j as f64 - 5.0;
            let dx = i as f64 - 5.0;
            *v = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            norm += *v;
        }
    }
    let c1 = 0.0001; // (0.01 * 1)^2
    let c2 = 0.0009; // (0.03 * 1)^2
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=(h - WIN) {
        for x0 in 0..=(w - WIN) {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for j in 0..WIN {
                for i in 0..WIN {
                    let k = kernel[j][i] / norm;
                    let p = a[(y0 + j) * w + x0 + i];
                    let q = b[(y0 + j) * w + x0 + i];
                    ma += k * p;
                    mb += k * q;
                    saa += k * p * p;
                    sbb += k * q * q;
                    sab += k * p * q;
                }
            }
            let va = saa - ma * ma;
            let vb = sbb - mb * mb;
            let cov = sab - ma * mb;
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

pub struct BruteLoss {
    pub l_rgb: f64,
    pub l_i: f64,
    pub l_c: f64,
    pub l_total: f64,
}

/// Joint loss by explicit per-pixel summation over flat `[r, g, b]` arrays.
pub fn brute_total_loss(out: &[[f64; 3]], reference: &[[f64; 3]], w: usize, h: usize, eps: f64, lambda_i: f64, lambda_c: f64) -> BruteLoss {
    let n = w * h;
    let mut l1 = 0.0;
    for p in 0..n {
        for c in 0..3 {
            l1 += (out[p][c] - reference[p][c]).abs();
        }
    }
    l1 /= (3 * n) as f64;

    let mut ssim_rgb = 0.0;
    for c in 0..3 {
        let pa: Vec<f64> = out.iter().map(|px| px[c]).collect();
        let pb: Vec<f64> = reference.iter().map(|px| px[c]).collect();
        ssim_rgb += naive_ssim_plane(&pa, &pb, w, h);
    }
    ssim_rgb /= 3.0;

    let env = |px: &[f64; 3]| {
        let mut m = px[0];
        if px[1] > m {
            m = px[1];
        }
        if px[2] > m {
            m = px[2];
        }
        m
    };
    let ia: Vec<f64> = out.iter().map(env).collect();
    let ib: Vec<f64> = reference.iter().map(env).collect();
    let mut li = 0.0;
    for p in 0..n {
        li += (ia[p] - ib[p]).abs();
    }
    li = li / n as f64 + (1.0 - naive_ssim_plane(&ia, &ib, w, h));

    let mut lc = 0.0;
    for p in 0..n {
        for c in 0..3 {
            let ca = ((out[p][c] + eps) / (ia[p] + eps)).ln();
            let cb = ((reference[p][c] + eps) / (ib[p] + eps)).ln();
            lc += (ca - cb).abs();
        }
    }
    lc /= (3 * n) as f64;

    let l_rgb = l1 + (1.0 - ssim_rgb);
    BruteLoss {
        l_rgb,
        l_i: li,
        l_c: lc,
        l_total: l_rgb + lambda_i * li + lambda_c * lc,
    }
}
