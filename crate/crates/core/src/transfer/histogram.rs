use crate::image::Image2D;
use crate::{Error, Result};

/// CDF-based histogram specification.
///
/// Each acceptor value is placed at its empirical CDF position `p` (tied
/// values share the mid-rank position) and replaced by the donor quantile at
/// `p`, linearly interpolated between order statistics. The mapping is
/// monotone non-decreasing.
pub fn histogram_match(acceptor: &Image2D, donor: &Image2D) -> Result<Image2D> {
    if acceptor.is_empty() || donor.is_empty() {
        return Err(Error::InvalidInput("histogram matching needs non-empty images".into()));
    }
    let src = acceptor.data();
    let n = src.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| src[a].total_cmp(&src[b]).then(a.cmp(&b)));

    let mut sorted_donor = donor.data().to_vec();
    sorted_donor.sort_by(f64::total_cmp);
    let m = sorted_donor.len();
    let quantile = |p: f64| {
        let pos = p * (m - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(m - 1);
        let t = pos - lo as f64;
        if t == 0.0 {
            sorted_donor[lo]
        } else {
            sorted_donor[lo] + t * (sorted_donor[hi] - sorted_donor[lo])
        }
    };

    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let v = src[order[start]];
        let mut end = start + 1;
        while end < n && src[order[end]] == v {
            end += 1;
        }
        let mid_rank = (start + end - 1) as f64 / 2.0;
        let p = if n > 1 { mid_rank / (n - 1) as f64 } else { 0.5 };
        let mapped = quantile(p);
        for &i in &order[start..end] {
            out[i] = mapped;
        }
        start = end;
    }
    Image2D::new(acceptor.width(), acceptor.height(), out)
}
