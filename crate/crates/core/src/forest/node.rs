use crate::error::{Error, Result};

/// Least-squares slope of `y` on binary `a`: cov(a, y) / var(a), which for
/// a binary treatment is the difference of arm means.
pub fn node_theta(a: &[f64], y: &[f64]) -> Result<f64> {
    let members: Vec<u32> = (0..a.len() as u32).collect();
    Ok(NodeFit::new(&members, a, y)?.theta)
}

/// Centred moments of one node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeFit {
    pub mean_a: f64,
    pub mean_y: f64,
    /// Mean of squared treatment deviations.
    pub w: f64,
    pub theta: f64,
}

impl NodeFit {
    pub fn new(members: &[u32], a: &[f64], y: &[f64]) -> Result<Self> {
        let m = members.len() as f64;
        if members.is_empty() {
            return Err(Error::DegenerateNode);
        }
        let (mut sa, mut sy) = (0.0, 0.0);
        for &i in members {
            sa += a[i as usize];
            sy += y[i as usize];
        }
        let mean_a = sa / m;
        let mean_y = sy / m;
        let (mut saa, mut say) = (0.0, 0.0);
        for &i in members {
            let da = a[i as usize] - mean_a;
            saa += da * da;
            say += da * (y[i as usize] - mean_y);
        }
        if saa <= 0.0 {
            return Err(Error::DegenerateNode);
        }
        Ok(NodeFit {
            mean_a,
            mean_y,
            w: saa / m,
            theta: say / saa,
        })
    }
}

/// Gradient pseudo-outcomes of a mother node, one per member:
/// `rho_i = (a_i - mean_a) (y_i - mean_y - (a_i - mean_a) theta) / w`.
pub fn label_pseudo_outcomes(members: &[u32], a: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let mut rho = Vec::with_capacity(members.len());
    label_into(members, a, y, &mut rho)?;
    Ok(rho)
}

pub(crate) fn label_into(members: &[u32], a: &[f64], y: &[f64], rho: &mut Vec<f64>) -> Result<()> {
    let fit = NodeFit::new(members, a, y)?;
    rho.clear();
    rho.extend(members.iter().map(|&i| {
        let da = a[i as usize] - fit.mean_a;
        da * (y[i as usize] - fit.mean_y - da * fit.theta) / fit.w
    }));
    debug_assert!({
        let sum: f64 = rho.iter().sum();
        let scale = rho.iter().fold(1.0_f64, |m, r| m.max(r.abs()));
        sum.abs() <= 1e-10 * rho.len() as f64 * scale
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn theta_is_difference_of_means() {
        let t = node_theta(&[1.0, 1.0, 0.0, 0.0], &[3.0, 1.0, 2.0, 0.0]).unwrap();
        assert!((t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_outcome_has_zero_effect() {
        let t = node_theta(&[1.0, 0.0, 1.0, 0.0, 0.0], &[0.7; 5]).unwrap();
        assert!(t.abs() < 1e-15);
    }

    #[test]
    fn single_arm_is_degenerate() {
        assert!(matches!(
            node_theta(&[1.0; 4], &[3.0, 1.0, 2.0, 0.0]),
            Err(Error::DegenerateNode)
        ));
        assert!(matches!(
            label_pseudo_outcomes(&[0, 1], &[0.0, 0.0], &[1.0, 2.0]),
            Err(Error::DegenerateNode)
        ));
    }

    #[test]
    fn two_point_node_has_zero_labels() {
        let rho = label_pseudo_outcomes(&[0, 1], &[1.0, 0.0], &[0.3, 1.9]).unwrap();
        assert!(rho.iter().all(|r| r.abs() < 1e-15), "{rho:?}");
    }

    proptest! {
        #[test]
        fn theta_shift_invariant_and_linear(
            ys in proptest::collection::vec(-10.0f64..10.0, 6..30),
            shift in -50.0f64..50.0,
            scale in -5.0f64..5.0,
        ) {
            let a: Vec<f64> = (0..ys.len()).map(|i| (i % 2) as f64).collect();
            let base = node_theta(&a, &ys).unwrap();
            let shifted: Vec<f64> = ys.iter().map(|y| y + shift).collect();
            let scaled: Vec<f64> = ys.iter().map(|y| y * scale).collect();
            prop_assert!((node_theta(&a, &shifted).unwrap() - base).abs() < 1e-9);
            prop_assert!((node_theta(&a, &scaled).unwrap() - scale * base).abs() < 1e-9);
        }

        #[test]
        fn labels_sum_to_zero(
            ys in proptest::collection::vec(0.0f64..20.0, 4..200),
            seed in 0u64..1000,
        ) {
            let a: Vec<f64> = (0..ys.len()).map(|i| (i as u64 * 7 + seed).is_multiple_of(3) as u8 as f64).collect();
            prop_assume!(a.contains(&1.0) && a.contains(&0.0));
            let members: Vec<u32> = (0..ys.len() as u32).collect();
            let rho = label_pseudo_outcomes(&members, &a, &ys).unwrap();
            let sum: f64 = rho.iter().sum();
            prop_assert!(sum.abs() <= 1e-10 * ys.len() as f64);
        }
    }
}
