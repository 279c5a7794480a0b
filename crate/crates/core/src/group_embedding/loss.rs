use crate::embedding::{dot, norm};
use crate::{Error, Result};

/// Sample label: `Positive` pulls the group vector toward the word,
/// `Negative` pushes it below the margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

fn cos_parts(x: &[f64], w: &[f64]) -> Result<(f64, f64, f64)> {
    let nx = norm(x);
    let nw = norm(w);
    if nx == 0.0 || nw == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(x, w) / (nx * nw), nx, nw))
}

/// Pairwise ranking loss: `1 - cos` for positives, `max(0, cos - margin)`
/// for negatives.
pub fn ranking_loss(x: &[f64], w: &[f64], label: Label, margin: f64) -> Result<f64> {
    let (c, _, _) = cos_parts(x, w)?;
    Ok(match label {
        Label::Positive => 1.0 - c,
        Label::Negative => (c - margin).max(0.0),
    })
}

/// Gradient of [`ranking_loss`] with respect to `x`, written into `out`.
/// Returns the loss. At the hinge point (`cos == margin`) the zero
/// subgradient is used.
pub fn loss_gradient_into(
    x: &[f64],
    w: &[f64],
    label: Label,
    margin: f64,
    out: &mut [f64],
) -> Result<f64> {
    let (c, nx, nw) = cos_parts(x, w)?;
    // d cos / dx = w / (|x||w|) - cos * x / |x|^2
    let (scale, loss) = match label {
        Label::Positive => (-1.0, 1.0 - c),
        Label::Negative if c > margin => (1.0, c - margin),
        Label::Negative => {
            out.iter_mut().for_each(|g| *g = 0.0);
            return Ok(0.0);
        }
    };
    let a = 1.0 / (nx * nw);
    let b = c / (nx * nx);
    for ((g, &xi), &wi) in out.iter_mut().zip(x).zip(w) {
        *g = scale * (a * wi - b * xi);
    }
    Ok(loss)
}

pub fn loss_gradient(x: &[f64], w: &[f64], label: Label, margin: f64) -> Result<Vec<f64>> {
    let mut g = vec![0.0; x.len()];
    loss_gradient_into(x, w, label, margin, &mut g)?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cosine;

    #[test]
    fn loss_cases() {
        let x = [0.3, -1.2, 2.0];
        assert_eq!(ranking_loss(&x, &x, Label::Positive, 0.5).unwrap(), 0.0);
        // cos = 0.4 and 0.9 via unit vectors at known angles
        let w = [1.0, 0.0];
        let at = |c: f64| [c, (1.0 - c * c).sqrt()];
        assert_eq!(ranking_loss(&at(0.4), &w, Label::Negative, 0.5).unwrap(), 0.0);
        let l = ranking_loss(&at(0.9), &w, Label::Negative, 0.5).unwrap();
        assert!((l - 0.4).abs() < 1e-12);
        assert!(matches!(ranking_loss(&[0.0, 0.0], &w, Label::Positive, 0.5), Err(Error::ZeroNorm)));
    }

    #[test]
    fn flat_region_has_zero_gradient() {
        let g = loss_gradient(&[0.0, 1.0], &[1.0, 0.1], Label::Negative, 0.5).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hinge_point_uses_zero_subgradient() {
        let x = [1.0, 1.0, 1.0, 1.0];
        let w = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(cosine(&x, &w).unwrap(), 0.5);
        let g = loss_gradient(&x, &w, Label::Negative, 0.5).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cosine_gradient_is_orthogonal_to_x() {
        let x = [0.3, -1.2, 2.0, 0.7];
        let w = [1.0, 0.5, -0.25, 2.0];
        let g = loss_gradient(&x, &w, Label::Positive, 0.5).unwrap();
        assert!(dot(&g, &x).abs() < 1e-12);
    }
}
