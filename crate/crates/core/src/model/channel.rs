use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::{self, c, CMatrix, DEFAULT_CONDITION_CAP};

/// One uplink channel draw together with the inverse-derived matrices every
/// solver needs. The downlink is the transpose of `h` (reciprocity).
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    h: CMatrix,
    h_inv: CMatrix,
    w: CMatrix,
    w_star: CMatrix,
    rejections: usize,
}

impl ChannelRealization {
    pub fn new(h: CMatrix) -> Result<Self> {
        Self::with_condition_cap(h, DEFAULT_CONDITION_CAP)
    }

    pub fn with_condition_cap(h: CMatrix, cap: f64) -> Result<Self> {
        let h_inv = numerics::invert_with_cap(&h, cap)?;
        // (HᴴH)⁻¹ = H⁻¹H⁻ᴴ
        let w = numerics::hermitian_part(&(&h_inv * h_inv.adjoint()));
        let w_star = w.map(|z| z.conj());
        Ok(Self {
            h,
            h_inv,
            w,
            w_star,
            rejections: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    /// Uplink channel `H`.
    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn h_inv(&self) -> &CMatrix {
        &self.h_inv
    }

    /// `(HᴴH)⁻¹`.
    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    /// `(H*)⁻¹H⁻ᵀ`, the elementwise conjugate of [`Self::w`].
    pub fn w_star(&self) -> &CMatrix {
        &self.w_star
    }

    pub fn downlink(&self) -> CMatrix {
        self.h.transpose()
    }

    /// Draws discarded for violating the condition cap before this one.
    pub fn rejections(&self) -> usize {
        self.rejections
    }
}

/// I.i.d. unit-variance circularly-symmetric complex Gaussian channel,
/// redrawn until it passes the condition cap.
pub fn sample_channel(n: usize, rng_seed: u64) -> Result<ChannelRealization> {
    if n < 2 {
        return Err(Error::Dimension(format!("need at least 2 antennas, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut rejections = 0;
    loop {
        let h = random_gaussian_matrix(n, n, &mut rng);
        match ChannelRealization::new(h) {
            Ok(mut ch) => {
                ch.rejections = rejections;
                return Ok(ch);
            }
            Err(Error::IllConditioned { .. }) => rejections += 1,
            Err(e) => return Err(e),
        }
    }
}

pub(crate) fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> num_complex::Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(s * re, s * im)
}

pub(crate) fn random_gaussian_matrix<R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, 1.0))
}
