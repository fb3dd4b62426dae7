//! Random problem instances and fixtures shared by the unit tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::moments::Var1Model;

/// Two tradable series (stock and bond returns) driven by one persistent
/// predictor coordinate.
pub fn stock_bond_predictor_model() -> Var1Model {
    let nu = DVector::from_row_slice(&[0.0059, 0.0007, -0.0028]);
    let phi = DMatrix::from_row_slice(
        3,
        3,
        &[
            0.0, 0.0, 0.0060, //
            0.0, 0.0, 0.0035, //
            0.0, 0.0, 0.9597,
        ],
    );
    let sigma_eps = DMatrix::from_row_slice(
        3,
        3,
        &[
            0.0018, 0.0002, -0.0005, //
            0.0002, 0.0006, 0.0007, //
            -0.0005, 0.0007, 0.0802,
        ],
    );
    Var1Model::new(nu, phi, sigma_eps, vec![0, 1]).unwrap()
}

/// Random symmetric positive-definite matrix with eigenvalues drawn uniformly
/// from `[lambda_min, lambda_max]`.
pub fn random_spd<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    lambda_min: f64,
    lambda_max: f64,
) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = raw.qr().q();
    let lambdas = DVector::from_fn(k, |_, _| rng.random_range(lambda_min..=lambda_max));
    let scaled = {
        let mut m = q.clone();
        for j in 0..k {
            m.column_mut(j).scale_mut(lambdas[j]);
        }
        m
    };
    let spd = scaled * q.transpose();
    crate::linalg::symmetrize(&spd)
}

/// Random mean vector with entries uniform in `[-bound, bound]`.
pub fn random_mu<R: Rng + ?Sized>(rng: &mut R, k: usize, bound: f64) -> DVector<f64> {
    DVector::from_fn(k, |_, _| rng.random_range(-bound..=bound))
}
