//! Shared fixtures for unit tests.

use rand::Rng;

use crate::circuit::{CircuitParams, GateAngles};

pub fn random_gate_angles(rng: &mut impl Rng) -> GateAngles {
    GateAngles::new(
        rng.gen_range(0.0..std::f64::consts::TAU),
        rng.gen_range(0.0..std::f64::consts::TAU),
        rng.gen_range(0.0..std::f64::consts::TAU),
    )
}

pub fn random_circuit_params(rng: &mut impl Rng) -> CircuitParams {
    CircuitParams {
        a1: random_gate_angles(rng),
        a2: random_gate_angles(rng),
        b1: random_gate_angles(rng),
        b2: random_gate_angles(rng),
    }
}

/// First of the two fixed non-optimal parameter sets used to contrast
/// state-dependent estimation error against the flat optimum.
pub fn theta1() -> CircuitParams {
    CircuitParams {
        a1: GateAngles::new(2.01, 1.32, 0.51),
        a2: GateAngles::new(0.00, 4.60, 4.24),
        b1: GateAngles::new(0.95, 5.56, 4.48),
        b2: GateAngles::new(2.35, 0.54, 0.60),
    }
}

/// Second fixed non-optimal parameter set.
pub fn theta2() -> CircuitParams {
    CircuitParams {
        a1: GateAngles::new(2.26, 2.48, 5.25),
        a2: GateAngles::new(3.07, 5.18, 6.07),
        b1: GateAngles::new(1.47, 5.88, 5.3),
        b2: GateAngles::new(1.18, 1.09, 3.68),
    }
}
