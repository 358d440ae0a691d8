use std::fmt;

use num_complex::Complex64;

/// One of the two ports of a beamsplitter (or output of the interferometer).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Port {
    Zero,
    One,
}

impl Port {
    pub fn index(self) -> usize {
        match self {
            Port::Zero => 0,
            Port::One => 1,
        }
    }

    pub fn other(self) -> Port {
        match self {
            Port::Zero => Port::One,
            Port::One => Port::Zero,
        }
    }

    pub fn from_index(index: usize) -> Option<Port> {
        match index {
            0 => Some(Port::Zero),
            1 => Some(Port::One),
            _ => None,
        }
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// A single photon event: a unit phase vector and the port it is travelling on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Messenger {
    phase: Complex64,
    pub port: Port,
}

impl Messenger {
    /// Messenger with phase angle `psi`.
    pub fn from_angle(psi: f64, port: Port) -> Self {
        Self {
            phase: Complex64::from_polar(1.0, psi),
            port,
        }
    }

    /// Messenger carrying the direction of `v`. `v` must be non-zero.
    pub fn from_vector(v: Complex64, port: Port) -> Self {
        let norm = v.norm();
        assert!(norm > 0.0, "messenger phase vector must be non-zero");
        Self {
            phase: v / norm,
            port,
        }
    }

    /// `(cos psi, sin psi)` as a complex number.
    pub fn phase_vector(&self) -> Complex64 {
        self.phase
    }

    pub fn angle(&self) -> f64 {
        self.phase.arg()
    }

    /// Rotates the phase vector by `phi` radians.
    pub fn phase_shift(self, phi: f64) -> Self {
        // renormalize so repeated rotations cannot drift off the unit circle
        Self::from_vector(self.phase * Complex64::from_polar(1.0, phi), self.port)
    }

    pub fn on_port(self, port: Port) -> Self {
        Self { port, ..self }
    }
}
