//! Physical dimensions as integer exponents of `[Length, Time, Mass]`.

use std::fmt;
use std::ops::{Div, Mul};

use serde::{Deserialize, Serialize};

/// Exponents of length, time and mass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 3]", into = "[i32; 3]")]
pub struct Dimension {
    pub length: i32,
    pub time: i32,
    pub mass: i32,
}

impl Dimension {
    pub const DIMENSIONLESS: Dimension = Dimension::new(0, 0, 0);
    pub const LENGTH: Dimension = Dimension::new(1, 0, 0);
    pub const TIME: Dimension = Dimension::new(0, 1, 0);
    pub const MASS: Dimension = Dimension::new(0, 0, 1);
    pub const VELOCITY: Dimension = Dimension::new(1, -1, 0);

    pub const fn new(length: i32, time: i32, mass: i32) -> Self {
        Dimension { length, time, mass }
    }

    pub fn is_dimensionless(self) -> bool {
        self == Self::DIMENSIONLESS
    }

    pub fn inverse(self) -> Self {
        Dimension::new(-self.length, -self.time, -self.mass)
    }

    pub fn exps(self) -> [i32; 3] {
        [self.length, self.time, self.mass]
    }
}

impl From<[i32; 3]> for Dimension {
    fn from(e: [i32; 3]) -> Self {
        Dimension::new(e[0], e[1], e[2])
    }
}

impl From<Dimension> for [i32; 3] {
    fn from(d: Dimension) -> Self {
        d.exps()
    }
}

impl Mul for Dimension {
    type Output = Dimension;

    fn mul(self, rhs: Dimension) -> Dimension {
        Dimension::new(
            self.length + rhs.length,
            self.time + rhs.time,
            self.mass + rhs.mass,
        )
    }
}

impl Div for Dimension {
    type Output = Dimension;

    fn div(self, rhs: Dimension) -> Dimension {
        self * rhs.inverse()
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{}]", self.length, self.time, self.mass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dim() -> impl Strategy<Value = Dimension> {
        (-4i32..=4, -4i32..=4, -4i32..=4).prop_map(|(l, t, m)| Dimension::new(l, t, m))
    }

    #[test]
    fn velocity_is_length_over_time() {
        assert_eq!(Dimension::LENGTH / Dimension::TIME, Dimension::VELOCITY);
        assert_eq!(Dimension::VELOCITY.to_string(), "[1,-1,0]");
    }

    proptest! {
        #[test]
        fn group_laws(a in dim(), b in dim(), c in dim()) {
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!(a * Dimension::DIMENSIONLESS, a);
            prop_assert_eq!(a * a.inverse(), Dimension::DIMENSIONLESS);
            prop_assert_eq!(a * b, b * a);
            prop_assert_eq!((a / b) * b, a);
        }
    }
}
