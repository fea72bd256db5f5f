//! Symmetric triangle rules and Gauss–Legendre rules on an interval.
//!
//! Triangle rules are stated in barycentric coordinates with weights
//! summing to one; multiply by the element area.

/// A triangle quadrature rule.
#[derive(Debug, Clone, Copy)]
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
    pub degree: u32,
}

const D4_A: f64 = 0.445_948_490_915_964_886_32;
const D4_WA: f64 = 0.223_381_589_678_011_465_70;
const D4_B: f64 = 0.091_576_213_509_770_743_46;
const D4_WB: f64 = 0.109_951_743_655_321_867_64;

/// 6-point rule, exact for polynomials of degree 4.
pub const DEGREE_4: TriangleRule = TriangleRule {
    points: &[
        [D4_A, D4_A, 1.0 - 2.0 * D4_A],
        [D4_A, 1.0 - 2.0 * D4_A, D4_A],
        [1.0 - 2.0 * D4_A, D4_A, D4_A],
        [D4_B, D4_B, 1.0 - 2.0 * D4_B],
        [D4_B, 1.0 - 2.0 * D4_B, D4_B],
        [1.0 - 2.0 * D4_B, D4_B, D4_B],
    ],
    weights: &[D4_WA, D4_WA, D4_WA, D4_WB, D4_WB, D4_WB],
    degree: 4,
};

// (6 - sqrt 15) / 21 and (6 + sqrt 15) / 21, weights (155 -+ sqrt 15) / 1200
const D5_A: f64 = 0.101_286_507_323_456_338_80;
const D5_WA: f64 = 0.125_939_180_544_827_152_60;
const D5_B: f64 = 0.470_142_064_105_115_089_77;
const D5_WB: f64 = 0.132_394_152_788_506_180_73;

/// 7-point rule, exact for polynomials of degree 5.
pub const DEGREE_5: TriangleRule = TriangleRule {
    points: &[
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [D5_A, D5_A, 1.0 - 2.0 * D5_A],
        [D5_A, 1.0 - 2.0 * D5_A, D5_A],
        [1.0 - 2.0 * D5_A, D5_A, D5_A],
        [D5_B, D5_B, 1.0 - 2.0 * D5_B],
        [D5_B, 1.0 - 2.0 * D5_B, D5_B],
        [1.0 - 2.0 * D5_B, D5_B, D5_B],
    ],
    weights: &[0.225, D5_WA, D5_WA, D5_WA, D5_WB, D5_WB, D5_WB],
    degree: 5,
};

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical coordinates of point `q` on the triangle with vertices `p`.
    pub fn map(&self, q: usize, p: &[[f64; 2]; 3]) -> [f64; 2] {
        let l = self.points[q];
        [
            l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
            l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
        ]
    }
}

/// Three-point Gauss–Legendre nodes and weights on `[0, 1]`.
pub const GAUSS3_UNIT: ([f64; 3], [f64; 3]) = (
    [
        0.5 - 0.387_298_334_620_741_688_52,
        0.5,
        0.5 + 0.387_298_334_620_741_688_52,
    ],
    [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
);
