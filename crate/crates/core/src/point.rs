//! Minimal 3-vector helpers.

pub type Point3 = [f64; 3];

pub fn sub(a: &Point3, b: &Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: &Point3, b: &Point3) -> Point3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: &Point3, s: f64) -> Point3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Point3) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &Point3, b: &Point3) -> f64 {
    norm(&sub(a, b))
}

/// Cosine of the angle between `a` and `b` seen from the origin; 1 if either is the origin.
pub fn cos_angle(a: &Point3, b: &Point3) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}
