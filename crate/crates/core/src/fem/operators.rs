use std::sync::Arc;

use super::assembly::{grad_coupling, mass_p2, p1_mass_rows, pressure_laplacian, stiffness_p2};
use super::basis::P2_NODES;
use super::space::{CompositeVelocity, FieldP1Scalar, FieldP2Vector, SpaceP1, SpaceP2Vector};
use super::FemError;
use crate::mesh::SimplicialMesh;
use crate::quadrature::QuadratureRule;
use crate::sparse::{dot, CsrMatrix};

/// The velocity/pressure spaces on one mesh with their assembled
/// time-independent operators.
#[derive(Debug, Clone)]
pub struct Operators {
    velocity: SpaceP2Vector,
    pressure: SpaceP1,
    /// Vector P2 mass matrix.
    pub mass: CsrMatrix,
    /// Vector P2 stiffness matrix.
    pub stiffness: CsrMatrix,
    /// `v^T G q = (grad q, v)`.
    pub grad: CsrMatrix,
    /// P1 stiffness.
    pub laplacian: CsrMatrix,
    /// `(1, phi_k)` per vertex.
    pub p1_rows: Vec<f64>,
}

impl Operators {
    pub fn new(mesh: Arc<SimplicialMesh>) -> Self {
        let velocity = SpaceP2Vector::new(mesh.clone());
        let pressure = SpaceP1::new(mesh, true);
        Operators {
            mass: mass_p2(&velocity),
            stiffness: stiffness_p2(&velocity),
            grad: grad_coupling(&velocity, &pressure),
            laplacian: pressure_laplacian(&pressure),
            p1_rows: p1_mass_rows(&pressure),
            velocity,
            pressure,
        }
    }

    pub fn velocity(&self) -> &SpaceP2Vector {
        &self.velocity
    }

    pub fn pressure(&self) -> &SpaceP1 {
        &self.pressure
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        self.velocity.mesh()
    }

    pub fn l2_inner(&self, a: &FieldP2Vector, b: &FieldP2Vector) -> Result<f64, FemError> {
        self.velocity.check(a)?;
        self.velocity.check(b)?;
        Ok(self.mass.bilinear(&a.coeffs, &b.coeffs))
    }

    pub fn l2_norm(&self, a: &FieldP2Vector) -> Result<f64, FemError> {
        Ok(self.l2_inner(a, a)?.max(0.0).sqrt())
    }

    pub fn h1_seminorm(&self, a: &FieldP2Vector) -> Result<f64, FemError> {
        self.velocity.check(a)?;
        Ok(self.stiffness.bilinear(&a.coeffs, &a.coeffs).max(0.0).sqrt())
    }

    /// `|grad q|_{L2}`.
    pub fn grad_norm(&self, q: &FieldP1Scalar) -> Result<f64, FemError> {
        self.pressure.check(q)?;
        Ok(self.laplacian.bilinear(&q.values, &q.values).max(0.0).sqrt())
    }

    /// `int q dx`.
    pub fn mean(&self, q: &FieldP1Scalar) -> Result<f64, FemError> {
        self.pressure.check(q)?;
        Ok(dot(&self.p1_rows, &q.values))
    }

    fn check_composite(&self, u: &CompositeVelocity) -> Result<(), FemError> {
        self.velocity.check(&u.p2_part)?;
        self.pressure.check(&u.grad_part)
    }

    /// Squared L2 norm of `w - s grad g`:
    /// `w^T M w - 2 s w^T G g + s^2 g^T L g`.
    pub fn composite_norm_sq(&self, u: &CompositeVelocity) -> Result<f64, FemError> {
        self.check_composite(u)?;
        let w = &u.p2_part.coeffs;
        let g = &u.grad_part.values;
        let s = u.scale;
        let ww = self.mass.bilinear(w, w);
        if s == 0.0 {
            return Ok(ww);
        }
        let wg = self.grad.bilinear(w, g);
        let gg = self.laplacian.bilinear(g, g);
        Ok(ww - 2.0 * s * wg + s * s * gg)
    }

    pub fn composite_norm(&self, u: &CompositeVelocity) -> Result<f64, FemError> {
        Ok(self.composite_norm_sq(u)?.max(0.0).sqrt())
    }

    /// `(u, phi)` for every vector P2 basis function: `M w - s G g`.
    pub fn composite_moment_vector(&self, u: &CompositeVelocity) -> Result<Vec<f64>, FemError> {
        self.check_composite(u)?;
        let mut out = self.mass.mul_vec(&u.p2_part.coeffs);
        if u.scale != 0.0 {
            let gg = self.grad.mul_vec(&u.grad_part.values);
            for (o, g) in out.iter_mut().zip(&gg) {
                *o -= u.scale * g;
            }
        }
        Ok(out)
    }

    /// `(u, v) = (w, v) - s (grad g, v)`.
    pub fn composite_moment(&self, u: &CompositeVelocity, v: &FieldP2Vector) -> Result<f64, FemError> {
        self.velocity.check(v)?;
        Ok(dot(&self.composite_moment_vector(u)?, &v.coeffs))
    }

    /// `((u, grad phi_k))_k = G^T w - s L g`.
    pub fn weak_div_moments(&self, u: &CompositeVelocity) -> Result<Vec<f64>, FemError> {
        self.check_composite(u)?;
        let mut out = self.grad.mul_transpose_vec(&u.p2_part.coeffs);
        if u.scale != 0.0 {
            let lg = self.laplacian.mul_vec(&u.grad_part.values);
            for (o, l) in out.iter_mut().zip(&lg) {
                *o -= u.scale * l;
            }
        }
        Ok(out)
    }

    /// `((w, grad phi_k))_k` for a plain P2 field.
    pub fn field_weak_div_moments(&self, w: &FieldP2Vector) -> Result<Vec<f64>, FemError> {
        self.velocity.check(w)?;
        Ok(self.grad.mul_transpose_vec(&w.coeffs))
    }

    /// Sampled max norm of a P2 field (seven quadrature points and six
    /// nodes per cell); an estimate of the true L-infinity norm.
    pub fn linf_sample(&self, w: &FieldP2Vector) -> Result<f64, FemError> {
        self.velocity.check(w)?;
        Ok(linf_sample(&self.velocity, w))
    }
}

/// Barycentric sample points used for max-norm estimates.
pub(crate) fn sample_points() -> Vec<[f64; 3]> {
    let mut pts = QuadratureRule::degree5().points;
    pts.extend_from_slice(&P2_NODES);
    pts
}

pub(crate) fn linf_sample(space: &SpaceP2Vector, w: &FieldP2Vector) -> f64 {
    let pts = sample_points();
    let mut worst: f64 = 0.0;
    for k in 0..space.mesh().num_cells() {
        for &l in &pts {
            let (u, _) = space.eval(w, k, l);
            worst = worst.max(u[0].hypot(u[1]));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ops(n: usize) -> Operators {
        Operators::new(Arc::new(SimplicialMesh::structured_unit_square(n).unwrap()))
    }

    #[test]
    fn h1_seminorm_of_identity_map() {
        let o = ops(3);
        let f = o.velocity().interpolate(|p| p);
        assert!((o.h1_seminorm(&f).unwrap() - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn pure_gradient_composite_moments() {
        let o = ops(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = o.pressure().field((0..o.pressure().dim()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let u = CompositeVelocity { p2_part: o.velocity().zeros(), grad_part: q.clone(), scale: 0.3 };
        let m = o.weak_div_moments(&u).unwrap();
        let aq = o.laplacian.mul_vec(&q.values);
        for (a, b) in m.iter().zip(&aq) {
            assert!((a + 0.3 * b).abs() < 1e-14);
        }
        // |s grad q|^2
        let n2 = o.composite_norm_sq(&u).unwrap();
        assert!((n2 - 0.09 * o.laplacian.bilinear(&q.values, &q.values)).abs() < 1e-14);
    }

    #[test]
    fn composite_norm_matches_sampled_integral() {
        // cell-wise quadrature of |w - s grad g|^2 as an independent oracle
        let o = ops(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = o.velocity().field((0..o.velocity().dim()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let g = o.pressure().field((0..o.pressure().dim()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let u = CompositeVelocity { p2_part: w, grad_part: g, scale: 0.7 };
        let rule = QuadratureRule::degree5();
        let mesh = o.mesh();
        let mut oracle = 0.0;
        for k in 0..mesh.num_cells() {
            let area = mesh.geometry(k).area;
            for (l, wq) in rule.points.iter().zip(&rule.weights) {
                let v = u.eval(o.velocity(), k, *l);
                oracle += area * wq * (v[0] * v[0] + v[1] * v[1]);
            }
        }
        assert!((o.composite_norm_sq(&u).unwrap() - oracle).abs() < 1e-12 * oracle);
    }

    #[test]
    fn mismatched_meshes_are_rejected() {
        let a = ops(2);
        let b = ops(2);
        let f = b.velocity().zeros();
        assert_eq!(a.l2_norm(&f), Err(FemError::MeshMismatch));
        assert_eq!(a.grad_norm(&b.pressure().zeros()), Err(FemError::MeshMismatch));
    }

    #[test]
    fn linf_sample_of_constant() {
        let o = ops(2);
        let f = o.velocity().interpolate(|_| [3.0, 4.0]);
        assert!((o.linf_sample(&f).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn p2_interpolation_reproduces_quadratics() {
        let o = ops(3);
        let f = |p: [f64; 2]| [1.0 + p[0] - 2.0 * p[1] * p[1] + 3.0 * p[0] * p[1], p[0] * p[0] - 0.5];
        let fi = o.velocity().interpolate(f);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mesh = o.mesh();
        for _ in 0..50 {
            let k = rng.gen_range(0..mesh.num_cells());
            let a: f64 = rng.gen_range(0.0..1.0);
            let b: f64 = rng.gen_range(0.0..1.0 - a);
            let l = [1.0 - a - b, a, b];
            let (u, _) = o.velocity().eval(&fi, k, l);
            let exact = f(mesh.map_point(k, l));
            assert!((u[0] - exact[0]).abs() < 1e-13 && (u[1] - exact[1]).abs() < 1e-13);
        }
    }
}
