//! The torsion problem `−Δu = 1`, the first Dirichlet eigenpair, and the
//! harmonic shape-derivative problem on a given annulus.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_load, assemble_stiffness, assemble_weighted_mass, dot, recover_inner_flux,
    smallest_eigenpair_factored, BoundaryFlux, DirichletReduction, ScalarField, SparseSpd,
    SpdFactor,
};
use crate::geometry::{vn_ambient, AnnulusSpec};
use crate::mesh::{build_annulus_mesh, TriMesh};

/// Mesh, matrices and the factored interior stiffness for one annulus and
/// refinement level. Shared by the torsion, eigenvalue and shape-derivative
/// solves on that annulus.
#[derive(Debug)]
pub struct Discretization {
    pub spec: AnnulusSpec,
    pub level: u32,
    pub mesh: TriMesh,
    pub stiffness: SparseSpd,
    pub mass: SparseSpd,
    /// `∫ φᵢ dV`, the load of the torsion problem.
    pub volume_weights: Vec<f64>,
    pub reduction: DirichletReduction,
    factor: SpdFactor,
}

impl Discretization {
    pub fn new(spec: &AnnulusSpec, level: u32) -> Result<Arc<Self>> {
        let mesh = build_annulus_mesh(spec, level)?;
        let stiffness = assemble_stiffness(&mesh)?;
        let mass = assemble_weighted_mass(&mesh, spec.geom)?;
        let volume_weights = assemble_load(&mesh, spec.geom, |_| -1.0)?;
        let reduction = DirichletReduction::new(mesh.num_nodes(), &mesh.boundary_nodes())?;
        let factor = SpdFactor::new(reduction.reduce_matrix(&stiffness))?;
        Ok(Arc::new(Self {
            spec: *spec,
            level,
            mesh,
            stiffness,
            mass,
            volume_weights,
            reduction,
            factor,
        }))
    }

    /// `∫ u dV` of a nodal field.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        dot(&self.volume_weights, u)
    }

    /// Solves the interior Laplace-type system `K_II x = rhs`.
    pub fn solve_interior(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.factor.solve(rhs)
    }

    pub fn torsion(self: &Arc<Self>) -> Result<TorsionSolution> {
        let rhs = self.reduction.restrict(&self.volume_weights);
        let y_int = self.factor.solve(&rhs)?;
        let y = ScalarField::new(&self.mesh, self.reduction.embed(&y_int, None))?;
        let j = self.integrate(&y.values);
        let energy = self.stiffness.quadratic_form(&y.values);
        let inner_flux = recover_inner_flux(
            &self.mesh,
            self.spec.geom,
            &self.stiffness,
            &y,
            &self.volume_weights,
        )?;
        Ok(TorsionSolution {
            disc: Arc::clone(self),
            y,
            j,
            energy,
            inner_flux,
        })
    }

    pub fn eigen(self: &Arc<Self>) -> Result<EigenSolution> {
        let m_int = self.reduction.reduce_matrix(&self.mass);
        let (lambda1, u) = smallest_eigenpair_factored(&self.factor, &m_int)?;
        let y1 = ScalarField::new(&self.mesh, self.reduction.embed(&u, None))?;
        let load: Vec<f64> = self
            .mass
            .mul_vec(&y1.values)
            .into_iter()
            .map(|v| lambda1 * v)
            .collect();
        let inner_flux =
            recover_inner_flux(&self.mesh, self.spec.geom, &self.stiffness, &y1, &load)?;
        Ok(EigenSolution {
            disc: Arc::clone(self),
            lambda1,
            y1,
            j1: lambda1,
            inner_flux,
        })
    }

    fn min_interior(&self, u: &[f64]) -> f64 {
        self.reduction
            .interior()
            .iter()
            .map(|&k| u[k])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Solution of `−Δu = 1`, `u = 0` on the boundary.
#[derive(Debug, Clone)]
pub struct TorsionSolution {
    pub disc: Arc<Discretization>,
    pub y: ScalarField,
    /// `∫ y dV`.
    pub j: f64,
    /// `∫ ‖∇y‖² dV`, equal to `j` by the weak form tested with `y`.
    pub energy: f64,
    pub inner_flux: BoundaryFlux,
}

impl TorsionSolution {
    pub fn spec(&self) -> &AnnulusSpec {
        &self.disc.spec
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.disc.mesh
    }

    /// `|J − energy| / |J|`.
    pub fn energy_identity_residual(&self) -> f64 {
        (self.j - self.energy).abs() / self.j.abs()
    }

    pub fn min_interior(&self) -> f64 {
        self.disc.min_interior(&self.y.values)
    }
}

/// First Dirichlet eigenpair, normalized by `∫ y1² dV = 1`, `y1 > 0`.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub disc: Arc<Discretization>,
    pub lambda1: f64,
    pub y1: ScalarField,
    /// The eigenvalue functional; it reduces to `λ1` for the normalized eigenfunction.
    pub j1: f64,
    pub inner_flux: BoundaryFlux,
}

impl EigenSolution {
    pub fn spec(&self) -> &AnnulusSpec {
        &self.disc.spec
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.disc.mesh
    }

    /// `∫ y1² dV`.
    pub fn l2_norm_sqr(&self) -> f64 {
        self.disc.mass.quadratic_form(&self.y1.values)
    }

    /// `∫ ‖∇y1‖² dV`.
    pub fn dirichlet_energy(&self) -> f64 {
        self.disc.stiffness.quadratic_form(&self.y1.values)
    }

    pub fn min_interior(&self) -> f64 {
        self.disc.min_interior(&self.y1.values)
    }
}

pub fn solve_torsion(spec: &AnnulusSpec, level: u32) -> Result<TorsionSolution> {
    Discretization::new(spec, level)?.torsion()
}

pub fn solve_eigen(spec: &AnnulusSpec, level: u32) -> Result<EigenSolution> {
    Discretization::new(spec, level)?.eigen()
}

/// Shape derivative `y′` of the torsion function for the axis-translating
/// field, and `∫ y′ dV`.
///
/// `y′` is harmonic (Euclidean-harmonic in the chart, since `Δ_g = λ⁻² Δ`),
/// equals `−(∂y/∂n) ⟨V, n⟩` on the inner circle and vanishes on the outer
/// circle where the field is cut off.
pub fn solve_shape_bvp(torsion: &TorsionSolution) -> Result<(ScalarField, f64)> {
    let disc = &torsion.disc;
    let spec = disc.spec;
    let mesh = &disc.mesh;
    let mut g = vec![0.0; mesh.num_nodes()];
    for (&k, &flux) in torsion.inner_flux.nodes.iter().zip(&torsion.inner_flux.metric) {
        g[k] = -flux * vn_ambient(spec.geom, spec.t, spec.r0, mesh.nodes[k])?;
    }
    let zero = vec![0.0; mesh.num_nodes()];
    let rhs = disc.reduction.rhs_with_boundary_values(&disc.stiffness, &zero, &g);
    let interior = disc.solve_interior(&rhs)?;
    let values = disc.reduction.embed(&interior, Some(&g));
    let d_j = disc.integrate(&values);
    if !d_j.is_finite() {
        return Err(Error::Solver("non-finite shape derivative".into()));
    }
    Ok((ScalarField::new(mesh, values)?, d_j))
}
