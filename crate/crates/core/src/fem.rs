//! P1 stiffness and mass assembly with symmetric Dirichlet elimination.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Map between mesh nodes and free degrees of freedom.
#[derive(Debug, Clone)]
pub struct DofMap {
    /// `free[dof]` is the mesh node of each unknown.
    pub free: Vec<usize>,
    /// `node_dof[node]` is `None` for Dirichlet nodes.
    pub node_dof: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new(dirichlet: &[bool]) -> Self {
        let mut free = Vec::new();
        let node_dof = dirichlet
            .iter()
            .enumerate()
            .map(|(node, &d)| {
                (!d).then(|| {
                    free.push(node);
                    free.len() - 1
                })
            })
            .collect();
        Self { free, node_dof }
    }

    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }

    /// Extend a vector of free values by zeros on Dirichlet nodes.
    pub fn expand(&self, values: &[f64]) -> Vec<f64> {
        self.node_dof.iter().map(|d| d.map_or(0.0, |k| values[k])).collect()
    }

    /// Restrict a nodal vector to the free unknowns.
    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&n| nodal[n]).collect()
    }
}

/// Assembled generalized eigenproblem K x = λ M x on the free nodes.
#[derive(Debug, Clone)]
pub struct System {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub dofs: DofMap,
}

const MIN_AREA: f64 = 1e-14;

/// Element stiffness and mass of one triangle.
pub fn element_matrices(p: [[f64; 2]; 3]) -> Result<([[f64; 3]; 3], [[f64; 3]; 3])> {
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    if area < MIN_AREA {
        return Err(Error::Mesh(format!("degenerate triangle with area {area:e}")));
    }
    let mut b = [0.0; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        b[i] = p[j][1] - p[k][1];
        c[i] = p[k][0] - p[j][0];
    }
    let mut ke = [[0.0; 3]; 3];
    let mut me = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
            me[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    Ok((ke, me))
}

/// Assemble on all nodes, without boundary conditions.
pub fn assemble_unconstrained(mesh: &Mesh) -> Result<(CsrMatrix, CsrMatrix)> {
    let dofs = DofMap::new(&vec![false; mesh.node_count()]);
    let sys = assemble_with(mesh, dofs)?;
    Ok((sys.stiffness, sys.mass))
}

/// Assemble with the mesh's Dirichlet nodes eliminated.
pub fn assemble(mesh: &Mesh) -> Result<System> {
    assemble_with(mesh, DofMap::new(&mesh.dirichlet))
}

fn assemble_with(mesh: &Mesh, dofs: DofMap) -> Result<System> {
    let n = dofs.len();
    let cap = 9 * mesh.triangles.len();
    let mut kb = TripletBuilder::with_capacity(n, cap);
    let mut mb = TripletBuilder::with_capacity(n, cap);
    for tri in &mesh.triangles {
        let (ke, me) = element_matrices(tri.map(|i| mesh.nodes[i]))?;
        let ids = tri.map(|i| dofs.node_dof[i]);
        for a in 0..3 {
            let Some(r) = ids[a] else { continue };
            for b in 0..3 {
                let Some(c) = ids[b] else { continue };
                kb.push(r, c, ke[a][b]);
                mb.push(r, c, me[a][b]);
            }
        }
    }
    Ok(System { stiffness: kb.build(), mass: mb.build(), dofs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_domain;
    use crate::mesh::{generate_mesh, Region};

    #[test]
    fn constants_in_kernel_and_mass_is_area() {
        let spec = build_domain("bent_strip", &[1.0, 2.0]).unwrap();
        let mesh = generate_mesh(&spec, 1.0 / 8.0, Region::FullDomain).unwrap();
        let (k, m) = assemble_unconstrained(&mesh).unwrap();
        let ones = vec![1.0; k.dim()];
        let k1 = k.mul_vec(&ones);
        assert!(k1.iter().all(|v| v.abs() < 1e-12));
        assert!((m.inner(&ones, &ones) - mesh.total_area()).abs() < 1e-12);
        assert!(k.is_symmetric(1e-14) && m.is_symmetric(1e-14));
    }

    #[test]
    fn dof_map_round_trip() {
        let d = DofMap::new(&[true, false, false, true]);
        assert_eq!(d.free, vec![1, 2]);
        assert_eq!(d.expand(&[5.0, 6.0]), vec![0.0, 5.0, 6.0, 0.0]);
        assert_eq!(d.restrict(&[1.0, 2.0, 3.0, 4.0]), vec![2.0, 3.0]);
    }

    #[test]
    fn degenerate_triangle_rejected() {
        assert!(element_matrices([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
    }
}
