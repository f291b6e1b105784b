//! Bilinear finite elements on uniform rectangular grids.
//!
//! Three assemblies feed the rest of the crate: the high-contrast Dirichlet
//! pencil (stiff coefficient A1, soft coefficient eps^2 I), the Dirichlet
//! Laplacian of a masked subdomain (per-inclusion spectra), and the periodic
//! cell corrector (homogenised matrix). The grid is uniform, so each phase
//! has a single precomputed 4x4 element matrix; 2x2 Gauss quadrature is exact
//! for every integrand that appears here. Mass matrices are consistent.

use crate::error::{Error, Result};
use crate::geom::{Rect, SymMat2};
use crate::scalar::Scalar;
use crate::sparse::{cg_solve, CgOptions, CooBuilder, CsrMatrix, Preconditioner};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Stiff,
    Soft,
}

/// Uniform nx x ny grid of rectangular cells over `rect`.
/// Local node order within a cell is counterclockwise from the lower left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    pub rect: Rect<T>,
    pub nx: usize,
    pub ny: usize,
}

impl<T: Scalar> Grid<T> {
    pub fn new(rect: Rect<T>, nx: usize, ny: usize) -> Result<Self> {
        rect.validate()?;
        if nx == 0 || ny == 0 {
            return Err(Error::config("grid needs at least one cell per axis"));
        }
        Ok(Grid { rect, nx, ny })
    }

    pub fn hx(&self) -> T {
        self.rect.width() / T::from_usize(self.nx).unwrap()
    }

    pub fn hy(&self) -> T {
        self.rect.height() / T::from_usize(self.ny).unwrap()
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_elems(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn elem_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node_pos(&self, i: usize, j: usize) -> (T, T) {
        (
            self.rect.x0 + self.hx() * T::from_usize(i).unwrap(),
            self.rect.y0 + self.hy() * T::from_usize(j).unwrap(),
        )
    }

    pub fn elem_center(&self, i: usize, j: usize) -> (T, T) {
        let (x, y) = self.node_pos(i, j);
        (x + self.hx() * T::of(0.5), y + self.hy() * T::of(0.5))
    }

    pub fn elem_rect(&self, i: usize, j: usize) -> Rect<T> {
        let (x, y) = self.node_pos(i, j);
        Rect::new(x, y, x + self.hx(), y + self.hy())
    }

    /// Corner node indices of cell (i, j), counterclockwise.
    pub fn elem_nodes(&self, i: usize, j: usize) -> [usize; 4] {
        [
            self.node_index(i, j),
            self.node_index(i + 1, j),
            self.node_index(i + 1, j + 1),
            self.node_index(i, j + 1),
        ]
    }

    pub fn node_is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }
}

/// 4x4 stiffness for coefficient A on an hx x hy cell, by 2x2 Gauss.
pub fn element_stiffness<T: Scalar>(a: &SymMat2<T>, hx: T, hy: T) -> [[T; 4]; 4] {
    let s = [-T::one(), T::one(), T::one(), -T::one()];
    let t = [-T::one(), -T::one(), T::one(), T::one()];
    let g = T::one() / T::of(3.0).sqrt();
    let pts = [(-g, -g), (g, -g), (g, g), (-g, g)];
    let quarter = T::of(0.25);
    let jac = hx * hy * quarter;
    let mut k = [[T::zero(); 4]; 4];
    for (gx, gy) in pts {
        let mut grads = [(T::zero(), T::zero()); 4];
        for i in 0..4 {
            let dxi = s[i] * (T::one() + t[i] * gy) * quarter;
            let deta = t[i] * (T::one() + s[i] * gx) * quarter;
            grads[i] = (dxi * T::of(2.0) / hx, deta * T::of(2.0) / hy);
        }
        for i in 0..4 {
            let (ax, ay) = a.apply(grads[i].0, grads[i].1);
            for j in 0..4 {
                k[i][j] += jac * (ax * grads[j].0 + ay * grads[j].1);
            }
        }
    }
    k
}

/// Consistent 4x4 mass for an hx x hy cell.
pub fn element_mass<T: Scalar>(hx: T, hy: T) -> [[T; 4]; 4] {
    let w = hx * hy / T::of(36.0);
    let pattern = [
        [4.0, 2.0, 1.0, 2.0],
        [2.0, 4.0, 2.0, 1.0],
        [1.0, 2.0, 4.0, 2.0],
        [2.0, 1.0, 2.0, 4.0],
    ];
    let mut m = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = w * T::of(pattern[i][j]);
        }
    }
    m
}

/// Exact gradients integrated over a cell: int_e grad N_i dx.
fn element_grad_integrals<T: Scalar>(hx: T, hy: T) -> [(T, T); 4] {
    let half = T::of(0.5);
    [
        (-hy * half, -hx * half),
        (hy * half, -hx * half),
        (hy * half, hx * half),
        (-hy * half, hx * half),
    ]
}

/// Node-to-dof numbering after Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub node_to_dof: Vec<Option<u32>>,
    pub dof_to_node: Vec<u32>,
}

impl DofMap {
    fn from_predicate(n_nodes: usize, mut keep: impl FnMut(usize) -> bool) -> DofMap {
        let mut node_to_dof = vec![None; n_nodes];
        let mut dof_to_node = Vec::new();
        for node in 0..n_nodes {
            if keep(node) {
                node_to_dof[node] = Some(dof_to_node.len() as u32);
                dof_to_node.push(node as u32);
            }
        }
        DofMap {
            node_to_dof,
            dof_to_node,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_to_node.len()
    }
}

/// Generalized pencil K v = s M v on the retained dofs, with enough grid
/// context to evaluate and integrate solutions.
#[derive(Debug, Clone)]
pub struct DiscreteProblem<T> {
    pub grid: Grid<T>,
    pub k: CsrMatrix<T>,
    pub m: CsrMatrix<T>,
    pub dofs: DofMap,
    /// Element set the assembly ran over (all cells for the eps-problem,
    /// the mask for subdomain operators).
    pub active: Vec<bool>,
}

impl<T: Scalar> DiscreteProblem<T> {
    pub fn n_dofs(&self) -> usize {
        self.dofs.n_dofs()
    }

    /// Load vector (M f)|_dofs for nodal values `f` on the full grid,
    /// including contributions from boundary nodes where f need not vanish.
    pub fn load_vector(&self, f_nodes: &[T]) -> Vec<T> {
        assert_eq!(f_nodes.len(), self.grid.n_nodes());
        let me = element_mass(self.grid.hx(), self.grid.hy());
        let mut rhs = vec![T::zero(); self.n_dofs()];
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                if !self.active[self.grid.elem_index(i, j)] {
                    continue;
                }
                let nodes = self.grid.elem_nodes(i, j);
                for (a, na) in nodes.iter().enumerate() {
                    if let Some(dof) = self.dofs.node_to_dof[*na] {
                        let mut s = T::zero();
                        for (b, nb) in nodes.iter().enumerate() {
                            s += me[a][b] * f_nodes[*nb];
                        }
                        rhs[dof as usize] += s;
                    }
                }
            }
        }
        rhs
    }

    /// Expand a dof vector to all grid nodes, zero on eliminated nodes.
    pub fn expand(&self, u: &[T]) -> Vec<T> {
        let mut full = vec![T::zero(); self.grid.n_nodes()];
        for (dof, node) in self.dofs.dof_to_node.iter().enumerate() {
            full[*node as usize] = u[dof];
        }
        full
    }

    /// Bilinear interpolation of a full-node vector at (x, y).
    pub fn interpolate(&self, full: &[T], x: T, y: T) -> T {
        let g = &self.grid;
        let fx = ((x - g.rect.x0) / g.hx())
            .max(T::zero())
            .min(T::from_usize(g.nx).unwrap() - T::of(1e-12));
        let fy = ((y - g.rect.y0) / g.hy())
            .max(T::zero())
            .min(T::from_usize(g.ny).unwrap() - T::of(1e-12));
        let i = fx.floor().to_usize().unwrap().min(g.nx - 1);
        let j = fy.floor().to_usize().unwrap().min(g.ny - 1);
        let tx = fx - T::from_usize(i).unwrap();
        let ty = fy - T::from_usize(j).unwrap();
        let n = g.elem_nodes(i, j);
        let one = T::one();
        full[n[0]] * (one - tx) * (one - ty)
            + full[n[1]] * tx * (one - ty)
            + full[n[2]] * tx * ty
            + full[n[3]] * (one - tx) * ty
    }

    /// L2 norm of a full-node field over the cells selected by `select`,
    /// exact for bilinear fields (element mass quadrature).
    pub fn l2_norm_over(&self, full: &[T], select: impl Fn(usize) -> bool) -> T {
        let me = element_mass(self.grid.hx(), self.grid.hy());
        let mut acc = T::zero();
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let e = self.grid.elem_index(i, j);
                if !select(e) {
                    continue;
                }
                let nodes = self.grid.elem_nodes(i, j);
                for a in 0..4 {
                    for b in 0..4 {
                        acc += me[a][b] * full[nodes[a]] * full[nodes[b]];
                    }
                }
            }
        }
        acc.max(T::zero()).sqrt()
    }

    /// Mean of a full-node field over the cells selected by `select`.
    pub fn mean_over(&self, full: &[T], select: impl Fn(usize) -> bool) -> T {
        let area_e = self.grid.hx() * self.grid.hy();
        let quarter = T::of(0.25);
        let mut acc = T::zero();
        let mut area = T::zero();
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let e = self.grid.elem_index(i, j);
                if !select(e) {
                    continue;
                }
                let nodes = self.grid.elem_nodes(i, j);
                let mut s = T::zero();
                for n in nodes {
                    s += full[n];
                }
                acc += s * quarter * area_e;
                area += area_e;
            }
        }
        if area > T::zero() {
            acc / area
        } else {
            T::zero()
        }
    }
}

/// High-contrast pencil: coefficient A1 on stiff cells, eps^2 I on soft
/// cells, homogeneous Dirichlet data on the outer grid boundary.
pub fn assemble_eps_problem<T: Scalar>(
    grid: &Grid<T>,
    phases: &[Phase],
    a1: &SymMat2<T>,
    eps: T,
) -> Result<DiscreteProblem<T>> {
    if phases.len() != grid.n_elems() {
        return Err(Error::config(format!(
            "phase label count {} does not match {} grid cells",
            phases.len(),
            grid.n_elems()
        )));
    }
    a1.require_spd()?;
    if !(eps > T::zero()) {
        return Err(Error::config("eps must be positive"));
    }
    let (hx, hy) = (grid.hx(), grid.hy());
    let ke_stiff = element_stiffness(a1, hx, hy);
    let soft = SymMat2::scale(eps * eps);
    let ke_soft = element_stiffness(&soft, hx, hy);
    let me = element_mass(hx, hy);
    let dofs = {
        let grid = *grid;
        DofMap::from_predicate(grid.n_nodes(), |node| {
            let i = node % (grid.nx + 1);
            let j = node / (grid.nx + 1);
            !grid.node_is_boundary(i, j)
        })
    };
    let n = dofs.n_dofs();
    if n == 0 {
        return Err(Error::config("no interior nodes: grid too coarse"));
    }
    let mut kb = CooBuilder::with_capacity(n, 16 * grid.n_elems());
    let mut mb = CooBuilder::with_capacity(n, 16 * grid.n_elems());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let ke = match phases[grid.elem_index(i, j)] {
                Phase::Stiff => &ke_stiff,
                Phase::Soft => &ke_soft,
            };
            let nodes = grid.elem_nodes(i, j);
            for a in 0..4 {
                let Some(da) = dofs.node_to_dof[nodes[a]] else {
                    continue;
                };
                for b in 0..4 {
                    if let Some(db) = dofs.node_to_dof[nodes[b]] {
                        kb.add(da as usize, db as usize, ke[a][b]);
                        mb.add(da as usize, db as usize, me[a][b]);
                    }
                }
            }
        }
    }
    Ok(DiscreteProblem {
        grid: *grid,
        k: kb.into_csr(),
        m: mb.into_csr(),
        dofs,
        active: vec![true; grid.n_elems()],
    })
}

/// Dirichlet Laplacian of the open set covered by `mask` cells: dofs are the
/// nodes whose four incident cells are all masked (and that are interior to
/// the grid); assembly runs over masked cells only.
pub fn assemble_subdomain_laplace<T: Scalar>(
    grid: &Grid<T>,
    mask: &[bool],
) -> Result<DiscreteProblem<T>> {
    if mask.len() != grid.n_elems() {
        return Err(Error::config(format!(
            "mask length {} does not match {} grid cells",
            mask.len(),
            grid.n_elems()
        )));
    }
    let (hx, hy) = (grid.hx(), grid.hy());
    let ke = element_stiffness(&SymMat2::identity(), hx, hy);
    let me = element_mass(hx, hy);
    let dofs = {
        let grid = *grid;
        DofMap::from_predicate(grid.n_nodes(), |node| {
            let i = node % (grid.nx + 1);
            let j = node / (grid.nx + 1);
            if grid.node_is_boundary(i, j) {
                return false;
            }
            mask[grid.elem_index(i - 1, j - 1)]
                && mask[grid.elem_index(i, j - 1)]
                && mask[grid.elem_index(i - 1, j)]
                && mask[grid.elem_index(i, j)]
        })
    };
    let n = dofs.n_dofs();
    if n == 0 {
        return Err(Error::config(
            "masked subdomain has no interior nodes at this resolution",
        ));
    }
    let mut kb = CooBuilder::new(n);
    let mut mb = CooBuilder::new(n);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !mask[grid.elem_index(i, j)] {
                continue;
            }
            let nodes = grid.elem_nodes(i, j);
            for a in 0..4 {
                let Some(da) = dofs.node_to_dof[nodes[a]] else {
                    continue;
                };
                for b in 0..4 {
                    if let Some(db) = dofs.node_to_dof[nodes[b]] {
                        kb.add(da as usize, db as usize, ke[a][b]);
                        mb.add(da as usize, db as usize, me[a][b]);
                    }
                }
            }
        }
    }
    Ok(DiscreteProblem {
        grid: *grid,
        k: kb.into_csr(),
        m: mb.into_csr(),
        dofs,
        active: mask.to_vec(),
    })
}

/// Periodic corrector problem on an n x n cell torus with unit cell size
/// `cell`: stiffness over stiff cells only and the load for direction xi.
/// All n^2 nodes are dofs; the kernel contains constants (and any node fully
/// surrounded by soft cells), which the conjugate-gradient projection in
/// [`solve_corrector`] handles.
pub struct CorrectorProblem<T> {
    pub n: usize,
    pub cell: T,
    pub k: CsrMatrix<T>,
    pub b: Vec<T>,
    pub stiff_area: T,
    pub a_xi_xi: T,
}

pub fn assemble_corrector<T: Scalar>(
    n: usize,
    cell: T,
    stiff: &[bool],
    a1: &SymMat2<T>,
    xi: (T, T),
) -> Result<CorrectorProblem<T>> {
    if stiff.len() != n * n {
        return Err(Error::config("corrector mask must have n^2 cells"));
    }
    a1.require_spd()?;
    let h = cell;
    let ke = element_stiffness(a1, h, h);
    let gints = element_grad_integrals(h, h);
    let axi = a1.apply(xi.0, xi.1);
    let ndofs = n * n;
    let mut kb = CooBuilder::with_capacity(ndofs, 16 * ndofs);
    let mut b = vec![T::zero(); ndofs];
    let mut stiff_area = T::zero();
    let node = |i: usize, j: usize| (j % n) * n + (i % n);
    for j in 0..n {
        for i in 0..n {
            if !stiff[j * n + i] {
                continue;
            }
            stiff_area += h * h;
            let nodes = [
                node(i, j),
                node(i + 1, j),
                node(i + 1, j + 1),
                node(i, j + 1),
            ];
            for a in 0..4 {
                b[nodes[a]] -= axi.0 * gints[a].0 + axi.1 * gints[a].1;
                for bb in 0..4 {
                    kb.add(nodes[a], nodes[bb], ke[a][bb]);
                }
            }
        }
    }
    Ok(CorrectorProblem {
        n,
        cell,
        k: kb.into_csr(),
        b,
        stiff_area,
        a_xi_xi: a1.quadratic_form(xi.0, xi.1),
    })
}

/// Solve the corrector problem and return the energy per torus area,
/// Q(xi) = (1/|torus|) int_stiff A (xi + grad phi) . (xi + grad phi).
/// Monotone under conjugate gradients from a zero start, so the result is a
/// certified upper bound for the sample at any iteration count.
pub fn solve_corrector<T: Scalar>(p: &CorrectorProblem<T>, tol_rel: T) -> Result<T> {
    let ndofs = p.n * p.n;
    let mut phi = vec![T::zero(); ndofs];
    let inv_n = T::one() / T::from_usize(ndofs).unwrap();
    let project = |v: &mut [T]| {
        let mean = v.iter().fold(T::zero(), |s, x| s + *x) * inv_n;
        v.iter_mut().for_each(|x| *x -= mean);
    };
    let precond = Preconditioner::auto(&p.k);
    // Zero rows (nodes entirely inside soft regions) keep zero residual and
    // never move; the projection handles the constant kernel direction.
    cg_solve(
        &p.k,
        &p.b,
        &mut phi,
        &precond,
        CgOptions {
            tol_rel,
            max_iter: 50_000,
        },
        Some(&project),
    )?;
    let torus_area = (p.cell * T::from_usize(p.n).unwrap()).powi(2);
    let kphi = p.k.matvec_alloc(&phi);
    let mut e = p.a_xi_xi * p.stiff_area;
    for i in 0..ndofs {
        e += kphi[i] * phi[i] - T::of(2.0) * p.b[i] * phi[i];
    }
    Ok(e / torus_area)
}

/// Solve (K - lambda M) u = M f for lambda < 0 to a residual of
/// tol_rel * ||M f||; returns the dof vector.
pub fn solve_resolvent<T: Scalar>(
    p: &DiscreteProblem<T>,
    lambda: T,
    f_nodes: &[T],
    tol_rel: T,
) -> Result<Vec<T>> {
    if !(lambda < T::zero()) {
        return Err(Error::config(
            "resolvent sign convention requires lambda < 0",
        ));
    }
    let rhs = p.load_vector(f_nodes);
    let a = p.k.linear_combination(T::one(), &p.m, -lambda);
    let precond = Preconditioner::auto(&a);
    let mut u = vec![T::zero(); p.n_dofs()];
    cg_solve(
        &a,
        &rhs,
        &mut u,
        &precond,
        CgOptions {
            tol_rel,
            max_iter: 50_000,
        },
        None,
    )?;
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::real;

    #[test]
    fn unit_laplace_element_matches_closed_form() {
        let k = element_stiffness(&SymMat2::<f64>::identity(), 1.0, 1.0);
        // Known Q1 stiffness on the unit square: diagonal 2/3,
        // edge-adjacent -1/6, diagonal-opposite -1/3.
        for i in 0..4 {
            assert!((k[i][i] - 2.0 / 3.0).abs() < 1e-14);
            assert!((k[i][(i + 2) % 4] + 1.0 / 3.0).abs() < 1e-14);
            assert!((k[i][(i + 1) % 4] + 1.0 / 6.0).abs() < 1e-14);
        }
        // Scale invariance in 2d: same matrix on any square cell.
        let k2 = element_stiffness(&SymMat2::<f64>::identity(), 0.125, 0.125);
        assert!((k2[0][0] - k[0][0]).abs() < 1e-14);
    }

    #[test]
    fn anisotropic_element_entries() {
        // A = diag(2, 3) on a 0.5 x 0.25 cell:
        // K_00 = 2 * hy/(3 hx) + 3 * hx/(3 hy) = 1/3 + 2 = 7/3.
        let k = element_stiffness(&SymMat2::diag(2.0f64, 3.0), 0.5, 0.25);
        assert!((k[0][0] - 7.0 / 3.0).abs() < 1e-14);
        // Off-diagonal coupling: A = [[2, 1], [1, 3]] on the unit cell has
        // K_00 = 2/3 + 1 + 1/2 = 13/6.
        let k = element_stiffness(&SymMat2::new(2.0f64, 1.0, 3.0), 1.0, 1.0);
        assert!((k[0][0] - 13.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn element_matrices_are_symmetric_and_mass_sums_to_area() {
        let k = element_stiffness(&SymMat2::new(2.0f64, 0.7, 1.3), 0.3, 0.2);
        let m = element_mass(0.3f64, 0.2);
        let mut total = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                assert!((k[i][j] - k[j][i]).abs() < 1e-15);
                total += m[i][j];
            }
        }
        assert!((total - 0.06).abs() < 1e-15);
        // Stiffness annihilates constants.
        for i in 0..4 {
            let row_sum: f64 = k[i].iter().sum();
            assert!(row_sum.abs() < 1e-14);
        }
    }

    #[test]
    fn coarsest_interior_pencil_is_exact() {
        // 2x2 cells on the unit square leave one interior node. The stiffness
        // entry is 4 * 2/3 = 8/3, the consistent mass entry 4 * h^2/9 = 1/9,
        // so the single discrete eigenvalue is exactly 24.
        let grid = Grid::new(Rect::unit(), 2, 2).unwrap();
        let p = assemble_eps_problem(
            &grid,
            &[Phase::Stiff; 4],
            &SymMat2::identity(),
            0.5f64,
        )
        .unwrap();
        assert_eq!(p.n_dofs(), 1);
        assert!((p.k.get(0, 0) - 8.0 / 3.0).abs() < 1e-14);
        assert!((p.m.get(0, 0) - 1.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn all_soft_equals_scaled_laplace() {
        let grid = Grid::new(Rect::<f64>::unit(), 8, 8).unwrap();
        let eps = 0.25;
        let soft = assemble_eps_problem(
            &grid,
            &vec![Phase::Soft; 64],
            &SymMat2::identity(),
            eps,
        )
        .unwrap();
        let plain = assemble_subdomain_laplace(&grid, &vec![true; 64]).unwrap();
        assert_eq!(soft.n_dofs(), plain.n_dofs());
        for i in 0..soft.n_dofs() {
            let (cs, vs) = soft.k.row(i);
            let (cp, vp) = plain.k.row(i);
            assert_eq!(cs, cp);
            for (a, b) in vs.iter().zip(vp) {
                assert!((a - eps * eps * b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn all_stiff_identity_equals_full_mask_laplace() {
        let grid = Grid::new(Rect::<f64>::unit(), 6, 6).unwrap();
        let a = assemble_eps_problem(
            &grid,
            &vec![Phase::Stiff; 36],
            &SymMat2::identity(),
            0.1,
        )
        .unwrap();
        let b = assemble_subdomain_laplace(&grid, &vec![true; 36]).unwrap();
        for i in 0..a.n_dofs() {
            let (ca, va) = a.k.row(i);
            let (cb, vb) = b.k.row(i);
            assert_eq!(ca, cb);
            for (x, y) in va.iter().zip(vb) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn subdomain_needs_interior_nodes() {
        let grid = Grid::new(Rect::<f64>::unit(), 4, 4).unwrap();
        // A single masked cell has no interior node.
        let mut mask = vec![false; 16];
        mask[5] = true;
        assert!(assemble_subdomain_laplace(&grid, &mask).is_err());
    }

    #[test]
    fn corrector_without_soft_cells_is_trivial() {
        let a1 = SymMat2::new(2.0f64, 0.5, 1.0);
        let p = assemble_corrector(8, 0.125, &vec![true; 64], &a1, (1.0, 0.0)).unwrap();
        // Periodic all-stiff torus: the load is a gradient integral over a
        // closed surface, identically zero, so phi = 0 and the energy is the
        // quadratic form itself.
        assert!(p.b.iter().all(|v| v.abs() < 1e-14));
        let q = solve_corrector(&p, 1e-12).unwrap();
        assert!((q - 2.0).abs() < 1e-12);
    }

    #[test]
    fn corrector_load_is_mean_free() {
        // Any mask: the load entries sum to zero (rigid-motion consistency),
        // which is what makes the projected conjugate-gradient solve valid.
        let mut stiff = vec![true; 64];
        for e in [27usize, 28, 35, 36] {
            stiff[e] = false;
        }
        let p = assemble_corrector(8, 0.25, &stiff, &SymMat2::identity(), (0.7f64, 0.3)).unwrap();
        let total: f64 = p.b.iter().sum();
        assert!(total.abs() < 1e-12);
        // With soft cells present the corrector must strictly lower the
        // energy below the no-corrector value.
        let q = solve_corrector(&p, 1e-12).unwrap();
        let no_corr = p.a_xi_xi * p.stiff_area / (0.25f64 * 8.0).powi(2);
        assert!(q < no_corr);
        assert!(q > 0.0);
    }

    #[test]
    fn resolvent_matches_dense_solve() {
        let grid = Grid::new(Rect::<f64>::unit(), 5, 5).unwrap();
        let mut phases = vec![Phase::Stiff; 25];
        phases[12] = Phase::Soft;
        let p = assemble_eps_problem(&grid, &phases, &SymMat2::identity(), 0.2).unwrap();
        let f = vec![1.0; grid.n_nodes()];
        let u = solve_resolvent(&p, -1.0, &f, 1e-12).unwrap();
        // Dense cross-check via nalgebra.
        let n = p.n_dofs();
        let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let (cols, vals) = p.k.row(i);
            for (c, v) in cols.iter().zip(vals) {
                a[(i, *c as usize)] += v;
            }
            let (cols, vals) = p.m.row(i);
            for (c, v) in cols.iter().zip(vals) {
                a[(i, *c as usize)] += v;
            }
        }
        let rhs = nalgebra::DVector::from_vec(p.load_vector(&f));
        let sol = a.lu().solve(&rhs).unwrap();
        for i in 0..n {
            assert!((u[i] - sol[i]).abs() < 1e-9, "dof {}: {} vs {}", i, u[i], sol[i]);
        }
        // Positivity: -Delta u + u = 1 with zero boundary has 0 < u < 1.
        assert!(u.iter().all(|v| *v > 0.0 && *v < 1.0));
    }

    #[test]
    fn resolvent_rejects_nonnegative_lambda() {
        let grid = Grid::new(Rect::<f64>::unit(), 4, 4).unwrap();
        let p = assemble_eps_problem(&grid, &[Phase::Stiff; 16], &SymMat2::identity(), 0.5)
            .unwrap();
        let f = vec![1.0; grid.n_nodes()];
        assert!(solve_resolvent(&p, 0.5, &f, 1e-10).is_err());
    }

    #[test]
    fn interpolation_reproduces_bilinear_fields() {
        let grid = Grid::new(Rect::new(0.0f64, 0.0, 2.0, 1.0), 8, 4).unwrap();
        let p = assemble_eps_problem(&grid, &vec![Phase::Stiff; 32], &SymMat2::identity(), 0.1)
            .unwrap();
        let mut full = vec![0.0; grid.n_nodes()];
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                let (x, y) = grid.node_pos(i, j);
                full[grid.node_index(i, j)] = 2.0 * x - 3.0 * y + 1.0;
            }
        }
        for (x, y) in [(0.3, 0.4), (1.77, 0.92), (0.0, 0.0), (2.0, 1.0)] {
            let v = p.interpolate(&full, x, y);
            assert!((v - (2.0 * x - 3.0 * y + 1.0)).abs() < 1e-10);
        }
        // Mean of x over the full rectangle is 1.
        let mut xs = vec![0.0; grid.n_nodes()];
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                let (x, _) = grid.node_pos(i, j);
                xs[grid.node_index(i, j)] = x;
            }
        }
        assert!((p.mean_over(&xs, |_| true) - 1.0).abs() < 1e-12);
        // L2 norm of the constant 1 over the rectangle is sqrt(2).
        let ones = vec![1.0; grid.n_nodes()];
        let norm = p.l2_norm_over(&ones, |_| true);
        assert!((norm - real::<f64>(2.0).sqrt()).abs() < 1e-12);
    }
}
