use crate::error::{Error, Result};

/// Uniform grid `0 = x_0 < x_1 < ... < x_{N-1} = 1` on the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    n_nodes: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn uniform(n_nodes: usize) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::TooFewNodes(n_nodes));
        }
        let h = 1.0 / (n_nodes - 1) as f64;
        // i / (N-1) rather than i * h keeps the last node exactly at 1.
        let nodes = (0..n_nodes)
            .map(|i| i as f64 / (n_nodes - 1) as f64)
            .collect();
        Ok(Self { n_nodes, h, nodes })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_elements(&self) -> usize {
        self.n_nodes - 1
    }

    /// Two Hermite degrees of freedom (value, slope) per node.
    pub fn n_dofs(&self) -> usize {
        2 * self.n_nodes
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, j: usize) -> f64 {
        self.nodes[j]
    }

    /// Left and right end of element `e`.
    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    /// Element containing `x` together with the local coordinate in `[0, 1]`.
    /// Points on an interior node are assigned to the element on their right.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::CoordinateOutOfRange(x));
        }
        let e = ((x / self.h).floor() as usize).min(self.n_elements() - 1);
        let s = ((x - self.nodes[e]) / self.h).clamp(0.0, 1.0);
        Ok((e, s))
    }

    /// Global dof indices touched by element `e`: value/slope at the left node,
    /// then value/slope at the right node.
    pub fn element_dofs(e: usize) -> [usize; 4] {
        [2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_equally_spaced() {
        let mesh = Mesh1D::uniform(31).unwrap();
        assert_eq!(mesh.nodes()[0], 0.0);
        assert_eq!(*mesh.nodes().last().unwrap(), 1.0);
        for w in mesh.nodes().windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] - w[0] - mesh.h()).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_tiny_meshes() {
        assert_eq!(Mesh1D::uniform(2), Err(Error::TooFewNodes(2)));
    }

    #[test]
    fn locate_maps_nodes_and_endpoints() {
        let mesh = Mesh1D::uniform(11).unwrap();
        assert_eq!(mesh.locate(0.0).unwrap(), (0, 0.0));
        let (e, s) = mesh.locate(1.0).unwrap();
        assert_eq!(e, 9);
        assert!((s - 1.0).abs() < 1e-14);
        let (e, s) = mesh.locate(0.35).unwrap();
        assert_eq!(e, 3);
        assert!((s - 0.5).abs() < 1e-12);
        assert!(mesh.locate(1.5).is_err());
    }
}
