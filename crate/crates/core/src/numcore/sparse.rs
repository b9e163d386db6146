use crate::corpus::DomainGraph;
use crate::error::{Error, Result};
use crate::numcore::DenseMatrix;

/// Normalized-adjacency product: row `n` of the output is
/// `Σ_{m ∈ N(n)} coef(n, m) · x[m]`, summed in ascending neighbor order.
pub fn spmm(graph: &DomainGraph, x: &DenseMatrix) -> Result<DenseMatrix> {
    if x.rows() != graph.num_nodes() {
        return Err(Error::shape("spmm", (graph.num_nodes(), graph.num_nodes()), x.shape()));
    }
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    for node in 0..graph.num_nodes() {
        let dst = out.row_mut(node);
        for (m, c) in graph.neighbors(node) {
            for (d, &v) in dst.iter_mut().zip(x.row(m)) {
                *d += c * v;
            }
        }
    }
    Ok(out)
}

/// Materializes the normalized adjacency as a dense square matrix.
pub fn dense_adjacency(graph: &DomainGraph) -> DenseMatrix {
    let n = graph.num_nodes();
    let mut a = DenseMatrix::zeros(n, n);
    for node in 0..n {
        for (m, c) in graph.neighbors(node) {
            a.set(node, m, c);
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_graph, Interaction};

    #[test]
    fn single_edge_copies_neighbor() {
        let g = build_graph(&[Interaction::new(0, 0)], 1, 1).unwrap();
        let x = DenseMatrix::from_vec(2, 2, vec![0.0, 0.0, 1.0, 2.0]).unwrap();
        let y = spmm(&g, &x).unwrap();
        assert_eq!(y.row(0), &[1.0, 2.0]);
    }

    #[test]
    fn toy_graph_weights_items() {
        let g = build_graph(&[Interaction::new(0, 0), Interaction::new(0, 1), Interaction::new(1, 1)], 2, 2).unwrap();
        let x = DenseMatrix::identity(4);
        let y = spmm(&g, &x).unwrap();
        let expected = dense_adjacency(&g).matmul(&x).unwrap();
        assert_eq!(y, expected);
        assert_eq!(y.row(0), &[0.0, 0.0, 1.0 / 2f64.sqrt(), 0.5]);
    }

    #[test]
    fn empty_graph_and_shape_error() {
        let g = build_graph(&[], 2, 1).unwrap();
        let x = DenseMatrix::filled(3, 2, 1.0);
        assert_eq!(spmm(&g, &x).unwrap(), DenseMatrix::zeros(3, 2));
        assert!(matches!(spmm(&g, &DenseMatrix::zeros(2, 2)), Err(Error::Shape { .. })));
    }
}
