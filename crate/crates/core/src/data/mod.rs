//! Dataset construction and file formats.

mod graph;
mod helix;
mod io;

pub use graph::{default_knn, knn_sparsify, normalize_adjacency, similarity_graph, DenseDataset, Modality};
pub use helix::{helix_generate, sample_distances, PointCloud};
pub use io::{
    read_dense_csv, read_distance_csv, read_matrix_market, write_dense_csv, write_distance_csv,
    write_matrix_market, write_trace, write_trace_csv, TRACE_HEADER,
};
