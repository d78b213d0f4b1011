pub mod dist_stats;
pub mod pdl;
pub mod percolate;
pub mod qswap;
