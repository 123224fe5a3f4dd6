//! Continuous Gabor transforms on semi-direct product groups `G = H ⋉ K`.
//!
//! The crate is layered bottom-up: group laws and concrete instances, grids
//! and Haar-measure quadrature, the classical STFT on the abelian factor `K`,
//! and the four group transforms with their inversions and norm identities.

pub mod checks;
pub mod czt;
pub mod error;
pub mod grid;
pub mod group;
pub mod instances;
mod kernels;
pub mod lca;
pub mod presets;
pub mod tau;

pub use error::{Error, Result};
pub use grid::{
    h_weights, interp_eval, k_weights, make_grid, measure_weights, Grid1D, GridKind, MeasureName,
    MeasureWeights, ProductGrid,
};
pub use group::{
    max_rel_diff, phi_iso, phi_iso_inverse, FreqPoint, GroupDescriptor, GroupPoint, HPoint, HatPoint,
    KPoint, SemiDirectProduct, TFOtimesPoint, TFPoint,
};
pub use instances::{group_by_name, make_affine, make_e2, make_weyl_heisenberg, Affine, Euclidean2, WeylHeisenberg};
pub use lca::{
    fourier, inverse_fourier, istft, parseval_check, rho_apply, stft, stft_oracle, Profile, STFTField,
    SampledSlice, SampledWindow,
};
pub use num_complex::Complex64;
pub use tau::{
    g_dagger_inverse, g_dagger_transform, g_inverse, g_transform, gabor_inverse, inverse, transform, gabor_oracle, gabor_transform,
    orthogonality_inner, otimes_inverse, otimes_oracle, otimes_transform, plancherel_ratio, v_dagger_inverse,
    v_dagger_transform, v_inverse, v_transform, variant_inverse, variant_transform, EvalMode, FieldProfile, FieldRef,
    GaborField, OtimesGaborField, OtimesStorage, SliceField, TransformField, TransformKind, Window, WindowRef, DEFAULT_FULL_CAP,
    DEGENERATE_SLICE_NORM,
};
