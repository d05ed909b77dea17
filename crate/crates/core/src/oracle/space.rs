//! Truncated Hilbert space and sparse operators on it.
//!
//! Basis ordering is photon ⊗ (electronic ⊗ vib)₁ ⊗ (electronic ⊗ vib)₂ ⊗ …
//! with the last factor varying fastest. Within one molecule the electronic
//! label is the slow index: state e·(vib_cutoff+1) + v, e = 0 ground, 1 excited.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible total dimension.
pub const DIMENSION_CAP: usize = 4096;

/// Largest molecule count the oracle accepts.
pub const MAX_MOLECULES: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HilbertConfig {
    pub n_molecules: u32,
    /// Highest photon number kept.
    pub photon_cutoff: usize,
    /// Highest vibrational quantum kept, per molecule.
    pub vib_cutoff: usize,
}

impl Default for HilbertConfig {
    fn default() -> Self {
        Self {
            n_molecules: 2,
            photon_cutoff: 2,
            vib_cutoff: 2,
        }
    }
}

impl HilbertConfig {
    pub fn new(n_molecules: u32, photon_cutoff: usize, vib_cutoff: usize) -> Result<Self> {
        let c = Self {
            n_molecules,
            photon_cutoff,
            vib_cutoff,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn molecule_dim(&self) -> usize {
        2 * (self.vib_cutoff + 1)
    }

    pub fn photon_dim(&self) -> usize {
        self.photon_cutoff + 1
    }

    /// (photon_cutoff+1)·(2·(vib_cutoff+1))^N, saturating on overflow.
    pub fn dim(&self) -> usize {
        let mut d = self.photon_dim();
        for _ in 0..self.n_molecules {
            d = d.saturating_mul(self.molecule_dim());
        }
        d
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_molecules < 1 || self.n_molecules > MAX_MOLECULES {
            return Err(Error::InvalidParameter {
                field: "n_molecules",
                reason: format!(
                    "oracle supports 1..={MAX_MOLECULES} molecules, got {}",
                    self.n_molecules
                ),
            });
        }
        if self.photon_cutoff < 1 {
            return Err(Error::InvalidParameter {
                field: "photon_cutoff",
                reason: "must be at least 1".into(),
            });
        }
        if self.vib_cutoff < 1 {
            return Err(Error::InvalidParameter {
                field: "vib_cutoff",
                reason: "must be at least 1".into(),
            });
        }
        let dim = self.dim();
        if dim > DIMENSION_CAP {
            return Err(Error::DimensionCap {
                dim,
                cap: DIMENSION_CAP,
            });
        }
        Ok(())
    }

    /// Index of |n_photon; (e₁, v₁), (e₂, v₂), …⟩.
    pub fn index(&self, photons: usize, molecules: &[(usize, usize)]) -> usize {
        let md = self.molecule_dim();
        let mut i = photons;
        for &(e, v) in molecules {
            i = i * md + e * (self.vib_cutoff + 1) + v;
        }
        i
    }

    pub fn identity(&self) -> SparseOp {
        SparseOp::identity(self.dim())
    }

    fn embed(&self, site: Option<u32>, local: &SparseOp) -> SparseOp {
        let mut op = if site.is_none() {
            local.clone()
        } else {
            SparseOp::identity(self.photon_dim())
        };
        for m in 0..self.n_molecules {
            let factor = if site == Some(m) {
                local.clone()
            } else {
                SparseOp::identity(self.molecule_dim())
            };
            op = op.kron(&factor);
        }
        op
    }

    /// Cavity annihilation operator a.
    pub fn a(&self) -> SparseOp {
        self.embed(None, &SparseOp::annihilation(self.photon_dim()))
    }

    /// Lowering operator σₘ = |g⟩⟨e| of molecule `m`.
    pub fn sigma(&self, m: u32) -> SparseOp {
        let nv = self.vib_cutoff + 1;
        let local = SparseOp::identity(2 * nv).filter(|r, c| r < nv && c >= nv, nv as isize);
        self.embed(Some(m), &local)
    }

    /// Vibrational annihilation operator bₘ.
    pub fn b(&self, m: u32) -> SparseOp {
        let el = SparseOp::identity(2);
        let local = el.kron(&SparseOp::annihilation(self.vib_cutoff + 1));
        self.embed(Some(m), &local)
    }
}

/// Square operator stored as a list of non-zero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOp {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect(),
        }
    }

    /// Truncated ladder operator with ⟨n−1|a|n⟩ = √n.
    pub fn annihilation(dim: usize) -> Self {
        Self {
            dim,
            entries: (1..dim)
                .map(|n| (n - 1, n, Complex64::new((n as f64).sqrt(), 0.0)))
                .collect(),
        }
    }

    fn from_map(dim: usize, map: BTreeMap<(usize, usize), Complex64>) -> Self {
        Self {
            dim,
            entries: map
                .into_iter()
                .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
                .map(|((r, c), v)| (r, c, v))
                .collect(),
        }
    }

    /// Keeps entries satisfying `keep(row, col)` and shifts their column by
    /// `shift`; used to carve transition operators out of an identity.
    fn filter(&self, keep: impl Fn(usize, usize) -> bool, shift: isize) -> Self {
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|&(r, c, v)| (r, (c as isize + shift) as usize, v))
                .filter(|&(r, c, _)| c < self.dim && keep(r, c))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn kron(&self, other: &SparseOp) -> SparseOp {
        let d = other.dim;
        let mut entries = Vec::with_capacity(self.nnz() * other.nnz());
        for &(r1, c1, v1) in &self.entries {
            for &(r2, c2, v2) in &other.entries {
                entries.push((r1 * d + r2, c1 * d + c2, v1 * v2));
            }
        }
        SparseOp {
            dim: self.dim * d,
            entries,
        }
    }

    pub fn adjoint(&self) -> SparseOp {
        SparseOp {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> SparseOp {
        SparseOp {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> SparseOp {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn add(&self, other: &SparseOp) -> SparseOp {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        let mut map = BTreeMap::new();
        for &(r, c, v) in self.entries.iter().chain(&other.entries) {
            *map.entry((r, c)).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        Self::from_map(self.dim, map)
    }

    pub fn sub(&self, other: &SparseOp) -> SparseOp {
        self.add(&other.scale_re(-1.0))
    }

    pub fn mul(&self, other: &SparseOp) -> SparseOp {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); other.dim];
        for &(r, c, v) in &other.entries {
            rows[r].push((c, v));
        }
        let mut map = BTreeMap::new();
        for &(r, k, v) in &self.entries {
            for &(c, w) in &rows[k] {
                *map.entry((r, c)).or_insert(Complex64::new(0.0, 0.0)) += v * w;
            }
        }
        Self::from_map(self.dim, map)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// O·X.
    pub fn left(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.dim, x.ncols());
        self.left_acc(x, Complex64::new(1.0, 0.0), &mut out);
        out
    }

    /// out += s·O·X.
    pub fn left_acc(&self, x: &DMatrix<Complex64>, s: Complex64, out: &mut DMatrix<Complex64>) {
        for j in 0..x.ncols() {
            let xc = x.column(j);
            let mut oc = out.column_mut(j);
            for &(r, c, v) in &self.entries {
                oc[r] += s * v * xc[c];
            }
        }
    }

    /// out += s·X·O†.
    pub fn right_adj_acc(&self, x: &DMatrix<Complex64>, s: Complex64, out: &mut DMatrix<Complex64>) {
        for &(j, k, v) in &self.entries {
            let f = s * v.conj();
            let xc = x.column(k);
            let mut oc = out.column_mut(j);
            oc.axpy(f, &xc, Complex64::new(1.0, 0.0));
        }
    }

    /// Tr(O·X).
    pub fn trace_with(&self, x: &DMatrix<Complex64>) -> Complex64 {
        self.entries.iter().map(|&(r, c, v)| v * x[(c, r)]).sum()
    }

    /// ⟨O⟩ = Tr(O·ρ).
    pub fn expect(&self, rho: &DMatrix<Complex64>) -> Complex64 {
        self.trace_with(rho)
    }
}
