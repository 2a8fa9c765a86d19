//! Bookkeeping for the successive allocation: stream map, orthonormal
//! auxiliary precoder columns, nullspace projectors on both link ends, the
//! composite channel and its lower-triangular factor.

use crate::mat::{dot_conj, dot_plain, norm2, C64, CMat};

/// Evolving allocation state.
///
/// After `i` accepted streams: `bs_projector` projects onto the nullspace of
/// the served effective channels, `composite` times the orthonormal columns
/// is lower triangular, and each user's `ms_projector` removes the receive
/// directions already consumed by that user's streams.
#[derive(Debug, Clone)]
pub struct AllocationState {
    n_bs: usize,
    n_ms: usize,
    stream_users: Vec<usize>,
    orth_cols: Vec<Vec<C64>>,
    bs_projector: CMat,
    ms_projectors: Vec<CMat>,
    ms_removed_dirs: Vec<Vec<C64>>,
    composite_rows: Vec<Vec<C64>>,
    lower_rows: Vec<Vec<C64>>,
    equalizers: Vec<Vec<C64>>,
    streams_per_user: Vec<usize>,
}

impl AllocationState {
    pub fn new(n_bs: usize, n_ms: usize, users: usize) -> Self {
        Self {
            n_bs,
            n_ms,
            stream_users: Vec::new(),
            orth_cols: Vec::new(),
            bs_projector: CMat::identity(n_bs),
            ms_projectors: vec![CMat::identity(n_ms); users],
            ms_removed_dirs: Vec::new(),
            composite_rows: Vec::new(),
            lower_rows: Vec::new(),
            equalizers: Vec::new(),
            streams_per_user: vec![0; users],
        }
    }

    pub fn n_streams(&self) -> usize {
        self.stream_users.len()
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn n_ms(&self) -> usize {
        self.n_ms
    }

    pub fn stream_users(&self) -> &[usize] {
        &self.stream_users
    }

    pub fn streams_for(&self, user: usize) -> usize {
        self.streams_per_user[user]
    }

    pub fn bs_projector(&self) -> &CMat {
        &self.bs_projector
    }

    pub fn ms_projector(&self, user: usize) -> &CMat {
        &self.ms_projectors[user]
    }

    pub fn orth_col(&self, j: usize) -> &[C64] {
        &self.orth_cols[j]
    }

    pub fn equalizer(&self, j: usize) -> &[C64] {
        &self.equalizers[j]
    }

    pub fn composite_row(&self, j: usize) -> &[C64] {
        &self.composite_rows[j]
    }

    /// Composite channel matrix (one row per allocated stream).
    pub fn composite(&self) -> CMat {
        CMat::from_rows(&self.composite_rows)
    }

    /// Orthonormal auxiliary precoder columns as a matrix.
    pub fn orth_matrix(&self) -> CMat {
        CMat::from_cols(&self.orth_cols)
    }

    /// Lower-triangular factor; the strict upper triangle is structurally
    /// zero (its true residuals are checked by `invariant_violation`).
    pub fn lower_matrix(&self) -> CMat {
        let d = self.n_streams();
        let mut l = CMat::zeros(d, d);
        for (i, row) in self.lower_rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                l[(i, j)] = v;
            }
        }
        l
    }

    /// Appends one stream: extends the stream map, composite channel and
    /// triangular factor, downdates both projectors.
    ///
    /// The receive-side projector removes the component of the equalizer that
    /// lies inside its current range, which preserves idempotence even when a
    /// constant-modulus equalizer leaves the projected subspace.
    pub fn push_stream(&mut self, user: usize, equalizer: &[C64], beam: &[C64], h_user: &CMat) {
        debug_assert!((norm2(equalizer) - 1.0).abs() < 1e-9, "equalizer must be unit norm");
        debug_assert!((norm2(beam) - 1.0).abs() < 1e-9, "beam must be unit norm");

        let row = h_user.adjoint_matvec(equalizer)
            .iter()
            .map(|z| z.conj())
            .collect::<Vec<_>>();
        let lower: Vec<C64> = self
            .orth_cols
            .iter()
            .chain(std::iter::once(&beam.to_vec()))
            .map(|q| dot_plain(&row, q))
            .collect();

        self.bs_projector.sub_outer(beam, beam);

        let inside = self.ms_projectors[user].matvec(equalizer);
        let len = norm2(&inside);
        let removed = if len > 1e-12 {
            let dir: Vec<C64> = inside.iter().map(|z| z / len).collect();
            self.ms_projectors[user].sub_outer(&dir, &dir);
            dir
        } else {
            vec![C64::new(0.0, 0.0); self.n_ms]
        };

        self.stream_users.push(user);
        self.orth_cols.push(beam.to_vec());
        self.ms_removed_dirs.push(removed);
        self.composite_rows.push(row);
        self.lower_rows.push(lower);
        self.equalizers.push(equalizer.to_vec());
        self.streams_per_user[user] += 1;
    }

    /// Removes the most recent stream, restoring both projectors.
    pub fn pop_stream(&mut self) {
        let user = self.stream_users.pop().expect("no stream to pop");
        let beam = self.orth_cols.pop().unwrap();
        self.bs_projector.add_outer(&beam, &beam);
        let dir = self.ms_removed_dirs.pop().unwrap();
        if norm2(&dir) > 0.0 {
            self.ms_projectors[user].add_outer(&dir, &dir);
        }
        self.composite_rows.pop();
        self.lower_rows.pop();
        self.equalizers.pop();
        self.streams_per_user[user] -= 1;
    }

    /// Largest violation over the structural state invariants; tests assert
    /// this stays below tolerance after every step.
    pub fn invariant_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        let d = self.n_streams();

        // Orthonormal columns.
        for i in 0..d {
            for j in 0..d {
                let dot = dot_conj(&self.orth_cols[i], &self.orth_cols[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - C64::new(expect, 0.0)).norm());
            }
        }

        // Transmit projector: T = I - Q Q^H and T^2 = T.
        let mut t_expected = CMat::identity(self.n_bs);
        for q in &self.orth_cols {
            t_expected.sub_outer(q, q);
        }
        worst = worst.max(self.bs_projector.sub(&t_expected).max_abs());
        let t2 = self.bs_projector.mul(&self.bs_projector);
        worst = worst.max(t2.sub(&self.bs_projector).max_abs());

        // Receive projectors: Hermitian and idempotent.
        for s in &self.ms_projectors {
            worst = worst.max(s.sub(&s.adjoint()).max_abs());
            worst = worst.max(s.mul(s).sub(s).max_abs());
        }

        // Unit-norm equalizers.
        for g in &self.equalizers {
            worst = worst.max((norm2(g) - 1.0).abs() * 1e2); // 1e-10 scale
        }

        // True strict-upper residuals of the triangular factor, relative to
        // its largest entry.
        if d > 0 {
            let lmax = self
                .lower_rows
                .iter()
                .flatten()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
                .max(1e-300);
            for i in 0..d {
                for j in i + 1..d {
                    let v = dot_plain(&self.composite_rows[i], &self.orth_cols[j]);
                    worst = worst.max(v.norm() / lmax);
                }
            }
        }
        worst
    }
}
