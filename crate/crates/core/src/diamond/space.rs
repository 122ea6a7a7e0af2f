//! Atom ⊗ cavity basis with a fiber-tagged copy.
//!
//! The untagged sector holds every atomic level (including a `loss` sink)
//! with cavity Fock states `0..=n_max`. Leaking a photon into the fiber moves
//! the system into the tagged sector, which repeats the atomic levels minus
//! `loss` with Fock states `0..n_max`. Population that ends in the tagged
//! sector is therefore "photon collected, atom in the stated level".

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::{LindbladTerm, Operator};

pub const FIBER_CHANNEL: &str = "fiber";
pub const LOSS_CHANNEL: &str = "loss";
pub const LOSS_LABEL: &str = "loss";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sector {
    Untagged,
    Tagged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisState {
    pub sector: Sector,
    pub level: usize,
    pub photons: usize,
}

#[derive(Clone, Debug)]
pub struct CavitySpace {
    labels: Vec<String>,
    n_max: usize,
    loss: usize,
    tagged_offset: usize,
    basis: Vec<BasisState>,
}

impl CavitySpace {
    /// `labels` are the atomic levels; a `loss` level is appended.
    pub fn new(mut labels: Vec<String>, n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::param("n_max", "photon truncation must be at least 1"));
        }
        if labels.iter().any(|l| l == LOSS_LABEL) {
            return Err(Error::param("labels", "`loss` is reserved"));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("labels", "atomic labels must be unique"));
        }
        labels.push(LOSS_LABEL.to_string());
        let loss = labels.len() - 1;
        let mut basis = Vec::new();
        for level in 0..labels.len() {
            for photons in 0..=n_max {
                basis.push(BasisState { sector: Sector::Untagged, level, photons });
            }
        }
        let tagged_offset = basis.len();
        for level in 0..loss {
            for photons in 0..n_max {
                basis.push(BasisState { sector: Sector::Tagged, level, photons });
            }
        }
        Ok(Self { labels, n_max, loss, tagged_offset, basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Atomic levels, `loss` last.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn levels(&self) -> usize {
        self.labels.len()
    }

    pub fn loss_level(&self) -> usize {
        self.loss
    }

    pub fn level(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn basis(&self) -> &[BasisState] {
        &self.basis
    }

    pub fn index(&self, sector: Sector, level: usize, photons: usize) -> Option<usize> {
        match sector {
            Sector::Untagged => {
                (level < self.labels.len() && photons <= self.n_max).then(|| level * (self.n_max + 1) + photons)
            }
            Sector::Tagged => {
                (level < self.loss && photons < self.n_max).then(|| self.tagged_offset + level * self.n_max + photons)
            }
        }
    }

    fn sector_photons(&self, sector: Sector) -> usize {
        match sector {
            Sector::Untagged => self.n_max + 1,
            Sector::Tagged => self.n_max,
        }
    }

    /// Lifts atomic `(to, from, value)` entries to `A ⊗ 1_cavity` on both sectors.
    pub fn atomic_operator(&self, entries: &[(usize, usize, Complex64)]) -> Result<Operator> {
        let mut trip = Vec::new();
        for sector in [Sector::Untagged, Sector::Tagged] {
            for &(to, from, v) in entries {
                for n in 0..self.sector_photons(sector) {
                    if let (Some(r), Some(c)) = (self.index(sector, to, n), self.index(sector, from, n)) {
                        trip.push((r, c, v));
                    }
                }
            }
        }
        Operator::from_triplets(self.dim(), trip)
    }

    /// `sum g_ab |to, n+1><from, n| sqrt(n+1) + h.c.` for atomic entries
    /// `(to, from, g)`: the cavity photon is created when the atom moves
    /// from `from` to `to`.
    pub fn cavity_coupling(&self, entries: &[(usize, usize, Complex64)]) -> Result<Operator> {
        let mut trip = Vec::new();
        for sector in [Sector::Untagged, Sector::Tagged] {
            for &(to, from, g) in entries {
                for n in 0..self.sector_photons(sector) {
                    if let (Some(r), Some(c)) = (self.index(sector, to, n + 1), self.index(sector, from, n)) {
                        let v = g * ((n + 1) as f64).sqrt();
                        trip.push((r, c, v));
                        trip.push((c, r, v.conj()));
                    }
                }
            }
        }
        Operator::from_triplets(self.dim(), trip)
    }

    /// Diagonal energy `w` per cavity photon.
    pub fn photon_energy(&self, w: f64) -> Result<Operator> {
        Operator::from_triplets(
            self.dim(),
            self.basis
                .iter()
                .enumerate()
                .filter(|(_, b)| b.photons > 0)
                .map(|(i, b)| (i, i, Complex64::new(w * b.photons as f64, 0.0))),
        )
    }

    /// Spontaneous-decay jump operator `sqrt(rate) * sum a |to><from|`
    /// applied in both sectors. Targets must be distinct for distinct
    /// sources or the operator builds spurious coherences.
    pub fn decay_term(&self, channel: &str, rate: f64, entries: &[(usize, usize, Complex64)]) -> Result<LindbladTerm> {
        LindbladTerm::new(channel, rate, self.atomic_operator(entries)?)
    }

    /// Same as [`decay_term`](Self::decay_term) restricted to one sector.
    pub fn sector_decay_term(
        &self,
        channel: &str,
        rate: f64,
        sector: Sector,
        entries: &[(usize, usize, Complex64)],
    ) -> Result<LindbladTerm> {
        let mut trip = Vec::new();
        for &(to, from, v) in entries {
            for n in 0..self.sector_photons(sector) {
                if let (Some(r), Some(c)) = (self.index(sector, to, n), self.index(sector, from, n)) {
                    trip.push((r, c, v));
                }
            }
        }
        LindbladTerm::new(channel, rate, Operator::from_triplets(self.dim(), trip)?)
    }

    /// Cavity leakage. Fiber emission from the untagged sector moves the
    /// state into the tagged sector (channel [`FIBER_CHANNEL`]); intra-cavity
    /// loss, and any emission from the tagged sector or the `loss` level,
    /// moves the atom into `loss` (channel [`LOSS_CHANNEL`]). One operator
    /// per source level keeps the sink from acquiring coherences.
    pub fn cavity_terms(&self, kappa_f: f64, kappa_l: f64) -> Result<Vec<LindbladTerm>> {
        let dim = self.dim();
        let mut terms = Vec::new();
        let kappa = kappa_f + kappa_l;
        let one = |n: usize| Complex64::new((n as f64).sqrt(), 0.0);

        let mut fiber = Vec::new();
        for level in 0..self.loss {
            for n in 1..=self.n_max {
                let from = self.index(Sector::Untagged, level, n).unwrap();
                let to = self.index(Sector::Tagged, level, n - 1).unwrap();
                fiber.push((to, from, one(n)));
            }
        }
        if kappa_f > 0.0 {
            terms.push(LindbladTerm::new(FIBER_CHANNEL, kappa_f, Operator::from_triplets(dim, fiber)?)?);
        }

        for level in 0..self.levels() {
            let rate = if level == self.loss { kappa } else { kappa_l };
            let trip: Vec<_> = (1..=self.n_max)
                .map(|n| {
                    let from = self.index(Sector::Untagged, level, n).unwrap();
                    let to = self.index(Sector::Untagged, self.loss, n - 1).unwrap();
                    (to, from, one(n))
                })
                .collect();
            if rate > 0.0 {
                terms.push(LindbladTerm::new(LOSS_CHANNEL, rate, Operator::from_triplets(dim, trip)?)?);
            }
        }

        // a second photon escaping after the herald
        if self.n_max > 1 && kappa > 0.0 {
            for level in 0..self.loss {
                let trip: Vec<_> = (1..self.n_max)
                    .map(|n| {
                        let from = self.index(Sector::Tagged, level, n).unwrap();
                        let to = self.index(Sector::Untagged, self.loss, n - 1).unwrap();
                        (to, from, one(n))
                    })
                    .collect();
                terms.push(LindbladTerm::new(LOSS_CHANNEL, kappa, Operator::from_triplets(dim, trip)?)?);
            }
        }
        Ok(terms)
    }

    /// Basis indices whose atomic level is `level`, optionally limited to one sector.
    pub fn indices_of_level(&self, level: usize, sector: Option<Sector>) -> Vec<usize> {
        self.basis
            .iter()
            .enumerate()
            .filter(|(_, b)| b.level == level && sector.is_none_or(|s| b.sector == s))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn indices_in_sector(&self, sector: Sector) -> Vec<usize> {
        self.basis.iter().enumerate().filter(|(_, b)| b.sector == sector).map(|(i, _)| i).collect()
    }
}
