//! Operator algebra and Hamiltonian construction.

pub mod fcidump;
pub mod fermion;
pub mod hubbard;
pub mod molecular;
pub mod pauli;

pub use fcidump::{parse_fcidump, FcidumpData};
pub use fermion::{jordan_wigner, FermionSum, FermionTerm, Ladder};
pub use hubbard::{build_hubbard, hubbard_parts, HubbardSpec};
pub use molecular::{build_molecular, MolecularModel};
pub use pauli::{pauli_product, Pauli, PauliSum, PauliTerm, PauliWord, Phase};
