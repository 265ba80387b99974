pub mod ainfty;
pub mod cli;
pub mod evalhom;
pub mod filtquiver;
pub mod levels;
pub mod morphisms;
pub mod novikov;
pub mod tcoalg;
