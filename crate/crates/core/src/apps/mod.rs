pub mod ckp;
pub mod ode;
pub mod rigid;
pub mod toda;
