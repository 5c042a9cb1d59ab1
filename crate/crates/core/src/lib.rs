pub mod audit;
pub mod cli;
pub mod counts;
pub mod io;
pub mod lhv;
pub mod quantum;
pub mod sim;
pub mod spacetime;
pub mod vacuum;
