pub mod autodiff;
pub mod fid;
pub mod losses;
pub mod measures;
pub mod theorems;
pub mod trainer;
