pub mod argmin;
pub mod update_cases;
