//! Game instances over finite action grids: profile indexing, utility
//! oracles, dissatisfaction, ε*, rewards and regrets.

mod oracle;
mod regret;
mod search;
mod space;
mod spec;
mod table;

pub use oracle::{TabularGame, UtilityOracle};
pub use regret::{episode_regret, regret_from_rewards, reward, simple_pne_regret};
pub use search::{PlayerPoints, SearchSet, FULL_ENUMERATION_LIMIT};
pub use space::{ActionGrid, Profile, ProfileSpace};
pub use spec::GameSpec;
pub use table::{dissatisfaction, epsilon_star, DissatisfactionTable};
