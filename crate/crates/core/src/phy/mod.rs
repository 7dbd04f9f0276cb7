//! Transmit chain, channels, pilot-based estimation and noise whitening.

pub mod channel;
pub mod constellation;
pub mod dump;
pub mod frame;

pub use channel::{ebn0_to_n0, ls_estimate, rayleigh_block, whiten, ChannelGrid, ChannelRealization};
pub use constellation::{demap_hard, map_bits, Constellation, Modulation, SymbolGrid};
pub use dump::{load_channel_dump, read_channel_dump, write_channel_dump, ChannelDump, DumpHeader};
pub use frame::{receive, FrameConfig, RxGrid, TxFrame};
