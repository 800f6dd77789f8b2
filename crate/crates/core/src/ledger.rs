//! Minimal hash-chained ledger for digital-asset purchases.
//!
//! Validated transactions queue in `pending` and are cut into blocks of a
//! fixed batch size in arrival order. There is no mining and no consensus.
//!
//! # Block digest
//!
//! `hash = SHA-256(bytes)` where `bytes` is the concatenation, all integers
//! big-endian:
//!
//! | field                 | encoding     |
//! |-----------------------|--------------|
//! | `index`               | u64          |
//! | `prev_hash`           | 32 raw bytes |
//! | `formed_at`           | u64 (µs)     |
//! | number of txs         | u32          |
//!
//! followed by, for each transaction in block order:
//!
//! | field          | encoding |
//! |----------------|----------|
//! | `id`           | u64      |
//! | `buyer`        | u32      |
//! | `seller`       | u32      |
//! | `asset`        | u64      |
//! | `amount`       | i64      |
//! | `submitted_at` | u64 (µs) |
//!
//! The genesis block's `prev_hash` is 32 zero bytes.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

use sha2::{Digest as _, Sha256};

use crate::time::SimTime;
use crate::world::UserId;

pub type Digest = [u8; 32];

pub const ZERO_DIGEST: Digest = [0; 32];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AssetId(pub u64);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub id: TxId,
    pub buyer: UserId,
    pub seller: UserId,
    pub asset: AssetId,
    pub amount: i64,
    pub submitted_at: SimTime,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LedgerError {
    SelfTrade(TxId),
    NegativeAmount(TxId),
}

impl fmt::Display for LedgerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LedgerError::SelfTrade(id) => write!(f, "transaction {}: buyer and seller are the same user", id.0),
            LedgerError::NegativeAmount(id) => write!(f, "transaction {}: negative amount", id.0),
        }
    }
}

impl core::error::Error for LedgerError {}

impl Transaction {
    pub fn validate(&self) -> Result<(), LedgerError> {
        if self.buyer == self.seller {
            return Err(LedgerError::SelfTrade(self.id));
        }
        if self.amount < 0 {
            return Err(LedgerError::NegativeAmount(self.id));
        }
        Ok(())
    }

    fn encode(&self, h: &mut Sha256) {
        h.update(self.id.0.to_be_bytes());
        h.update(self.buyer.0.to_be_bytes());
        h.update(self.seller.0.to_be_bytes());
        h.update(self.asset.0.to_be_bytes());
        h.update(self.amount.to_be_bytes());
        h.update(self.submitted_at.as_us().to_be_bytes());
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub index: u64,
    pub prev_hash: Digest,
    pub txs: Vec<Transaction>,
    pub formed_at: SimTime,
    pub hash: Digest,
}

impl Block {
    pub fn new(index: u64, prev_hash: Digest, txs: Vec<Transaction>, formed_at: SimTime) -> Self {
        let hash = block_digest(index, &prev_hash, &txs, formed_at);
        Block { index, prev_hash, txs, formed_at, hash }
    }

    pub fn recompute_hash(&self) -> Digest {
        block_digest(self.index, &self.prev_hash, &self.txs, self.formed_at)
    }
}

pub fn block_digest(index: u64, prev_hash: &Digest, txs: &[Transaction], formed_at: SimTime) -> Digest {
    let mut h = Sha256::new();
    h.update(index.to_be_bytes());
    h.update(prev_hash);
    h.update(formed_at.as_us().to_be_bytes());
    h.update((txs.len() as u32).to_be_bytes());
    for tx in txs {
        tx.encode(&mut h);
    }
    h.finalize().into()
}

/// True iff every block hashes to its stored digest, indices run from zero,
/// and every `prev_hash` links to the previous block (zero for genesis).
pub fn verify_blocks(blocks: &[Block]) -> bool {
    let mut prev = ZERO_DIGEST;
    for (i, b) in blocks.iter().enumerate() {
        if b.index != i as u64 || b.prev_hash != prev || b.recompute_hash() != b.hash {
            return false;
        }
        prev = b.hash;
    }
    true
}

#[derive(Clone, Debug, Default)]
pub struct Chain {
    blocks: Vec<Block>,
    pending: VecDeque<Transaction>,
}

impl Chain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    pub fn tip(&self) -> Digest {
        self.blocks.last().map_or(ZERO_DIGEST, |b| b.hash)
    }

    /// Queues a transaction that has passed validation.
    pub fn push_validated(&mut self, tx: Transaction) {
        self.pending.push_back(tx);
    }

    fn append(&mut self, count: usize, now: SimTime) -> &Block {
        let txs: Vec<Transaction> = self.pending.drain(..count).collect();
        let block = Block::new(self.blocks.len() as u64, self.tip(), txs, now);
        self.blocks.push(block);
        debug_assert!(verify_blocks(&self.blocks));
        self.blocks.last().expect("just pushed")
    }

    /// Cuts one block from the oldest `batch_size` pending transactions, if
    /// that many are waiting.
    pub fn form_block(&mut self, batch_size: usize, now: SimTime) -> Option<&Block> {
        assert!(batch_size > 0, "batch size must be positive");
        if self.pending.len() >= batch_size {
            Some(self.append(batch_size, now))
        } else {
            None
        }
    }

    /// Forms every full block that is due, then one partial block from any
    /// remainder. Returns the number of blocks formed.
    pub fn flush(&mut self, batch_size: usize, now: SimTime) -> usize {
        let mut formed = 0;
        while self.form_block(batch_size, now).is_some() {
            formed += 1;
        }
        if !self.pending.is_empty() {
            let n = self.pending.len();
            self.append(n, now);
            formed += 1;
        }
        formed
    }

    pub fn verify(&self) -> bool {
        verify_blocks(&self.blocks)
    }
}

/// Lower-case hex of a digest.
pub struct Hex<'a>(pub &'a Digest);

impl fmt::Display for Hex<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn tx(id: u64) -> Transaction {
        Transaction {
            id: TxId(id),
            buyer: UserId(1),
            seller: UserId(2),
            asset: AssetId(id),
            amount: 10,
            submitted_at: SimTime::from_ms(id),
        }
    }

    #[test]
    fn malformed_transactions_rejected() {
        let mut t = tx(1);
        t.seller = t.buyer;
        assert_eq!(t.validate(), Err(LedgerError::SelfTrade(TxId(1))));
        let mut t = tx(2);
        t.amount = -1;
        assert_eq!(t.validate(), Err(LedgerError::NegativeAmount(TxId(2))));
        assert_eq!(tx(3).validate(), Ok(()));
    }

    #[test]
    fn batching_five_by_two() {
        let mut c = Chain::new();
        for i in 0..5 {
            c.push_validated(tx(i));
        }
        assert!(c.form_block(2, SimTime::from_ms(1)).is_some());
        assert!(c.form_block(2, SimTime::from_ms(2)).is_some());
        assert!(c.form_block(2, SimTime::from_ms(3)).is_none());
        assert_eq!(c.blocks().len(), 2);
        assert_eq!(c.pending(), 1);
        assert!(c.verify());
    }

    #[test]
    fn empty_pending_forms_nothing() {
        let mut c = Chain::new();
        assert!(c.form_block(1, SimTime::ZERO).is_none());
        assert_eq!(c.flush(3, SimTime::ZERO), 0);
        assert!(c.verify());
    }

    #[test]
    fn flush_forms_partial_block() {
        let mut c = Chain::new();
        c.push_validated(tx(7));
        assert_eq!(c.flush(10, SimTime::from_ms(5)), 1);
        assert_eq!(c.blocks()[0].txs.len(), 1);
        assert_eq!(c.blocks()[0].prev_hash, ZERO_DIGEST);
        assert!(c.verify());
    }

    #[test]
    fn tampering_detected() {
        let mut c = Chain::new();
        for i in 0..6 {
            c.push_validated(tx(i));
        }
        c.flush(2, SimTime::from_ms(9));
        let mut blocks = c.blocks().to_vec();
        blocks[1].txs[0].amount += 1;
        assert!(!verify_blocks(&blocks));
        let mut blocks = c.blocks().to_vec();
        blocks[2].prev_hash[0] ^= 1;
        assert!(!verify_blocks(&blocks));
    }

    #[test]
    fn hex_formatting() {
        let mut d = ZERO_DIGEST;
        d[0] = 0xab;
        d[31] = 0x01;
        let s = Hex(&d).to_string();
        assert_eq!(s.len(), 64);
        assert!(s.starts_with("ab00"));
        assert!(s.ends_with("01"));
    }

    #[test]
    fn digest_pins_encoding() {
        // Empty genesis block: SHA-256 of 8 + 32 + 8 + 4 zero bytes.
        let d = block_digest(0, &ZERO_DIGEST, &[], SimTime::ZERO);
        let expected: Digest = Sha256::digest([0u8; 52]).into();
        assert_eq!(d, expected);
    }
}
