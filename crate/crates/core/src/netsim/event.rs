use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use crate::time::SimTime;

#[derive(Debug, Clone)]
pub struct Event<K> {
    pub at: SimTime,
    /// Insertion counter; breaks ties between equal timestamps.
    pub ordinal: u64,
    pub kind: K,
}

impl<K> PartialEq for Event<K> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.ordinal == other.ordinal
    }
}

impl<K> Eq for Event<K> {}

impl<K> PartialOrd for Event<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Event<K> {
    // Reversed so the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.ordinal).cmp(&(self.at, self.ordinal))
    }
}

/// Min-queue of events in `(at, ordinal)` order.
#[derive(Debug, Clone)]
pub struct EventQueue<K> {
    heap: BinaryHeap<Event<K>>,
    next_ordinal: u64,
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_ordinal: 0,
        }
    }
}

impl<K> EventQueue<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, at: SimTime, kind: K) -> u64 {
        let ordinal = self.next_ordinal;
        self.next_ordinal += 1;
        self.heap.push(Event { at, ordinal, kind });
        ordinal
    }

    pub fn pop(&mut self) -> Option<Event<K>> {
        self.heap.pop()
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.at)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn pops_in_time_then_insertion_order() {
        let mut q = EventQueue::new();
        q.push(SimTime::from_millis(5), 'a');
        q.push(SimTime::from_millis(1), 'b');
        q.push(SimTime::from_millis(5), 'c');
        q.push(SimTime::from_millis(1), 'd');
        let order: Vec<char> = core::iter::from_fn(|| q.pop().map(|e| e.kind)).collect();
        assert_eq!(order, ['b', 'd', 'a', 'c']);
    }
}
