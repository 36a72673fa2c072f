use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Blocking token bucket. A rate of zero never blocks.
#[derive(Debug)]
pub struct TokenBucket {
    per_sec: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn per_minute(requests: f64, burst: u32) -> Self {
        let capacity = f64::from(burst.max(1));
        TokenBucket {
            per_sec: requests / 60.0,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Time to wait before a token is available, taking it if there is one.
    fn try_take(&self, now: Instant) -> Option<Duration> {
        let mut st = self.state.lock().expect("rate limiter poisoned");
        let (tokens, last) = *st;
        let tokens =
            (tokens + now.saturating_duration_since(last).as_secs_f64() * self.per_sec).min(self.capacity);
        if tokens >= 1.0 {
            *st = (tokens - 1.0, now);
            None
        } else {
            *st = (tokens, now);
            Some(Duration::from_secs_f64((1.0 - tokens) / self.per_sec))
        }
    }

    pub fn acquire(&self) {
        if self.per_sec <= 0.0 {
            return;
        }
        while let Some(wait) = self.try_take(Instant::now()) {
            std::thread::sleep(wait);
        }
    }
}

/// Exponential backoff delay for a zero-based retry attempt, capped at a
/// minute.
pub fn backoff(base_ms: u64, attempt: u32) -> Duration {
    let factor = 1u64 << attempt.min(16);
    Duration::from_millis(base_ms.saturating_mul(factor).min(60_000))
}
