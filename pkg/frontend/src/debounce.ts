// Trailing rate limiter: at most one call per interval, and the last
// value always goes out.  Keeps slider drags at or under 10 requests/s.

export interface RateLimiter {
  schedule(fn: () => void): void
  cancel(): void
}

export function rateLimiter(
  intervalMs: number,
  now: () => number = () => Date.now(),
  setTimer: (fn: () => void, ms: number) => unknown = (fn, ms) => setTimeout(fn, ms),
  clearTimer: (handle: unknown) => void = (handle) => clearTimeout(handle as number),
): RateLimiter {
  let lastFired = -Infinity
  let pending: (() => void) | null = null
  let handle: unknown = null

  const fire = () => {
    handle = null
    if (pending === null) return
    const fn = pending
    pending = null
    lastFired = now()
    fn()
  }

  return {
    schedule(fn: () => void) {
      pending = fn
      if (handle !== null) return
      const wait = Math.max(0, intervalMs - (now() - lastFired))
      if (wait === 0) {
        fire()
      } else {
        handle = setTimer(fire, wait)
      }
    },
    cancel() {
      if (handle !== null) {
        clearTimer(handle)
        handle = null
      }
      pending = null
    },
  }
}
