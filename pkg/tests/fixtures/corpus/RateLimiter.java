// Token-bucket limiter; callers ask for permits and may be refused.
package limits;

public class RateLimiter {
    private final long capacity;
    private final long refillPerSecond;
    private long available;
    private long lastRefillSeconds;
    private long denials = 0;

    public RateLimiter(long capacity, long refillPerSecond) {
        this.capacity = capacity;
        this.refillPerSecond = refillPerSecond;
        this.available = capacity;
    }

    public boolean tryAcquire(long permits, long nowSeconds) {
        refill(nowSeconds);
        if (available >= permits) {
            available -= permits;
            return true;
        /*@expect:else_body*/
        } else {
            denials += 1;
            return false;
        }
    }

    private void refill(long nowSeconds) {
        long elapsed = nowSeconds - lastRefillSeconds;
        if (elapsed <= 0) {
            return;
        }
        available = Math.min(capacity, available + elapsed * refillPerSecond);
        lastRefillSeconds = nowSeconds;
    }

    public long denialCount() {
        return denials;
    }
}
