// Backoff schedule shared by outbound clients; delays are deterministic.
package net;

public class RetryPolicy {
    private final long baseMillis;
    private final long capMillis;
    private final int maxAttempts;

    public RetryPolicy(long baseMillis, long capMillis, int maxAttempts) {
        this.baseMillis = baseMillis;
        this.capMillis = capMillis;
        this.maxAttempts = maxAttempts;
    }

    public long delayFor(int attempt) {
        if (attempt <= 0) {
            return 0;
        }
        long delay = baseMillis << Math.min(attempt - 1, 16);
        return Math.min(delay, capMillis);
    }

    public boolean shouldRetry(int attempt, long elapsedMillis, long budgetMillis) {
        if (attempt >= maxAttempts) {
            return false;
        }
        /*@expect:func_call*/
        long next = delayFor(attempt + 1);
        return elapsedMillis + next <= budgetMillis;
    }
}
