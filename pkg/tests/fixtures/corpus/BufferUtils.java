// Stream helpers that never return partial reads silently.
package ioutil;

import java.io.IOException;
import java.io.InputStream;

public final class BufferUtils {
    private BufferUtils() {}

    /*@expect:func_body*/
    public static int readFully(InputStream in, byte[] buf) throws IOException {
        int at = 0;
        while (at < buf.length) {
            int got = in.read(buf, at, buf.length - at);
            if (got < 0) {
                return at;
            }
            at += got;
        }
        return at;
    }

    public static byte[] growDouble(byte[] buf, int needed) {
        int size = Math.max(buf.length, 1);
        while (size < needed) {
            size *= 2;
        }
        byte[] bigger = new byte[size];
        System.arraycopy(buf, 0, bigger, 0, buf.length);
        return bigger;
    }
}
