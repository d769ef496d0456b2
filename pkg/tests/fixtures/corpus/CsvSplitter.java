// Splits one CSV record; quoted fields may contain commas and braces.
package textutil;

import java.util.ArrayList;
import java.util.List;

public final class CsvSplitter {
    private CsvSplitter() {}

    public static List<String> split(String line) {
        List<String> fields = new ArrayList<>();
        StringBuilder current = new StringBuilder();
        boolean quoted = false;
        /*@expect:for_body*/
        for (int i = 0; i < line.length(); i++) {
            char c = line.charAt(i);
            if (c == '"') {
                quoted = !quoted;
            } else if (c == ',' && !quoted) {
                fields.add(current.toString());
                current.setLength(0);
            } else {
                current.append(c);
            }
        }
        fields.add(current.toString());
        return fields;
    }

    public static String joinBraced(List<String> fields) {
        StringBuilder out = new StringBuilder("{");
        for (int i = 0; i < fields.size(); i++) {
            if (i > 0) {
                out.append(",");
            }
            out.append(fields.get(i));
        }
        out.append("}");
        return out.toString();
    }
}
