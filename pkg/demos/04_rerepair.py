"""Re-repair, one pass at a time, plus a custom rule table.

Run:  python3 demos/04_rerepair.py     (instant)
"""

from polyrepair.rerepair import (fill_unknown, fix_format, format_table, map_keywords,
                                 parse_table, rerepair)

cases = [
    ("python", "while (NULL!= queue)"),
    ("javascript", "if (typeof opt.default!= = 'undefined') self.default(key, opt.default);"),
    ("java", "if (excerpt.equals(LINE) && 0 <unk>= charno && charno <unk>= "
             "sourceExcerpt.length()) <unk>"),
]
for lang, text in cases:
    a = map_keywords(text, lang)
    b = fix_format(a)
    c = fill_unknown(b, lang)
    print(f"[{lang}]\n  raw      {text}\n  keywords {a}\n  format   {b}\n  fill     {c}")
    assert rerepair(text, lang) == c

# Literals are never touched.
print("\n", rerepair("print('NULL = = None')", "python"))

# The default rules round-trip through the plain-text table format; editing the
# table is how new keyword rows or fill rules get added.
table = format_table()
print("\n" + table)
custom = table.replace("[fill]", "true | - | true | true | True | -\n[fill]")
kmap, rules = parse_table(custom)
print(rerepair("while (true && x != NULL) {", "python", kmap, rules))
