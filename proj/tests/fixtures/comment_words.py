#!/usr/bin/env python3
# Lists the words found in %-comments of the fixture sources, one per line.
# Output is checked in as comment_words.txt.
import pathlib
import re

words = set()
for path in sorted(pathlib.Path(__file__).parent.glob("corpus/*.tex")):
    for line in path.read_text(encoding="utf-8").splitlines():
        i = 0
        while i < len(line):
            if line[i] == "\\":
                i += 2
                continue
            if line[i] == "%":
                words.update(w.lower() for w in re.findall(r"[A-Za-z]+", line[i + 1:]))
                break
            i += 1
print("\n".join(sorted(words)))
