#!/usr/bin/env python3
"""Regenerates tests/fixtures/clean_corpus.jsonl.

Ten documents: three clean survivors, one violation for each filter stage
(min_length, url_density, html_tags, script_ratio, language_id) and two
duplicates (one exact, one equal only after whitespace cleanup). Expected
pipeline outcome, traced by hand against the default thresholds:

  survivors            d1, d8, d10 (in input order)
  min_length           d2   (11 chars < 50)
  url_density          d3   (6 urls over ~150 chars >> 5 per 1000)
  html_tags            d4   (6 tags > 5)
  script_ratio         d5   (all Latin letters, ratio 0 < 0.7)
  language_id          d6   (Russian: Cyrillic but zero Kazakh marker letters)
  dedup                d7   (byte-equal to d1)
                       d9   (equals d8 after whitespace collapsing + trim)
  pass rate            3/10
"""

import json
import sys

BASE_A = ("Қазақ тілі — қазақ халқының ұлттық тілі. "
          "Қазақ тілі түркі тілдеріне жатады және бай тарихы бар.")
BASE_B = ("Ана тілі — әр адамның жүрегіндегі ең қымбат қазына. "
          "Тілді құрметтеу және дамыту керек.")

DOCS = [
    ("d1", "wiki", BASE_A),
    ("d2", "wiki", "Қазақ тілі."),
    ("d3", "web", BASE_A + " http://a.kz http://b.kz http://c.kz"
                           " http://d.kz http://e.kz http://f.kz"),
    ("d4", "web", BASE_A + " <div> <div> <div> <div> <div> <div>"),
    ("d5", "web", "This is an English sentence with only Latin letters,"
                  " long enough to pass the length filter."),
    ("d6", "web", "Русский текст не содержит специфических казахских букв"
                  " и поэтому не проходит проверку языка."),
    ("d7", "mirror", BASE_A),
    ("d8", "books", BASE_B),
    ("d9", "mirror", "  " + BASE_B + "\n\n\n"),
    ("d10", "news", "\u0422\u0456\u043b\u0000 \u0431\u0456\u043b\u0443\t\u2014   \u04e9\u043c\u0456\u0440   \u0431\u043e\u0439\u044b\n\n\n\n\u049b\u0430\u0436\u0435\u0442 \u0431\u043e\u043b\u0430\u0442\u044b\u043d \u049b\u04b1\u043d\u0434\u044b"
            " \u049b\u0430\u0441\u0438\u0435\u0442. \u0422\u0456\u043b \u0431\u0456\u043b\u0433\u0435\u043d \u0430\u0434\u0430\u043c\u0493\u0430 \u04d9\u043b\u0435\u043c \u0435\u0441\u0456\u0433\u0456 \u0430\u0448\u044b\u049b."),
]


def main(path):
    with open(path, "w", encoding="utf-8") as f:
        for doc_id, source, text in DOCS:
            f.write(json.dumps({"id": doc_id, "source": source, "text": text},
                               ensure_ascii=False) + "\n")
    print("wrote %d documents" % len(DOCS))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/clean_corpus.jsonl")
